"""Cutting-plane training loop and the deployable detector model.

Training alternates two steps: solve the restricted master over the masks
discovered so far, then generate the next most-violated mask from the current
weights.  The loop stops when the generated mask is already active (the exact
cutting-plane certificate), when the master objective stalls, or at the
iteration cap.  The linear variant runs directly on input features; the
embedded variant first maps data into the whitened empirical kernel space and
runs the identical loop on those coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import KernelWhitener, build_whitener, embed_matrix
from .errors import DataError
from .kernels import LINEAR, KernelSpec, as_data_matrix
from .master import ConstraintSet, MasterSolution, combined_gram, solve_restricted_master
from .selection import feature_scores, most_violated_mask
from .svdd import SolverConfig, radius_squared

VARIANT_LINEAR = "linear"
VARIANT_EMBEDDED = "embedded"

STOP_DUPLICATE_MASK = "duplicate_mask"
STOP_OBJECTIVE_STALL = "objective_stall"
STOP_MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class FitReport:
    """Diagnostics of the outer loop: one entry per restricted-master solve."""

    iterations: int
    t_trace: np.ndarray
    stop_reason: str
    mu_trace: list[np.ndarray]
    per_mask_trace: list[np.ndarray]

    def __post_init__(self) -> None:
        self.t_trace.setflags(write=False)


@dataclass(frozen=True)
class SparseSvddModel:
    """Everything needed to score new points.

    ``training_coords`` are the coordinates the masks refer to: raw input
    features for the linear variant, whitened kernel coordinates for the
    embedded variant (test points are embedded before masking).
    """

    variant: str
    kernel: KernelSpec
    whitener: KernelWhitener | None
    training_coords: np.ndarray
    constraints: ConstraintSet
    mu: np.ndarray
    alpha: np.ndarray
    radius_sq: float
    budget: int
    config: SolverConfig
    outer_tol: float
    max_outer: int
    mu_tol: float

    def __post_init__(self) -> None:
        self.training_coords.setflags(write=False)
        self.mu.setflags(write=False)
        self.alpha.setflags(write=False)

    @property
    def input_dim(self) -> int:
        if self.variant == VARIANT_EMBEDDED:
            return self.whitener.basis.shape[1]
        return self.training_coords.shape[1]

    def combined_distance_sq(self, Z) -> np.ndarray:
        """Weighted masked squared distances to the per-mask sphere centers."""
        Zv = as_data_matrix(Z, "Z")
        if self.variant == VARIANT_EMBEDDED:
            coords = embed_matrix(self.whitener, Zv)
        else:
            if Zv.shape[1] != self.training_coords.shape[1]:
                raise DataError(
                    f"point dimension {Zv.shape[1]} does not match "
                    f"model dimension {self.training_coords.shape[1]}"
                )
            coords = Zv
        total = np.zeros(coords.shape[0])
        for weight, mask in zip(self.mu, self.constraints.masks):
            idx = mask.indices()
            center = self.training_coords[:, idx].T @ self.alpha
            delta = coords[:, idx] - center
            total += weight * np.einsum("ij,ij->i", delta, delta)
        return total

    def predict(self, Z) -> np.ndarray:
        """Distance-to-center over radius per row; values > 1 flag anomalies."""
        dist_sq = np.maximum(self.combined_distance_sq(Z), 0.0)
        if self.radius_sq <= 0.0:
            # degenerate zero-radius sphere: anything off-center is anomalous
            return np.where(dist_sq <= 1e-12, 0.0, np.inf)
        return np.sqrt(dist_sq / self.radius_sq)


def _fit_loop(
    coords: np.ndarray,
    budget: int,
    config: SolverConfig,
    outer_tol: float,
    max_outer: int,
    mu_tol: float,
    master_max_outer: int,
) -> tuple[ConstraintSet, MasterSolution, FitReport]:
    n = coords.shape[0]
    cs = ConstraintSet(coords, KernelSpec(LINEAR))
    alpha0 = np.full(n, 1.0 / n)
    cs.add(most_violated_mask(feature_scores(alpha0, coords), budget))

    t_trace: list[float] = []
    mu_trace: list[np.ndarray] = []
    per_mask_trace: list[np.ndarray] = []
    t_prev: float | None = None
    iterations = 0
    while True:
        iterations += 1
        ms = solve_restricted_master(cs, config, mu_tol=mu_tol, max_outer=master_max_outer)
        t_trace.append(ms.t)
        mu_trace.append(ms.mu)
        per_mask_trace.append(ms.per_mask_objectives)
        new_mask = most_violated_mask(feature_scores(ms.alpha, coords), budget)
        if cs.contains(new_mask):
            stop = STOP_DUPLICATE_MASK
            break
        if t_prev is not None and abs(t_prev - ms.t) <= outer_tol * max(1.0, abs(ms.t)):
            stop = STOP_OBJECTIVE_STALL
            break
        if iterations >= max_outer:
            stop = STOP_MAX_ITERATIONS
            break
        cs.add(new_mask)
        t_prev = ms.t

    report = FitReport(
        iterations=iterations,
        t_trace=np.asarray(t_trace),
        stop_reason=stop,
        mu_trace=mu_trace,
        per_mask_trace=per_mask_trace,
    )
    return cs, ms, report


def fit_linear(
    X,
    budget: int,
    config: SolverConfig | None = None,
    outer_tol: float = 1e-5,
    max_outer: int = 50,
    mu_tol: float = 1e-9,
    master_max_outer: int = 200,
) -> tuple[SparseSvddModel, FitReport]:
    """Sparse-feature sphere on raw input features (linear kernel)."""
    Xv = as_data_matrix(X)
    if not 1 <= budget <= Xv.shape[1]:
        raise DataError(f"budget must be in [1, {Xv.shape[1]}], got {budget}")
    cfg = config or SolverConfig()
    cs, ms, report = _fit_loop(Xv, budget, cfg, outer_tol, max_outer, mu_tol, master_max_outer)
    radius_sq = radius_squared(ms.svdd, combined_gram(cs, ms.mu))
    model = SparseSvddModel(
        variant=VARIANT_LINEAR,
        kernel=KernelSpec(LINEAR),
        whitener=None,
        training_coords=Xv.copy(),
        constraints=cs,
        mu=ms.mu.copy(),
        alpha=ms.alpha.copy(),
        radius_sq=radius_sq,
        budget=budget,
        config=cfg,
        outer_tol=outer_tol,
        max_outer=max_outer,
        mu_tol=mu_tol,
    )
    return model, report


def fit_embedded(
    X,
    spec: KernelSpec,
    budget: int,
    eigen_floor: float = 1e-10,
    config: SolverConfig | None = None,
    outer_tol: float = 1e-5,
    max_outer: int = 50,
    mu_tol: float = 1e-9,
    master_max_outer: int = 200,
) -> tuple[SparseSvddModel, FitReport]:
    """Sparse-feature sphere in the whitened empirical kernel space.

    Masks select embedded coordinates, so the budget is bounded by the
    retained rank of the whitener (reported in the error if exceeded).
    """
    Xv = as_data_matrix(X)
    whitener = build_whitener(Xv, spec, eigen_floor)
    rank = whitener.retained_rank
    if not 1 <= budget <= rank:
        raise DataError(f"budget must be in [1, {rank}] (embedding rank {rank}), got {budget}")
    coords = embed_matrix(whitener, Xv)
    cfg = config or SolverConfig()
    cs, ms, report = _fit_loop(coords, budget, cfg, outer_tol, max_outer, mu_tol, master_max_outer)
    radius_sq = radius_squared(ms.svdd, combined_gram(cs, ms.mu))
    model = SparseSvddModel(
        variant=VARIANT_EMBEDDED,
        kernel=spec,
        whitener=whitener,
        training_coords=coords,
        constraints=cs,
        mu=ms.mu.copy(),
        alpha=ms.alpha.copy(),
        radius_sq=radius_sq,
        budget=budget,
        config=cfg,
        outer_tol=outer_tol,
        max_outer=max_outer,
        mu_tol=mu_tol,
    )
    return model, report
