"""Restricted master problem over a set of feature masks.

Given masks d^1..d^p with masked Gram matrices K^(1)..K^(p), find the saddle
value

    t* = max_a min_{mu in simplex} sum_l mu_l S_l(a),
    S_l(a) = sum_i a_i K^(l)_ii - a' K^(l) a,

by alternating a sphere solve on the mu-combined Gram with projected-gradient
updates of mu (gradient component l is S_l at the current weights, Armijo
backtracking on the combined objective).  A second phase descends directly on
the duality gap  sum_l mu_l S_l - min_l S_l, which certifies the returned t:
the combined objective upper-bounds t* for any mu, and min_l S_l lower-bounds
it for any feasible a, so a small gap pins t to the saddle value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .kernels import FeatureMask, GramMatrix, KernelSpec, as_data_matrix, gram
from .svdd import SolverConfig, SvddSolution, solve_svdd

_ARMIJO_C = 0.1
_MAX_BACKTRACKS = 40
_GAP_TARGET_REL = 1e-9
_CLEANUP_WEIGHT = 1e-7


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto { x >= 0, sum x = 1 } (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.flatnonzero(u * np.arange(1, v.size + 1) > css)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


class ConstraintSet:
    """Ordered masks with their masked Gram matrices, built from one dataset."""

    def __init__(self, data, spec: KernelSpec):
        self.data = as_data_matrix(data)
        self.spec = spec
        self.masks: list[FeatureMask] = []
        self.grams: list[GramMatrix] = []
        self._keys: set[tuple[int, ...]] = set()
        self._stack: np.ndarray | None = None
        self._diag_stack: np.ndarray | None = None

    @property
    def p(self) -> int:
        return len(self.masks)

    def contains(self, mask: FeatureMask) -> bool:
        return mask.key() in self._keys

    def add(self, mask: FeatureMask) -> None:
        if mask.num_features != self.data.shape[1]:
            raise DataError("mask length does not match data feature count")
        if self.contains(mask):
            raise DataError(f"duplicate mask {mask.key()}")
        self.masks.append(mask)
        self.grams.append(gram(self.spec, self.data, mask))
        self._keys.add(mask.key())
        self._stack = None
        self._diag_stack = None

    def gram_stack(self) -> np.ndarray:
        if self._stack is None:
            self._stack = np.stack([g.values for g in self.grams])
        return self._stack

    def diag_stack(self) -> np.ndarray:
        if self._diag_stack is None:
            self._diag_stack = np.stack([g.diag for g in self.grams])
        return self._diag_stack


@dataclass(frozen=True)
class MasterSolution:
    """Converged weights for the active masks plus the certified objective."""

    alpha: np.ndarray
    mu: np.ndarray
    t: float
    per_mask_objectives: np.ndarray
    svdd: SvddSolution
    converged: bool
    outer_iterations: int
    gap: float = field(default=0.0)

    def __post_init__(self) -> None:
        self.mu.setflags(write=False)
        self.per_mask_objectives.setflags(write=False)


def combined_gram(cs: ConstraintSet, mu: np.ndarray) -> GramMatrix:
    """Entrywise convex combination of the cached masked Gram matrices."""
    w = np.asarray(mu, dtype=float).ravel()
    if w.size != cs.p:
        raise DataError(f"weight length {w.size} does not match mask count {cs.p}")
    return GramMatrix(np.einsum("l,lij->ij", w, cs.gram_stack()))


def _per_mask_objectives(cs: ConstraintSet, alpha: np.ndarray) -> np.ndarray:
    quad = (cs.gram_stack() @ alpha) @ alpha
    return cs.diag_stack() @ alpha - quad


def solve_restricted_master(
    cs: ConstraintSet,
    config: SolverConfig,
    mu_tol: float = 1e-9,
    max_outer: int = 200,
) -> MasterSolution:
    """Alternate sphere solves and simplex-projected weight updates.

    Stops when the weights stop moving (movement below ``mu_tol``), the line
    search cannot improve, or ``max_outer`` iterations elapse; in the last
    case the best duality-gap iterate seen is returned with
    ``converged=False``.
    """
    if cs.p < 1:
        raise DataError("constraint set is empty")
    p = cs.p
    mu = np.full(p, 1.0 / p)
    sol = solve_svdd(combined_gram(cs, mu), config)
    if p == 1:
        per_mask = _per_mask_objectives(cs, sol.alpha)
        return MasterSolution(
            alpha=sol.alpha,
            mu=mu,
            t=float(per_mask[0]),
            per_mask_objectives=per_mask,
            svdd=sol,
            converged=True,
            outer_iterations=0,
            gap=0.0,
        )

    def observed_gap(weights: np.ndarray, per_mask: np.ndarray) -> float:
        return float(weights @ per_mask - per_mask.min())

    per_mask = _per_mask_objectives(cs, sol.alpha)
    scale = max(1.0, float(np.abs(per_mask).max()))
    gap_target = _GAP_TARGET_REL * scale
    best = (observed_gap(mu, per_mask), mu, sol, per_mask)
    outer = 0

    # phase 1: Armijo descent on the combined objective J(mu) = max_a S_mu(a)
    while outer < max_outer:
        outer += 1
        spread = float(per_mask.max() - per_mask.min())
        if spread <= gap_target:
            break
        step = 1.0 / spread
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            mu_trial = project_to_simplex(mu - step * per_mask)
            move = float(np.abs(mu_trial - mu).max())
            if move < mu_tol:
                break
            sol_trial = solve_svdd(combined_gram(cs, mu_trial), config)
            predicted = float(per_mask @ (mu_trial - mu))  # <= 0 by projection
            if sol_trial.objective <= sol.objective + _ARMIJO_C * predicted:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        mu, sol = mu_trial, sol_trial
        per_mask = _per_mask_objectives(cs, sol.alpha)
        if observed_gap(mu, per_mask) < best[0]:
            best = (observed_gap(mu, per_mask), mu, sol, per_mask)

    # phase 2: descend the duality gap itself to certify the saddle value
    gap = observed_gap(mu, per_mask)
    if gap < best[0]:
        best = (gap, mu, sol, per_mask)
    polish = 0
    while best[0] > gap_target and polish < max_outer:
        polish += 1
        gap, mu, sol, per_mask = best
        spread = float(per_mask.max() - per_mask.min())
        if spread <= 0.0:
            break
        step = 1.0 / spread
        improved = False
        for _ in range(_MAX_BACKTRACKS):
            mu_trial = project_to_simplex(mu - step * per_mask)
            if float(np.abs(mu_trial - mu).max()) < 1e-17:
                break
            sol_trial = solve_svdd(combined_gram(cs, mu_trial), config)
            per_mask_trial = _per_mask_objectives(cs, sol_trial.alpha)
            gap_trial = observed_gap(mu_trial, per_mask_trial)
            if gap_trial < gap:
                best = (gap_trial, mu_trial, sol_trial, per_mask_trial)
                improved = True
                break
            step *= 0.5
        if not improved:
            break

    # cleanup: drop negligible weights if that does not hurt the gap
    gap, mu, sol, per_mask = best
    keep = mu > _CLEANUP_WEIGHT
    if keep.any() and not keep.all():
        mu_clean = np.where(keep, mu, 0.0)
        mu_clean /= mu_clean.sum()
        sol_clean = solve_svdd(combined_gram(cs, mu_clean), config)
        per_mask_clean = _per_mask_objectives(cs, sol_clean.alpha)
        gap_clean = observed_gap(mu_clean, per_mask_clean)
        if gap_clean <= max(gap, gap_target):
            gap, mu, sol, per_mask = gap_clean, mu_clean, sol_clean, per_mask_clean

    t = float(mu @ per_mask)
    return MasterSolution(
        alpha=sol.alpha,
        mu=mu,
        t=t,
        per_mask_objectives=per_mask,
        svdd=sol,
        converged=bool(gap <= gap_target),
        outer_iterations=outer,
        gap=gap,
    )
