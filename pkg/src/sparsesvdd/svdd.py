"""Minimum-enclosing-hypersphere (SVDD) dual solver.

Maximizes  W(a) = sum_i a_i G_ii - a' G a  over the simplex-box
{ sum a_i = 1, 0 <= a_i <= C } by pairwise coordinate ascent: the pair with
the largest KKT violation is updated along the segment that preserves the
simplex sum, until the violation drops below tolerance.  This keeps
sum(a) = 1 exact and needs no external QP solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .kernels import GramMatrix

# classifying a_i as "at bound" uses this fraction of C
SUPPORT_FLOOR_FRACTION = 1e-8
_GRADIENT_REFRESH = 2048


@dataclass(frozen=True)
class SolverConfig:
    """Box bound C plus stopping controls for the pairwise ascent."""

    C: float = 1.0
    kkt_tol: float = 1e-6
    max_passes: int = 10000

    def __post_init__(self) -> None:
        if not np.isfinite(self.C) or self.C <= 0:
            raise DataError("C must be a positive real")
        if self.kkt_tol <= 0:
            raise DataError("kkt_tol must be positive")
        if self.max_passes < 1:
            raise DataError("max_passes must be >= 1")


@dataclass(frozen=True)
class SvddSolution:
    """Dual weights plus derived sphere geometry."""

    alpha: np.ndarray
    objective: float
    radius_sq: float
    support_indices: np.ndarray
    boundary_indices: np.ndarray

    def __post_init__(self) -> None:
        for name in ("alpha", "support_indices", "boundary_indices"):
            arr = getattr(self, name)
            arr.setflags(write=False)


def _distances_sq(G: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    Ga = G @ alpha
    return np.diag(G) - 2.0 * Ga + float(alpha @ Ga)


def solve_svdd(G: GramMatrix, config: SolverConfig) -> SvddSolution:
    """Solve the sphere dual on a (possibly masked or combined) Gram matrix.

    One "pass" is a single two-coordinate update; exceeding
    ``config.max_passes`` raises :class:`NumericalError` with the final
    residual.  Deterministic for fixed inputs: ties in pair selection break
    toward the lowest index.
    """
    K = G.values
    n = G.size
    C = float(config.C)
    if C * n < 1.0 - 1e-12:
        raise DataError(f"infeasible box bound: C = {C} < 1/N = {1.0 / n}")

    alpha = np.full(n, 1.0 / n)
    grad = G.diag - 2.0 * (K @ alpha)
    # stopping scale: max diagonal lower-bounds the top eigenvalue for PSD G
    scale = max(1.0, float(G.diag.max()))
    tol = config.kkt_tol * scale

    passes = 0
    violation = 0.0
    while True:
        movable_up = alpha < C
        movable_down = alpha > 0.0
        if not movable_up.any():
            break
        i = int(np.argmax(np.where(movable_up, grad, -np.inf)))
        j = int(np.argmin(np.where(movable_down, grad, np.inf)))
        violation = grad[i] - grad[j]
        if violation <= tol:
            break
        if passes >= config.max_passes:
            raise NumericalError(
                f"svdd solver did not converge in {config.max_passes} passes "
                f"(KKT residual {violation:.3e}, tolerance {tol:.3e})"
            )
        passes += 1

        curvature = K[i, i] + K[j, j] - 2.0 * K[i, j]
        step_max = min(C - alpha[i], alpha[j])
        if curvature > 1e-300:
            step = min(violation / (2.0 * curvature), step_max)
        else:
            step = step_max
        new_i = alpha[i] + step
        new_j = alpha[j] - step
        if step == C - alpha[i]:
            new_i = C
        if step == alpha[j]:
            new_j = 0.0
        alpha[i] = new_i
        alpha[j] = new_j
        grad -= (2.0 * step) * (K[:, i] - K[:, j])
        if passes % _GRADIENT_REFRESH == 0:
            grad = G.diag - 2.0 * (K @ alpha)

    floor = SUPPORT_FLOOR_FRACTION * C
    support = np.flatnonzero(alpha > floor)
    boundary = np.flatnonzero((alpha > floor) & (alpha < C - floor))
    objective = float(alpha @ G.diag - alpha @ (K @ alpha))
    dist = _distances_sq(K, alpha)
    if boundary.size > 0:
        radius_sq = float(dist[boundary].mean())
    else:
        radius_sq = float(dist[support].max())
    return SvddSolution(
        alpha=alpha,
        objective=objective,
        radius_sq=radius_sq,
        support_indices=support,
        boundary_indices=boundary,
    )


def radius_squared(sol: SvddSolution, G: GramMatrix) -> float:
    """Squared sphere radius from the solved weights.

    Mean squared center distance over boundary support vectors; if none lie
    strictly inside the box, the max over all support vectors is used.
    """
    if sol.support_indices.size == 0:
        raise NumericalError("solution has no support vectors")
    dist = _distances_sq(G.values, sol.alpha)
    if sol.boundary_indices.size > 0:
        return float(dist[sol.boundary_indices].mean())
    return float(dist[sol.support_indices].max())


def distance_sq_to_center(sol: SvddSolution, G: GramMatrix, kz, kzz: float) -> float:
    """Squared distance of a point z to the sphere center.

    ``kz`` is the cross-kernel vector of z against the training set and
    ``kzz`` = k(z, z), both under the same kernel/mask as G.
    """
    kzv = np.asarray(kz, dtype=float).ravel()
    if kzv.size != sol.alpha.size:
        raise DataError(f"cross-kernel length {kzv.size}, expected {sol.alpha.size}")
    Ga = G.values @ sol.alpha
    return float(kzz - 2.0 * (sol.alpha @ kzv) + sol.alpha @ Ga)
