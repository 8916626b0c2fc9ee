"""Per-feature sphere contributions and the most-violated mask.

For the linear kernel the sphere objective decomposes over features:

    S(a, d) = sum_j d_j c_j,   c_j = sum_i a_i x_ij^2 - (sum_i a_i x_ij)^2,

i.e. c_j is the a-weighted variance of column j, so it is nonnegative and the
decomposition is exact.  The mask minimizing S under a fixed budget therefore
keeps the B smallest c_j.  Nonlinear kernels never use this module directly:
data is first mapped into the whitened empirical kernel space, where the
canonical (linear) dot product reproduces the kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .kernels import FeatureMask, as_data_matrix

_SIMPLEX_TOL = 1e-6


@dataclass(frozen=True)
class FeatureScores:
    """Weighted-variance contribution of each feature, with the weights used."""

    c: np.ndarray
    alpha_used: np.ndarray

    def __post_init__(self) -> None:
        self.c.setflags(write=False)
        self.alpha_used.setflags(write=False)

    @property
    def num_features(self) -> int:
        return self.c.size


def feature_scores(alpha, X) -> FeatureScores:
    """Score every feature column of X under simplex weights alpha."""
    Xv = as_data_matrix(X)
    a = np.asarray(alpha, dtype=float).ravel()
    if a.size != Xv.shape[0]:
        raise DataError(f"alpha length {a.size} does not match sample count {Xv.shape[0]}")
    if abs(a.sum() - 1.0) > _SIMPLEX_TOL or a.min() < -_SIMPLEX_TOL:
        raise DataError("alpha must lie on the probability simplex")
    weighted_sq = a @ (Xv * Xv)
    weighted_mean = a @ Xv
    c = weighted_sq - weighted_mean**2
    return FeatureScores(c=c, alpha_used=a.copy())


def most_violated_mask(scores: FeatureScores, budget: int) -> FeatureMask:
    """Mask of the ``budget`` smallest scores; ties break to the lower index.

    This is the exact minimizer of S(a, d) over all masks of that budget for
    the linear kernel.
    """
    m = scores.num_features
    if not 1 <= budget <= m:
        raise DataError(f"budget must be in [1, {m}], got {budget}")
    order = np.argsort(scores.c, kind="stable")
    return FeatureMask.from_indices(np.sort(order[:budget]), m)
