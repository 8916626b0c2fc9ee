"""Kernel functions, Gram matrices, and masked-feature variants.

Feature masking is an elementwise product with a binary vector: excluded
columns are zeroed, not deleted, so matrix shapes stay stable across masks.
For the RBF kernel both conventions give identical values because excluded
coordinates contribute zero to the squared distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

LINEAR = "linear"
RBF = "rbf"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its bandwidth (RBF only).

    rbf(x, y) = exp(-||x - y||^2 / (2 sigma^2)).
    """

    kind: str
    bandwidth: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (LINEAR, RBF):
            raise DataError(f"unknown kernel kind {self.kind!r}")
        if self.kind == RBF:
            if self.bandwidth is None or not np.isfinite(self.bandwidth) or self.bandwidth <= 0:
                raise DataError("rbf kernel requires bandwidth > 0")


@dataclass(frozen=True)
class FeatureMask:
    """Binary feature selector with a fixed budget (number of kept features)."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 1 or bits.size < 1:
            raise DataError("mask must be a non-empty 1-D boolean vector")
        if not bits.any():
            raise DataError("mask must select at least one feature")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_indices(cls, indices, num_features: int) -> "FeatureMask":
        idx = np.asarray(indices, dtype=int)
        if idx.size and (idx.min() < 0 or idx.max() >= num_features):
            raise DataError("mask index out of range")
        bits = np.zeros(num_features, dtype=bool)
        bits[idx] = True
        if bits.sum() != idx.size:
            raise DataError("duplicate mask index")
        return cls(bits)

    @property
    def num_features(self) -> int:
        return self.bits.size

    @property
    def budget(self) -> int:
        return int(self.bits.sum())

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def key(self) -> tuple[int, ...]:
        """Hashable identity used for duplicate detection."""
        return tuple(int(i) for i in self.indices())


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric kernel matrix with its diagonal cached."""

    values: np.ndarray
    diag: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DataError("gram matrix must be square")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        diag = np.ascontiguousarray(np.diag(values))
        diag.setflags(write=False)
        object.__setattr__(self, "diag", diag)

    @property
    def size(self) -> int:
        return self.values.shape[0]


def as_data_matrix(values, name: str = "data") -> np.ndarray:
    """Validate an N x M sample matrix (rows = samples) and return float64."""
    X = np.asarray(values, dtype=float)
    if X.ndim != 2:
        raise DataError(f"{name} must be 2-D (rows = samples)")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise DataError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(X)):
        raise DataError(f"{name} contains non-finite values")
    return X


def _as_vector(v, length: int | None, name: str) -> np.ndarray:
    x = np.asarray(v, dtype=float).ravel()
    if length is not None and x.size != length:
        raise DataError(f"{name} has length {x.size}, expected {length}")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{name} contains non-finite values")
    return x


def _apply_mask(X: np.ndarray, mask: FeatureMask | None) -> np.ndarray:
    if mask is None:
        return X
    if mask.num_features != X.shape[-1]:
        raise DataError(
            f"mask length {mask.num_features} does not match feature count {X.shape[-1]}"
        )
    return X * mask.bits


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Evaluate k(x, y) for a single pair of vectors."""
    xv = _as_vector(x, None, "x")
    yv = _as_vector(y, xv.size, "y")
    if spec.kind == LINEAR:
        return float(xv @ yv)
    delta = xv - yv
    return float(np.exp(-(delta @ delta) / (2.0 * spec.bandwidth**2)))


def gram(spec: KernelSpec, X, mask: FeatureMask | None = None) -> GramMatrix:
    """Gram matrix of the (optionally masked) rows of X.

    Symmetry is exact by construction: the upper triangle is computed and
    mirrored.  The RBF diagonal is set to exactly 1.
    """
    Xm = _apply_mask(as_data_matrix(X), mask)
    if spec.kind == LINEAR:
        G = Xm @ Xm.T
    else:
        sq = np.einsum("ij,ij->i", Xm, Xm)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (Xm @ Xm.T)
        np.maximum(d2, 0.0, out=d2)
        G = np.exp(-d2 / (2.0 * spec.bandwidth**2))
        np.fill_diagonal(G, 1.0)
    G = np.triu(G) + np.triu(G, 1).T
    return GramMatrix(G)


def cross_kernel(spec: KernelSpec, X_basis, z, mask: FeatureMask | None = None) -> np.ndarray:
    """Vector of kernel values (k(x_1, z), ..., k(x_n, z)) under the mask."""
    Xb = as_data_matrix(X_basis, "basis")
    zv = _as_vector(z, Xb.shape[1], "z")
    Xm = _apply_mask(Xb, mask)
    zm = _apply_mask(zv[None, :], mask)[0]
    if spec.kind == LINEAR:
        return Xm @ zm
    d2 = np.einsum("ij,ij->i", Xm - zm, Xm - zm)
    return np.exp(-d2 / (2.0 * spec.bandwidth**2))
