"""Whitened empirical kernel map.

A point z is first mapped to its kernel evaluations against the n training
points, then whitened with the truncated inverse square root of the training
Gram matrix K = U diag(lam) U'.  With all eigenpairs retained the canonical
dot product of the images reproduces the kernel exactly:

    <embed(x_i), embed(x_j)> = K_ij,

so sphere problems on the embedded coordinates with a plain dot product are
equivalent to kernel-space problems on the raw inputs.  Eigenvalues at or
below ``eigen_floor * lam_max`` are truncated, which both regularizes
rank-deficient Gram matrices and reduces the embedded dimensionality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .kernels import KernelSpec, as_data_matrix, gram


@dataclass(frozen=True)
class KernelWhitener:
    """Truncated inverse-square-root transform of a training Gram matrix."""

    basis: np.ndarray
    spec: KernelSpec
    transform: np.ndarray  # (retained_rank x n) = diag(lam_kept^-1/2) U_kept'
    retained_rank: int
    eigen_floor: float

    def __post_init__(self) -> None:
        self.basis.setflags(write=False)
        self.transform.setflags(write=False)


def build_whitener(X, spec: KernelSpec, eigen_floor: float = 1e-10) -> KernelWhitener:
    """Eigendecompose the Gram matrix of X and keep the dominant eigenpairs.

    Eigenvectors are sorted by descending eigenvalue and sign-fixed so the
    largest-magnitude component of each is positive, making the transform
    reproducible for identical inputs.
    """
    if not 0.0 < eigen_floor < 1.0:
        raise DataError("eigen_floor must be in (0, 1)")
    Xv = as_data_matrix(X)
    K = gram(spec, Xv).values
    eigvals, eigvecs = np.linalg.eigh(K)
    order = np.argsort(eigvals, kind="stable")[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]

    lam_max = float(eigvals[0])
    if lam_max <= 0.0:
        raise NumericalError("degenerate kernel: no positive eigenvalue")
    keep = eigvals > eigen_floor * lam_max
    rank = int(keep.sum())
    if rank == 0:
        raise NumericalError("degenerate kernel: all eigenvalues below the floor")

    vectors = eigvecs[:, :rank]
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivot, np.arange(rank)])
    signs[signs == 0] = 1.0
    vectors = vectors * signs
    transform = vectors.T / np.sqrt(eigvals[:rank])[:, None]
    return KernelWhitener(
        basis=Xv.copy(),
        spec=spec,
        transform=transform,
        retained_rank=rank,
        eigen_floor=float(eigen_floor),
    )


def embed(w: KernelWhitener, z) -> np.ndarray:
    """Map one point into the whitened kernel coordinates (length = rank)."""
    zv = np.asarray(z, dtype=float).ravel()
    return embed_matrix(w, zv[None, :])[0]


def embed_matrix(w: KernelWhitener, Z) -> np.ndarray:
    """Row-wise embedding of a sample matrix."""
    Zv = as_data_matrix(Z, "Z")
    if Zv.shape[1] != w.basis.shape[1]:
        raise DataError(
            f"point dimension {Zv.shape[1]} does not match basis dimension {w.basis.shape[1]}"
        )
    if w.spec.kind == "linear":
        cross = Zv @ w.basis.T
    else:
        sq_z = np.einsum("ij,ij->i", Zv, Zv)
        sq_b = np.einsum("ij,ij->i", w.basis, w.basis)
        d2 = sq_z[:, None] + sq_b[None, :] - 2.0 * (Zv @ w.basis.T)
        np.maximum(d2, 0.0, out=d2)
        cross = np.exp(-d2 / (2.0 * w.spec.bandwidth**2))
    return cross @ w.transform.T
