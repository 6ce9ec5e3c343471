"""Dense linear algebra: symmetric eigendecomposition, PSD square root,
PCA, and seeded K-means.

All matrices are dense row-major float64 numpy arrays. Every public
function is a pure function of its inputs; K-means randomness comes from an
explicit seed, so identical inputs give bit-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionError, InfeasibleError, NotPsdError
from .seeding import make_rng

SYMMETRY_ATOL = 1e-10
PSD_EIGENVALUE_FLOOR = -1e-10
KMEANS_MAX_ITER = 300


def _as_matrix(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def _require_symmetric(a: np.ndarray, name: str) -> None:
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=SYMMETRY_ATOL):
        raise DimensionError(
            f"{name} must be symmetric within {SYMMETRY_ATOL:g} absolute tolerance"
        )


@dataclass
class EigenDecomposition:
    """Eigenvalues (descending) and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym_eigen(a) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix via cyclic Jacobi.

    Satisfies a = Q diag(w) Q^T with orthonormal Q and w sorted descending.
    """
    arr = _as_matrix(a, "a")
    _require_symmetric(arr, "a")
    sym = 0.5 * (arr + arr.T)
    values, vectors = _kernels.jacobi_eigh(np.ascontiguousarray(sym))
    order = np.argsort(-values, kind="stable")
    return EigenDecomposition(values[order], np.ascontiguousarray(vectors[:, order]))


def psd_sqrt(a) -> np.ndarray:
    """Symmetric square root S of a PSD matrix, S @ S ~= a.

    Eigenvalues in [-1e-10, 0) are treated as round-off and clamped to 0;
    anything more negative raises NotPsdError.
    """
    decomp = sym_eigen(a)
    values = decomp.eigenvalues.copy()
    if values.min() < PSD_EIGENVALUE_FLOOR:
        raise NotPsdError(
            f"matrix has eigenvalue {values.min():.3e} below {PSD_EIGENVALUE_FLOOR:g}"
        )
    np.clip(values, 0.0, None, out=values)
    q = decomp.eigenvectors
    root = (q * np.sqrt(values)) @ q.T
    return 0.5 * (root + root.T)


@dataclass
class PcaModel:
    """Projection onto the leading principal components of a sample.

    ``components`` is D x m with orthonormal columns ordered by descending
    explained variance; projecting a row x is ``(x - mean) @ components``.
    """

    components: np.ndarray
    mean: np.ndarray
    explained_variance: np.ndarray

    def project(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape[-1] != self.components.shape[0]:
            raise DimensionError(
                f"cannot project width {arr.shape[-1]} with {self.components.shape[0]}-dim PCA"
            )
        return (arr - self.mean) @ self.components


def pca_fit(x, num_components: int) -> PcaModel:
    """Fit PCA by eigendecomposition of the sample covariance of x (N x D).

    Sign convention: each component's largest-magnitude entry is positive.
    """
    arr = _as_matrix(x, "x")
    n, d = arr.shape
    if n < 2:
        raise DimensionError(f"PCA needs at least 2 samples, got {n}")
    if not 1 <= num_components <= min(n, d):
        raise DimensionError(
            f"num_components={num_components} out of range [1, {min(n, d)}]"
        )
    mean = arr.mean(axis=0)
    centered = arr - mean
    cov = (centered.T @ centered) / (n - 1)
    decomp = sym_eigen(cov)
    components = decomp.eigenvectors[:, :num_components].copy()
    variances = np.clip(decomp.eigenvalues[:num_components], 0.0, None)
    for j in range(num_components):
        lead = np.argmax(np.abs(components[:, j]))
        if components[lead, j] < 0.0:
            components[:, j] = -components[:, j]
    return PcaModel(np.ascontiguousarray(components), mean, variances)


def kmeans(
    x,
    k: int,
    seed: int,
    max_iter: int = KMEANS_MAX_ITER,
    return_history: bool = False,
):
    """Seeded k-means++ plus Lloyd iterations to assignment convergence.

    Returns (centroids k x d, labels length N); with ``return_history`` also
    the per-iteration SSE trace. Deterministic for fixed (x, k, seed). An
    empty cluster is reseeded to the point farthest from its own centroid.
    """
    arr = _as_matrix(x, "x")
    n = arr.shape[0]
    if k < 1:
        raise InfeasibleError(f"k must be >= 1, got {k}")
    if k > n:
        raise InfeasibleError(f"k={k} exceeds the number of points {n}")
    rng = make_rng(seed)
    uniforms = rng.random(k)
    arr = np.ascontiguousarray(arr)
    chosen = _kernels.kmeanspp_select(arr, uniforms)
    centroids, labels, history = _kernels.lloyd(arr, arr[chosen].copy(), max_iter)
    if return_history:
        return centroids, labels, history
    return centroids, labels
