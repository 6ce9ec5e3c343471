"""Client heterogeneity via the Fréchet distance between Gaussian fits.

The squared distance between N(mu1, S1) and N(mu2, S2) is

    |mu1 - mu2|^2 + tr(S1) + tr(S2) - 2 tr((S1 S2)^(1/2))

with the trace term evaluated through the symmetric similarity form
tr((S1^(1/2) S2 S1^(1/2))^(1/2)) so only PSD square roots are needed. The
overall heterogeneity of K clients is the mean squared distance from each
client to the pool of all others.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, InfeasibleError, NotPsdError
from .linalg import SYMMETRY_ATOL, psd_sqrt, sym_eigen


@dataclass
class GaussianSummary:
    """Sample mean and unbiased covariance of a set of embedding rows."""

    mean: np.ndarray
    covariance: np.ndarray
    sample_count: int


def summarize(embeddings) -> GaussianSummary:
    arr = np.asarray(embeddings, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"embeddings must be 2-D, got shape {arr.shape}")
    m = arr.shape[0]
    if m < 2:
        raise InfeasibleError(
            f"need at least 2 samples for a covariance, got {m}"
        )
    mean = arr.mean(axis=0)
    centered = arr - mean
    cov = (centered.T @ centered) / (m - 1)
    cov = 0.5 * (cov + cov.T)
    return GaussianSummary(mean, cov, m)


def _trace_cross_term(cov1: np.ndarray, cov2: np.ndarray) -> float:
    """tr((cov1 cov2)^(1/2)) via the symmetric similarity form."""
    root1 = psd_sqrt(cov1)
    inner = root1 @ cov2 @ root1
    decomp = sym_eigen(0.5 * (inner + inner.T))
    values = decomp.eigenvalues
    # round-off scales with the eigenvalue magnitudes here, so the clamp
    # tolerance is relative rather than the absolute PSD-input floor
    floor = -1e-9 * max(1.0, float(np.abs(values).max()))
    if values.min() < floor:
        raise NotPsdError(
            f"similarity form has eigenvalue {values.min():.3e} below {floor:.3e}"
        )
    return float(np.sqrt(np.clip(values, 0.0, None)).sum())


def frechet_distance_sq(d1: GaussianSummary, d2: GaussianSummary) -> float:
    """Squared Fréchet (2nd Wasserstein) distance between two Gaussian fits."""
    if d1.mean.shape != d2.mean.shape or d1.covariance.shape != d2.covariance.shape:
        raise DimensionError(
            f"summary dimensions differ: {d1.mean.shape} vs {d2.mean.shape}"
        )
    if not np.allclose(d1.covariance, d1.covariance.T, rtol=0.0, atol=SYMMETRY_ATOL):
        raise DimensionError("first covariance is not symmetric")
    if not np.allclose(d2.covariance, d2.covariance.T, rtol=0.0, atol=SYMMETRY_ATOL):
        raise DimensionError("second covariance is not symmetric")
    mean_term = float(((d1.mean - d2.mean) ** 2).sum())
    trace_term = (
        float(np.trace(d1.covariance))
        + float(np.trace(d2.covariance))
        - 2.0 * _trace_cross_term(d1.covariance, d2.covariance)
    )
    return max(mean_term + trace_term, 0.0)


def gamma(client_embeddings: list[np.ndarray]) -> tuple[float, np.ndarray]:
    """Mean leave-one-client-out squared Fréchet distance.

    For each client, compares its Gaussian fit against the fit of the
    pooled embeddings of all other clients; returns (mean, per-client
    distances in client order).
    """
    k = len(client_embeddings)
    if k < 2:
        raise ConfigError(f"heterogeneity needs at least 2 clients, got {k}")
    arrays = [np.asarray(e, dtype=np.float64) for e in client_embeddings]
    distances = np.empty(k)
    for i in range(k):
        own = summarize(arrays[i])
        rest = np.concatenate([arrays[j] for j in range(k) if j != i], axis=0)
        distances[i] = frechet_distance_sq(own, summarize(rest))
    return float(distances.mean()), distances
