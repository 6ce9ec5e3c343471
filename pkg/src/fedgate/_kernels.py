"""Hot numeric kernels: cyclic Jacobi eigensolver and K-means loops.

Each kernel has two implementations: a numba ``@njit`` version (default) and
a pure-numpy fallback. Set ``FEDGATE_PURE_NUMPY=1`` to force the fallback,
e.g. on platforms where numba is unavailable or for debugging. The module
attributes ``jacobi_eigh``, ``kmeanspp_select`` and ``lloyd`` point at the
selected backend; both variants stay importable for tests and benchmarks.

Randomness never enters these kernels: K-means++ consumes pre-drawn uniform
deviates so results are reproducible for a fixed seed on either backend.
"""

from __future__ import annotations

import math
import os

import numpy as np

_ENV_FLAG = "FEDGATE_PURE_NUMPY"

_JACOBI_MAX_SWEEPS = 60
_JACOBI_REL_TOL = 1e-13


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def jacobi_eigh_numpy(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi diagonalization of a symmetric matrix.

    Returns (eigenvalues, eigenvectors) unsorted; columns of the second
    array are the eigenvectors.
    """
    n = a.shape[0]
    work = np.array(a, dtype=np.float64, copy=True)
    vecs = np.eye(n)
    if n == 1:
        return np.array([work[0, 0]]), vecs
    fro = np.sqrt((work * work).sum())
    if fro == 0.0:
        return np.zeros(n), vecs
    stop = _JACOBI_REL_TOL * fro
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = work.copy()
        np.fill_diagonal(off, 0.0)
        if np.sqrt((off * off).sum()) <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if abs(apq) <= 1e-20 * fro:
                    continue
                theta = (work[q, q] - work[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = work[:, p].copy()
                col_q = work[:, q].copy()
                work[:, p] = c * col_p - s * col_q
                work[:, q] = s * col_p + c * col_q
                row_p = work[p, :].copy()
                row_q = work[q, :].copy()
                work[p, :] = c * row_p - s * row_q
                work[q, :] = s * row_p + c * row_q
                work[p, q] = 0.0
                work[q, p] = 0.0
                vec_p = vecs[:, p].copy()
                vec_q = vecs[:, q].copy()
                vecs[:, p] = c * vec_p - s * vec_q
                vecs[:, q] = s * vec_p + c * vec_q
    return np.diag(work).copy(), vecs


def _sq_dists_numpy(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def kmeanspp_select_numpy(x: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """K-means++ seeding: pick len(uniforms) point indices from x."""
    n = x.shape[0]
    k = uniforms.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = int(uniforms[0] * n)
    diff = x - x[chosen[0]]
    dist2 = np.einsum("nd,nd->n", diff, diff)
    for j in range(1, k):
        total = dist2.sum()
        if total <= 0.0:
            chosen[j] = int(uniforms[j] * n)
        else:
            target = uniforms[j] * total
            idx = int(np.searchsorted(np.cumsum(dist2), target, side="right"))
            chosen[j] = min(idx, n - 1)
        diff = x - x[chosen[j]]
        dist2 = np.minimum(dist2, np.einsum("nd,nd->n", diff, diff))
    return chosen


def lloyd_numpy(
    x: np.ndarray, init_centroids: np.ndarray, max_iter: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lloyd iterations until the assignment stops changing.

    Returns (centroids, labels, sse_history); history entry 0 is the SSE of
    the initial assignment, one more entry per completed iteration.
    """
    k = init_centroids.shape[0]
    centroids = np.array(init_centroids, dtype=np.float64, copy=True)
    dist2 = _sq_dists_numpy(x, centroids)
    labels = np.argmin(dist2, axis=1)
    history = [dist2[np.arange(x.shape[0]), labels].sum()]
    for _ in range(max_iter):
        for c in range(k):
            members = labels == c
            if members.any():
                centroids[c] = x[members].mean(axis=0)
        dist2 = _sq_dists_numpy(x, centroids)
        point_d2 = dist2[np.arange(x.shape[0]), labels]
        # empty clusters grab the point currently farthest from its centroid
        counts = np.bincount(labels, minlength=k)
        taken = point_d2.copy()
        for c in range(k):
            if counts[c] == 0:
                idx = int(np.argmax(taken))
                centroids[c] = x[idx]
                taken[idx] = -1.0
                dist2[:, c] = np.einsum(
                    "nd,nd->n", x - centroids[c], x - centroids[c]
                )
        new_labels = np.argmin(dist2, axis=1)
        history.append(dist2[np.arange(x.shape[0]), new_labels].sum())
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return centroids, labels, np.asarray(history)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

def _build_numba_kernels():
    from numba import njit

    @njit(cache=True)
    def jacobi_eigh_nb(a):  # pragma: no cover - exercised via wrapper
        n = a.shape[0]
        work = a.copy()
        vecs = np.eye(n)
        if n == 1:
            return np.diag(work).copy(), vecs
        fro = 0.0
        for i in range(n):
            for j in range(n):
                fro += work[i, j] * work[i, j]
        fro = math.sqrt(fro)
        if fro == 0.0:
            return np.zeros(n), vecs
        stop = _JACOBI_REL_TOL * fro
        for _sweep in range(_JACOBI_MAX_SWEEPS):
            off = 0.0
            for i in range(n):
                for j in range(n):
                    if i != j:
                        off += work[i, j] * work[i, j]
            if math.sqrt(off) <= stop:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = work[p, q]
                    if abs(apq) <= 1e-20 * fro:
                        continue
                    theta = (work[q, q] - work[p, p]) / (2.0 * apq)
                    if theta >= 0.0:
                        t = 1.0 / (theta + math.sqrt(theta * theta + 1.0))
                    else:
                        t = -1.0 / (-theta + math.sqrt(theta * theta + 1.0))
                    c = 1.0 / math.sqrt(t * t + 1.0)
                    s = t * c
                    for i in range(n):
                        aip = work[i, p]
                        aiq = work[i, q]
                        work[i, p] = c * aip - s * aiq
                        work[i, q] = s * aip + c * aiq
                    for i in range(n):
                        api = work[p, i]
                        aqi = work[q, i]
                        work[p, i] = c * api - s * aqi
                        work[q, i] = s * api + c * aqi
                    work[p, q] = 0.0
                    work[q, p] = 0.0
                    for i in range(n):
                        vip = vecs[i, p]
                        viq = vecs[i, q]
                        vecs[i, p] = c * vip - s * viq
                        vecs[i, q] = s * vip + c * viq
        return np.diag(work).copy(), vecs

    @njit(cache=True)
    def kmeanspp_select_nb(x, uniforms):  # pragma: no cover
        n = x.shape[0]
        d = x.shape[1]
        k = uniforms.shape[0]
        chosen = np.empty(k, dtype=np.int64)
        chosen[0] = int(uniforms[0] * n)
        dist2 = np.empty(n)
        for i in range(n):
            acc = 0.0
            for j in range(d):
                delta = x[i, j] - x[chosen[0], j]
                acc += delta * delta
            dist2[i] = acc
        for sel in range(1, k):
            total = 0.0
            for i in range(n):
                total += dist2[i]
            if total <= 0.0:
                chosen[sel] = int(uniforms[sel] * n)
            else:
                target = uniforms[sel] * total
                acc = 0.0
                idx = n - 1
                for i in range(n):
                    acc += dist2[i]
                    if acc > target:
                        idx = i
                        break
                chosen[sel] = idx
            for i in range(n):
                acc = 0.0
                for j in range(d):
                    delta = x[i, j] - x[chosen[sel], j]
                    acc += delta * delta
                if acc < dist2[i]:
                    dist2[i] = acc
        return chosen

    @njit(cache=True)
    def lloyd_nb(x, init_centroids, max_iter):  # pragma: no cover
        n = x.shape[0]
        d = x.shape[1]
        k = init_centroids.shape[0]
        centroids = init_centroids.copy()
        labels = np.empty(n, dtype=np.int64)
        point_d2 = np.empty(n)
        history = np.empty(max_iter + 1)
        sse = 0.0
        for i in range(n):
            best = np.inf
            best_c = 0
            for c in range(k):
                acc = 0.0
                for j in range(d):
                    delta = x[i, j] - centroids[c, j]
                    acc += delta * delta
                if acc < best:
                    best = acc
                    best_c = c
            labels[i] = best_c
            point_d2[i] = best
            sse += best
        history[0] = sse
        n_hist = 1
        counts = np.empty(k, dtype=np.int64)
        for _it in range(max_iter):
            counts[:] = 0
            for i in range(n):
                counts[labels[i]] += 1
            for c in range(k):
                if counts[c] > 0:
                    for j in range(d):
                        acc = 0.0
                        for i in range(n):
                            if labels[i] == c:
                                acc += x[i, j]
                        centroids[c, j] = acc / counts[c]
            for i in range(n):
                acc = 0.0
                for j in range(d):
                    delta = x[i, j] - centroids[labels[i], j]
                    acc += delta * delta
                point_d2[i] = acc
            taken = point_d2.copy()
            for c in range(k):
                if counts[c] == 0:
                    idx = 0
                    best = -1.0
                    for i in range(n):
                        if taken[i] > best:
                            best = taken[i]
                            idx = i
                    for j in range(d):
                        centroids[c, j] = x[idx, j]
                    taken[idx] = -1.0
            changed = False
            sse = 0.0
            for i in range(n):
                best = np.inf
                best_c = 0
                for c in range(k):
                    acc = 0.0
                    for j in range(d):
                        delta = x[i, j] - centroids[c, j]
                        acc += delta * delta
                    if acc < best:
                        best = acc
                        best_c = c
                if best_c != labels[i]:
                    changed = True
                labels[i] = best_c
                sse += best
            history[n_hist] = sse
            n_hist += 1
            if not changed:
                break
        return centroids, labels, history[:n_hist].copy()

    return jacobi_eigh_nb, kmeanspp_select_nb, lloyd_nb


def _select_backend():
    if os.environ.get(_ENV_FLAG, "").strip().lower() in ("1", "true", "yes"):
        return None
    try:
        return _build_numba_kernels()
    except ImportError:
        return None


_numba_kernels = _select_backend()

if _numba_kernels is not None:
    jacobi_eigh, kmeanspp_select, lloyd = _numba_kernels
    BACKEND = "numba"
else:
    jacobi_eigh = jacobi_eigh_numpy
    kmeanspp_select = kmeanspp_select_numpy
    lloyd = lloyd_numpy
    BACKEND = "numpy"


def backend() -> str:
    """Name of the active kernel backend ("numba" or "numpy")."""
    return BACKEND
