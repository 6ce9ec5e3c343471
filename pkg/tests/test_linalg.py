import itertools

import numpy as np
import pytest

from fedgate import _kernels
from fedgate.errors import DimensionError, InfeasibleError, NotPsdError
from fedgate.linalg import kmeans, pca_fit, psd_sqrt, sym_eigen


def random_symmetric(rng, n):
    a = rng.normal(size=(n, n))
    return 0.5 * (a + a.T)


def random_psd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T


class TestSymEigen:
    def test_identity(self):
        d = sym_eigen(np.eye(3))
        np.testing.assert_allclose(d.eigenvalues, [1.0, 1.0, 1.0])

    def test_diagonal(self):
        d = sym_eigen(np.diag([4.0, 1.0]))
        np.testing.assert_allclose(d.eigenvalues, [4.0, 1.0])
        # eigenvectors axis-aligned
        np.testing.assert_allclose(np.abs(d.eigenvectors), np.eye(2), atol=1e-12)

    def test_two_by_two(self):
        # characteristic polynomial x^2 - 4x + 3 gives roots 3 and 1
        d = sym_eigen([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(d.eigenvalues, [3.0, 1.0], atol=1e-12)

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            sym_eigen(np.ones((2, 3)))

    def test_rejects_asymmetric(self):
        with pytest.raises(DimensionError):
            sym_eigen([[1.0, 2.0], [0.0, 1.0]])

    @pytest.mark.parametrize("n", [1, 2, 5, 17, 32])
    def test_reconstruction_and_orthonormality(self, n):
        rng = np.random.default_rng(n)
        for _ in range(3):
            a = random_symmetric(rng, n)
            d = sym_eigen(a)
            q, w = d.eigenvectors, d.eigenvalues
            assert np.all(np.diff(w) <= 1e-12)
            recon = q @ np.diag(w) @ q.T
            rel = np.linalg.norm(recon - a) / max(np.linalg.norm(a), 1e-300)
            assert rel < 1e-8
            assert np.abs(q.T @ q - np.eye(n)).max() < 1e-8

    def test_backends_agree(self):
        rng = np.random.default_rng(0)
        a = random_symmetric(rng, 6)
        w_np, v_np = _kernels.jacobi_eigh_numpy(a)
        w_active, v_active = _kernels.jacobi_eigh(np.ascontiguousarray(a))
        np.testing.assert_allclose(np.sort(w_np), np.sort(w_active), atol=1e-10)
        np.testing.assert_allclose(
            v_np @ np.diag(w_np) @ v_np.T,
            v_active @ np.diag(w_active) @ v_active.T,
            atol=1e-10,
        )


class TestPsdSqrt:
    def test_identity(self):
        np.testing.assert_allclose(psd_sqrt(np.eye(4)), np.eye(4), atol=1e-12)

    def test_diagonal(self):
        np.testing.assert_allclose(
            psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-12
        )

    def test_square_reproduces_input(self):
        a = np.array([[2.0, 1.0], [1.0, 2.0]])
        s = psd_sqrt(a)
        np.testing.assert_allclose(s, s.T)
        assert np.linalg.norm(s @ s - a) / np.linalg.norm(a) < 1e-10

    def test_rejects_indefinite(self):
        with pytest.raises(NotPsdError):
            psd_sqrt(np.diag([1.0, -0.5]))

    def test_clamps_floating_point_negatives(self):
        s = psd_sqrt(np.diag([1.0, -5e-11]))
        np.testing.assert_allclose(s, np.diag([1.0, 0.0]), atol=1e-12)

    @pytest.mark.parametrize("n", [2, 8, 32])
    def test_random_psd_roundtrip(self, n):
        rng = np.random.default_rng(100 + n)
        for _ in range(5):
            a = random_psd(rng, n)
            s = psd_sqrt(a)
            rel = np.linalg.norm(s @ s - a) / np.linalg.norm(a)
            assert rel < 1e-8


class TestPca:
    def test_rank_one_line(self):
        rng = np.random.default_rng(1)
        t = rng.normal(size=200)
        x = np.stack([t + 3.0, 2.0 * t - 1.0], axis=1)  # y = 2x line + offset
        model = pca_fit(x, 2)
        direction = model.components[:, 0]
        expected = np.array([1.0, 2.0]) / np.sqrt(5.0)
        np.testing.assert_allclose(np.abs(direction), expected, atol=1e-10)
        total = model.explained_variance.sum()
        assert model.explained_variance[1] < 1e-10 * total

    def test_isotropic_gaussian_ratios(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(100_000, 2))
        model = pca_fit(x, 2)
        ratios = model.explained_variance / model.explained_variance.sum()
        np.testing.assert_allclose(ratios, [0.5, 0.5], atol=0.02)

    def test_degenerate_duplicated_point(self):
        x = np.tile([1.5, -2.0, 0.25], (10, 1))
        model = pca_fit(x, 2)
        np.testing.assert_allclose(model.explained_variance, 0.0, atol=1e-12)
        np.testing.assert_allclose(model.project(x), 0.0, atol=1e-12)
        q = model.components
        np.testing.assert_allclose(q.T @ q, np.eye(2), atol=1e-10)

    def test_orthonormal_components(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(50, 6)) @ rng.normal(size=(6, 6))
        model = pca_fit(x, 4)
        q = model.components
        assert np.abs(q.T @ q - np.eye(4)).max() < 1e-10

    def test_sign_convention_deterministic(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(40, 3))
        a = pca_fit(x, 3)
        b = pca_fit(x.copy(), 3)
        np.testing.assert_array_equal(a.components, b.components)
        for j in range(3):
            lead = np.argmax(np.abs(a.components[:, j]))
            assert a.components[lead, j] > 0

    def test_num_components_out_of_range(self):
        x = np.zeros((5, 3))
        with pytest.raises(DimensionError):
            pca_fit(x, 4)
        with pytest.raises(DimensionError):
            pca_fit(x, 0)
        with pytest.raises(DimensionError):
            pca_fit(np.zeros((1, 3)), 1)


def brute_force_two_cluster_sse(points):
    """Best 2-partition by total within-cluster SSE, by full enumeration."""
    best = None
    n = len(points)
    for bits in itertools.product([0, 1], repeat=n):
        if len(set(bits)) < 2:
            continue
        sse = 0.0
        for c in (0, 1):
            members = points[[i for i in range(n) if bits[i] == c]]
            sse += ((members - members.mean(axis=0)) ** 2).sum()
        if best is None or sse < best[0]:
            best = (sse, bits)
    return best


class TestKmeans:
    def test_two_clusters_match_enumeration(self):
        points = np.array([[0.0], [1.0], [10.0], [11.0]])
        centroids, labels = kmeans(points, 2, seed=123)
        np.testing.assert_allclose(sorted(centroids[:, 0]), [0.5, 10.5])
        best_sse, best_bits = brute_force_two_cluster_sse(points)
        # same partition as the enumerated optimum (up to cluster renaming)
        assert (labels == labels[0]).tolist() in (
            [b == best_bits[0] for b in best_bits],
            [b != best_bits[0] for b in best_bits],
        )
        sse = sum(
            ((points[labels == c] - centroids[c]) ** 2).sum() for c in range(2)
        )
        assert sse == pytest.approx(best_sse)

    def test_k_equals_one_gives_mean(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(20, 3))
        centroids, labels = kmeans(x, 1, seed=0)
        np.testing.assert_allclose(centroids[0], x.mean(axis=0), atol=1e-12)
        assert np.all(labels == 0)

    def test_k_equals_n_zero_sse(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(7, 2))
        centroids, labels = kmeans(x, 7, seed=0)
        sse = ((x - centroids[labels]) ** 2).sum()
        assert sse == pytest.approx(0.0, abs=1e-24)
        assert len(set(labels.tolist())) == 7

    def test_deterministic_bit_for_bit(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(60, 4))
        a = kmeans(x, 5, seed=99)
        b = kmeans(x.copy(), 5, seed=99)
        assert np.array_equal(a[0], b[0])
        assert np.array_equal(a[1], b[1])
        c = kmeans(x, 5, seed=100)
        assert not (np.array_equal(a[0], c[0]) and np.array_equal(a[1], c[1]))

    def test_sse_non_increasing(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(200, 3)) * 3.0
        for seed in range(5):
            _, _, history = kmeans(x, 6, seed=seed, return_history=True)
            assert np.all(np.diff(history) <= 1e-9)

    def test_k_greater_than_n(self):
        with pytest.raises(InfeasibleError):
            kmeans(np.zeros((3, 2)), 4, seed=0)
        with pytest.raises(InfeasibleError):
            kmeans(np.zeros((3, 2)), 0, seed=0)

    @pytest.mark.parametrize(
        "lloyd_fn", [_kernels.lloyd_numpy, _kernels.lloyd], ids=["numpy", "active"]
    )
    def test_empty_cluster_reseeds_to_farthest(self, lloyd_fn):
        # one initial centroid is far from every point and captures nothing
        x = np.array([[0.0], [0.2], [5.0], [5.2], [30.0]])
        init = np.array([[0.1], [5.1], [1000.0]])
        centroids, labels, history = lloyd_fn(x, init, 50)
        # the stranded centroid lands on the farthest point (30.0)
        assert 30.0 in centroids[:, 0]
        assert np.all(np.diff(history) <= 1e-9)
        sse = ((x - centroids[labels]) ** 2).sum()
        assert sse == pytest.approx(0.04)

    def test_backends_agree_on_labels(self):
        rng = np.random.default_rng(9)
        x = np.ascontiguousarray(
            np.concatenate([rng.normal(loc=c * 10, size=(30, 2)) for c in range(3)])
        )
        a_cent, a_lab = kmeans(x, 3, seed=11)
        uniforms = np.random.Generator(np.random.PCG64(0)).random(3)
        # compare kernel backends on identical seeding
        chosen = _kernels.kmeanspp_select_numpy(x, uniforms)
        c_np, l_np, _ = _kernels.lloyd_numpy(x, x[chosen].copy(), 300)
        c_ac, l_ac, _ = _kernels.lloyd(x, x[chosen].copy(), 300)
        np.testing.assert_allclose(c_np, c_ac, atol=1e-9)
        assert np.array_equal(l_np, l_ac)
        assert len(set(a_lab.tolist())) == 3
