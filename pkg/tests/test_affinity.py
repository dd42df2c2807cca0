import numpy as np
import pytest

from utclust import affinity as aff
from utclust.tensor_ops import khatri_rao, kronecker, unfold3, unfold4


@pytest.fixture
def cloud():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((12, 3))
    D = aff.pairwise_distances(X)
    knn = aff.knn_index(D, 5)
    return X, D, knn


class TestPairwiseDistances:
    def test_coincident_rows(self):
        X = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]])
        D = aff.pairwise_distances(X)
        assert D[0, 1] == 0.0

    def test_345_triangle(self):
        D = aff.pairwise_distances([[0.0, 0.0], [3.0, 4.0]])
        assert abs(D[0, 1] - 5.0) < 1e-12

    def test_matches_naive_loop(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((10, 5))
        D = aff.pairwise_distances(X)
        for i in range(10):
            for j in range(10):
                d = np.sqrt(np.sum((X[i] - X[j]) ** 2))
                assert abs(D[i, j] - d) < 1e-12

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            aff.pairwise_distances([[0.0, np.inf], [1.0, 2.0]])


class TestPairwiseAffinity:
    def test_zero_distance_inside_mask(self):
        # two coincident points plus one far away; the coincident pair is
        # mutually nearest, so its affinity is exp(0) = 1
        X = np.array([[0.0, 0.0], [0.0, 0.0], [10.0, 0.0], [10.0, 1.0]])
        D = aff.pairwise_distances(X)
        S = aff.pairwise_affinity(D, 1)
        assert S[0, 1] == 1.0

    def test_median_bandwidth(self):
        # all mutual at k=2; the pair sitting at the median distance gets
        # exp(-1/2)
        D = aff.pairwise_distances([[0.0], [1.0], [3.0]])
        med = np.median(D[D > 0])
        S = aff.pairwise_affinity(D, 2)
        i, j = np.argwhere(np.isclose(D, med))[0]
        assert abs(S[i, j] - np.exp(-0.5)) < 1e-12

    def test_two_blob_block_structure(self):
        rng = np.random.default_rng(2)
        X = np.vstack(
            [rng.normal(0, 0.5, (20, 2)), rng.normal(8, 0.5, (20, 2))]
        )
        S = aff.pairwise_affinity(aff.pairwise_distances(X), 10)
        within = np.r_[S[:20, :20][~np.eye(20, dtype=bool)],
                       S[20:, 20:][~np.eye(20, dtype=bool)]]
        cross = S[:20, 20:].ravel()
        assert within.mean() > 5 * max(cross.mean(), 1e-12)

    def test_degenerate_all_zero(self):
        D = np.zeros((3, 3))
        with pytest.raises(ValueError, match="degenerate"):
            aff.pairwise_affinity(D, 1)


class TestTriadicAffinity:
    def lookup(self, T, i, j, k):
        hit = (T.i == i) & (T.j == j) & (T.k == k)
        assert hit.sum() == 1
        return float(T.values[hit][0])

    def test_collinear_same_side(self):
        X = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        D = aff.pairwise_distances(X)
        knn = aff.knn_index(D, 3)
        T = aff.triadic_affinity(X, D, knn)
        # anchor 0 sees 1 and 2 on the same side
        assert abs(self.lookup(T, 1, 0, 2) - 1.0) < 1e-12

    def test_right_angle(self):
        X = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [2.0, 2.0]])
        D = aff.pairwise_distances(X)
        knn = aff.knn_index(D, 3)
        T = aff.triadic_affinity(X, D, knn)
        assert abs(self.lookup(T, 0, 1, 2)) < 1e-12

    def test_matches_angle_oracle(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((5, 2))
        D = aff.pairwise_distances(X)
        knn = aff.knn_index(D, 4)
        T = aff.triadic_affinity(X, D, knn)
        for i, j, k, v in zip(T.i, T.j, T.k, T.values):
            cos = float(
                np.dot(X[i] - X[j], X[k] - X[j])
                / (np.linalg.norm(X[i] - X[j]) * np.linalg.norm(X[k] - X[j]))
            )
            assert abs(v - cos) < 1e-12

    def test_value_range_and_symmetry(self, cloud):
        X, D, knn = cloud
        T = aff.triadic_affinity(X, D, knn)
        assert np.all(T.values >= -1.0) and np.all(T.values <= 1.0)
        stored = {(i, j, k): v for i, j, k, v in zip(T.i, T.j, T.k, T.values)}
        for (i, j, k), v in stored.items():
            assert stored[(k, j, i)] == v


class TestTetradicAffinity:
    def test_zero_numerator(self):
        D = aff.pairwise_distances([[0.0], [1.0], [4.0]])
        assert aff.tetradic_value(D, 0, 0, 1, 1, sigma=1.0, eps=1e-8) == 1.0

    def test_unit_ratio(self):
        # engineered so d01 + d23 equals d02 + d13 + eps
        D = np.array(
            [
                [0.0, 2.0, 1.0, 1.0],
                [2.0, 0.0, 1.0, 1.0],
                [1.0, 1.0, 0.0, 1.0],
                [1.0, 1.0, 1.0, 0.0],
            ]
        )
        eps = 1.0
        val = aff.tetradic_value(D, 0, 1, 2, 3, sigma=1.0, eps=eps)
        assert abs(val - np.exp(-1.0)) < 1e-12

    def test_matches_quadruple_loop(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((6, 2))
        D = aff.pairwise_distances(X)
        knn = aff.knn_index(D, 3)
        T = aff.tetradic_affinity(D, knn, sigma=1e-6, eps=1e-8)
        for i, j, k, l, v in zip(T.i, T.j, T.k, T.l, T.values):
            ref = np.exp(
                -1e-6 * (D[i, j] + D[k, l]) / (D[i, k] + D[j, l] + 1e-8)
            )
            assert abs(v - ref) < 1e-12

    def test_value_range(self, cloud):
        _, D, knn = cloud
        T = aff.tetradic_affinity(D, knn)
        assert np.all(T.values > 0.0) and np.all(T.values <= 1.0)

    def test_pair_swap_symmetry(self, cloud):
        _, D, knn = cloud
        T = aff.tetradic_affinity(D, knn)
        codes = set(
            zip(T.i.tolist(), T.j.tolist(), T.k.tolist(), T.l.tolist())
        )
        vals = dict(zip(codes, T.values))
        # regenerate the dict correctly (zip above consumed the set order)
        vals = {
            (i, j, k, l): v
            for i, j, k, l, v in zip(T.i, T.j, T.k, T.l, T.values)
        }
        for (i, j, k, l), v in vals.items():
            assert (k, l, i, j) in vals
            assert vals[(k, l, i, j)] == v

    def test_tuple_budget(self):
        rng = np.random.default_rng(5)
        for m, k in [(30, 3), (50, 5), (80, 8)]:
            X = rng.standard_normal((m, 3))
            D = aff.pairwise_distances(X)
            knn = aff.knn_index(D, k)
            T = aff.tetradic_affinity(D, knn)
            assert T.nnz <= 8 * m * k**4

    def test_invalid_params(self, cloud):
        _, D, knn = cloud
        with pytest.raises(ValueError, match="positive"):
            aff.tetradic_affinity(D, knn, sigma=0.0)


class TestDecomposable:
    def test_triadic_identity_input(self):
        out = aff.decomposable_triadic(np.eye(3)).toarray()
        assert np.array_equal(out, khatri_rao(np.eye(3), np.eye(3)))

    def test_triadic_rank_one(self):
        u = np.array([1.0, 2.0, -1.0])
        S = np.outer(u, u)
        out = aff.decomposable_triadic(S).toarray()
        for j in range(3):
            assert np.allclose(out[:, j], u[j] ** 2 * np.kron(u, u))

    def test_triadic_matches_loop_tensor(self):
        rng = np.random.default_rng(6)
        S = rng.uniform(0, 1, (5, 5))
        S = (S + S.T) / 2
        m = 5
        dense = np.zeros((m * m, m))
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    dense[i * m + k, j] = S[i, j] * S[k, j]
        assert np.allclose(aff.decomposable_triadic(S).toarray(), dense, atol=1e-12)

    def test_tetradic_identity_input(self):
        out = aff.decomposable_tetradic(np.eye(3)).toarray()
        assert np.array_equal(out, np.eye(9))

    def test_tetradic_2x2_blocks(self):
        S = np.array([[1.0, 2.0], [2.0, 3.0]])
        out = aff.decomposable_tetradic(S).toarray()
        expected = np.block([[1.0 * S, 2.0 * S], [2.0 * S, 3.0 * S]])
        assert np.array_equal(out, expected)

    def test_tetradic_matches_loop_tensor(self):
        rng = np.random.default_rng(7)
        S = rng.uniform(0, 1, (4, 4))
        S = (S + S.T) / 2
        m = 4
        dense = np.zeros((m * m, m * m))
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    for l in range(m):
                        dense[j * m + i, l * m + k] = S[i, k] * S[j, l]
        assert np.allclose(
            aff.decomposable_tetradic(S).toarray(), dense, atol=1e-12
        )

    def test_requires_symmetry(self):
        with pytest.raises(ValueError, match="symmetric"):
            aff.decomposable_triadic(np.array([[0.0, 1.0], [0.5, 0.0]]))


def test_permutation_consistency():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((10, 3))
    D = aff.pairwise_distances(X)
    knn = aff.knn_index(D, 4)
    T = aff.triadic_affinity(X, D, knn)
    perm = rng.permutation(10)
    Xp = X[perm]
    Dp = aff.pairwise_distances(Xp)
    knnp = aff.knn_index(Dp, 4)
    Tp = aff.triadic_affinity(Xp, Dp, knnp)
    orig = {
        (i, j, k): v for i, j, k, v in zip(T.i, T.j, T.k, T.values)
    }
    relabeled = {
        (perm[i], perm[j], perm[k]): v
        for i, j, k, v in zip(Tp.i, Tp.j, Tp.k, Tp.values)
    }
    assert set(orig) == set(relabeled)
    for key, v in orig.items():
        assert abs(relabeled[key] - v) < 1e-10
