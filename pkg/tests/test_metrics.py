import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blocksvd.errors import ShapeError, SizeLimitError
from blocksvd.metrics import (
    EvalRow,
    align_signs,
    degenerate_clusters,
    e_sigma,
    e_u,
    evaluate,
    evaluate_sweep,
    format_eval_csv,
    parse_eval_csv,
)
from blocksvd.repair import RepairMethod
from blocksvd.sparse import SparseMatrix, synth_bipartite
from blocksvd.svd import dense_svd, numerical_rank


def random_orthonormal(m, k, seed):
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((m, k)))
    return q


class TestESigma:
    def test_identical(self):
        assert e_sigma([3.0, 1.0], [3.0, 1.0]) == 0.0

    def test_arithmetic(self):
        assert e_sigma([3.0, 1.0], [2.5, 0.5]) == 1.0

    def test_padding(self):
        assert e_sigma([3.0], [3.0, 2.0]) == 2.0
        assert e_sigma([3.0, 2.0, 1.0], [3.0]) == 3.0


class TestAlignment:
    def test_negated(self):
        u = random_orthonormal(6, 4, 0)
        np.testing.assert_array_equal(align_signs(-u, u), u)

    def test_unchanged(self):
        u = random_orthonormal(6, 4, 1)
        np.testing.assert_array_equal(align_signs(u, u), u)

    def test_rotated_cluster(self):
        u = random_orthonormal(5, 3, 2)
        sigma = np.array([4.0, 2.0, 2.0])
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        u_hat = u.copy()
        u_hat[:, 1:] = u[:, 1:] @ rot
        assert np.abs(u_hat - u).max() > 0.1
        aligned = align_signs(u_hat, u, sigma)
        assert np.abs(aligned - u).max() <= 1e-8

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            align_signs(np.zeros((3, 2)), np.zeros((3, 3)))

    def test_clusters(self):
        assert degenerate_clusters([5.0, 3.0, 3.0 + 1e-12, 1.0, 0.0, 1e-17]) == [[0], [1, 2], [3], [4, 5]]
        assert degenerate_clusters([]) == []


class TestEU:
    def test_identical(self):
        u = random_orthonormal(7, 3, 3)
        assert e_u(u, u) == 0.0

    def test_sign_flip(self):
        u = random_orthonormal(7, 3, 4)
        flipped = u.copy()
        flipped[:, 1] *= -1
        assert e_u(flipped, u, [3.0, 2.0, 1.0]) == 0.0

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 8), st.integers(0, 2**31), st.lists(st.booleans(), min_size=8, max_size=8))
    def test_sign_invariance(self, k, seed, flips):
        u_ref = random_orthonormal(9, k, seed)
        u_hat = u_ref + 1e-6 * np.random.default_rng(seed + 1).standard_normal(u_ref.shape)
        base = e_u(u_hat, u_ref)
        signs = np.where(np.array(flips[:k]), -1.0, 1.0)
        assert e_u(u_hat * signs, u_ref) == pytest.approx(base, rel=1e-12)
        assert e_u(u_hat, u_ref * signs) == pytest.approx(base, rel=1e-12)
        assert base > 0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            e_u(np.zeros((3, 2)), np.zeros((4, 2)))


class TestNumericalRank:
    def test_identity(self):
        assert numerical_rank(np.eye(3)) == 3

    def test_zero(self):
        assert numerical_rank(np.zeros((3, 4))) == 0

    def test_duplicated_row(self):
        a = np.zeros((4, 8))
        a[0, [0, 3]] = 1
        a[1, 5] = 1
        a[2, 5] = 1
        a[3, [2, 6, 7]] = 1
        assert np.linalg.matrix_rank(a) == 3
        assert numerical_rank(a) == 3

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 12), st.integers(1, 30), st.floats(0.05, 0.6), st.integers(0, 2**31))
    def test_transpose_and_permutation(self, m, n, density, seed):
        a = synth_bipartite(m, n, density, seed)
        dense = np.zeros(a.shape)
        dense[a.rows, a.cols] = 1.0
        rng = np.random.default_rng(seed)
        r = numerical_rank(dense)
        assert r == np.linalg.matrix_rank(dense)
        assert numerical_rank(dense.T) == r
        assert numerical_rank(dense[rng.permutation(m)][:, rng.permutation(n)]) == r


class TestEvalRows:
    def test_csv_round_trip(self):
        rows = [
            EvalRow(2, 64, 4096, RepairMethod.RANDOM_CHECKER, 7, 1.234e-13, 5.5e-11),
            EvalRow(4, 64, 2048, RepairMethod.NEIGHBOR_RANDOM_CHECKER, 7, 0.1 + 0.2, 0.0),
        ]
        text = format_eval_csv(rows)
        assert text.splitlines()[0] == "D,M,Ni,method,seed,e_sigma,e_u"
        assert text.splitlines()[1] == "2,64,4096,random,7,1.234e-13,5.5e-11"
        assert parse_eval_csv(text) == rows

    def test_empty_sweep(self):
        a = synth_bipartite(8, 64, 0.1, 0)
        assert format_eval_csv(evaluate_sweep(a, [], RepairMethod.RANDOM_CHECKER, 0)) == "D,M,Ni,method,seed,e_sigma,e_u\n"

    def test_evaluate_dense_none(self):
        a = SparseMatrix.from_dense(np.random.default_rng(0).standard_normal((6, 60)))
        for d in (1, 2, 3, 6):
            row, result, oracle = evaluate(a, d, "none", 0)
            assert row.e_sigma <= 1e-10 * oracle.sigma[0]
            assert row.e_u <= 1e-8
            assert row.ni == 60 // d

    def test_oracle_cap(self):
        a = SparseMatrix((2**9, 2**18))
        with pytest.raises(SizeLimitError):
            evaluate(a, 1, "none", 0)


def test_oracle_is_independent_of_proxy():
    # e_sigma against LAPACK, not just the in-house kernel
    a = synth_bipartite(32, 2048, 0.004, 1)
    row, result, _ = evaluate(a, 8, RepairMethod.NEIGHBOR_RANDOM_CHECKER, 1)
    dense = np.zeros(result.repaired.shape)
    dense[result.repaired.rows, result.repaired.cols] = result.repaired.values
    assert e_sigma(result.svd.sigma, np.linalg.svd(dense, compute_uv=False)) <= 1e-10
    assert row.e_sigma <= 1e-10
    assert np.abs(dense_svd(dense).sigma - np.linalg.svd(dense, compute_uv=False)).max() <= 1e-12
