import numpy as np
import pytest

from scbadmm import SolverConfig, scb_spadmm_solve
from scbadmm.instances import (
    H0_ORDER,
    H0_SMALL,
    InstanceFormatError,
    NcmInstance,
    build_biq,
    build_ncm,
    build_random_qsdp,
    load_sparse_instance,
    random_block_qp,
    scalar_qsdp,
    synthetic_h0,
    tile_weights,
    write_sparse_instance,
)
from scbadmm.linops import smat, svec


def _sym(rng, n):
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T)


class TestRandomQsdp:
    def test_quadratic_form_matches_factored(self):
        inst = build_random_qsdp(10, 5, 4, seed=1)
        rng = np.random.default_rng(0)
        for _ in range(100):
            X = _sym(rng, 10)
            lhs = np.sum(X * inst.Q.apply_matrix(X))
            rhs = np.linalg.norm(inst.B_apply(X)) ** 2
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)

    def test_adjoint(self):
        inst = build_random_qsdp(6, 2, 3, seed=2)
        rng = np.random.default_rng(1)
        X, Y = _sym(rng, 6), _sym(rng, 6)
        assert np.sum(inst.B_apply(X) * Y) == pytest.approx(np.sum(X * inst.B_adjoint(Y)), rel=1e-12)

    @pytest.mark.parametrize("rank", [-1, 11])
    def test_rank_range(self, rank):
        with pytest.raises(ValueError):
            build_random_qsdp(10, 3, rank)

    def test_feasible_point(self):
        inst = build_random_qsdp(12, 8, 5, seed=3)
        X = inst.X_feas
        assert np.linalg.norm(inst.A_E.apply(svec(X)) - inst.b_E) <= 1e-12
        assert np.linalg.eigvalsh(X).min() > 0
        assert X.min() >= 0

    def test_reproducible(self):
        a, b = build_random_qsdp(5, 3, 2, seed=7), build_random_qsdp(5, 3, 2, seed=7)
        assert np.array_equal(a.C, b.C) and np.array_equal(a.W, b.W)

    def test_problem_shape(self):
        pr = build_random_qsdp(4, 2, 2).problem()
        assert pr.block_order() == ["f", "theta1", "g", "phi1"]
        assert pr.c.shape == (10,)


class TestBiq:
    def test_one_variable_bound(self):
        # n0 = 1, Q = [q]: relaxation value equals min over the 2x2 psd slice
        inst = build_biq(np.array([[2.0]]), [-3.0], rank_B=0)
        assert inst.n == 2 and inst.m_E == 2
        # X = [[t, t], [t, 1]] is feasible for t in [0, 1]; objective q t/2 + c t
        t = np.linspace(0, 1, 1001)
        best = (0.5 * 2.0 * t - 3.0 * t).min()
        res = scb_spadmm_solve(inst.problem(), SolverConfig(tol=1e-8))
        X = smat(res.state.x, 2)
        assert inst.primal_objective(X) == pytest.approx(best, abs=1e-5)

    def test_constraints_entrywise(self):
        rng = np.random.default_rng(0)
        Q = _sym(rng, 5)
        inst = build_biq(Q, rng.standard_normal(5))
        assert inst.m_E == 6
        X = _sym(rng, 6)
        AX = inst.A_E.apply(svec(X))
        np.testing.assert_allclose(AX[:5], np.diag(X)[:5] - X[:5, 5], atol=1e-13)
        assert AX[5] == pytest.approx(X[5, 5])
        assert np.linalg.norm(inst.A_E.apply(svec(inst.X_feas)) - inst.b_E) <= 1e-12
        assert np.linalg.eigvalsh(inst.X_feas).min() >= -1e-12

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            build_biq(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestNcm:
    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
    def test_alpha_range(self, alpha):
        with pytest.raises(ValueError):
            build_ncm(5, alpha)

    def test_weights(self):
        H0 = synthetic_h0()
        assert H0.shape == (H0_ORDER, H0_ORDER)
        assert np.array_equal(H0, H0.T)
        small = np.mean(H0 == H0_SMALL)
        assert 0.2 < small < 0.28
        big = H0[H0 != H0_SMALL]
        assert big.min() >= 2.0 and big.max() <= 1280.0
        H = tile_weights(H0, 200)
        assert H.shape == (200, 200) and np.all(H >= 0)

    def test_data(self):
        inst = build_ncm(20, 0.1, seed=0)
        assert np.allclose(np.diag(inst.G), 1.0)
        assert np.array_equal(inst.G, inst.G.T)
        assert np.all(inst.H >= 0)

    def test_negative_weights(self):
        with pytest.raises(ValueError):
            NcmInstance.from_data(np.eye(2), -np.ones((2, 2)))

    def test_frobenius_objective_matches_qsdp(self):
        inst = build_ncm(8, 0.2, seed=1)
        q = inst.to_qsdp()
        rng = np.random.default_rng(0)
        for _ in range(10):
            X = _sym(rng, 8)
            direct = 0.5 * np.linalg.norm(inst.H * (X - inst.G)) ** 2
            assert q.primal_objective(X) == pytest.approx(direct, rel=1e-10)
            assert inst.primal_objective(X) == pytest.approx(direct, rel=1e-12)

    @pytest.mark.slow
    def test_frobenius_converges(self):
        inst = build_ncm(20, 0.1, seed=0)
        res = scb_spadmm_solve(inst.problem(), SolverConfig(sigma=1e-3))
        assert res.converged
        X = smat(res.state.x, 20)
        assert np.abs(np.diag(X) - 1).max() < 1e-4
        assert np.linalg.eigvalsh(X).min() > -1e-4
        # the box residual is scaled by ||Z||, which the large weights inflate
        assert res.final_report.eta_Z <= 1e-6


class TestSparseFiles:
    def test_parse(self, tmp_path):
        p = tmp_path / "a.txt"
        p.write_text("2 1\n1 2 3.5\n")
        Q, c = load_sparse_instance(p)
        np.testing.assert_array_equal(Q.toarray(), [[0, 3.5], [3.5, 0]])
        np.testing.assert_array_equal(c, [0, 0])

    def test_lower_entries_and_duplicates(self, tmp_path):
        p = tmp_path / "a.txt"
        p.write_text("2 3\n2 1 1.0\n1 2 2.0\n2 2 -1 # comment\nc 1 2\n")
        Q, c = load_sparse_instance(p)
        np.testing.assert_array_equal(Q.toarray(), [[0, 3.0], [3.0, -1]])
        np.testing.assert_array_equal(c, [1, 2])

    def test_no_entries(self, tmp_path):
        p = tmp_path / "a.txt"
        p.write_text("3 0\n")
        Q, _ = load_sparse_instance(p)
        assert Q.nnz == 0 and Q.shape == (3, 3)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        Q = _sym(rng, 6)
        Q[np.abs(Q) < 0.5] = 0
        c = rng.standard_normal(6)
        p = tmp_path / "q.txt"
        write_sparse_instance(p, Q, c)
        Q2, c2 = load_sparse_instance(p)
        np.testing.assert_array_equal(Q2.toarray(), Q)
        np.testing.assert_array_equal(c2, c)

    @pytest.mark.parametrize(
        "text, line",
        [
            ("2 2\n1 1 1.0\n1 x 2\n", 3),
            ("2 1\n\n3 1 1.0\n", 3),
            ("two 1\n", 1),
            ("2 1\n1 1 1\nc 1\n", 3),
            ("2 1\n1 1 1\nd 1 2\n", 3),
        ],
    )
    def test_malformed_reports_line(self, tmp_path, text, line):
        p = tmp_path / "bad.txt"
        p.write_text(text)
        with pytest.raises(InstanceFormatError, match=f":{line}:"):
            load_sparse_instance(p)

    def test_truncated(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("2 3\n1 1 1\n")
        with pytest.raises(InstanceFormatError, match="expected 3 entries"):
            load_sparse_instance(p)

    def test_missing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_sparse_instance(tmp_path / "none.txt")


def test_scalar_instance():
    inst = scalar_qsdp()
    assert inst.primal_objective(np.ones((1, 1))) == pytest.approx(-0.5)


def test_random_block_qp_shapes():
    pr = random_block_qp(5, 3, (2, 4), 3, (1,), seed=0)
    assert (pr.p, pr.q) == (2, 1)
    assert pr.c.shape == (5,)
    assert pr.block_order() == ["f", "theta1", "theta2", "g", "phi1"]
