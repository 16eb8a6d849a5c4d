import numpy as np
import pytest

from scbadmm import SolverConfig
from scbadmm.instances import random_block_qp
from scbadmm.linops import LinearMap
from scbadmm.model import BlockProblem, ConfigurationError, ProxBlock, QuadraticBlock
from scbadmm.prox import ProxFriendlyFunction
from scbadmm.solver2 import (
    TwoBlockState,
    delta_g_term,
    scb_spalm_joint_oracle,
    scb_spalm_solve,
    scb_spalm_step,
    spadmm2_solve,
    spadmm2_step,
)


def _half_square_problem():
    # min u^2/2 + v^2/2  s.t.  u + v = 2
    I = LinearMap.identity(1)
    f = ProxBlock(ProxFriendlyFunction("quadratic", 1, D=np.eye(1), k=np.zeros(1)), I)
    g = ProxBlock(ProxFriendlyFunction("quadratic", 1, D=np.eye(1), k=np.zeros(1)), I)
    return BlockProblem(f, [], g, [], np.array([2.0]))


def _qp2(seed, m=4, fd=3, gd=3):
    return random_block_qp(m, fd, (), gd, (), seed=seed, g_quadratic=True)


def _random_state(pr, rng):
    return TwoBlockState(
        rng.standard_normal(pr.f_block.dim),
        rng.standard_normal(pr.g_block.dim),
        rng.standard_normal(pr.c.size),
    )


class TestSpadmm2:
    def test_one_step_by_hand(self):
        pr = _half_square_problem()
        st = TwoBlockState(np.zeros(1), np.zeros(1), np.zeros(1))
        # u = argmin u^2/2 + (u - 2)^2/2 = 1; v = argmin v^2/2 + (v - 1)^2/2 = 1/2
        nxt = spadmm2_step(pr, st, sigma=1.0, tau=1.5)
        assert nxt.u[0] == pytest.approx(1.0)
        assert nxt.v[0] == pytest.approx(0.5)
        assert nxt.x[0] == pytest.approx(1.5 * (1.0 + 0.5 - 2.0))

    def test_fixed_point(self):
        pr = _half_square_problem()
        # KKT: u = v = 1, x = -1
        st = TwoBlockState(np.ones(1), np.ones(1), -np.ones(1))
        nxt = spadmm2_step(pr, st, sigma=2.0, tau=1.618)
        np.testing.assert_allclose([nxt.u[0], nxt.v[0], nxt.x[0]], [1, 1, -1], atol=1e-14)

    @pytest.mark.parametrize("seed", range(3))
    def test_random_qp_converges(self, seed):
        pr = random_block_qp(6, 3, (), 4, (), seed=seed)
        res = spadmm2_solve(pr, SolverConfig(tau=1.618, max_iter=2000, tol=1e-8, stagnation_window=0))
        assert res.converged

    def test_large_tau_does_not_raise(self):
        pr = random_block_qp(6, 3, (), 4, (), seed=0)
        res = spadmm2_solve(pr, SolverConfig(tau=2.2, max_iter=300, stagnation_window=0))
        assert res.status in ("tolerance_met", "max_iter", "diverged")

    def test_rejects_multi_block(self):
        pr = random_block_qp(4, 2, (2,), 2, ())
        with pytest.raises(ConfigurationError):
            spadmm2_solve(pr)


class TestScbSpalm:
    def test_delta_vanishes_without_coupling(self):
        base = _qp2(0)
        g0 = QuadraticBlock(np.eye(3), np.ones(3), np.zeros((3, base.c.size)))
        pr = BlockProblem(base.f_block, [], g0, [], base.c)
        st = _random_state(pr, np.random.default_rng(0))
        d = delta_g_term(pr, st.u, st.v, st.x, 1.0)
        assert np.linalg.norm(d) == 0.0

    def test_delta_vanishes_at_g_minimizer(self):
        pr = _qp2(1)
        g, f = pr.g_block, pr.f_block
        rng = np.random.default_rng(1)
        st = _random_state(pr, rng)
        sigma = 0.7
        G = g.map.to_dense()
        K = g.P.to_dense() + sigma * G @ G.T
        rhs = g.b - G @ st.x + sigma * G @ (pr.c - f.map.adjoint_apply(st.u))
        v = np.linalg.solve(K, rhs)
        d = delta_g_term(pr, st.u, v, st.x, sigma)
        assert np.linalg.norm(d) <= 1e-10

    @pytest.mark.parametrize("seed", range(10))
    def test_variants_match_joint_oracle(self, seed):
        pr = _qp2(seed)
        rng = np.random.default_rng(seed)
        st = _random_state(pr, rng)
        sigma = float(rng.uniform(0.2, 3.0))
        a = scb_spalm_step(pr, st, sigma, 1.0, variant="m1")
        b = scb_spalm_step(pr, st, sigma, 1.0, variant="m2")
        u, v = scb_spalm_joint_oracle(pr, st, sigma)
        for s in (a, b):
            assert np.max(np.abs(s.u - u)) <= 1e-10
            assert np.max(np.abs(s.v - v)) <= 1e-10

    def test_oracle_is_minimizer(self):
        pr = _qp2(5)
        f, g = pr.f_block, pr.g_block
        rng = np.random.default_rng(5)
        st = _random_state(pr, rng)
        sigma = 1.3
        E = g.majorizer(sigma)
        F, G = f.map.to_dense(), g.map.to_dense()
        Tf = f.T_dense(sigma)
        That = Tf + F @ G.T @ np.linalg.solve(E.E.to_dense(), G @ F.T)
        Tg = g.T_dense(sigma, E)
        D, k = f.quadratic_matrix(), f.linear_term()
        P, b = g.P.to_dense(), g.b

        def obj(u, v):
            r = F.T @ u + G.T @ v - pr.c
            du, dv = u - st.u, v - st.v
            return (0.5 * u @ D @ u - k @ u + 0.5 * v @ P @ v - b @ v + st.x @ r
                    + 0.5 * sigma * r @ r + 0.5 * sigma * du @ That @ du + 0.5 * sigma * dv @ Tg @ dv)

        u, v = scb_spalm_joint_oracle(pr, st, sigma)
        best = obj(u, v)
        for _ in range(100):
            assert obj(u + 1e-3 * rng.standard_normal(u.size), v + 1e-3 * rng.standard_normal(v.size)) >= best

    def test_oracle_size_limit(self):
        pr = random_block_qp(4, 8, (), 8, (), g_quadratic=True)
        st = TwoBlockState(np.zeros(8), np.zeros(8), np.zeros(4))
        with pytest.raises(ValueError):
            scb_spalm_joint_oracle(pr, st, 1.0)

    def test_needs_quadratic_g(self):
        pr = random_block_qp(4, 2, (), 2, ())
        st = TwoBlockState(np.zeros(2), np.zeros(2), np.zeros(4))
        with pytest.raises(ConfigurationError):
            scb_spalm_step(pr, st, 1.0, 1.0)

    def test_bad_variant(self):
        pr = _qp2(0)
        st = TwoBlockState(np.zeros(3), np.zeros(3), np.zeros(4))
        with pytest.raises(ValueError):
            scb_spalm_step(pr, st, 1.0, 1.0, variant="m3")

    @pytest.mark.parametrize("variant", ["m1", "m2"])
    def test_solve_converges(self, variant):
        pr = _qp2(2, m=6, fd=3, gd=4)
        res = scb_spalm_solve(pr, SolverConfig(tol=1e-8, max_iter=5000, stagnation_window=0), variant=variant)
        assert res.converged
