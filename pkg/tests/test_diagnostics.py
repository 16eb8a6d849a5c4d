import math

import numpy as np
import pytest

from scbadmm.diagnostics import (
    ResidualReport,
    eta_general,
    eta_qsdp,
    eta_sncm,
    relative_gap,
    report,
)
from scbadmm.instances import NcmInstance, build_random_qsdp, random_block_qp, scalar_qsdp
from scbadmm.linops import LinearMap, smat, svec
from scbadmm.model import BlockProblem, IterateState, ProxBlock, QuadraticBlock
from scbadmm.prox import ProxFriendlyFunction


def _sym(rng, n):
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T)


def _psd_proj(X):
    w, V = np.linalg.eigh(0.5 * (X + X.T))
    return (V * np.maximum(w, 0)) @ V.T


class TestReport:
    def test_eta_is_max_of_populated(self):
        rep = ResidualReport(eta_P=1e-3, eta_D=2e-3, eta_Z=5e-4)
        assert rep.eta == 2e-3
        assert set(rep.components) == {"eta_P", "eta_D", "eta_Z"}

    def test_monotone_in_components(self):
        rep = ResidualReport(eta_P=1e-3, eta_D=2e-3, eta_Z=5e-4)
        before = rep.eta
        rep.eta_D = 0.0
        assert rep.eta <= before

    def test_gap(self):
        assert relative_gap(1.0, 0.5) == pytest.approx(0.5 / 2.5)
        assert math.isnan(relative_gap(1.0, -math.inf))
        assert math.isnan(ResidualReport(eta_P=0.0, obj_P=1.0, obj_D=math.inf).eta_gap)


class TestEtaGeneral:
    def test_zero_state(self):
        f = ProxBlock(ProxFriendlyFunction("zero", 2), LinearMap.identity(2))
        c = np.array([3.0, 4.0])
        pr = BlockProblem(f, c=c)
        st = IterateState(np.zeros(2), [], None, [], np.zeros(2))
        assert eta_general(pr, st).eta_P == pytest.approx(5.0 / 6.0)

    def test_kkt_point_1d(self):
        # min 1/2 y^2 - y + 0(u)  s.t. u + y = 1 -> y = 1, u = 0?  f = 0 forces x = 0, so y = 1
        f = ProxBlock(ProxFriendlyFunction("zero", 1), LinearMap.identity(1))
        th = QuadraticBlock(1.0, 1.0, LinearMap.identity(1))
        pr = BlockProblem(f, [th], c=np.ones(1))
        st = IterateState(np.zeros(1), [np.ones(1)], None, [], np.zeros(1))
        rep = eta_general(pr, st)
        assert rep.eta <= 1e-12

    def test_duplicate_formula(self):
        rng = np.random.default_rng(0)
        pr = random_block_qp(4, 3, [2], 3, [2], seed=0)
        st = pr.initial_state()
        st.u, st.v, st.x = rng.standard_normal(3), rng.standard_normal(3), rng.standard_normal(4)
        st.y, st.z = [rng.standard_normal(2)], [rng.standard_normal(2)]
        rep = eta_general(pr, st)
        gamma = -pr.c + sum(b.map.matrix.T @ w for (_, b), w in zip(pr.labelled_blocks(), [st.u, st.y[0], st.v, st.z[0]]))
        assert rep.eta_P == pytest.approx(np.linalg.norm(gamma) / (1 + np.linalg.norm(pr.c)), rel=1e-12)

        def comp(blk, w):
            Hx = blk.map.matrix @ st.x
            if isinstance(blk, QuadraticBlock):
                P, b = blk.P.to_dense(), blk.b
            else:
                P, b = blk.fn.quadratic_matrix(), blk.fn.linear_term()
            prox = np.linalg.solve(np.eye(len(w)) + P, w - Hx + b)
            return np.linalg.norm(w - prox) / (1 + np.linalg.norm(w) + np.linalg.norm(Hx))

        assert rep.eta_f == pytest.approx(comp(pr.f_block, st.u), rel=1e-10)
        assert rep.eta_g == pytest.approx(comp(pr.g_block, st.v), rel=1e-10)
        assert rep.eta_theta == pytest.approx(comp(pr.theta_blocks[0], st.y[0]), rel=1e-10)
        assert rep.eta_phi == pytest.approx(comp(pr.phi_blocks[0], st.z[0]), rel=1e-10)


class TestEtaQsdp:
    def test_scalar_optimum(self):
        inst = scalar_qsdp()
        one = np.ones((1, 1))
        # X = 1, S = 0, Z = 0, Xi = -B X = -1
        rep = eta_qsdp(inst, one, 0 * one, 0 * one, np.zeros(0), Xi=-one)
        assert rep.eta <= 1e-12
        assert rep.obj_P == pytest.approx(-0.5)
        assert rep.obj_D == pytest.approx(-0.5)

    def test_complementary_pair(self):
        inst = build_random_qsdp(4, 2, 2, seed=0)
        V, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((4, 4)))
        X = (V[:, :2] * [1.0, 2.0]) @ V[:, :2].T
        S = (V[:, 2:] * [3.0, 0.5]) @ V[:, 2:].T
        rep = eta_qsdp(inst, X, np.zeros((4, 4)), S, np.zeros(2), objectives=False)
        assert rep.eta_S1 <= 1e-12 and rep.eta_S2 <= 1e-12

    def test_duplicate_formula(self):
        rng = np.random.default_rng(2)
        inst = build_random_qsdp(5, 3, 2, seed=2)
        X, Z, S, Xi = (_sym(rng, 5) for _ in range(4))
        y = rng.standard_normal(3)
        rep = eta_qsdp(inst, X, Z, S, y, Xi=Xi, objectives=False)
        AX = inst.A_E.apply(svec(X))
        nrm = np.linalg.norm
        BtXi = inst.P @ (inst.H * Xi) @ inst.P.T
        AtY = smat(inst.A_E.adjoint_apply(y), 5)
        assert rep.eta_P == pytest.approx(nrm(AX - inst.b_E) / (1 + nrm(inst.b_E)), rel=1e-12)
        assert rep.eta_D == pytest.approx(nrm(Z + BtXi + S + AtY - inst.C) / (1 + nrm(inst.C)), rel=1e-12)
        assert rep.eta_Z == pytest.approx(nrm(X - np.maximum(X - Z, 0)) / (1 + nrm(X) + nrm(Z)), rel=1e-12)
        assert rep.eta_S1 == pytest.approx(abs(np.sum(S * X)) / (1 + nrm(S) + nrm(X)), rel=1e-12)
        assert rep.eta_S2 == pytest.approx(nrm(X - _psd_proj(X)) / (1 + nrm(X)), rel=1e-10)

    def test_shadow_equivalent(self):
        rng = np.random.default_rng(3)
        inst = build_random_qsdp(4, 2, 2, seed=3)
        X, Z, S, Xi = (_sym(rng, 4) for _ in range(4))
        y = rng.standard_normal(2)
        a = eta_qsdp(inst, X, Z, S, y, Xi=Xi, objectives=False)
        b = eta_qsdp(inst, X, Z, S, y, Upsilon=-inst.B_adjoint(Xi), objectives=False)
        assert a.eta_D == pytest.approx(b.eta_D, rel=1e-14)

    def test_report_dispatch(self):
        pr = build_random_qsdp(3, 1, 1, seed=0).problem()
        st = pr.initial_state()
        assert report(pr, st).eta_Z is not None


class TestEtaSncm:
    def _inst(self):
        G = np.array([[1.0, 0.4, 0.1], [0.4, 1.0, 0.2], [0.1, 0.2, 1.0]])
        return NcmInstance.from_data(G, np.ones((3, 3)), "spectral")

    def test_xi_zero_inside_ball(self):
        inst = self._inst()
        Xi = 0.1 * np.eye(3)
        rep = eta_sncm(inst, inst.G, np.zeros((3, 3)), Xi, np.zeros((3, 3)), np.zeros(3), objectives=False)
        assert rep.eta_Xi == 0.0

    def test_duplicate_formula(self):
        rng = np.random.default_rng(4)
        inst = self._inst()
        X, Z, Xi, S = (_sym(rng, 3) for _ in range(4))
        y = rng.standard_normal(3)
        rep = eta_sncm(inst, X, Z, Xi, S, y, objectives=False)
        nrm = np.linalg.norm
        Y = inst.H * (X - inst.G)
        W = Xi - Y
        U, s, Vt = np.linalg.svd(W)
        # l1-ball projection of singular values by bisection
        lo, hi = 0.0, s.max()
        if s.sum() > 1:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                lo, hi = (mid, hi) if np.maximum(s - mid, 0).sum() > 1 else (lo, mid)
            t = np.maximum(s - hi, 0)
        else:
            t = s
        proj = (U * t) @ Vt
        assert rep.eta_Xi == pytest.approx(nrm(Xi - proj) / (1 + nrm(Xi) + nrm(Y)), rel=1e-8)
        assert rep.eta_P == pytest.approx(nrm(np.diag(X) - 1) / (1 + nrm(np.ones(3))), rel=1e-12)
        rD = Z + inst.H * Xi + S + np.diag(y) - inst.C
        assert rep.eta_D == pytest.approx(nrm(rD) / (1 + nrm(Z) + nrm(S)), rel=1e-12)
        assert rep.eta_Z == pytest.approx(nrm(X - np.maximum(X - Z, -0.5)) / (1 + nrm(X) + nrm(Z)), rel=1e-12)
