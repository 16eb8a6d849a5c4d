"""Relative KKT residuals and duality gaps."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .linops import smat, svec
from .model import BlockProblem, IterateState, constraint_residual, objective_values
from .prox import proj_box, proj_nuclear_ball, proj_psd

_COMPONENTS = (
    "eta_P", "eta_D", "eta_f", "eta_g", "eta_theta", "eta_phi",
    "eta_Z", "eta_S1", "eta_S2", "eta_Xi",
)


@dataclass
class ResidualReport:
    """Scale-normalized residuals at one iterate.

    Only the components relevant to the problem are populated; ``eta`` is
    the maximum of the populated ones.  ``eta_gap`` is NaN when either
    objective is infinite.
    """

    eta_P: float
    eta_D: Optional[float] = None
    eta_f: Optional[float] = None
    eta_g: Optional[float] = None
    eta_theta: Optional[float] = None
    eta_phi: Optional[float] = None
    eta_Z: Optional[float] = None
    eta_S1: Optional[float] = None
    eta_S2: Optional[float] = None
    eta_Xi: Optional[float] = None
    obj_P: float = math.nan
    obj_D: float = math.nan
    iter: int = 0
    elapsed_s: float = 0.0

    @property
    def components(self) -> dict:
        return {k: getattr(self, k) for k in _COMPONENTS if getattr(self, k) is not None}

    @property
    def eta(self) -> float:
        return max(self.components.values())

    @property
    def eta_dual(self) -> float:
        """``eta_D`` if set, else the largest per-block dual residual."""
        if self.eta_D is not None:
            return self.eta_D
        vals = [v for k, v in self.components.items() if k != "eta_P"]
        return max(vals) if vals else 0.0

    @property
    def eta_gap(self) -> float:
        return relative_gap(self.obj_P, self.obj_D)

    def as_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["eta"] = self.eta
        out["eta_gap"] = self.eta_gap
        return out


def relative_gap(obj_P: float, obj_D: float) -> float:
    """``(obj_P - obj_D) / (1 + |obj_P| + |obj_D|)``, NaN if undefined."""
    if not (math.isfinite(obj_P) and math.isfinite(obj_D)):
        return math.nan
    return (obj_P - obj_D) / (1.0 + abs(obj_P) + abs(obj_D))


def _rel(num, *den):
    return float(num / (1.0 + sum(den)))


def _block_eta(blk, w, x):
    Hx = blk.map.apply(x)
    r = w - blk.prox(w - Hx, 1.0)
    return _rel(np.linalg.norm(r), np.linalg.norm(w), np.linalg.norm(Hx))


def eta_general(
    problem: BlockProblem, state: IterateState, objectives: bool = True
) -> ResidualReport:
    """Generic relative KKT residual of the multi-block model.

    ``eta_P = ||Gamma|| / (1 + ||c||)`` and, per block ``h`` with map ``H``,
    ``||w - Prox_h(w - H x)|| / (1 + ||w|| + ||H x||)``; theta and phi
    blocks report their worst block.
    """
    gamma = constraint_residual(problem, state)
    rep = ResidualReport(
        eta_P=_rel(np.linalg.norm(gamma), np.linalg.norm(problem.c)),
        iter=state.iter,
    )
    rep.eta_f = _block_eta(problem.f_block, state.u, state.x)
    if problem.g_block is not None:
        rep.eta_g = _block_eta(problem.g_block, state.v, state.x)
    if problem.p:
        rep.eta_theta = max(
            _block_eta(b, w, state.x) for b, w in zip(problem.theta_blocks, state.y)
        )
    if problem.q:
        rep.eta_phi = max(
            _block_eta(b, w, state.x) for b, w in zip(problem.phi_blocks, state.z)
        )
    if objectives:
        rep.obj_P, rep.obj_D = objective_values(problem, state)
    return rep


def report(problem: BlockProblem, state: IterateState, objectives: bool = True) -> ResidualReport:
    """Problem-specific residual if the problem defines one, else generic."""
    if problem.kkt_report is not None:
        return problem.kkt_report(problem, state, objectives)
    return eta_general(problem, state, objectives)


def eta_qsdp(instance, X, Z, S, y_E, Xi=None, Upsilon=None, objectives=True) -> ResidualReport:
    """Relative residual for the quadratic SDP and its dual.

    Parameters
    ----------
    instance : QsdpInstance
    X, Z, S : ndarray of shape (n, n)
        Primal matrix, box multiplier and PSD multiplier.
    y_E : ndarray of shape (m_E,)
    Xi : ndarray of shape (n, n), optional
        The quadratic-term dual variable; used to form ``Upsilon = -B^* Xi``
        when ``Upsilon`` is not given.
    Upsilon : ndarray of shape (n, n), optional
        Shadow ``-B^* Xi`` of ``Q X``; used for the dual residual.
    objectives : bool
        Also evaluate the primal and dual objectives.
    """
    if Upsilon is None:
        Upsilon = np.zeros_like(X) if Xi is None else -instance.B_adjoint(Xi)
    C = instance.C
    nX, nZ, nS = np.linalg.norm(X), np.linalg.norm(Z), np.linalg.norm(S)
    AX = instance.A_E.apply(svec(X))
    rP = AX - instance.b_E
    rD = Z - Upsilon + S + smat(instance.A_E.adjoint_apply(y_E), instance.n) - C
    rZ = X - proj_box(X - Z, instance.L, instance.U)
    rep = ResidualReport(
        eta_P=_rel(np.linalg.norm(rP), np.linalg.norm(instance.b_E)),
        eta_D=_rel(np.linalg.norm(rD), np.linalg.norm(C)),
        eta_Z=_rel(np.linalg.norm(rZ), nX, nZ),
        eta_S1=_rel(abs(np.sum(S * X)), nS, nX),
        eta_S2=_rel(np.linalg.norm(X - proj_psd(X)), nX),
    )
    if objectives:
        rep.obj_P = instance.primal_objective(X)
        rep.obj_D = instance.dual_objective(Z, Xi, y_E, Upsilon=Upsilon, X=X)
    return rep


def eta_sncm(instance, X, Z, Xi, S, y_E, objectives=True, Gamma=None) -> ResidualReport:
    """Relative residual for the spectral-norm weighted correlation problem.

    Parameters
    ----------
    instance : NcmInstance
    X, Z, Xi, S : ndarray of shape (n, n)
    y_E : ndarray of shape (m_E,)
    Gamma : ndarray of shape (n, n), optional
        Copy of ``Xi`` kept inside the unit nuclear-norm ball; used in the
        dual objective instead of ``Xi`` when given.
    """
    H, G = instance.H, instance.G
    nX, nZ, nS, nXi = (np.linalg.norm(M) for M in (X, Z, S, Xi))
    AX = instance.A_E.apply(svec(X))
    Y = H * (X - G)
    rD = Z + H * Xi + S + smat(instance.A_E.adjoint_apply(y_E), instance.n) - instance.C
    rXi = Xi - proj_nuclear_ball(Xi - Y, 1.0)
    rep = ResidualReport(
        eta_P=_rel(np.linalg.norm(AX - instance.b_E), np.linalg.norm(instance.b_E)),
        eta_D=_rel(np.linalg.norm(rD), nZ, nS),
        eta_Z=_rel(np.linalg.norm(X - proj_box(X - Z, instance.L, instance.U)), nX, nZ),
        eta_S1=_rel(abs(np.sum(S * X)), nS, nX),
        eta_S2=_rel(np.linalg.norm(X - proj_psd(X)), nX),
        eta_Xi=_rel(np.linalg.norm(rXi), nXi, np.linalg.norm(Y)),
    )
    if objectives:
        rep.obj_P = instance.primal_objective(X)
        rep.obj_D = instance.dual_objective(Z, Xi if Gamma is None else Gamma, y_E)
    return rep
