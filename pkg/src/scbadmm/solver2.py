"""Two-block semi-proximal ADMM and its Schur-complement ALM variant.

The two-block problem is ``min f(u) + g(v)  s.t.  F^* u + G^* v = c``,
stored as a :class:`~scbadmm.model.BlockProblem` without theta or phi
blocks.  When ``g`` is quadratic the semi-proximal term
``T^_f = T_f + F G^* E_g^{-1} G F^*`` turns a single Gauss-Seidel pass into
a joint proximal step over ``(u, v)``; :func:`scb_spalm_step` implements the
two equivalent split procedures and :func:`scb_spalm_joint_oracle` the dense
joint solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ._loop import SolveResult, SolverConfig, run_loop
from .linops import Majorizer, SelfAdjointPSDOp
from .model import BlockProblem, ConfigurationError, IterateState, QuadraticBlock

__all__ = [
    "TwoBlockState",
    "spadmm2_step",
    "spadmm2_solve",
    "delta_g_term",
    "scb_spalm_joint_oracle",
    "scb_spalm_step",
    "scb_spalm_solve",
]

DEFAULT_TAU = 1.618
ORACLE_MAX_DIM = 12


@dataclass
class TwoBlockState:
    """Iterate ``(u, v, x)`` of a two-block method."""

    u: np.ndarray
    v: np.ndarray
    x: np.ndarray

    @classmethod
    def from_state(cls, state: IterateState) -> "TwoBlockState":
        return cls(np.asarray(state.u, float), np.asarray(state.v, float), np.asarray(state.x, float))

    def to_state(self, iter: int = 0) -> IterateState:
        return IterateState(u=self.u, y=[], v=self.v, z=[], x=self.x, iter=iter)


def _check_two_block(problem: BlockProblem):
    if problem.p or problem.q or problem.g_block is None:
        raise ConfigurationError("two-block methods need exactly an f and a g block")


def _residual(problem, u, v):
    return problem.f_block.map.adjoint_apply(u) + problem.g_block.map.adjoint_apply(v) - problem.c


def _dense(T) -> Optional[np.ndarray]:
    if T is None:
        return None
    return T.to_dense() if hasattr(T, "to_dense") else np.asarray(T, dtype=float)


def spadmm2_step(
    problem: BlockProblem,
    state: TwoBlockState,
    sigma: float,
    tau: float,
    T_f=None,
    T_g=None,
) -> TwoBlockState:
    """One semi-proximal ADMM step: ``u``, then ``v``, then ``x``.

    Parameters
    ----------
    problem : BlockProblem
        Two-block problem.
    state : TwoBlockState
    sigma, tau : float
    T_f, T_g : SelfAdjointPSDOp or ndarray, optional
        Semi-proximal terms.  ``None`` takes the block default: the
        linearization or zero for a prox block, the majorizer for a
        quadratic block.

    Raises
    ------
    ConfigurationError
        If a subproblem is neither a prox nor a nonsingular linear solve.
    """
    _check_two_block(problem)
    f, g = problem.f_block, problem.g_block
    u0, v0, x = state.u, state.v, state.x
    gamma = _residual(problem, u0, v0)
    u = f.argmin(u0, gamma, x, sigma, T=T_f)
    gamma = gamma + f.map.adjoint_apply(u - u0)
    v = g.argmin(v0, gamma, x, sigma, T=T_g)
    gamma = gamma + g.map.adjoint_apply(v - v0)
    return TwoBlockState(u, v, x + tau * sigma * gamma)


def _solve(problem, config, step, tau, solver, initial_state):
    config = SolverConfig() if config is None else config
    init = None
    if initial_state is not None:
        init = initial_state.to_state() if isinstance(initial_state, TwoBlockState) else initial_state

    def loop_step(state, tau):
        nxt = step(TwoBlockState.from_state(state), tau)
        return nxt.to_state(state.iter + 1)

    return run_loop(problem, config, loop_step, tau, solver, init)


def spadmm2_solve(
    problem: BlockProblem,
    config: Optional[SolverConfig] = None,
    T_f=None,
    T_g=None,
    initial_state=None,
) -> SolveResult:
    """Run :func:`spadmm2_step` until a stopping rule fires; ``tau`` defaults to 1.618."""
    _check_two_block(problem)
    config = SolverConfig() if config is None else config
    tau = DEFAULT_TAU if config.tau is None else config.tau
    sigma = config.sigma

    def step(st, tau):
        return spadmm2_step(problem, st, sigma, tau, T_f, T_g)

    return _solve(problem, config, step, tau, "spadmm2", initial_state)


# --- quadratic g ------------------------------------------------------------


def _quadratic_g(problem) -> QuadraticBlock:
    _check_two_block(problem)
    g = problem.g_block
    if not isinstance(g, QuadraticBlock):
        raise ConfigurationError("this method needs a quadratic g block")
    return g


def delta_g_term(problem: BlockProblem, u, v, x, sigma: float, E_g: Optional[Majorizer] = None) -> np.ndarray:
    """Auxiliary linear term ``F G^* E_g^{-1}(b - G x - Sigma_g v + sigma G(c - F^* u - G^* v))``."""
    g = _quadratic_g(problem)
    E_g = g.majorizer(sigma) if E_g is None else E_g
    G = g.map
    r = g.b - G.apply(x) - g.P.apply(v) - sigma * G.apply(_residual(problem, u, v))
    return problem.f_block.map.apply(G.adjoint_apply(E_g.solve(r)))


def _alpha(problem, g, v, x, sigma, E_g):
    return g.b / sigma + E_g.apply_T(v) + g.map.apply(problem.c - x / sigma)


def scb_spalm_step(
    problem: BlockProblem,
    state: TwoBlockState,
    sigma: float,
    tau: float,
    T_f=None,
    E_g: Optional[Majorizer] = None,
    variant: str = "m1",
) -> TwoBlockState:
    """One step of the Schur-complement semi-proximal ALM.

    ``m1`` updates ``u`` with the extra linear term of :func:`delta_g_term`;
    ``m2`` first computes a provisional ``v'`` and updates ``u`` against it.
    Both finish with ``v+ = E_g^{-1}(alpha - G F^* u+)`` where
    ``alpha = b/sigma + T_g v + G(c - x/sigma)``, then the multiplier step.
    """
    g = _quadratic_g(problem)
    f = problem.f_block
    E_g = g.majorizer(sigma) if E_g is None else E_g
    u0, v0, x = state.u, state.v, state.x
    alpha = _alpha(problem, g, v0, x, sigma, E_g)
    if variant == "m1":
        delta = delta_g_term(problem, u0, v0, x, sigma, E_g)
        u = f.argmin(u0, _residual(problem, u0, v0), x, sigma, T=T_f, linear=delta)
    elif variant == "m2":
        v_prov = E_g.solve(alpha - g.map.apply(f.map.adjoint_apply(u0)))
        u = f.argmin(u0, _residual(problem, u0, v_prov), x, sigma, T=T_f)
    else:
        raise ValueError("variant must be 'm1' or 'm2'")
    v = E_g.solve(alpha - g.map.apply(f.map.adjoint_apply(u)))
    return TwoBlockState(u, v, x + tau * sigma * _residual(problem, u, v))


def scb_spalm_joint_oracle(
    problem: BlockProblem,
    state: TwoBlockState,
    sigma: float,
    T_f=None,
    T_g=None,
    E_g: Optional[Majorizer] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Joint minimizer over ``(u, v)`` with the Schur-complement proximal term.

    Minimizes ``L_sigma(u, v; x) + sigma/2 ||u - u_bar||^2_{T^_f} +
    sigma/2 ||v - v_bar||^2_{T_g}`` with ``T^_f = T_f + F G^* E_g^{-1} G F^*``
    by one dense linear solve.  ``f`` must be quadratic and the total
    dimension at most 12.

    ``T_g`` defaults to ``E_g - Sigma_g/sigma - G G^*``.
    """
    g = _quadratic_g(problem)
    f = problem.f_block
    if f.dim + g.dim > ORACLE_MAX_DIM:
        raise ValueError(f"joint oracle limited to {ORACLE_MAX_DIM} total dimensions")
    try:
        D = f.quadratic_matrix()
    except ValueError as exc:
        raise ConfigurationError("joint oracle needs a quadratic f") from exc
    E_g = g.majorizer(sigma) if E_g is None else E_g
    Fm, Gm = f.map.to_dense(), g.map.to_dense()
    Ed = E_g.E.to_dense()
    Tf = f.T_dense(sigma) if T_f is None else _dense(T_f)
    Tg = g.T_dense(sigma, E_g) if T_g is None else _dense(T_g)
    That = Tf + Fm @ Gm.T @ np.linalg.solve(Ed, Gm @ Fm.T)
    P = g.P.to_dense()
    K = np.block([
        [D + sigma * (Fm @ Fm.T + That), sigma * Fm @ Gm.T],
        [sigma * Gm @ Fm.T, P + sigma * (Gm @ Gm.T + Tg)],
    ])
    c, x = problem.c, state.x
    rhs = np.concatenate([
        f.linear_term() - Fm @ x + sigma * Fm @ c + sigma * That @ state.u,
        g.b - Gm @ x + sigma * Gm @ c + sigma * Tg @ state.v,
    ])
    w = np.linalg.solve(K, rhs)
    return w[:f.dim], w[f.dim:]


def scb_spalm_solve(
    problem: BlockProblem,
    config: Optional[SolverConfig] = None,
    T_f=None,
    variant: str = "m1",
    initial_state=None,
) -> SolveResult:
    """Run :func:`scb_spalm_step`; ``tau`` defaults to 1.618 (any ``tau < 2`` is allowed)."""
    g = _quadratic_g(problem)
    config = SolverConfig() if config is None else config
    tau = DEFAULT_TAU if config.tau is None else config.tau
    sigma = config.sigma
    E_g = g.majorizer(sigma, config.strategy_for("g"))

    def step(st, tau):
        return scb_spalm_step(problem, st, sigma, tau, T_f, E_g, variant)

    return _solve(problem, config, step, tau, "scb_spalm", initial_state)
