"""Directly extended multi-block ADMM.

One Gauss-Seidel pass over ``f, theta_1..theta_p, g, phi_1..phi_q`` per
iteration, each block minimizing the augmented Lagrangian with the latest
values of the others, followed by the multiplier step.  Quadratic blocks use
the same majorizers as the Schur-complement solver.  There is no convergence
guarantee for three or more blocks; divergence is reported, not raised.
"""

from __future__ import annotations

from typing import Optional

from ._loop import SolveResult, SolverConfig, run_loop
from .model import BlockProblem, ConfigurationError, IterateState, constraint_residual

__all__ = ["direct_admm_step", "direct_admm_solve"]

DEFAULT_TAU = 1.0


def direct_admm_step(
    problem: BlockProblem,
    state: IterateState,
    sigma: float,
    tau: float,
    config: Optional[SolverConfig] = None,
) -> IterateState:
    """One forward pass over all blocks, then ``x += tau sigma Gamma``."""
    gamma = constraint_residual(problem, state)
    x = state.x

    def update(label, blk, w):
        nonlocal gamma
        E = None
        if hasattr(blk, "majorizer"):
            E = blk.majorizer(sigma, None if config is None else config.strategy_for(label))
        new = blk.argmin(w, gamma, x, sigma, E=E)
        gamma = gamma + blk.map.adjoint_apply(new - w)
        return new

    u = update("f", problem.f_block, state.u)
    y = [update(f"theta{i + 1}", b, w) for i, (b, w) in enumerate(zip(problem.theta_blocks, state.y))]
    v = state.v
    if problem.g_block is not None:
        v = update("g", problem.g_block, state.v)
    z = [update(f"phi{j + 1}", b, w) for j, (b, w) in enumerate(zip(problem.phi_blocks, state.z))]
    return IterateState(u=u, y=y, v=v, z=z, x=x + tau * sigma * gamma, iter=state.iter + 1)


def direct_admm_solve(
    problem: BlockProblem,
    config: Optional[SolverConfig] = None,
    initial_state: Optional[IterateState] = None,
) -> SolveResult:
    """Solve with the directly extended ADMM; ``tau`` defaults to 1.

    Non-finite iterates and ``||Gamma|| > divergence_threshold`` end the run
    with status ``diverged``.
    """
    if problem.inequality_blocks:
        raise ConfigurationError("reformulate inequality blocks first")
    config = SolverConfig() if config is None else config
    tau = DEFAULT_TAU if config.tau is None else config.tau
    sigma = config.sigma

    def step(state, tau):
        return direct_admm_step(problem, state, sigma, tau, config)

    return run_loop(problem, config, step, tau, "direct_admm", initial_state, raise_on_nonfinite=False)
