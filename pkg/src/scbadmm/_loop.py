"""Shared iteration driver: stopping rules, traces and timing."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, asdict
from typing import Callable, List, Optional, Union

import numpy as np

from .diagnostics import ResidualReport, report
from .model import BlockProblem, IterateState, constraint_residual

logger = logging.getLogger("scbadmm")

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
STATUSES = ("tolerance_met", "max_iter", "stagnation", "diverged")


class SolverError(RuntimeError):
    """The iteration produced a non-finite iterate or cannot proceed."""


@dataclass
class SolverConfig:
    """Parameters shared by all solvers.

    Parameters
    ----------
    sigma : float
        Penalty parameter of the augmented Lagrangian.
    tau : float, optional
        Dual step length; ``None`` picks the solver default (1.618 for the
        Schur-complement and two-block methods, 1 for direct ADMM).
    tol : float
        Stop once the residual ``eta`` is at most ``tol``.
    max_iter : int
    majorizer_strategy : str or dict, optional
        ``exact`` or ``scaled_identity``, for every quadratic block or keyed
        by block label (``theta1``, ``phi2``, ...).  ``None`` keeps each
        block's own choice.
    log_every : int
        Record a full residual report every ``log_every`` iterations.
    check_every : int
        Evaluate the stopping residual every ``check_every`` iterations.
    stagnation_window : int
        Stop when the best ``eta`` improves by less than
        ``stagnation_rtol`` (relative) over this many iterations; 0 disables.
    stagnation_rtol : float
    divergence_threshold : float
        Stop with status ``diverged`` when ``||Gamma||`` exceeds it.
    seed : int
        Recorded for reproducibility; the solvers are deterministic.
    """

    sigma: float = 1.0
    tau: Optional[float] = None
    tol: float = 1e-6
    max_iter: int = 25000
    majorizer_strategy: Union[None, str, dict] = None
    log_every: int = 100
    check_every: int = 1
    stagnation_window: int = 1000
    stagnation_rtol: float = 1e-3
    divergence_threshold: float = 1e10
    seed: int = 0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.tau is not None and not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.log_every < 1 or self.check_every < 1:
            raise ValueError("log_every and check_every must be at least 1")
        if self.stagnation_window < 0:
            raise ValueError("stagnation_window must be nonnegative")

    def strategy_for(self, label: str) -> Optional[str]:
        s = self.majorizer_strategy
        if isinstance(s, dict):
            return s.get(label)
        return s

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolveResult:
    """Outcome of a solver run.

    Attributes
    ----------
    state : IterateState
        Final iterate.
    status : str
        ``tolerance_met``, ``max_iter``, ``stagnation`` or ``diverged``.
    trace : list of ResidualReport
        Reports at the logged iterations; the last entry is the final state.
    wall_time : float
        Seconds spent in the iteration loop.
    block_order : list of str
        Labels of the blocks in sweep order.
    """

    state: IterateState
    status: str
    trace: List[ResidualReport]
    wall_time: float
    block_order: List[str]
    solver: str = ""
    config: Optional[SolverConfig] = None
    info: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return self.state.iter

    @property
    def final_report(self) -> ResidualReport:
        return self.trace[-1]

    @property
    def eta(self) -> float:
        return self.final_report.eta

    @property
    def converged(self) -> bool:
        return self.status == "tolerance_met"


def _finite(state: IterateState) -> bool:
    return bool(np.all(np.isfinite(state.flat())))


def run_loop(
    problem: BlockProblem,
    config: SolverConfig,
    step: Callable[[IterateState, float], IterateState],
    tau: float,
    solver: str,
    initial_state: Optional[IterateState] = None,
    raise_on_nonfinite: bool = True,
) -> SolveResult:
    """Iterate ``state = step(state, tau)`` until a stopping rule fires."""
    state = problem.initial_state() if initial_state is None else initial_state.copy()
    if not _finite(state):
        raise SolverError("non-finite initial state")
    trace: List[ResidualReport] = []
    t0 = time.perf_counter()
    status = "max_iter"
    track_sum = tau >= GOLDEN
    partial_sum = 0.0
    sums = []
    best = math.inf
    best_window_start = math.inf
    prev_state = state
    last_checked = None

    def full_report(st):
        rep = report(problem, st, objectives=True)
        rep.iter = st.iter
        rep.elapsed_s = time.perf_counter() - t0
        return rep

    for k in range(1, config.max_iter + 1):
        prev_state = state
        state = step(state, tau)
        state.iter = k
        if not _finite(state):
            if raise_on_nonfinite:
                raise SolverError(f"non-finite iterate at iteration {k}")
            status = "diverged"
            break
        gamma = constraint_residual(problem, state)
        gnorm = float(np.linalg.norm(gamma))
        if gnorm > config.divergence_threshold:
            status = "diverged"
            break
        if track_sum:
            dG = np.zeros_like(gamma)
            if problem.g_block is not None:
                dG += problem.g_block.map.adjoint_apply(state.v - prev_state.v)
            for blk, a, b in zip(problem.phi_blocks, state.z, prev_state.z):
                dG += blk.map.adjoint_apply(a - b)
            partial_sum += float(dG @ dG) + gnorm ** 2 / tau
        if k % config.log_every == 0:
            trace.append(full_report(state))
            if track_sum:
                sums.append((k, partial_sum))
                logger.debug("iter %d summability partial sum %.6e", k, partial_sum)
        if k % config.check_every == 0 or k == config.max_iter:
            rep = report(problem, state, objectives=False)
            eta = rep.eta
            last_checked = k
            if eta <= config.tol:
                status = "tolerance_met"
                break
            best = min(best, eta)
        w = config.stagnation_window
        if w and k % w == 0:
            if best > (1.0 - config.stagnation_rtol) * best_window_start:
                status = "stagnation"
                break
            best_window_start = best
    wall = time.perf_counter() - t0
    if not trace or trace[-1].iter != state.iter:
        trace.append(full_report(state))
    info = {}
    if track_sum:
        info["summability_partial_sums"] = sums + [(state.iter, partial_sum)]
    logger.info("%s: %s after %d iterations, eta=%.3e", solver, status, state.iter, trace[-1].eta)
    return SolveResult(
        state=state, status=status, trace=trace, wall_time=wall,
        block_order=problem.block_order(), solver=solver, config=config, info=info,
    )
