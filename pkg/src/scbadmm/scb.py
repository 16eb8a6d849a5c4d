"""Schur-complement-based semi-proximal ADMM for multi-block problems.

One iteration updates the blocks in the order::

    y_p..y_1 (backward, provisional), u, y_1..y_p (forward),
    z_q..z_1 (backward, provisional), v, z_1..z_q (forward), x

Each quadratic block update is a single majorizer solve.  The backward
sweep makes the ``u`` (``v``) update equal to a joint proximal step over
``(u, y)`` (``(v, z)``) with a Schur-complement proximal term, which is
what :func:`scb_equivalence_check` verifies with dense linear algebra.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla

from ._loop import GOLDEN, SolveResult, SolverConfig, SolverError, run_loop
from .linops import lambda_min
from .model import (
    BlockProblem,
    ConfigurationError,
    IterateState,
    ProxBlock,
    QuadraticBlock,
    constraint_residual,
)

__all__ = [
    "SolverConfig",
    "SolveResult",
    "SolverError",
    "scb_spadmm_solve",
    "scb_spadmm_step",
    "beta_recursion",
    "scb_equivalence_check",
    "schur_pd_check",
]

DEFAULT_TAU = 1.618
PD_TOL = 1e-10


def _majorizers(problem: BlockProblem, sigma: float, config: Optional[SolverConfig]):
    def pick(label, blk):
        strategy = None if config is None else config.strategy_for(label)
        return blk.majorizer(sigma, strategy)

    E_th = [pick(f"theta{i + 1}", b) for i, b in enumerate(problem.theta_blocks)]
    E_ph = [pick(f"phi{j + 1}", b) for j, b in enumerate(problem.phi_blocks)]
    E_g = None
    if isinstance(problem.g_block, QuadraticBlock):
        E_g = pick("g", problem.g_block)
    return E_th, E_g, E_ph


def _sweep_group(head, head_center, quad_blocks, centers, E_list, gamma, x, sigma, E_head=None):
    """Backward provisional sweep, head update, forward sweep.

    ``gamma`` is the constraint residual with every block of the group at
    its center.  Returns the new head, the new quadratic blocks, the
    provisional (backward) values and the updated residual.
    """
    k = len(quad_blocks)
    bar: List[np.ndarray] = [None] * k
    shift: List[np.ndarray] = [None] * k
    for i in reversed(range(k)):
        blk = quad_blocks[i]
        w = blk.argmin(centers[i], gamma, x, sigma, E=E_list[i])
        d = blk.map.adjoint_apply(w - centers[i])
        gamma = gamma + d
        bar[i], shift[i] = w, d
    new_head = head_center
    if head is not None:
        new_head = head.argmin(head_center, gamma, x, sigma, E=E_head)
        gamma = gamma + head.map.adjoint_apply(new_head - head_center)
    new = []
    for i in range(k):
        blk = quad_blocks[i]
        gamma_c = gamma - shift[i]
        w = blk.argmin(centers[i], gamma_c, x, sigma, E=E_list[i])
        gamma = gamma_c + blk.map.adjoint_apply(w - centers[i])
        new.append(w)
    return new_head, new, bar, gamma


def scb_spadmm_step(
    problem: BlockProblem,
    state: IterateState,
    sigma: float,
    tau: float,
    config: Optional[SolverConfig] = None,
) -> IterateState:
    """One SCB-SPADMM iteration from ``state``."""
    E_th, E_g, E_ph = _majorizers(problem, sigma, config)
    x = state.x
    gamma = constraint_residual(problem, state)
    u, y, y_bar, gamma = _sweep_group(
        problem.f_block, state.u, problem.theta_blocks, state.y, E_th, gamma, x, sigma
    )
    v, z, z_bar, gamma = _sweep_group(
        problem.g_block, state.v, problem.phi_blocks, state.z, E_ph, gamma, x, sigma,
        E_head=E_g,
    )
    return IterateState(
        u=u, y=y, v=v, z=z, x=x + tau * sigma * gamma,
        y_bar=y_bar, z_bar=z_bar, iter=state.iter + 1,
    )


def scb_spadmm_solve(
    problem: BlockProblem,
    config: Optional[SolverConfig] = None,
    initial_state: Optional[IterateState] = None,
) -> SolveResult:
    """Solve a multi-block problem with SCB-SPADMM.

    Parameters
    ----------
    problem : BlockProblem
    config : SolverConfig, optional
        ``tau`` defaults to 1.618.  For ``tau`` at or above the golden ratio
        the partial sums of the summability condition are stored in
        ``result.info``; convergence is then not guaranteed.
    initial_state : IterateState, optional
        Warm start; default ``u, v`` = prox at 0, the rest zero.

    Returns
    -------
    SolveResult

    Raises
    ------
    SolverError
        On a non-finite iterate.
    ConfigurationError
        If a block subproblem is not a prox or a nonsingular linear solve.
    """
    if problem.inequality_blocks:
        raise ConfigurationError("reformulate inequality blocks first")
    config = SolverConfig() if config is None else config
    tau = DEFAULT_TAU if config.tau is None else config.tau
    sigma = config.sigma

    def step(state, tau):
        return scb_spadmm_step(problem, state, sigma, tau, config)

    return run_loop(problem, config, step, tau, "scb", initial_state)


# --- auxiliary linear term --------------------------------------------------


def beta_recursion(
    problem: BlockProblem, state: IterateState, sigma: float, config: Optional[SolverConfig] = None
) -> Tuple[np.ndarray, Dict[Tuple[int, int], np.ndarray]]:
    """Auxiliary linear term of the first group.

    With ``gamma = -Gamma(state)``, ``A_0 = F`` and ``E_i`` the majorizer of
    ``theta_i``::

        beta[p, j] = A_{j-1} A_p^* E_p^{-1}(b_p - A_p x - P_p y_p + sigma A_p gamma)
        beta[i, j] = A_{j-1} A_i^* E_i^{-1}(b_i - sum_{k>i} beta[k, i+1]
                                            - A_i x - P_i y_i + sigma A_i gamma)

    for ``j = 1..i``, and ``delta = sum_i beta[i, 1]``.

    Returns
    -------
    delta : ndarray
        In the ``u`` space.
    beta : dict
        ``beta[(i, j)]`` with 1-based indices.
    """
    p = problem.p
    if p < 1:
        raise ValueError("beta recursion needs at least one theta block")
    E_th, _, _ = _majorizers(problem, sigma, config)
    gbar = -constraint_residual(problem, state)
    x = state.x
    maps = [problem.f_block.map] + [b.map for b in problem.theta_blocks]
    beta: Dict[Tuple[int, int], np.ndarray] = {}
    for i in range(p, 0, -1):
        blk = problem.theta_blocks[i - 1]
        r = blk.b - blk.A.apply(x) - blk.P.apply(state.y[i - 1]) + sigma * blk.A.apply(gbar)
        for k in range(i + 1, p + 1):
            r = r - beta[(k, i + 1)]
        w = blk.A.adjoint_apply(E_th[i - 1].solve(r))
        for j in range(1, i + 1):
            beta[(i, j)] = maps[j - 1].apply(w)
    delta = sum(beta[(i, 1)] for i in range(1, p + 1))
    return delta, beta


def first_group_update(
    problem: BlockProblem,
    state: IterateState,
    sigma: float,
    procedure: str = "sweep",
    config: Optional[SolverConfig] = None,
) -> Tuple[np.ndarray, List[np.ndarray]]:
    """``(u+, y+)`` of one iteration, by one of two equivalent procedures.

    ``sweep`` runs the backward sweep and updates ``u`` against the
    provisional ``y``; ``delta`` updates ``u`` at the centers with the
    auxiliary linear term of :func:`beta_recursion`.  Both finish with the
    same forward sweep.
    """
    E_th, _, _ = _majorizers(problem, sigma, config)
    x = state.x
    gamma0 = constraint_residual(problem, state)
    if procedure == "sweep":
        u, y, _, _ = _sweep_group(
            problem.f_block, state.u, problem.theta_blocks, state.y, E_th, gamma0, x, sigma
        )
        return u, y
    if procedure != "delta":
        raise ValueError("procedure must be 'sweep' or 'delta'")
    delta = beta_recursion(problem, state, sigma, config)[0] if problem.p else None
    f = problem.f_block
    u = f.argmin(state.u, gamma0, x, sigma, linear=delta)
    # provisional y' at (u_bar, y_bar), then forward sweep at u+
    p = problem.p
    gamma = gamma0
    shift = [None] * p
    for i in reversed(range(p)):
        blk = problem.theta_blocks[i]
        w = blk.argmin(state.y[i], gamma, x, sigma, E=E_th[i])
        shift[i] = blk.map.adjoint_apply(w - state.y[i])
        gamma = gamma + shift[i]
    gamma = gamma + f.map.adjoint_apply(u - state.u)
    ys = []
    for i in range(p):
        blk = problem.theta_blocks[i]
        gamma_c = gamma - shift[i]
        w = blk.argmin(state.y[i], gamma_c, x, sigma, E=E_th[i])
        gamma = gamma_c + blk.map.adjoint_apply(w - state.y[i])
        ys.append(w)
    return u, ys


# --- dense oracles ----------------------------------------------------------


def _dense_map(blk) -> np.ndarray:
    return blk.map.to_dense()


def _hat_T(head_T, head_map, blocks, Es, sigma):
    """Schur-complement proximal term on ``(head, w_1..w_{k-1})``.

    Returns the dense operator for the leading group and the last block's
    own ``T``.  With ``k = 0`` it is just ``head_T``.
    """
    k = len(blocks)
    if k == 0:
        return head_T, None
    maps = [head_map] + [_dense_map(b) for b in blocks]
    That = None
    for i in range(1, k + 1):
        Ai = maps[i]
        Ei = Es[i - 1].E.to_dense()
        Fi = np.vstack(maps[:i])  # stacked maps of head, w_1..w_{i-1}
        corr = Fi @ Ai.T @ np.linalg.solve(Ei, Ai @ Fi.T)
        if i == 1:
            That = head_T + corr
        else:
            T_prev = blocks[i - 2].T_dense(sigma, Es[i - 2])
            That = sla.block_diag(That, T_prev) + corr
    T_last = blocks[k - 1].T_dense(sigma, Es[k - 1])
    return That, T_last


def _group_data(head, blocks, Es, sigma, T_head=None):
    try:
        D_head = head.quadratic_matrix()
    except ValueError as exc:
        raise ConfigurationError("dense oracle needs quadratic f and g blocks") from exc
    if T_head is None:
        T_head = head.T_dense(sigma) if isinstance(head, ProxBlock) else head.T_dense(sigma)
    T_head = T_head.to_dense() if hasattr(T_head, "to_dense") else np.asarray(T_head, float)
    Fm = _dense_map(head)
    That, T_last = _hat_T(T_head, Fm, blocks, Es, sigma)
    T_full = That if T_last is None else sla.block_diag(That, T_last)
    Map = np.vstack([Fm] + [_dense_map(b) for b in blocks])
    D = sla.block_diag(D_head, *[b.quadratic_matrix() for b in blocks])
    k = np.concatenate([head.linear_term()] + [b.linear_term() for b in blocks])
    return Map, D, k, T_full


def _joint_prox(Map, D, k, T, center, other, x, c, sigma):
    """argmin 1/2<w,Dw> - <k,w> + <x, Map^T w> + s/2||Map^T w + other - c||^2 + s/2||w-center||_T^2."""
    K = D + sigma * (Map @ Map.T) + sigma * T
    rhs = k - Map @ x - sigma * Map @ (other - c) + sigma * T @ center
    return np.linalg.solve(K, rhs)


def _split(w, sizes):
    out, o = [], 0
    for s in sizes:
        out.append(w[o:o + s])
        o += s
    return out


def grouped_spadmm_step(
    problem: BlockProblem,
    state: IterateState,
    sigma: float,
    tau: float,
    config: Optional[SolverConfig] = None,
) -> IterateState:
    """One two-block semi-proximal ADMM step on the grouped problem.

    The groups are ``(u, y)`` and ``(v, z)`` with the Schur-complement
    proximal terms; each group update is a dense joint solve.  Requires
    quadratic ``f`` and ``g``.
    """
    if problem.g_block is None:
        raise ConfigurationError("grouped oracle needs a g block")
    E_th, E_g, E_ph = _majorizers(problem, sigma, config)
    T_g = None if E_g is None else problem.g_block.T_dense(sigma, E_g)
    M1, D1, k1, T1 = _group_data(problem.f_block, problem.theta_blocks, E_th, sigma)
    M2, D2, k2, T2 = _group_data(problem.g_block, problem.phi_blocks, E_ph, sigma, T_g)
    w1 = np.concatenate([state.u, *state.y])
    w2 = np.concatenate([state.v, *state.z])
    c = problem.c
    w1n = _joint_prox(M1, D1, k1, T1, w1, M2.T @ w2, state.x, c, sigma)
    w2n = _joint_prox(M2, D2, k2, T2, w2, M1.T @ w1n, state.x, c, sigma)
    gamma = M1.T @ w1n + M2.T @ w2n - c
    s1 = [problem.f_block.dim] + [b.dim for b in problem.theta_blocks]
    s2 = [problem.g_block.dim] + [b.dim for b in problem.phi_blocks]
    p1, p2 = _split(w1n, s1), _split(w2n, s2)
    return IterateState(
        u=p1[0], y=p1[1:], v=p2[0], z=p2[1:], x=state.x + tau * sigma * gamma,
        iter=state.iter + 1,
    )


def _total_dim(problem):
    return sum(b.dim for _, b in problem.labelled_blocks())


def scb_equivalence_check(
    problem: BlockProblem,
    state: IterateState,
    config: Optional[SolverConfig] = None,
    max_dim: int = 20,
) -> dict:
    """Compare one SCB-SPADMM iteration with the grouped two-block step.

    Returns
    -------
    dict
        ``deviation`` (max relative difference over all blocks and the
        multiplier), and the two resulting states.

    Raises
    ------
    ValueError
        If the problem exceeds ``max_dim`` total block dimensions.
    """
    if _total_dim(problem) > max_dim:
        raise ValueError(f"oracle limited to {max_dim} total dimensions")
    config = SolverConfig() if config is None else config
    tau = DEFAULT_TAU if config.tau is None else config.tau
    a = scb_spadmm_step(problem, state, config.sigma, tau, config)
    b = grouped_spadmm_step(problem, state, config.sigma, tau, config)
    va, vb = a.flat(), b.flat()
    dev = float(np.max(np.abs(va - vb)) / max(1.0, np.max(np.abs(vb)))) if va.size else 0.0
    return {"deviation": dev, "scb": a, "grouped": b}


def _pd(M, tol=PD_TOL) -> bool:
    M = 0.5 * (M + M.T)
    if M.size == 0:
        return True
    w = np.linalg.eigvalsh(M)
    return bool(w[0] > tol * max(1.0, abs(w[-1])))


def _side(head, blocks, Es, sigma, T_head):
    Fm = _dense_map(head)
    S_head = head.Sigma().to_dense()
    T_head = T_head.to_dense() if hasattr(T_head, "to_dense") else np.asarray(T_head, float)
    rhs = Fm @ Fm.T + S_head / sigma + T_head
    if not blocks:
        return rhs, rhs
    That, T_last = _hat_T(T_head, Fm, blocks, Es, sigma)
    Map = np.vstack([Fm] + [_dense_map(b) for b in blocks])
    Sig = sla.block_diag(S_head, *[b.P.to_dense() for b in blocks])
    lhs = Map @ Map.T + Sig / sigma + sla.block_diag(That, T_last)
    return lhs, rhs


def schur_pd_check(
    problem: BlockProblem,
    sigma: float,
    T_f=None,
    T_g=None,
    config: Optional[SolverConfig] = None,
    detail: bool = False,
):
    """Positive definiteness of both sides of the Schur-complement equivalence.

    The left side is ``F_{p+1} F_{p+1}^* + Sigma_{f_{p+1}}/sigma +
    diag(T^_{f_p}, T_{theta_p})`` on ``(u, y)``, the right side
    ``F F^* + Sigma_f/sigma + T_f``; likewise for ``(v, z)`` when a ``g``
    block is present.  A side is positive definite when its smallest
    eigenvalue exceeds ``1e-10 * max(1, lambda_max)``.

    Returns
    -------
    (lhs_pd, rhs_pd) : tuple of bool
        Conjunctions over the ``f`` and ``g`` sides.  With ``detail=True`` a
        dict with the per-side flags and eigenvalues is returned instead.
    """
    E_th, E_g, E_ph = _majorizers(problem, sigma, config)
    f = problem.f_block
    T_f = f.T_dense(sigma) if T_f is None else T_f
    out = {}
    lhs, rhs = _side(f, problem.theta_blocks, E_th, sigma, T_f)
    out["f"] = (_pd(lhs), _pd(rhs), lambda_min(lhs), lambda_min(rhs))
    if problem.g_block is not None:
        g = problem.g_block
        if T_g is None:
            T_g = g.T_dense(sigma, E_g) if E_g is not None else g.T_dense(sigma)
        lhs, rhs = _side(g, problem.phi_blocks, E_ph, sigma, T_g)
        out["g"] = (_pd(lhs), _pd(rhs), lambda_min(lhs), lambda_min(rhs))
    lhs_pd = all(v[0] for v in out.values())
    rhs_pd = all(v[1] for v in out.values())
    if detail:
        return {"lhs_pd": lhs_pd, "rhs_pd": rhs_pd, "sides": out}
    return lhs_pd, rhs_pd
