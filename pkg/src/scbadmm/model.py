"""Multi-block convex programs with one coupling equality constraint.

The model is::

    min  f(u) + sum_i theta_i(y_i) + g(v) + sum_j phi_j(z_j)
    s.t. F^* u + sum_i A_i^* y_i + G^* v + sum_j B_j^* z_j = c

where ``f`` and ``g`` have cheap proximal maps and every ``theta_i`` and
``phi_j`` is a convex quadratic ``1/2 <y, P y> - <b, y>``.  Every coupling
map goes from the constraint space to the block space, so its adjoint
carries the block into the constraint.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy import linalg as sla

from .linops import (
    LinearMap,
    Majorizer,
    SelfAdjointPSDOp,
    build_majorizer,
    gram_op,
    power_iteration,
    SCALED_IDENTITY_INFLATION,
)
from .prox import CONJ_TOL, ProxFriendlyFunction, quadratic_conjugate


class ConfigurationError(ValueError):
    """A block subproblem cannot be reduced to a prox or a linear solve."""


def _as_psd_op(P, dim: int) -> SelfAdjointPSDOp:
    if isinstance(P, SelfAdjointPSDOp):
        return P
    if P is None:
        return SelfAdjointPSDOp.zero(dim)
    P = np.asarray(P, dtype=float)
    if P.ndim == 0:
        return SelfAdjointPSDOp.identity(dim, float(P))
    if P.ndim == 1:
        return SelfAdjointPSDOp.from_diagonal(P)
    return SelfAdjointPSDOp.from_matrix(P)


def _as_map(A) -> LinearMap:
    return A if isinstance(A, LinearMap) else LinearMap.from_matrix(A)


class QuadraticBlock:
    """Block ``w -> 1/2 <w, P w> - <b, w>`` coupled through ``A^* w``.

    Parameters
    ----------
    P : SelfAdjointPSDOp or array_like
        Hessian; a matrix, a vector (diagonal) or a scalar multiple of I.
    b : array_like
        Linear term.
    A : LinearMap or array_like
        Map from the constraint space to the block space.
    majorizer : callable, optional
        ``sigma -> Majorizer``.  Overrides ``strategy``.
    strategy : {"exact", "scaled_identity"}
        Passed to :func:`~scbadmm.linops.build_majorizer`.
    """

    kind = "quadratic_block"

    def __init__(self, P, b, A, majorizer=None, strategy="exact", name=""):
        self.A = _as_map(A)
        self.dim = self.A.cod_dim
        self.P = _as_psd_op(P, self.dim)
        if self.P.dim != self.dim:
            raise ValueError("P and A disagree on the block dimension")
        self.b = np.broadcast_to(np.asarray(b, dtype=float), (self.dim,)).copy()
        self._majorizer_factory = majorizer
        self.strategy = strategy
        self.name = name
        self._majorizers = {}
        self._dense = {}

    @property
    def map(self) -> LinearMap:
        return self.A

    def majorizer(self, sigma: float, strategy: Optional[str] = None) -> Majorizer:
        """Majorizer for penalty ``sigma``; cached.

        ``strategy`` overrides the block default unless the block was given
        its own majorizer factory.
        """
        sigma = float(sigma)
        if self._majorizer_factory is not None:
            strategy = "custom"
        strategy = strategy or self.strategy
        key = (sigma, strategy)
        if key not in self._majorizers:
            if self._majorizer_factory is not None:
                M = self._majorizer_factory(sigma)
            else:
                M = build_majorizer(sigma, self.P, self.A, strategy)
            self._majorizers[key] = M
        return self._majorizers[key]

    def value(self, w, tol: float = 0.0) -> float:
        w = np.asarray(w, dtype=float)
        return float(0.5 * w @ self.P.apply(w) - self.b @ w)

    def conjugate(self, s, tol: float = CONJ_TOL) -> float:
        return quadratic_conjugate(self.P.to_dense(), self.b, s, tol)

    def prox(self, w, t: float = 1.0) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return self.P.resolvent(t, w + t * self.b)

    def Sigma(self) -> SelfAdjointPSDOp:
        return self.P

    def quadratic_matrix(self) -> np.ndarray:
        return self.P.to_dense()

    def linear_term(self) -> np.ndarray:
        return self.b

    def T_dense(self, sigma: float, E: Optional[Majorizer] = None) -> np.ndarray:
        """Dense semi-proximal term ``E - P/sigma - A A^*``."""
        E = self.majorizer(sigma) if E is None else E
        return E.E.to_dense() - self.P.to_dense() / sigma - gram_op(self.A).to_dense()

    def initial_point(self) -> np.ndarray:
        return np.zeros(self.dim)

    def argmin(self, center, gamma, x, sigma, T=None, linear=None, E=None) -> np.ndarray:
        """Minimize the augmented Lagrangian over this block.

        Solves ``min_w theta(w) + <x, Gamma> + sigma/2 ||Gamma||^2
        + sigma/2 ||w - center||_T^2 + <linear, w>`` where ``Gamma`` is the
        constraint residual and ``gamma`` its value with the block at
        ``center``.  ``T=None`` uses the block majorizer, which gives the
        closed form ``center + E^{-1}(sigma^{-1}(b - A x - P center - linear)
        - A gamma)``; ``E`` selects a majorizer other than the default.
        """
        center = np.asarray(center, dtype=float)
        r = self.b - self.A.apply(x) - self.P.apply(center)
        if linear is not None:
            r = r - linear
        if T is None:
            E = self.majorizer(sigma) if E is None else E
            return center + E.solve(r / sigma - self.A.apply(gamma))
        # arbitrary proximal term: dense solve of (P + sigma (AA^* + T))
        key = (float(sigma), id(T))
        if key not in self._dense:
            AAt = gram_op(self.A).to_dense()
            Td = T.to_dense() if isinstance(T, SelfAdjointPSDOp) else np.asarray(T)
            K = self.P.to_dense() + sigma * (AAt + Td)
            try:
                self._dense[key] = (sla.cho_factor(K), T)
            except sla.LinAlgError as exc:
                raise ConfigurationError("quadratic subproblem is singular") from exc
        fac = self._dense[key][0]
        return center + sla.cho_solve(fac, r - sigma * self.A.apply(gamma))

    def __repr__(self):
        return f"QuadraticBlock({self.name or ''} dim={self.dim})"


class ProxBlock:
    """Block ``f(u)`` with a cheap prox, coupled through ``F^* u``.

    Parameters
    ----------
    fn : ProxFriendlyFunction
    map : LinearMap
        ``F``, from the constraint space to the block space.
    T : SelfAdjointPSDOp, optional
        Semi-proximal term for the block update.  By default ``T = 0`` when
        ``F F^*`` is a known multiple of the identity or ``fn`` is quadratic,
        and ``T = lambda I - F F^*`` (a linearization) otherwise.
    """

    kind = "prox_block"

    def __init__(self, fn: ProxFriendlyFunction, map, T=None, name=""):
        self.fn = fn
        self.map = _as_map(map)
        self.dim = self.map.cod_dim
        if fn.dim != self.dim:
            raise ValueError(
                f"function acts on R^{fn.dim} but the map lands in R^{self.dim}"
            )
        self.T = T
        self.name = name
        self._default_T = None
        self._solvers = {}

    def value(self, w, tol: float = 0.0) -> float:
        return self.fn.value(w, tol)

    def objective_eval(self, w) -> float:
        return self.fn.value(w)

    def conjugate(self, s, tol: float = CONJ_TOL) -> float:
        return self.fn.conjugate(s, tol)

    def prox(self, w, t: float = 1.0) -> np.ndarray:
        return self.fn.prox(w, t)

    def Sigma(self) -> SelfAdjointPSDOp:
        return self.fn.Sigma()

    def quadratic_matrix(self) -> np.ndarray:
        return self.fn.quadratic_matrix()

    def linear_term(self) -> np.ndarray:
        return self.fn.linear_term()

    def initial_point(self) -> np.ndarray:
        return self.fn.prox(np.zeros(self.dim), 1.0)

    def default_T(self) -> SelfAdjointPSDOp:
        if self.T is not None:
            return self.T
        if self._default_T is None:
            F = self.map
            if F.gram is not None or self.fn.is_quadratic:
                self._default_T = SelfAdjointPSDOp.zero(self.dim)
            else:
                FFt = gram_op(F)
                lam = power_iteration(FFt.apply, self.dim)
                lam = max(lam, 1e-12) * SCALED_IDENTITY_INFLATION
                self._default_T = SelfAdjointPSDOp(
                    self.dim, lambda u: lam * u - FFt.apply(u), name="linearization"
                )
                self._default_T.shift = lam
        return self._default_T

    def T_dense(self, sigma: float = 1.0) -> np.ndarray:
        return self.default_T().to_dense()

    def _solver(self, sigma, T):
        """Return ``(mode, data)`` for the subproblem with operator FF^*+T."""
        T = self.default_T() if T is None else T
        key = (float(sigma), id(T))
        if key in self._solvers:
            return self._solvers[key][0]
        F = self.map
        lam = None
        if getattr(T, "shift", None) is not None:
            lam = T.shift  # linearized: FF^* + T = lam I
        elif isinstance(T, SelfAdjointPSDOp) and T.scale is not None and F.gram is not None:
            lam = F.gram + T.scale
        if lam is not None and lam > 0:
            out = ("prox", lam, None)
        elif self.fn.is_quadratic:
            Td = T.to_dense() if isinstance(T, SelfAdjointPSDOp) else np.asarray(T)
            M = gram_op(F).to_dense() + Td
            K = self.fn.quadratic_matrix() + sigma * M
            try:
                fac = sla.cho_factor(0.5 * (K + K.T))
            except sla.LinAlgError as exc:
                raise ConfigurationError("quadratic subproblem is singular") from exc
            out = ("dense", M, fac)
        else:
            raise ConfigurationError(
                f"{self.fn.kind} block needs F F^* + T to be a positive multiple "
                "of the identity"
            )
        self._solvers[key] = (out, T)
        return out

    def argmin(self, center, gamma, x, sigma, T=None, linear=None, E=None) -> np.ndarray:
        """Minimize the augmented Lagrangian over this block.

        ``E`` is accepted for symmetry with :class:`QuadraticBlock` and ignored.
        With ``M = F F^* + T`` the subproblem is
        ``min_u f(u) + sigma/2 <u, M u> - sigma <u, h>`` where
        ``h = M center - F(gamma + x/sigma) - linear/sigma``.
        """
        center = np.asarray(center, dtype=float)
        mode, M, fac = self._solver(sigma, T)
        g = self.map.apply(gamma + x / sigma)
        if linear is not None:
            g = g + linear / sigma
        if mode == "prox":
            lam = M
            return self.fn.prox(center - g / lam, 1.0 / (sigma * lam))
        h = M @ center - g
        return sla.cho_solve(fac, self.fn.linear_term() + sigma * h)

    def __repr__(self):
        return f"ProxBlock({self.fn.kind}, dim={self.dim})"


Block = Union[ProxBlock, QuadraticBlock]


@dataclass
class InequalityBlock:
    """A multiplier ``y_I >= 0`` with objective ``-<b, y_I>`` and coupling ``A^* y_I``.

    Such blocks break the quadratic-block structure; use
    :func:`reformulate_inequalities` before solving.
    """

    A: LinearMap
    b: np.ndarray


@dataclass
class IterateState:
    """Iterate ``(u, y, v, z, x)`` plus backward-sweep intermediates."""

    u: np.ndarray
    y: List[np.ndarray]
    v: Optional[np.ndarray]
    z: List[np.ndarray]
    x: np.ndarray
    y_bar: Optional[List[np.ndarray]] = None
    z_bar: Optional[List[np.ndarray]] = None
    iter: int = 0

    def copy(self) -> "IterateState":
        return copy.deepcopy(self)

    def flat(self) -> np.ndarray:
        parts = [self.u, *self.y]
        if self.v is not None:
            parts.append(self.v)
        parts += [*self.z, self.x]
        return np.concatenate(parts)


class BlockProblem:
    """Problem data: blocks in sweep order plus the right-hand side ``c``.

    Parameters
    ----------
    f_block : ProxBlock
    theta_blocks : sequence of QuadraticBlock
    g_block : ProxBlock or QuadraticBlock or None
    phi_blocks : sequence of QuadraticBlock
    c : array_like
    kkt_report : callable, optional
        ``(problem, state, objectives) -> ResidualReport`` used for stopping
        instead of the generic residual.
    inequality_blocks : sequence of InequalityBlock
        Sign-constrained multipliers awaiting reformulation.
    """

    def __init__(
        self,
        f_block: ProxBlock,
        theta_blocks: Sequence[QuadraticBlock] = (),
        g_block: Optional[Block] = None,
        phi_blocks: Sequence[QuadraticBlock] = (),
        c=None,
        kkt_report: Optional[Callable] = None,
        inequality_blocks: Sequence[InequalityBlock] = (),
        name: str = "",
        meta: Optional[dict] = None,
    ):
        self.f_block = f_block
        self.theta_blocks = list(theta_blocks)
        self.g_block = g_block
        self.phi_blocks = list(phi_blocks)
        self.inequality_blocks = list(inequality_blocks)
        m = f_block.map.dom_dim
        self.c = np.zeros(m) if c is None else np.asarray(c, dtype=float).ravel()
        self.m = self.c.size
        self.kkt_report = kkt_report
        self.name = name
        self.meta = dict(meta or {})
        for label, blk in self.labelled_blocks():
            if blk.map.dom_dim != self.m:
                raise ValueError(
                    f"block {label} couples through R^{blk.map.dom_dim}, "
                    f"constraint space is R^{self.m}"
                )
        for blk in (*self.theta_blocks, *self.phi_blocks):
            if not isinstance(blk, QuadraticBlock):
                raise TypeError("theta and phi blocks must be QuadraticBlock")

    @property
    def p(self) -> int:
        return len(self.theta_blocks)

    @property
    def q(self) -> int:
        return len(self.phi_blocks)

    def labelled_blocks(self):
        out = [("f", self.f_block)]
        out += [(f"theta{i + 1}", b) for i, b in enumerate(self.theta_blocks)]
        if self.g_block is not None:
            out.append(("g", self.g_block))
        out += [(f"phi{j + 1}", b) for j, b in enumerate(self.phi_blocks)]
        return out

    def block_order(self) -> List[str]:
        return [label for label, _ in self.labelled_blocks()]

    def initial_state(self) -> IterateState:
        """``u, v`` = prox at 0, everything else zero."""
        v = None if self.g_block is None else self.g_block.initial_point()
        return IterateState(
            u=self.f_block.initial_point(),
            y=[np.zeros(b.dim) for b in self.theta_blocks],
            v=v,
            z=[np.zeros(b.dim) for b in self.phi_blocks],
            x=np.zeros(self.m),
        )

    def __repr__(self):
        return f"BlockProblem({self.name!r}, blocks={self.block_order()}, m={self.m})"


def _pairs(problem: BlockProblem, state: IterateState):
    yield problem.f_block, state.u
    yield from zip(problem.theta_blocks, state.y)
    if problem.g_block is not None:
        yield problem.g_block, state.v
    yield from zip(problem.phi_blocks, state.z)


def constraint_residual(problem: BlockProblem, state: IterateState) -> np.ndarray:
    """``F^* u + A^* y + G^* v + B^* z - c``."""
    if len(state.y) != problem.p or len(state.z) != problem.q:
        raise ValueError("state block counts do not match the problem")
    out = -problem.c.copy()
    for blk, w in _pairs(problem, state):
        w = np.asarray(w, dtype=float)
        if w.size != blk.dim:
            raise ValueError(f"block of size {w.size} where {blk.dim} expected")
        out += blk.map.adjoint_apply(w)
    return out


def objective_values(problem: BlockProblem, state: IterateState, tol: float = CONJ_TOL):
    """Primal and dual objective values at ``state``.

    ``obj_P`` is the model objective.  ``obj_D`` is the Lagrangian dual value
    ``-<c, x> - sum h^*(-H x)`` over all blocks ``h`` with coupling map
    ``H``; either may be ``+inf`` or ``-inf``.
    """
    obj_P = 0.0
    obj_D = -float(problem.c @ state.x)
    for blk, w in _pairs(problem, state):
        w = np.asarray(w, dtype=float)
        obj_P += blk.value(w, tol * (1.0 + np.linalg.norm(w)))
        obj_D -= blk.conjugate(-blk.map.apply(state.x), tol)
    return obj_P, obj_D


# --- inequality reformulation -----------------------------------------------


def _extend_domain(A: LinearMap, extra: int) -> LinearMap:
    m = A.dom_dim
    matrix = None
    if A.matrix is not None:
        matrix = np.hstack([A.matrix, np.zeros((A.cod_dim, extra))])
    return LinearMap(
        m + extra,
        A.cod_dim,
        lambda x: A.apply(x[:m]),
        lambda w: np.concatenate([A.adjoint_apply(w), np.zeros(extra)]),
        gram=A.gram,
        matrix=matrix,
        name=A.name,
    )


def _extend_block(blk, extra):
    if isinstance(blk, QuadraticBlock):
        out = QuadraticBlock(blk.P, blk.b, _extend_domain(blk.A, extra),
                             strategy=blk.strategy, name=blk.name)
        if blk._majorizer_factory is not None:
            raise ConfigurationError("custom majorizers cannot be re-embedded")
        return out
    return ProxBlock(blk.fn, _extend_domain(blk.map, extra), T=None, name=blk.name)


def reformulate_inequalities(problem: BlockProblem, D: Optional[LinearMap] = None) -> BlockProblem:
    """Move sign constraints on inequality multipliers into the ``f`` block.

    Each :class:`InequalityBlock` ``y_I`` gets a copy ``u_I >= 0`` that joins
    the ``f`` block; ``y_I`` itself becomes a linear block and the
    constraint ``D^* u_I - D^* y_I = 0`` is appended.

    Parameters
    ----------
    problem : BlockProblem
    D : LinearMap, optional
        Nonsingular square map on ``R^{m_I}``; identity by default.

    Raises
    ------
    ValueError
        If ``D`` is singular.
    """
    if not problem.inequality_blocks:
        return problem
    m = problem.m
    ineq = problem.inequality_blocks
    m_I = sum(blk.A.cod_dim for blk in ineq)
    if D is None:
        D = LinearMap.identity(m_I)
    if D.dom_dim != m_I or D.cod_dim != m_I:
        raise ValueError(f"D must act on R^{m_I}")
    Dd = D.to_dense()
    r = np.arange(1.0, m_I + 1.0)
    try:
        back = Dd @ np.linalg.solve(Dd, r)
    except np.linalg.LinAlgError as exc:
        raise ValueError("D is singular") from exc
    if not np.allclose(back, r, rtol=1e-10, atol=1e-12) or np.linalg.cond(Dd) > 1e14:
        raise ValueError("D is singular")

    f_old = problem.f_block
    F = f_old.map
    n_u = F.cod_dim
    gram = None
    if F.gram is not None and D.gram is not None and F.gram == D.gram:
        gram = F.gram

    def f_apply(xx):
        return np.concatenate([F.apply(xx[:m]), D.apply(xx[m:])])

    def f_adjoint(w):
        return np.concatenate([F.adjoint_apply(w[:n_u]), D.adjoint_apply(w[n_u:])])

    Fm = None
    if F.matrix is not None:
        Fm = sla.block_diag(F.matrix, Dd)
    F_new = LinearMap(m + m_I, n_u + m_I, f_apply, f_adjoint, gram=gram, matrix=Fm)
    fn = ProxFriendlyFunction(
        "separable",
        n_u + m_I,
        parts=[f_old.fn, ProxFriendlyFunction("nonneg_indicator", m_I)],
    )
    f_new = ProxBlock(fn, F_new, name=f_old.name)

    new_theta = [_extend_block(b, m_I) for b in problem.theta_blocks]
    offset = 0
    for blk in ineq:
        k = blk.A.cod_dim
        A = blk.A

        def apply(xx, A=A, s0=offset, k=k):
            return A.apply(xx[:m]) - D.apply(xx[m:])[s0:s0 + k]

        def adjoint(w, A=A, s0=offset, k=k):
            full = np.zeros(m_I)
            full[s0:s0 + k] = w
            return np.concatenate([A.adjoint_apply(w), -D.adjoint_apply(full)])

        Am = None
        if A.matrix is not None:
            Am = np.hstack([A.matrix, -Dd[offset:offset + k, :]])
        new_theta.append(
            QuadraticBlock(None, np.asarray(blk.b, float), LinearMap(m + m_I, k, apply, adjoint, matrix=Am))
        )
        offset += k

    g_new = None if problem.g_block is None else _extend_block(problem.g_block, m_I)
    return BlockProblem(
        f_new,
        new_theta,
        g_new,
        [_extend_block(b, m_I) for b in problem.phi_blocks],
        np.concatenate([problem.c, np.zeros(m_I)]),
        name=problem.name,
        meta=problem.meta,
    )

