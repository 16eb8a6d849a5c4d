"""Test-problem builders: quadratic SDPs and nearest correlation matrices.

Quadratic SDP::

    min 1/2 <X, Q X> + <C, X>   s.t.  A_E X = b_E,  X psd,  L <= X <= U

is solved through its dual, written as a minimization over
``(Z, Xi, S, y_E)``::

    min  supp_K(-Z) + 1/2 ||Xi||^2 - <b_E, y_E>
    s.t. Z + B^* Xi + S + A_E^* y_E = C,  S psd

with ``Q = B^* B``.  The multiplier of the equality constraint is the primal
matrix ``X``.  Every symmetric matrix is stored in svec form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .diagnostics import eta_qsdp, eta_sncm
from .linops import (
    LinearMap,
    Majorizer,
    SelfAdjointPSDOp,
    smat,
    svec,
    svec_dim,
    svec_weights,
)
from .model import BlockProblem, ProxBlock, QuadraticBlock
from .prox import HadamardOp, ProxFriendlyFunction, _box_support, separable

H0_SEED = 20140707
H0_ORDER = 93
H0_SMALL = 1e-5
H0_SMALL_FRACTION = 0.24
H0_RANGE = (2.0, 1.28e3)


class InstanceFormatError(ValueError):
    """Malformed instance file; the message names the offending line."""


def _sym_uniform(rng, n, lo, hi):
    A = rng.uniform(lo, hi, size=(n, n))
    return np.triu(A) + np.triu(A, 1).T


def constraint_map(mats, n) -> LinearMap:
    """``X -> (<A_k, X>)_k`` on svec vectors, from symmetric matrices ``A_k``."""
    rows = np.array([svec(M) for M in mats]).reshape(len(mats), svec_dim(n))
    return LinearMap.from_matrix(rows, name="A_E")


def diag_map(n) -> LinearMap:
    """``X -> diag(X)`` on svec vectors."""
    mats = []
    for i in range(n):
        M = np.zeros((n, n))
        M[i, i] = 1.0
        mats.append(M)
    return constraint_map(mats, n)


# --- quadratic SDP ----------------------------------------------------------


@dataclass
class QsdpInstance:
    """Quadratic SDP with ``Q(X) = P (W o (P^T X P)) P^T``.

    ``Q = B^* B`` with ``B X = sqrt(W) o (P^T X P)``.  ``P = None`` means the
    Hadamard form ``Q X = W o X``.  ``const`` is added to both objectives.
    """

    n: int
    W: np.ndarray
    P: Optional[np.ndarray]
    C: np.ndarray
    A_E: LinearMap
    b_E: np.ndarray
    L: np.ndarray
    U: np.ndarray
    X_feas: Optional[np.ndarray] = None
    const: float = 0.0
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.H = np.sqrt(self.W)
        self.Q = HadamardOp(self.W, self.P)
        self.L = np.broadcast_to(np.asarray(self.L, float), (self.n, self.n))
        self.U = np.broadcast_to(np.asarray(self.U, float), (self.n, self.n))
        self.b_E = np.asarray(self.b_E, dtype=float)

    @property
    def m_E(self) -> int:
        return self.A_E.cod_dim

    def B_apply(self, X):
        if self.P is None:
            return self.H * X
        return self.H * (self.P.T @ X @ self.P)

    def B_adjoint(self, Xi):
        if self.P is None:
            return self.H * Xi
        return self.P @ (self.H * Xi) @ self.P.T

    def B_map(self) -> LinearMap:
        d, n = svec_dim(self.n), self.n
        return LinearMap(
            d, d,
            lambda x: svec(self.B_apply(smat(x, n))),
            lambda w: svec(self.B_adjoint(smat(w, n))),
            name="B",
        )

    def primal_objective(self, X) -> float:
        return float(0.5 * np.sum(X * self.Q.apply_matrix(X)) + np.sum(self.C * X) + self.const)

    def dual_objective(self, Z, Xi, y_E, Upsilon=None, X=None) -> float:
        supp = _box_support(-svec(Z), svec(self.L), svec(self.U), 1e-12)
        if Xi is not None:
            quad = 0.5 * float(np.sum(Xi * Xi))
        elif X is not None:
            quad = 0.5 * float(np.sum(X * self.Q.apply_matrix(X)))
        else:
            quad = 0.0
        return float(-supp - quad + self.b_E @ y_E + self.const)

    def problem(self) -> BlockProblem:
        """Dual model with blocks ``Z, Xi, S, y_E`` in this order."""
        n, d = self.n, svec_dim(self.n)
        I = LinearMap.identity(d)
        f = ProxBlock(
            ProxFriendlyFunction("box_support", d, L=svec(self.L), U=svec(self.U)),
            I, name="Z",
        )
        Bm = self.B_map()
        e_diag = svec_weights(self.W)
        P_xi = SelfAdjointPSDOp.identity(d)

        def xi_majorizer(sigma):
            return Majorizer.from_diagonal(sigma, P_xi, Bm, 1.0 / sigma + e_diag)

        theta = QuadraticBlock(P_xi, np.zeros(d), Bm, majorizer=xi_majorizer, name="Xi")
        g = ProxBlock(ProxFriendlyFunction("psd_indicator", d), I, name="S")
        phi = []
        if self.m_E:
            phi.append(QuadraticBlock(None, self.b_E, self.A_E, name="y_E"))
        inst = self

        def kkt(problem, state, objectives=True):
            rep = eta_qsdp(
                inst,
                smat(state.x, n),
                smat(state.u, n),
                smat(state.v, n),
                state.z[0] if phi else np.zeros(0),
                Xi=smat(state.y[0], n),
                objectives=objectives,
            )
            rep.iter = state.iter
            return rep

        return BlockProblem(
            f, [theta], g, phi, svec(self.C), kkt_report=kkt, name="qsdp",
            meta={"n": n, "m_E": self.m_E, "seed": self.seed, **self.meta},
        )


def _random_basis(rng, n):
    Qm, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Qm * np.sign(np.diag(R))


def _low_rank_weights(rng, n, rank_B):
    """Eigenbasis ``P`` and weights ``W_ij = (lam_i + lam_j)/2`` of a random PSD B."""
    if not 0 <= rank_B <= n:
        raise ValueError(f"rank_B must lie in [0, {n}]")
    P = _random_basis(rng, n)
    lam = np.zeros(n)
    lam[:rank_B] = rng.uniform(0.1, 1.0, size=rank_B)
    W = 0.5 * (lam[:, None] + lam[None, :])
    return P, W, lam


def build_random_qsdp(n: int, m_E: int, rank_B: int, seed: int = 0) -> QsdpInstance:
    """Random quadratic SDP over ``{X >= 0}`` with a known strictly feasible point.

    ``B = P diag(lam) P^T`` has ``rank_B`` eigenvalues drawn from
    ``[0.1, 1]``.  The constraint matrices are random symmetric with unit
    Frobenius norm and ``b_E = A_E X_feas`` for ``X_feas = I + v v^T``,
    ``v > 0``.  ``C`` is built as ``A_E^* y0 + S0 + Z0`` with ``S0`` positive
    definite and ``Z0 >= 0`` so the dual is strictly feasible as well.

    Use :meth:`QsdpInstance.problem` for the block model.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if m_E < 0:
        raise ValueError("m_E must be nonnegative")
    rng = np.random.default_rng(seed)
    P, W, lam = _low_rank_weights(rng, n, rank_B)
    mats = []
    for _ in range(m_E):
        M = rng.standard_normal((n, n))
        M = 0.5 * (M + M.T)
        mats.append(M / np.linalg.norm(M))
    A_E = constraint_map(mats, n)
    v = rng.uniform(0.1, 1.0, size=n) / np.sqrt(n)
    X_feas = np.eye(n) + np.outer(v, v)
    b_E = A_E.apply(svec(X_feas))
    y0 = rng.standard_normal(m_E)
    R = rng.standard_normal((n, n)) / np.sqrt(n)
    S0 = R @ R.T + 0.1 * np.eye(n)
    Z0 = _sym_uniform(rng, n, 0.0, 1.0 / n)
    C = smat(A_E.adjoint_apply(y0), n) + S0 + Z0
    return QsdpInstance(
        n=n, W=W, P=P, C=C, A_E=A_E, b_E=b_E,
        L=np.zeros((n, n)), U=np.full((n, n), np.inf),
        X_feas=X_feas, seed=seed,
        meta={"family": "random", "rank_B": rank_B, "lam": lam},
    )


def build_biq(Q_data, c_data=None, rank_B: int = 0, seed: int = 0) -> QsdpInstance:
    """Quadratic SDP relaxation of a binary quadratic program.

    For data ``(Q, c)`` of order ``n0`` the instance has order ``n0 + 1``::

        min 1/2 <X, Q' X> + 1/2 <Q, X0> + <c, x>
        s.t. diag(X0) - x = 0,  alpha = 1,  X = [[X0, x], [x^T, alpha]] psd,  X >= 0

    where ``Q'`` is a random low-rank term built as in
    :func:`build_random_qsdp`.
    """
    Qd = Q_data.toarray() if sp.issparse(Q_data) else np.asarray(Q_data, dtype=float)
    Qd = np.atleast_2d(Qd)
    n0 = Qd.shape[0]
    if n0 < 1 or Qd.shape != (n0, n0):
        raise ValueError("Q_data must be a nonempty square matrix")
    if not np.allclose(Qd, Qd.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Qd).max())):
        raise ValueError("Q_data must be symmetric")
    c = np.zeros(n0) if c_data is None else np.asarray(c_data, dtype=float).ravel()
    if c.size != n0:
        raise ValueError("c_data has the wrong length")
    n = n0 + 1
    rng = np.random.default_rng(seed)
    P, W, lam = _low_rank_weights(rng, n, rank_B)
    C = np.zeros((n, n))
    C[:n0, :n0] = 0.5 * Qd
    C[:n0, n0] = C[n0, :n0] = 0.5 * c
    mats = []
    for i in range(n0):
        M = np.zeros((n, n))
        M[i, i] = 1.0
        M[i, n0] = M[n0, i] = -0.5
        mats.append(M)
    M = np.zeros((n, n))
    M[n0, n0] = 1.0
    mats.append(M)
    A_E = constraint_map(mats, n)
    b_E = np.zeros(n)
    b_E[-1] = 1.0
    t = 0.5
    X_feas = np.empty((n, n))
    X_feas[:n0, :n0] = t * t + (t - t * t) * np.eye(n0)
    X_feas[:n0, n0] = X_feas[n0, :n0] = t
    X_feas[n0, n0] = 1.0
    return QsdpInstance(
        n=n, W=W, P=P, C=C, A_E=A_E, b_E=b_E,
        L=np.zeros((n, n)), U=np.full((n, n), np.inf),
        X_feas=X_feas, seed=seed,
        meta={"family": "biq", "rank_B": rank_B, "n0": n0},
    )


def scalar_qsdp() -> QsdpInstance:
    """``min 1/2 x^2 - x`` over ``x >= 0``: optimum ``x = 1``, value ``-1/2``."""
    return QsdpInstance(
        n=1, W=np.ones((1, 1)), P=np.ones((1, 1)), C=-np.ones((1, 1)),
        A_E=LinearMap.from_matrix(np.zeros((0, 1))), b_E=np.zeros(0),
        L=np.full((1, 1), -np.inf), U=np.full((1, 1), np.inf),
        X_feas=np.ones((1, 1)), meta={"family": "scalar"},
    )


# --- nearest correlation matrix ---------------------------------------------


def synthetic_h0(seed: int = H0_SEED) -> np.ndarray:
    """Symmetric 93 x 93 weight matrix with a wide spread of entries.

    About 24% of the entries equal ``1e-5``; the rest are log-uniform in
    ``[2, 1280]``.  Stands in for a proprietary weight matrix with the same
    entry statistics.
    """
    rng = np.random.default_rng(seed)
    n = H0_ORDER
    lo, hi = np.log(H0_RANGE[0]), np.log(H0_RANGE[1])
    A = np.exp(rng.uniform(lo, hi, size=(n, n)))
    A[rng.random((n, n)) < H0_SMALL_FRACTION] = H0_SMALL
    return np.triu(A) + np.triu(A, 1).T


def tile_weights(H0: np.ndarray, n: int) -> np.ndarray:
    """Tile ``H0`` to order ``n`` and symmetrize."""
    reps = -(-n // H0.shape[0])
    H = np.kron(np.ones((reps, reps)), H0)[:n, :n]
    return 0.5 * (H + H.T)


def random_correlation(rng, n, rank=None) -> np.ndarray:
    """Random PSD matrix with unit diagonal."""
    rank = min(n, 5) if rank is None else rank
    V = rng.standard_normal((n, max(rank, 1)))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    G = V @ V.T
    np.fill_diagonal(G, 1.0)
    return G


@dataclass
class NcmInstance:
    """H-weighted nearest correlation matrix problem.

    ``frobenius``: ``min 1/2 ||H o (X - G)||_F^2 + <C, X>``;
    ``spectral``: ``min ||H o (X - G)||_2 + <C, X>``; both subject to
    ``diag(X) = 1``, ``X`` psd and ``L <= X <= U``.
    """

    n: int
    G: np.ndarray
    H: np.ndarray
    norm_kind: str = "frobenius"
    C: Optional[np.ndarray] = None
    L: object = -0.5
    U: object = np.inf
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.norm_kind not in ("frobenius", "spectral"):
            raise ValueError("norm_kind must be 'frobenius' or 'spectral'")
        self.G = np.asarray(self.G, dtype=float)
        self.H = np.asarray(self.H, dtype=float)
        if np.any(self.H < 0):
            raise ValueError("H must be nonnegative")
        n = self.n
        self.C = np.zeros((n, n)) if self.C is None else np.asarray(self.C, float)
        self.L = np.broadcast_to(np.asarray(self.L, float), (n, n))
        self.U = np.broadcast_to(np.asarray(self.U, float), (n, n))
        self.A_E = diag_map(n)
        self.b_E = np.ones(n)
        self.X_feas = np.eye(n)

    @classmethod
    def from_data(cls, G, H, norm_kind="frobenius", C=None, L=-0.5, U=np.inf):
        G = np.asarray(G, dtype=float)
        return cls(G.shape[0], G, np.broadcast_to(np.asarray(H, float), G.shape).copy(),
                   norm_kind, C, L, U)

    def primal_objective(self, X) -> float:
        Y = self.H * (X - self.G)
        lin = float(np.sum(self.C * X))
        if self.norm_kind == "frobenius":
            return 0.5 * float(np.sum(Y * Y)) + lin
        return float(np.linalg.norm(Y, 2)) + lin

    def dual_objective(self, Z, Xi, y_E) -> float:
        supp = _box_support(-svec(Z), svec(self.L), svec(self.U), 1e-12)
        if np.abs(np.linalg.eigvalsh(0.5 * (Xi + Xi.T))).sum() > 1.0 + 1e-8:
            return -math.inf
        return float(-supp + np.sum(self.H * self.G * Xi) + self.b_E @ y_E)

    def to_qsdp(self) -> QsdpInstance:
        """Frobenius case as a quadratic SDP with ``Q X = H o H o X``."""
        W = self.H * self.H
        return QsdpInstance(
            n=self.n, W=W, P=None, C=self.C - W * self.G, A_E=self.A_E, b_E=self.b_E,
            L=self.L, U=self.U, X_feas=self.X_feas,
            const=0.5 * float(np.sum(W * self.G * self.G)), seed=self.seed,
            meta={"family": "ncm", "norm_kind": "frobenius", **self.meta},
        )

    def problem(self) -> BlockProblem:
        if self.norm_kind == "frobenius":
            return self.to_qsdp().problem()
        return self._spectral_problem()

    def _spectral_problem(self) -> BlockProblem:
        """Blocks ``(Z, Gamma), Xi, S, y_E`` on the constraint space ``S^n x S^n``.

        The constraints are ``Z + H o Xi + S + A_E^* y_E = C`` and
        ``Gamma - Xi = 0``; ``Gamma`` carries the nuclear-norm ball.
        """
        n, d = self.n, svec_dim(self.n)
        h = svec_weights(self.H)
        f_fn = separable([
            ProxFriendlyFunction("box_support", d, L=svec(self.L), U=svec(self.U)),
            ProxFriendlyFunction("nuclear_ball_indicator", d, r=1.0),
        ])
        f = ProxBlock(f_fn, LinearMap.identity(2 * d), name="Z,Gamma")
        A_xi = LinearMap(
            2 * d, d,
            lambda x: h * x[:d] - x[d:],
            lambda w: np.concatenate([h * w, -w]),
            name="Xi-coupling",
        )
        P0 = SelfAdjointPSDOp.zero(d)

        def xi_majorizer(sigma):
            return Majorizer.from_diagonal(sigma, P0, A_xi, h * h + 1.0)

        theta = QuadraticBlock(P0, svec(self.H * self.G), A_xi, majorizer=xi_majorizer, name="Xi")
        first = LinearMap(
            2 * d, d, lambda x: x[:d], lambda w: np.concatenate([w, np.zeros(d)]),
            gram=1.0, name="first",
        )
        g = ProxBlock(ProxFriendlyFunction("psd_indicator", d), first, name="S")
        AE = self.A_E
        yE_map = LinearMap(
            2 * d, n, lambda x: AE.apply(x[:d]),
            lambda w: np.concatenate([AE.adjoint_apply(w), np.zeros(d)]),
            matrix=np.hstack([AE.matrix, np.zeros((n, d))]), name="A_E",
        )
        phi = QuadraticBlock(None, self.b_E, yE_map, name="y_E")
        inst = self

        def kkt(problem, state, objectives=True):
            rep = eta_sncm(
                inst,
                smat(state.x[:d], n),
                smat(state.u[:d], n),
                smat(state.y[0], n),
                smat(state.v, n),
                state.z[0],
                objectives=objectives,
                Gamma=smat(state.u[d:], n),
            )
            rep.iter = state.iter
            return rep

        return BlockProblem(
            f, [theta], g, [phi], np.concatenate([svec(self.C), np.zeros(d)]),
            kkt_report=kkt, name="sncm", meta={"n": n, "seed": self.seed, **self.meta},
        )


def build_ncm(n: int, alpha: float, norm_kind: str = "frobenius", seed: int = 0,
              H0: Optional[np.ndarray] = None) -> NcmInstance:
    """Weighted nearest correlation matrix instance.

    ``G = (1 - alpha) G_hat + alpha E`` with ``G_ii = 1``, where ``G_hat`` is
    a random correlation matrix and ``E`` is symmetric uniform on
    ``[-1, 1]``.  ``H`` tiles :func:`synthetic_h0` (or ``H0``).  The box is
    ``X >= -0.5`` and ``C = 0``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    G_hat = random_correlation(rng, n)
    E = _sym_uniform(rng, n, -1.0, 1.0)
    G = (1.0 - alpha) * G_hat + alpha * E
    np.fill_diagonal(G, 1.0)
    H = tile_weights(synthetic_h0() if H0 is None else np.asarray(H0, float), n)
    return NcmInstance(n, G, H, norm_kind, None, -0.5, np.inf, seed,
                       meta={"family": "ncm", "alpha": alpha})


# --- instance files ---------------------------------------------------------


def _tokens(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def load_sparse_instance(path) -> Tuple[sp.csr_matrix, np.ndarray]:
    """Read a symmetric sparse matrix and a cost vector.

    Format: a header ``n nnz``; ``nnz`` lines ``i j value`` (1-based, upper
    triangle, duplicates summed); optionally a line starting with ``c``
    followed by ``n`` values, on that line or the following ones.  ``#``
    starts a comment.

    Raises
    ------
    InstanceFormatError
        With the offending line number.
    FileNotFoundError
        If ``path`` does not exist.
    """
    lines = iter(_tokens(path))
    try:
        lineno, head = next(lines)
    except StopIteration:
        raise InstanceFormatError(f"{path}: empty file, expected header 'n nnz'")
    try:
        if len(head) != 2:
            raise ValueError
        n, nnz = int(head[0]), int(head[1])
        if n < 1 or nnz < 0:
            raise ValueError
    except ValueError:
        raise InstanceFormatError(f"{path}:{lineno}: bad header {' '.join(head)!r}, expected 'n nnz'")
    rows, cols, vals = [], [], []
    for _ in range(nnz):
        try:
            lineno, tok = next(lines)
        except StopIteration:
            raise InstanceFormatError(f"{path}: expected {nnz} entries, found {len(vals)}")
        try:
            if len(tok) != 3:
                raise ValueError
            i, j, v = int(tok[0]), int(tok[1]), float(tok[2])
        except ValueError:
            raise InstanceFormatError(f"{path}:{lineno}: bad entry {' '.join(tok)!r}, expected 'i j value'")
        if not (1 <= i <= n and 1 <= j <= n):
            raise InstanceFormatError(f"{path}:{lineno}: index ({i}, {j}) out of range 1..{n}")
        if not math.isfinite(v):
            raise InstanceFormatError(f"{path}:{lineno}: non-finite value")
        i, j = min(i, j) - 1, max(i, j) - 1
        rows.append(i)
        cols.append(j)
        vals.append(v)
    c = np.zeros(n)
    rest = list(lines)
    if rest:
        lineno, tok = rest[0]
        if tok[0] != "c":
            raise InstanceFormatError(f"{path}:{lineno}: expected 'c' or end of file, got {tok[0]!r}")
        values = []
        for ln, tk in [(lineno, tok[1:])] + rest[1:]:
            for t in tk:
                try:
                    values.append(float(t))
                except ValueError:
                    raise InstanceFormatError(f"{path}:{ln}: bad cost value {t!r}")
            if len(values) > n:
                raise InstanceFormatError(f"{path}:{ln}: more than {n} cost values")
        if len(values) != n:
            raise InstanceFormatError(f"{path}:{rest[-1][0]}: expected {n} cost values, got {len(values)}")
        c = np.array(values)
    upper = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    off = sp.triu(upper, 1)
    Q = (sp.triu(upper) + off.T).tocsr()
    return Q, c


def write_sparse_instance(path, Q, c=None) -> None:
    """Write ``Q`` (upper triangle) and ``c`` in the format of :func:`load_sparse_instance`."""
    Qc = sp.triu(sp.csr_matrix(Q)).tocoo()
    n = Qc.shape[0]
    keep = Qc.data != 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n} {int(keep.sum())}\n")
        for i, j, v in zip(Qc.row[keep], Qc.col[keep], Qc.data[keep]):
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")
        if c is not None:
            fh.write("c " + " ".join(repr(float(v)) for v in np.asarray(c).ravel()) + "\n")


def _random_psd(rng, k, rank=None, shift=0.0):
    rank = k if rank is None else rank
    R = rng.standard_normal((k, rank)) / math.sqrt(max(k, 1))
    return R @ R.T + shift * np.eye(k)


def random_block_qp(
    m: int,
    f_dim: int,
    theta_dims=(),
    g_dim: Optional[int] = None,
    phi_dims=(),
    seed: int = 0,
    g_quadratic: bool = False,
    strategy: str = "exact",
    shift: float = 0.1,
    singular_hessians: bool = False,
) -> BlockProblem:
    """Random multi-block convex QP in the block model.

    ``f`` (and ``g`` unless ``g_quadratic``) are prox blocks holding a
    quadratic ``1/2 <u, D u> - <k, u>``; the theta and phi blocks are
    quadratic blocks.  Every coupling map is a dense Gaussian matrix.

    Parameters
    ----------
    m : int
        Dimension of the constraint space.
    f_dim, g_dim : int
        Block sizes; ``g_dim=None`` omits ``g``.
    theta_dims, phi_dims : sequence of int
    seed : int
    g_quadratic : bool
        Make ``g`` a :class:`QuadraticBlock` with its own majorizer.
    strategy : {"exact", "scaled_identity"}
        Majorizer strategy of the quadratic blocks.
    shift : float
        Added to every Hessian; positive values make the problem strongly
        convex and its solution unique.
    singular_hessians : bool
        Draw rank-deficient Hessians (combine with ``shift=0``).
    """
    rng = np.random.default_rng(seed)

    def hess(k):
        rank = max(k // 2, 0) if singular_hessians else k
        return _random_psd(rng, k, rank, shift)

    def gmap(k):
        return LinearMap.from_matrix(rng.standard_normal((k, m)) / math.sqrt(m))

    def prox_quad(k, name):
        fn = ProxFriendlyFunction("quadratic", k, D=hess(k), k=rng.standard_normal(k))
        return ProxBlock(fn, gmap(k), name=name)

    def quad(k, name):
        return QuadraticBlock(hess(k), rng.standard_normal(k), gmap(k), strategy=strategy, name=name)

    f = prox_quad(f_dim, "f")
    theta = [quad(k, f"theta{i + 1}") for i, k in enumerate(theta_dims)]
    g = None
    if g_dim is not None:
        g = quad(g_dim, "g") if g_quadratic else prox_quad(g_dim, "g")
    phi = [quad(k, f"phi{j + 1}") for j, k in enumerate(phi_dims)]
    c = rng.standard_normal(m)
    return BlockProblem(f, theta, g, phi, c, name="random_qp", meta={"seed": seed})
