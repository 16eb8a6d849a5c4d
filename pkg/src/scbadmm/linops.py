"""Linear operators on finite-dimensional Euclidean spaces.

Every space is represented by flat float vectors.  Symmetric matrices are
mapped to vectors with :func:`svec`, which scales the strictly upper
triangular entries by ``sqrt(2)`` so that ``trace(X @ Y) == svec(X) @ svec(Y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg as sla

POWER_MAXITER = 200
POWER_TOL = 1e-8
POWER_SEED = 0
EXACT_EPS = 1e-12
SCALED_IDENTITY_INFLATION = 1.001
PSD_TOL = 1e-12

_SQRT2 = np.sqrt(2.0)


# --- symmetric matrix <-> vector -------------------------------------------


def svec_dim(n: int) -> int:
    return n * (n + 1) // 2


def svec_order(d: int) -> int:
    """Matrix order ``n`` with ``svec_dim(n) == d``."""
    n = int(round((np.sqrt(8 * d + 1) - 1) / 2))
    if svec_dim(n) != d:
        raise ValueError(f"{d} is not a triangular number")
    return n


_TRIU_CACHE: dict = {}


def _triu(n):
    if n not in _TRIU_CACHE:
        rows, cols = np.triu_indices(n)
        scale = np.where(rows == cols, 1.0, _SQRT2)
        _TRIU_CACHE[n] = (rows, cols, scale)
    return _TRIU_CACHE[n]


def svec(X: np.ndarray) -> np.ndarray:
    """Scaled upper-triangular stacking of a symmetric matrix."""
    X = np.asarray(X, dtype=float)
    rows, cols, scale = _triu(X.shape[0])
    return X[rows, cols] * scale


def smat(x: np.ndarray, n: Optional[int] = None) -> np.ndarray:
    """Inverse of :func:`svec`."""
    x = np.asarray(x, dtype=float)
    if n is None:
        n = svec_order(x.size)
    rows, cols, scale = _triu(n)
    X = np.zeros((n, n))
    X[rows, cols] = x / scale
    X[cols, rows] = X[rows, cols]
    return X


def svec_weights(W: np.ndarray) -> np.ndarray:
    """Upper-triangular entries of ``W`` *without* the sqrt(2) scaling.

    Elementwise (Hadamard) multiplication ``W * X`` acts on ``svec(X)`` as
    multiplication by this vector.
    """
    W = np.asarray(W, dtype=float)
    rows, cols, _ = _triu(W.shape[0])
    return W[rows, cols]


# --- operators --------------------------------------------------------------


class LinearMap:
    """A linear map ``A: R^dom_dim -> R^cod_dim`` with its adjoint.

    Parameters
    ----------
    dom_dim, cod_dim : int
        Dimensions of the domain and codomain.
    apply, adjoint_apply : callable
        ``x -> A x`` and ``w -> A^* w``.
    gram : float, optional
        Known scalar ``s`` with ``A A^* = s I`` (on the codomain).  Lets
        solvers reduce subproblems to plain proximal steps.
    matrix : ndarray, optional
        Dense representation, when the map was built from one.
    """

    def __init__(
        self,
        dom_dim: int,
        cod_dim: int,
        apply: Callable[[np.ndarray], np.ndarray],
        adjoint_apply: Callable[[np.ndarray], np.ndarray],
        *,
        gram: Optional[float] = None,
        matrix: Optional[np.ndarray] = None,
        name: str = "",
    ):
        self.dom_dim = int(dom_dim)
        self.cod_dim = int(cod_dim)
        self._apply = apply
        self._adjoint = adjoint_apply
        self.gram = gram
        self.matrix = matrix
        self.name = name

    def apply(self, x):
        return self._apply(np.asarray(x, dtype=float))

    def adjoint_apply(self, w):
        return self._adjoint(np.asarray(w, dtype=float))

    __call__ = apply

    @property
    def T(self) -> "LinearMap":
        gram = None
        return LinearMap(
            self.cod_dim,
            self.dom_dim,
            self._adjoint,
            self._apply,
            gram=gram,
            matrix=None if self.matrix is None else self.matrix.T,
            name=f"{self.name}^*" if self.name else "",
        )

    def to_dense(self) -> np.ndarray:
        if self.matrix is not None:
            return np.array(self.matrix, dtype=float)
        out = np.empty((self.cod_dim, self.dom_dim))
        eye = np.eye(self.dom_dim)
        for k in range(self.dom_dim):
            out[:, k] = self.apply(eye[k])
        return out

    def __repr__(self):
        label = self.name or "LinearMap"
        return f"<{label}: R^{self.dom_dim} -> R^{self.cod_dim}>"

    @classmethod
    def from_matrix(cls, M, name: str = "") -> "LinearMap":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return cls(
            M.shape[1], M.shape[0], M.dot, M.T.dot, matrix=M, name=name
        )

    @classmethod
    def identity(cls, n: int) -> "LinearMap":
        return cls(n, n, np.copy, np.copy, gram=1.0, name="I")

    @classmethod
    def zero(cls, dom_dim: int, cod_dim: int) -> "LinearMap":
        return cls(
            dom_dim,
            cod_dim,
            lambda x: np.zeros(cod_dim),
            lambda w: np.zeros(dom_dim),
            gram=0.0,
            name="0",
        )

    @classmethod
    def scaled_identity(cls, n: int, s: float) -> "LinearMap":
        s = float(s)
        return cls(n, n, lambda x: s * x, lambda w: s * w, gram=s * s)


class SelfAdjointPSDOp:
    """A self-adjoint positive semidefinite operator on ``R^dim``.

    ``scale`` is set when the operator is known to equal ``scale * I``.
    """

    def __init__(
        self,
        dim: int,
        apply: Callable[[np.ndarray], np.ndarray],
        *,
        scale: Optional[float] = None,
        matrix: Optional[np.ndarray] = None,
        diagonal: Optional[np.ndarray] = None,
        name: str = "",
    ):
        self.dim = int(dim)
        self._apply = apply
        self.scale = scale
        self.matrix = matrix
        self.diagonal = diagonal
        self.name = name
        self._dense_cache = None

    def apply(self, x):
        return self._apply(np.asarray(x, dtype=float))

    __call__ = apply

    def to_dense(self) -> np.ndarray:
        if self.matrix is not None:
            return np.array(self.matrix, dtype=float)
        if self._dense_cache is None:
            if self.diagonal is not None:
                self._dense_cache = np.diag(self.diagonal)
            else:
                out = np.empty((self.dim, self.dim))
                eye = np.eye(self.dim)
                for k in range(self.dim):
                    out[:, k] = self.apply(eye[k])
                self._dense_cache = 0.5 * (out + out.T)
        return self._dense_cache

    def resolvent(self, t: float, r: np.ndarray) -> np.ndarray:
        """Solve ``(I + t*self) w = r``."""
        if self.scale is not None:
            return r / (1.0 + t * self.scale)
        if self.diagonal is not None:
            return r / (1.0 + t * self.diagonal)
        M = np.eye(self.dim) + t * self.to_dense()
        return sla.solve(M, r, assume_a="pos")

    def __repr__(self):
        return f"<{self.name or 'SelfAdjointPSDOp'} on R^{self.dim}>"

    @classmethod
    def from_matrix(cls, M, name: str = "") -> "SelfAdjointPSDOp":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if M.shape[0] != M.shape[1]:
            raise ValueError("operator matrix must be square")
        M = 0.5 * (M + M.T)
        return cls(M.shape[0], M.dot, matrix=M, name=name)

    @classmethod
    def from_diagonal(cls, d, name: str = "") -> "SelfAdjointPSDOp":
        d = np.asarray(d, dtype=float).ravel()
        return cls(d.size, lambda x: d * x, diagonal=d, name=name)

    @classmethod
    def identity(cls, n: int, scale: float = 1.0) -> "SelfAdjointPSDOp":
        s = float(scale)
        return cls(n, lambda x: s * x, scale=s, name=f"{s:g}I")

    @classmethod
    def zero(cls, n: int) -> "SelfAdjointPSDOp":
        return cls(n, lambda x: np.zeros_like(x), scale=0.0, name="0")


def gram_op(A: LinearMap) -> SelfAdjointPSDOp:
    """``A A^*`` as an operator on the codomain of ``A``."""
    if A.gram is not None:
        return SelfAdjointPSDOp.identity(A.cod_dim, A.gram)
    if A.matrix is not None:
        return SelfAdjointPSDOp.from_matrix(A.matrix @ A.matrix.T)
    return SelfAdjointPSDOp(A.cod_dim, lambda y: A.apply(A.adjoint_apply(y)))


# --- checks and estimates ---------------------------------------------------


def check_adjoint(
    map: LinearMap, trials: int = 5, tol: float = 1e-10, seed: int = 0
) -> bool:
    """Test ``<A x, w> == <x, A^* w>`` on random vectors.

    Raises
    ------
    ValueError
        If ``trials < 1`` or ``apply``/``adjoint_apply`` return vectors of
        the wrong size.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(map.dom_dim)
        w = rng.standard_normal(map.cod_dim)
        Ax = np.asarray(map.apply(x)).ravel()
        Atw = np.asarray(map.adjoint_apply(w)).ravel()
        if Ax.size != map.cod_dim or Atw.size != map.dom_dim:
            raise ValueError(
                f"malformed operator: apply gives {Ax.size} (expected "
                f"{map.cod_dim}), adjoint gives {Atw.size} (expected {map.dom_dim})"
            )
        lhs, rhs = Ax @ w, x @ Atw
        scale = max(np.linalg.norm(Ax) * np.linalg.norm(w),
                    np.linalg.norm(x) * np.linalg.norm(Atw), 1e-300)
        worst = max(worst, abs(lhs - rhs) / scale)
    return bool(worst <= tol)


def power_iteration(
    apply: Callable[[np.ndarray], np.ndarray],
    dim: int,
    maxiter: int = POWER_MAXITER,
    tol: float = POWER_TOL,
    seed: int = POWER_SEED,
) -> float:
    """Largest eigenvalue of a symmetric PSD operator."""
    if dim == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(maxiter):
        w = apply(v)
        lam_new = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            return lam_new
        lam = lam_new
    return lam


def _check_psd(Sigma: SelfAdjointPSDOp, trials: int = 3, seed: int = 1):
    if Sigma.scale is not None:
        if Sigma.scale < 0:
            raise ValueError("Sigma is not positive semidefinite")
        return
    if Sigma.diagonal is not None:
        if np.any(Sigma.diagonal < -PSD_TOL * max(1.0, np.abs(Sigma.diagonal).max(initial=0))):
            raise ValueError("Sigma is not positive semidefinite")
        return
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        x = rng.standard_normal(Sigma.dim)
        q = x @ Sigma.apply(x)
        if q < -1e-10 * (x @ x) * max(1.0, abs(q)):
            raise ValueError("Sigma is not positive semidefinite")


# --- majorizers -------------------------------------------------------------


@dataclass
class Majorizer:
    """A positive definite ``E`` dominating ``sigma^-1 Sigma + A A^*``.

    ``T = E - sigma^-1 Sigma - A A^*`` is the induced semi-proximal term.
    """

    sigma: float
    Sigma: SelfAdjointPSDOp
    A: LinearMap
    E: SelfAdjointPSDOp
    solve: Callable[[np.ndarray], np.ndarray]
    strategy: str = "exact"
    info: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.E.dim

    def apply_T(self, y):
        return (
            self.E.apply(y)
            - self.Sigma.apply(y) / self.sigma
            - self.A.apply(self.A.adjoint_apply(y))
        )

    @property
    def T(self) -> SelfAdjointPSDOp:
        return SelfAdjointPSDOp(self.dim, self.apply_T, name="T")

    @classmethod
    def from_diagonal(cls, sigma, Sigma, A, diag, strategy="exact"):
        """Majorizer with a known diagonal ``E``."""
        diag = np.asarray(diag, dtype=float)
        if np.any(diag <= 0):
            raise ValueError("diagonal majorizer must be positive")
        return cls(
            sigma,
            Sigma,
            A,
            SelfAdjointPSDOp.from_diagonal(diag, name="E"),
            lambda r: r / diag,
            strategy,
        )


def build_majorizer(
    sigma: float,
    Sigma: SelfAdjointPSDOp,
    A: LinearMap,
    strategy: str = "exact",
) -> Majorizer:
    """Construct ``E >= sigma^-1 Sigma + A A^*`` with a cheap inverse.

    Parameters
    ----------
    sigma : float
        Penalty parameter, must be positive.
    Sigma : SelfAdjointPSDOp
        Hessian of the quadratic block.
    A : LinearMap
        Coupling map of the block (constraint space -> block space).
    strategy : {"exact", "scaled_identity"}
        ``exact`` factors ``sigma^-1 Sigma + A A^* + eps I`` so that ``T`` is
        (numerically) zero; ``scaled_identity`` uses ``lam I`` with ``lam``
        an inflated power-iteration estimate of the largest eigenvalue.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if Sigma.dim != A.cod_dim:
        raise ValueError(
            f"Sigma acts on R^{Sigma.dim} but A maps into R^{A.cod_dim}"
        )
    _check_psd(Sigma)
    n = Sigma.dim
    inv_s = 1.0 / sigma

    if strategy == "exact":
        if Sigma.scale is not None and A.gram is not None:
            lam = inv_s * Sigma.scale + A.gram
            lam += EXACT_EPS * (1.0 + abs(lam))
            return Majorizer(
                sigma, Sigma, A,
                SelfAdjointPSDOp.identity(n, lam),
                lambda r: r / lam, strategy, {"lambda": lam},
            )
        M = inv_s * Sigma.to_dense() + gram_op(A).to_dense()
        M = 0.5 * (M + M.T)
        if n and np.linalg.eigvalsh(Sigma.to_dense()).min() < -1e-10 * max(
            1.0, np.abs(Sigma.to_dense()).max()
        ):
            raise ValueError("Sigma is not positive semidefinite")
        eps = EXACT_EPS * (1.0 + np.abs(np.diag(M)).mean() if n else 1.0)
        M = M + eps * np.eye(n)
        factor = sla.cho_factor(M, lower=True)
        return Majorizer(
            sigma, Sigma, A,
            SelfAdjointPSDOp.from_matrix(M, name="E"),
            lambda r: sla.cho_solve(factor, r),
            strategy, {"eps": eps},
        )

    if strategy == "scaled_identity":
        AAt = gram_op(A)
        lam = power_iteration(
            lambda y: inv_s * Sigma.apply(y) + AAt.apply(y), n
        )
        lam = max(lam, 0.0) * SCALED_IDENTITY_INFLATION
        if lam <= 0.0:
            lam = 1.0
        return Majorizer(
            sigma, Sigma, A,
            SelfAdjointPSDOp.identity(n, lam),
            lambda r: r / lam, strategy, {"lambda": lam},
        )

    raise ValueError(f"unknown majorizer strategy {strategy!r}")


# --- stacking ---------------------------------------------------------------


def stack_maps(maps: Sequence[LinearMap]) -> LinearMap:
    """Stack maps sharing a domain: ``x -> (A_1 x, ..., A_k x)``.

    The adjoint sums the blockwise adjoints, ``A^* y = sum_i A_i^* y_i``.
    """
    maps = list(maps)
    if not maps:
        raise ValueError("stack_maps needs at least one map")
    dom = maps[0].dom_dim
    for m in maps:
        if m.dom_dim != dom:
            raise ValueError("all stacked maps must share the same domain")
    if len(maps) == 1:
        return maps[0]
    sizes = [m.cod_dim for m in maps]
    offsets = np.cumsum([0] + sizes)

    def apply(x):
        return np.concatenate([m.apply(x) for m in maps])

    def adjoint(y):
        out = np.zeros(dom)
        for m, a, b in zip(maps, offsets[:-1], offsets[1:]):
            out += m.adjoint_apply(y[a:b])
        return out

    matrix = None
    if all(m.matrix is not None for m in maps):
        matrix = np.vstack([m.matrix for m in maps])
    return LinearMap(dom, int(offsets[-1]), apply, adjoint, matrix=matrix,
                     name="stack")


def block_diag_op(ops: Sequence[SelfAdjointPSDOp]) -> SelfAdjointPSDOp:
    """Block-diagonal operator ``diag(ops[0], ops[1], ...)``."""
    ops = list(ops)
    sizes = [o.dim for o in ops]
    offsets = np.cumsum([0] + sizes)

    def apply(x):
        return np.concatenate(
            [o.apply(x[a:b]) for o, a, b in zip(ops, offsets[:-1], offsets[1:])]
        )

    return SelfAdjointPSDOp(int(offsets[-1]), apply, name="blockdiag")


def lambda_min(M: np.ndarray) -> float:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.inf
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
