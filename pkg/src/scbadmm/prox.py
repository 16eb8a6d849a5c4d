"""Proximal maps and projections for the nonsmooth blocks.

Matrix-valued kernels (:func:`proj_psd`, :func:`proj_box`, ...) act on
ordinary 2-D arrays.  :class:`ProxFriendlyFunction` wraps them for use on
the flat vectors the solvers work with; symmetric matrices are stored in
:func:`~scbadmm.linops.svec` form.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy import linalg as sla
from scipy.sparse.linalg import LinearOperator, cg

from .linops import Majorizer, SelfAdjointPSDOp, smat, svec, svec_order

LAMBDA_MIN = 1e-300
CONJ_TOL = 1e-8
CG_TOL = 1e-12
CG_MAXITER = 1000


def _check_finite(X, name="input"):
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")


# --- matrix kernels ---------------------------------------------------------


def proj_psd(X: np.ndarray) -> np.ndarray:
    """Projection onto the positive semidefinite cone.

    Parameters
    ----------
    X : ndarray of shape (n, n)
        Symmetrized internally as ``(X + X.T) / 2``.

    Returns
    -------
    ndarray of shape (n, n)
        ``V max(w, 0) V^T`` for the eigendecomposition ``X = V diag(w) V^T``.
    """
    X = np.asarray(X, dtype=float)
    _check_finite(X, "X")
    X = 0.5 * (X + X.T)
    w, V = np.linalg.eigh(X)
    if w[0] >= 0:
        return X
    pos = w > 0
    if not np.any(pos):
        return np.zeros_like(X)
    Vp = V[:, pos] * np.sqrt(w[pos])
    P = Vp @ Vp.T
    return 0.5 * (P + P.T)


def proj_box(X, L=-np.inf, U=np.inf) -> np.ndarray:
    """Elementwise clamp of ``X`` to ``[L, U]``.

    Raises
    ------
    ValueError
        If ``L > U`` anywhere.
    """
    X = np.asarray(X, dtype=float)
    L = np.broadcast_to(np.asarray(L, dtype=float), X.shape)
    U = np.broadcast_to(np.asarray(U, dtype=float), X.shape)
    if np.any(L > U):
        raise ValueError("box bounds violate L <= U")
    return np.minimum(np.maximum(X, L), U)


def prox_support(Z_bar, lam: float, L=-np.inf, U=np.inf) -> np.ndarray:
    """Prox of ``Z -> support_K(-Z)`` for the box ``K = [L, U]``.

    Returns ``argmin_Z support_K(-Z) + lam/2 ||Z - Z_bar||^2``, computed as
    ``Z_bar + Pi_K(-lam Z_bar) / lam``.  Entries where the projection is
    inactive are set exactly to zero, so the result always lies in the
    domain of the support function.
    """
    lam = float(lam)
    if not lam > LAMBDA_MIN:
        raise ValueError(f"lambda must exceed {LAMBDA_MIN}")
    Z_bar = np.asarray(Z_bar, dtype=float)
    L = np.broadcast_to(np.asarray(L, dtype=float), Z_bar.shape)
    U = np.broadcast_to(np.asarray(U, dtype=float), Z_bar.shape)
    if np.any(L > U):
        raise ValueError("box bounds violate L <= U")
    W = -lam * Z_bar
    P = np.minimum(np.maximum(W, L), U)
    Z = Z_bar + P / lam
    Z[P == W] = 0.0
    return Z


def project_l1_ball(s: np.ndarray, r: float) -> np.ndarray:
    """Project a nonnegative vector onto ``{t >= 0 : sum(t) <= r}``."""
    s = np.asarray(s, dtype=float)
    if s.sum() <= r:
        return s.copy()
    u = np.sort(s)[::-1]
    css = np.cumsum(u) - r
    k = np.arange(1, u.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(s - theta, 0.0)


def proj_nuclear_ball(X: np.ndarray, r: float = 1.0) -> np.ndarray:
    """Projection onto ``{Y : ||Y||_* <= r}``.

    The singular values are projected onto the l1 ball of radius ``r``; the
    singular vectors are kept.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    X = np.asarray(X, dtype=float)
    _check_finite(X, "X")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    if s.sum() <= r:
        return X.copy()
    t = project_l1_ball(s, r)
    return (U * t) @ Vt


def _proj_nuclear_ball_sym(X: np.ndarray, r: float) -> np.ndarray:
    # symmetric input: singular values are |eigenvalues|
    X = 0.5 * (X + X.T)
    w, V = np.linalg.eigh(X)
    a = np.abs(w)
    if a.sum() <= r:
        return X
    t = np.sign(w) * project_l1_ball(a, r)
    P = (V * t) @ V.T
    return 0.5 * (P + P.T)


# --- quadratic helpers ------------------------------------------------------


class HadamardOp(SelfAdjointPSDOp):
    """``Q(X) = P (W o (P^T X P)) P^T`` on symmetric matrices in svec form.

    With ``P = None`` this is the plain Hadamard product ``W o X``.  Both
    ``Q(X) = (B X + X B)/2`` (``W_ij = (lambda_i + lambda_j)/2`` in the
    eigenbasis ``P`` of ``B``) and ``Q(X) = H o H o X`` have this form.

    Parameters
    ----------
    W : ndarray of shape (n, n)
        Symmetric nonnegative weights.
    P : ndarray of shape (n, n), optional
        Orthogonal basis.
    """

    def __init__(self, W, P=None, name="Q"):
        W = np.asarray(W, dtype=float)
        if np.any(W < -1e-12 * max(1.0, np.abs(W).max(initial=0.0))):
            raise ValueError("weights must be nonnegative")
        self.W = np.maximum(0.5 * (W + W.T), 0.0)
        self.P = None if P is None else np.asarray(P, dtype=float)
        self.n = self.W.shape[0]
        super().__init__(self.n * (self.n + 1) // 2, self._apply_vec, name=name)

    def apply_matrix(self, X):
        if self.P is None:
            return self.W * X
        P = self.P
        return P @ (self.W * (P.T @ X @ P)) @ P.T

    def _apply_vec(self, x):
        return svec(self.apply_matrix(smat(x, self.n)))


def quad_shadow_update(Q: SelfAdjointPSDOp, sigma: float, R_bar) -> np.ndarray:
    """Solve ``(I + sigma Q) Y = Q R_bar`` for symmetric ``Y``.

    Parameters
    ----------
    Q : SelfAdjointPSDOp
        Acts on ``svec`` vectors.  A :class:`HadamardOp` is solved in closed
        form; any other operator falls back to conjugate gradients.
    sigma : float
        Positive penalty parameter.
    R_bar : ndarray of shape (n, n)

    Returns
    -------
    ndarray of shape (n, n)

    Raises
    ------
    RuntimeError
        If the conjugate gradient fallback fails to converge.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    R = np.asarray(R_bar, dtype=float)
    R = 0.5 * (R + R.T)
    if isinstance(Q, HadamardOp):
        ratio = Q.W / (1.0 + sigma * Q.W)
        if Q.P is None:
            return ratio * R
        P = Q.P
        Y = P @ (ratio * (P.T @ R @ P)) @ P.T
        return 0.5 * (Y + Y.T)

    n = R.shape[0]
    rhs = Q.apply(svec(R))
    if Q.scale is not None:
        return smat(rhs / (1.0 + sigma * Q.scale), n)
    op = LinearOperator(
        (Q.dim, Q.dim), matvec=lambda v: v + sigma * Q.apply(v), dtype=float
    )
    y, info = cg(op, rhs, rtol=CG_TOL, atol=0.0, maxiter=CG_MAXITER)
    if info != 0:
        raise RuntimeError(f"conjugate gradients did not converge (info={info})")
    return smat(y, n)


def prox_quadratic_block(E: Majorizer, rhs) -> np.ndarray:
    """``E^{-1} rhs``: the closed-form minimizer of a majorized quadratic block."""
    return E.solve(np.asarray(rhs, dtype=float))


# --- functions on flat vectors ----------------------------------------------


KINDS = (
    "zero",
    "psd_indicator",
    "box_indicator",
    "box_support",
    "nonneg_indicator",
    "nuclear_ball_indicator",
    "quadratic",
    "separable",
)


class ProxFriendlyFunction:
    """A closed convex function with a cheap proximal map.

    Parameters
    ----------
    kind : str
        One of ``zero``, ``psd_indicator``, ``box_indicator``,
        ``box_support``, ``nonneg_indicator``, ``nuclear_ball_indicator``,
        ``quadratic`` or ``separable``.
    dim : int
        Length of the vector the function acts on.
    **params
        ``L``, ``U``
            Box bounds (``box_indicator`` and ``box_support``); scalars or
            vectors in the same coordinates as the argument.
        ``r``
            Ball radius for ``nuclear_ball_indicator`` (default 1).
        ``shape``
            Matrix shape for ``nuclear_ball_indicator``; ``None`` means a
            symmetric matrix in svec form.
        ``D``, ``k``
            ``quadratic`` is ``u -> 1/2 <u, D u> - <k, u>``; ``D`` is a PSD
            matrix or a vector holding its diagonal.
        ``parts``
            Sequence of functions for ``separable``; the argument is split
            into consecutive pieces.

    Notes
    -----
    Symmetric-matrix arguments use svec coordinates.  Box bounds given as
    matrices must be converted with ``svec`` too: clamping commutes with the
    positive off-diagonal scaling.
    """

    def __init__(self, kind: str, dim: int, **params):
        if kind not in KINDS:
            raise ValueError(f"unknown function kind {kind!r}")
        self.kind = kind
        self.dim = int(dim)
        self.params = params
        if kind in ("box_indicator", "box_support"):
            L = np.broadcast_to(np.asarray(params.get("L", -np.inf), float), (self.dim,))
            U = np.broadcast_to(np.asarray(params.get("U", np.inf), float), (self.dim,))
            if np.any(L > U):
                raise ValueError("box bounds violate L <= U")
            self.L, self.U = L, U
        elif kind == "psd_indicator":
            self.n = svec_order(self.dim)
        elif kind == "nuclear_ball_indicator":
            self.r = float(params.get("r", 1.0))
            if not self.r > 0:
                raise ValueError("radius must be positive")
            self.shape = params.get("shape")
            if self.shape is None:
                self.n = svec_order(self.dim)
            elif int(np.prod(self.shape)) != self.dim:
                raise ValueError("shape does not match dim")
        elif kind == "quadratic":
            D = np.asarray(params["D"], dtype=float)
            self.k = np.broadcast_to(
                np.asarray(params.get("k", 0.0), float), (self.dim,)
            ).copy()
            if D.ndim == 1:
                if np.any(D < 0):
                    raise ValueError("D must be positive semidefinite")
                self.D_diag, self.D = D, None
            else:
                D = 0.5 * (D + D.T)
                if np.linalg.eigvalsh(D)[0] < -1e-10 * max(1.0, np.abs(D).max()):
                    raise ValueError("D must be positive semidefinite")
                self.D_diag, self.D = None, D
        elif kind == "separable":
            self.parts = list(params["parts"])
            if sum(p.dim for p in self.parts) != self.dim:
                raise ValueError("part dimensions do not add up to dim")
            self._offsets = np.cumsum([0] + [p.dim for p in self.parts])

    def __repr__(self):
        return f"ProxFriendlyFunction({self.kind!r}, dim={self.dim})"

    def _split(self, w):
        o = self._offsets
        return [w[a:b] for a, b in zip(o[:-1], o[1:])]

    @property
    def is_quadratic(self) -> bool:
        return self.kind in ("zero", "quadratic")

    def quadratic_matrix(self) -> np.ndarray:
        """Dense Hessian for ``zero`` and ``quadratic`` kinds."""
        if self.kind == "zero":
            return np.zeros((self.dim, self.dim))
        if self.kind == "quadratic":
            return np.diag(self.D_diag) if self.D is None else self.D
        raise ValueError(f"{self.kind} is not quadratic")

    def linear_term(self) -> np.ndarray:
        if self.kind == "quadratic":
            return self.k
        return np.zeros(self.dim)

    def Sigma(self) -> SelfAdjointPSDOp:
        """A PSD lower bound on the curvature of the function."""
        if self.kind == "quadratic":
            if self.D is None:
                return SelfAdjointPSDOp.from_diagonal(self.D_diag)
            return SelfAdjointPSDOp.from_matrix(self.D)
        if self.kind == "separable":
            mats = [p.Sigma().to_dense() for p in self.parts]
            return SelfAdjointPSDOp.from_matrix(sla.block_diag(*mats))
        return SelfAdjointPSDOp.zero(self.dim)

    # -- evaluation --

    def value(self, w, tol: float = 0.0) -> float:
        """Function value, ``+inf`` outside the domain.

        ``tol`` is an absolute slack for indicator membership.
        """
        w = np.asarray(w, dtype=float)
        k = self.kind
        if k == "zero":
            return 0.0
        if k == "quadratic":
            Dw = self.D_diag * w if self.D is None else self.D @ w
            return float(0.5 * w @ Dw - self.k @ w)
        if k == "nonneg_indicator":
            return 0.0 if np.all(w >= -tol) else np.inf
        if k == "box_indicator":
            ok = np.all(w >= self.L - tol) and np.all(w <= self.U + tol)
            return 0.0 if ok else np.inf
        if k == "psd_indicator":
            lam = np.linalg.eigvalsh(smat(w, self.n))[0]
            return 0.0 if lam >= -tol else np.inf
        if k == "nuclear_ball_indicator":
            return 0.0 if self._nuclear_norm(w) <= self.r + tol else np.inf
        if k == "box_support":
            return _box_support(-w, self.L, self.U, tol)
        return float(sum(p.value(x, tol) for p, x in zip(self.parts, self._split(w))))

    def _nuclear_norm(self, w):
        if self.shape is None:
            return float(np.abs(np.linalg.eigvalsh(smat(w, self.n))).sum())
        return float(np.linalg.svd(w.reshape(self.shape), compute_uv=False).sum())

    def prox(self, w, t: float = 1.0) -> np.ndarray:
        """``argmin_u f(u) + ||u - w||^2 / (2 t)``."""
        w = np.asarray(w, dtype=float)
        if not t > 0:
            raise ValueError("prox parameter must be positive")
        k = self.kind
        if k == "zero":
            return w.copy()
        if k == "quadratic":
            if self.D is None:
                return (w + t * self.k) / (1.0 + t * self.D_diag)
            M = np.eye(self.dim) + t * self.D
            return sla.solve(M, w + t * self.k, assume_a="pos")
        if k == "nonneg_indicator":
            return np.maximum(w, 0.0)
        if k == "box_indicator":
            return np.minimum(np.maximum(w, self.L), self.U)
        if k == "box_support":
            return prox_support(w, 1.0 / t, self.L, self.U)
        if k == "psd_indicator":
            return svec(proj_psd(smat(w, self.n)))
        if k == "nuclear_ball_indicator":
            if self.shape is None:
                return svec(_proj_nuclear_ball_sym(smat(w, self.n), self.r))
            return proj_nuclear_ball(w.reshape(self.shape), self.r).ravel()
        return np.concatenate(
            [p.prox(x, t) for p, x in zip(self.parts, self._split(w))]
        )

    def conjugate(self, s, tol: float = CONJ_TOL) -> float:
        """Fenchel conjugate ``sup_u <s, u> - f(u)``, possibly ``+inf``.

        Indicator-type conjugates treat violations up to
        ``tol * (1 + ||s||)`` as zero.
        """
        s = np.asarray(s, dtype=float)
        slack = tol * (1.0 + np.linalg.norm(s))
        k = self.kind
        if k == "zero":
            return 0.0 if np.linalg.norm(s) <= slack else np.inf
        if k == "nonneg_indicator":
            return 0.0 if np.all(s <= slack) else np.inf
        if k == "psd_indicator":
            lam = np.linalg.eigvalsh(smat(s, self.n))[-1]
            return 0.0 if lam <= slack else np.inf
        if k == "box_indicator":
            return _box_support(s, self.L, self.U, slack)
        if k == "box_support":
            ok = np.all(-s >= self.L - slack) and np.all(-s <= self.U + slack)
            return 0.0 if ok else np.inf
        if k == "nuclear_ball_indicator":
            if self.shape is None:
                return self.r * float(np.abs(np.linalg.eigvalsh(smat(s, self.n))).max())
            return self.r * float(np.linalg.norm(s.reshape(self.shape), 2))
        if k == "quadratic":
            return quadratic_conjugate(self.quadratic_matrix(), self.k, s)
        return float(sum(p.conjugate(x, tol) for p, x in zip(self.parts, self._split(s))))


def _box_support(s, L, U, tol=0.0) -> float:
    """``sup_{L <= w <= U} <s, w>``."""
    total = 0.0
    pos, neg = s > tol, s < -tol
    if np.any(np.isinf(U[pos])) or np.any(np.isinf(L[neg])):
        return np.inf
    total += float(s[pos] @ U[pos]) + float(s[neg] @ L[neg])
    # near-zero slopes contribute their finite part only
    small = ~(pos | neg)
    if np.any(small):
        ss = s[small]
        hi = ss * np.where(np.isfinite(U[small]), U[small], 0.0)
        lo = ss * np.where(np.isfinite(L[small]), L[small], 0.0)
        total += float(np.maximum(hi, lo).sum())
    return total


def quadratic_conjugate(D, k, s, tol: float = CONJ_TOL) -> float:
    """Conjugate of ``1/2 <u, D u> - <k, u>`` at ``s``.

    Equals ``1/2 <s + k, D^+ (s + k)>`` when ``s + k`` lies in the range of
    ``D`` (relative residual below ``tol``) and ``+inf`` otherwise.
    """
    D = np.atleast_2d(np.asarray(D, dtype=float))
    r = np.asarray(s, dtype=float) + np.asarray(k, dtype=float)
    if r.size == 0:
        return 0.0
    w, *_ = np.linalg.lstsq(D, r, rcond=None)
    resid = np.linalg.norm(D @ w - r)
    if resid > tol * (1.0 + np.linalg.norm(r)):
        return np.inf
    return float(0.5 * r @ w)


def separable(parts: Sequence[ProxFriendlyFunction]) -> ProxFriendlyFunction:
    """Sum of functions acting on consecutive pieces of one vector."""
    parts = list(parts)
    return ProxFriendlyFunction("separable", sum(p.dim for p in parts), parts=parts)
