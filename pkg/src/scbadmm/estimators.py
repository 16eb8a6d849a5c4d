"""Estimator-style wrappers with scikit-learn parameter handling."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ._loop import SolverConfig
from .baseline import direct_admm_solve
from .instances import NcmInstance
from .linops import smat
from .model import BlockProblem
from .scb import scb_spadmm_solve

__all__ = ["SCBSPADMM", "DirectADMM", "NearestCorrelationMatrix"]

_SOLVERS = {"scb": scb_spadmm_solve, "direct_admm": direct_admm_solve}


class _BlockSolver(BaseEstimator):
    _solver = "scb"

    def __init__(self, sigma=1.0, tau=None, tol=1e-6, max_iter=25000, log_every=100,
                 stagnation_window=1000):
        self.sigma = sigma
        self.tau = tau
        self.tol = tol
        self.max_iter = max_iter
        self.log_every = log_every
        self.stagnation_window = stagnation_window

    def _config(self) -> SolverConfig:
        return SolverConfig(
            sigma=self.sigma, tau=self.tau, tol=self.tol, max_iter=self.max_iter,
            log_every=self.log_every, stagnation_window=self.stagnation_window,
        )

    def fit(self, problem: BlockProblem, y=None):
        """Solve ``problem``.

        Sets ``result_``, ``state_``, ``n_iter_``, ``status_`` and ``eta_``.
        """
        if not isinstance(problem, BlockProblem):
            raise TypeError("fit expects a BlockProblem")
        res = _SOLVERS[self._solver](problem, self._config())
        self.result_ = res
        self.state_ = res.state
        self.n_iter_ = res.iterations
        self.status_ = res.status
        self.eta_ = res.eta
        return self

    def multiplier(self) -> np.ndarray:
        """Multiplier of the coupling constraint (the primal matrix for QSDP duals)."""
        check_is_fitted(self, "state_")
        return self.state_.x


class SCBSPADMM(_BlockSolver):
    """Schur-complement-based semi-proximal ADMM.

    Parameters
    ----------
    sigma : float, default=1.0
    tau : float, optional
        Dual step length; 1.618 when ``None``.
    tol : float, default=1e-6
    max_iter : int, default=25000
    log_every : int, default=100
    stagnation_window : int, default=1000

    Examples
    --------
    >>> from scbadmm.instances import scalar_qsdp
    >>> est = SCBSPADMM().fit(scalar_qsdp().problem())
    >>> est.status_
    'tolerance_met'
    """

    _solver = "scb"


class DirectADMM(_BlockSolver):
    """Directly extended multi-block ADMM (``tau`` defaults to 1)."""

    _solver = "direct_admm"


class NearestCorrelationMatrix(BaseEstimator):
    """Weighted nearest correlation matrix.

    Finds ``X`` with unit diagonal, ``X`` psd and ``X >= lower`` entrywise,
    closest to ``G`` in the ``H``-weighted Frobenius or spectral norm.

    Parameters
    ----------
    H : array_like or float, default=1.0
        Entrywise nonnegative weights.
    norm : {"frobenius", "spectral"}
    lower : float, default=-0.5
    solver : {"scb", "direct_admm"}
    sigma, tau, tol, max_iter
        Passed to the solver.

    Attributes
    ----------
    correlation_ : ndarray of shape (n, n)
    n_iter_ : int
    status_ : str
    eta_ : float
    """

    def __init__(self, H=1.0, norm="frobenius", lower=-0.5, solver="scb", sigma=1.0,
                 tau=None, tol=1e-6, max_iter=25000):
        self.H = H
        self.norm = norm
        self.lower = lower
        self.solver = solver
        self.sigma = sigma
        self.tau = tau
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, G, y=None):
        G = check_array(G, dtype=float)
        if G.shape[0] != G.shape[1]:
            raise ValueError("G must be square")
        if self.solver not in _SOLVERS:
            raise ValueError(f"solver must be one of {sorted(_SOLVERS)}")
        G = 0.5 * (G + G.T)
        inst = NcmInstance.from_data(G, self.H, self.norm, L=self.lower)
        cfg = SolverConfig(sigma=self.sigma, tau=self.tau, tol=self.tol, max_iter=self.max_iter)
        res = _SOLVERS[self.solver](inst.problem(), cfg)
        n = G.shape[0]
        self.correlation_ = smat(res.state.x[: n * (n + 1) // 2], n)
        self.n_iter_ = res.iterations
        self.status_ = res.status
        self.eta_ = res.eta
        self.result_ = res
        return self

    def fit_transform(self, G, y=None):
        return self.fit(G).correlation_
