"""Schur-complement-based semi-proximal ADMM for multi-block convex programs."""

from ._loop import SolveResult, SolverConfig, SolverError
from .baseline import direct_admm_solve
from .diagnostics import ResidualReport
from .estimators import SCBSPADMM, DirectADMM, NearestCorrelationMatrix
from .instances import (
    NcmInstance,
    QsdpInstance,
    build_biq,
    build_ncm,
    build_random_qsdp,
    random_block_qp,
    scalar_qsdp,
)
from .linops import LinearMap, Majorizer, SelfAdjointPSDOp, build_majorizer
from .model import (
    BlockProblem,
    ConfigurationError,
    IterateState,
    ProxBlock,
    QuadraticBlock,
    reformulate_inequalities,
)
from .prox import ProxFriendlyFunction
from .scb import scb_spadmm_solve
from .solver2 import scb_spalm_solve, spadmm2_solve

__version__ = "0.1.0"

__all__ = [
    "BlockProblem", "ConfigurationError", "DirectADMM", "IterateState", "LinearMap", "Majorizer",
    "NearestCorrelationMatrix", "SCBSPADMM",
    "NcmInstance", "ProxBlock", "ProxFriendlyFunction", "QsdpInstance", "QuadraticBlock",
    "ResidualReport", "SelfAdjointPSDOp", "SolveResult", "SolverConfig", "SolverError",
    "build_biq", "build_majorizer", "build_ncm", "build_random_qsdp", "direct_admm_solve",
    "random_block_qp", "reformulate_inequalities", "scalar_qsdp", "scb_spadmm_solve",
    "scb_spalm_solve", "spadmm2_solve",
]
