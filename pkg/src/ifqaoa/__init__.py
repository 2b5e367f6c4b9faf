"""Penalty-free inequality-constrained QAOA: fast diagonal simulation and benchmarks."""

from .diagonals import DiagonalTables, Method, build_tables
from .engine import QaoaParams, QaoaState, VanishingSuccessError, evolve, expectation
from .instances import (
    ConstrainedProblem,
    KnapsackInstance,
    Kind,
    generate_real,
    load_dataset,
    save_dataset,
    to_integer,
    to_problem,
)
from .metrics import RunRecord
from .optimize import DepthSchedule, optimize_sequential

__version__ = "0.1.0"

__all__ = [
    "ConstrainedProblem",
    "DepthSchedule",
    "DiagonalTables",
    "Kind",
    "KnapsackInstance",
    "Method",
    "QaoaParams",
    "QaoaState",
    "RunRecord",
    "VanishingSuccessError",
    "build_tables",
    "evolve",
    "expectation",
    "generate_real",
    "load_dataset",
    "optimize_sequential",
    "save_dataset",
    "to_integer",
    "to_problem",
]
