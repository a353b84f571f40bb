from .lpfile import ExportHandle, export_model, read_lp, read_solution, write_lp, write_solution
from .model import EQ, GE, LE, MilpModel
from .solver import (
    INFEASIBLE,
    OPTIMAL,
    TIME_LIMIT,
    MilpResult,
    SolverOptions,
    infeasibility_hint,
    solve_milp,
)

__all__ = [
    "EQ", "GE", "LE", "MilpModel", "MilpResult", "SolverOptions", "solve_milp",
    "export_model", "read_lp", "write_lp", "read_solution", "write_solution", "ExportHandle",
    "infeasibility_hint", "OPTIMAL", "INFEASIBLE", "TIME_LIMIT",
]
