"""Exact branch-and-price solver for container premarshalling."""

from .model import (
    Instance,
    Mode,
    Move,
    PremarshalError,
    Solution,
    apply_move,
    derive_target,
    is_target,
    lower_bound,
    read_instance,
    write_instance,
)
from .oracle import solve_exact
from .search import BranchAndPrice, InfeasibleInstance, RunStats, TimedOut, premarshal

__all__ = [
    "BranchAndPrice", "InfeasibleInstance", "Instance", "Mode", "Move", "PremarshalError",
    "RunStats", "Solution", "TimedOut", "apply_move", "derive_target", "is_target",
    "lower_bound", "premarshal", "read_instance", "solve_exact", "write_instance",
]

__version__ = "0.1.0"
