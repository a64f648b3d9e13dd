"""Linear programming kernel for the restricted master problem.

Solves ``min c.x`` subject to row constraints and ``x >= 0`` with the HiGHS
dual simplex shipped in scipy, and reports duals in the textbook sign
convention: ``>=`` rows nonnegative, ``<=`` rows nonpositive, ``=`` rows
free, so that ``c - A^T y`` are the reduced costs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .model import PremarshalError


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LpError(PremarshalError):
    def __init__(self, status: LpStatus, message: str = ""):
        self.status = status
        super().__init__(f"LP {status.value}: {message}")


class Infeasible(LpError):
    def __init__(self, message=""):
        super().__init__(LpStatus.INFEASIBLE, message)


class Unbounded(LpError):
    def __init__(self, message=""):
        super().__init__(LpStatus.UNBOUNDED, message)


@dataclass
class LpProblem:
    c: np.ndarray
    A: sp.csr_matrix
    senses: Sequence[str]
    rhs: np.ndarray
    tags: Sequence = ()

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = sp.csr_matrix(self.A, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.senses = list(self.senses)
        if self.A.shape != (len(self.rhs), len(self.c)):
            raise ValueError(f"A has shape {self.A.shape}, expected "
                             f"({len(self.rhs)}, {len(self.c)})")
        if any(s not in (">=", "<=", "=") for s in self.senses):
            raise ValueError("row senses must be '>=', '<=' or '='")
        if len(self.senses) != len(self.rhs):
            raise ValueError("one sense per row required")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A.data))
                and np.all(np.isfinite(self.rhs))):
            raise ValueError("non-finite coefficient")

    @property
    def shape(self):
        return self.A.shape

    def dump(self) -> str:
        """Plain-text listing, one row per line, for cross-checking elsewhere."""
        lines = ["min " + " ".join(f"{v:+g} x{j}" for j, v in enumerate(self.c) if v)]
        A = self.A.tocsr()
        for i in range(A.shape[0]):
            lo, hi = A.indptr[i], A.indptr[i + 1]
            terms = " ".join(f"{A.data[p]:+g} x{A.indices[p]}" for p in range(lo, hi))
            tag = self.tags[i] if i < len(self.tags) else i
            lines.append(f"{tag}: {terms or '0'} {self.senses[i]} {self.rhs[i]:g}")
        lines.append("bounds: x >= 0")
        return "\n".join(lines)


@dataclass
class LpResult:
    status: LpStatus
    primal: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective_value: float = float("nan")
    iterations: int = 0


def lp_solve(problem: LpProblem, warm_start: Optional[object] = None) -> LpResult:
    """Optimal basic solution and duals.

    ``warm_start`` is accepted for interface stability; HiGHS as exposed by
    scipy always starts from its own crash basis.
    """
    senses = np.array(problem.senses)
    A = problem.A
    ge = senses == ">="
    le = senses == "<="
    eq = senses == "="
    ub_rows = np.flatnonzero(ge | le)
    sign = np.where(ge[ub_rows], -1.0, 1.0)
    A_ub = sp.diags(sign) @ A[ub_rows] if len(ub_rows) else None
    b_ub = sign * problem.rhs[ub_rows] if len(ub_rows) else None
    eq_rows = np.flatnonzero(eq)
    A_eq = A[eq_rows] if len(eq_rows) else None
    b_eq = problem.rhs[eq_rows] if len(eq_rows) else None

    res = linprog(problem.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=(0, None), method="highs-ds")
    if res.status == 2:
        raise Infeasible(res.message)
    if res.status == 3:
        raise Unbounded(res.message)
    if res.status != 0:
        raise LpError(LpStatus.INFEASIBLE, res.message)

    y = np.zeros(A.shape[0])
    if len(ub_rows):
        y[ub_rows] = sign * res.ineqlin.marginals
    if len(eq_rows):
        y[eq_rows] = res.eqlin.marginals
    x = np.maximum(res.x, 0.0)
    return LpResult(LpStatus.OPTIMAL, x, y, float(problem.c @ x), int(res.nit))


@dataclass
class Certificate:
    primal_residual: float
    dual_sign_violation: float
    reduced_cost_violation: float
    complementary_slackness: float
    duality_gap: float

    def ok(self, obj: float, primal_tol=1e-7, cs_tol=1e-6, gap_tol=1e-6,
           sign_tol=1e-9) -> bool:
        return (self.primal_residual <= primal_tol
                and self.dual_sign_violation <= sign_tol
                and self.reduced_cost_violation <= cs_tol
                and self.complementary_slackness <= cs_tol
                and self.duality_gap <= gap_tol * (1 + abs(obj)))


def certify(problem: LpProblem, result: LpResult) -> Certificate:
    """Recompute optimality conditions of ``result`` from scratch."""
    x, y = result.primal, result.duals
    senses = np.array(problem.senses)
    act = problem.A @ x
    slack = act - problem.rhs
    viol = np.where(senses == ">=", np.maximum(-slack, 0),
                    np.where(senses == "<=", np.maximum(slack, 0), np.abs(slack)))
    viol = np.append(viol, np.maximum(-x, 0))
    sign_v = np.where(senses == ">=", np.maximum(-y, 0),
                      np.where(senses == "<=", np.maximum(y, 0), 0.0))
    rc = problem.c - problem.A.T @ y
    cs = max(float(np.max(np.abs(rc * x), initial=0.0)),
             float(np.max(np.abs(y * slack), initial=0.0)))
    gap = abs(float(problem.c @ x) - float(problem.rhs @ y))
    return Certificate(float(viol.max(initial=0.0)), float(sign_v.max(initial=0.0)),
                       float(np.maximum(-rc, 0).max(initial=0.0)), cs, gap)
