"""Restricted master problem and the column pool.

Rows, in order:

* balance ``(l, t)``: containers of priority ``l`` added at ``t`` minus
  those removed at ``t`` is nonnegative;
* one move ``t``: at most one container added at ``t``;
* convexity ``s``: exactly one sequence per stack.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Optional

import numpy as np
import scipy.sparse as sp

from .lp import LpProblem, LpResult, lp_solve
from .model import Instance
from .pricing import DualPrices, PricedColumn, column_respects, price_stack

USED_TOL = 1e-9


class TimeUp(Exception):
    """Internal signal that the wall-clock budget ran out."""


class ColumnPool:
    """Generated sequences per stack plus one never-deleted dummy per stack."""

    def __init__(self, num_stacks: int):
        self.dummies = [PricedColumn(s, dummy=True) for s in range(num_stacks)]
        self.columns: list[PricedColumn] = []
        self.used: dict = {}
        self._keys: set = set()
        self.generated = 0

    def __len__(self) -> int:
        return len(self.columns)

    def __contains__(self, column: PricedColumn) -> bool:
        return column.key in self._keys

    def add(self, column: PricedColumn) -> bool:
        if column.dummy or column.key in self._keys:
            return False
        self.columns.append(column)
        self._keys.add(column.key)
        self.used[column.key] = False
        self.generated += 1
        return True

    def mark_used(self, columns, values) -> None:
        for col, v in zip(columns, values):
            if not col.dummy and v > USED_TOL:
                self.used[col.key] = True

    def candidates(self, fixings: Optional[Mapping], T: int) -> list[PricedColumn]:
        out = list(self.dummies)
        for col in self.columns:
            if col.last_time <= T and column_respects(col, fixings):
                out.append(col)
        return out


def clean_pool(pool: ColumnPool) -> int:
    """Drop every non-dummy column not used by any LP since the last cleanup."""
    keep = [c for c in pool.columns if pool.used.get(c.key)]
    removed = len(pool.columns) - len(keep)
    pool.columns = keep
    pool._keys = {c.key for c in keep}
    pool.used = {c.key: False for c in keep}
    return removed


def dummy_cost(T: int) -> float:
    return float(T + 1)


def column_cost(col: PricedColumn, T: int) -> float:
    return dummy_cost(T) if col.dummy else float(col.true_cost)


@lru_cache(maxsize=1 << 16)
def _entries(col: PricedColumn, T: int, k: int):
    """Row indices and coefficients of one column."""
    rows, vals = [], []
    for l, t in col.adds:
        rows += [(l - 1) * T + t - 1, k * T + t - 1]
        vals += [1.0, 1.0]
    for l, t in col.removes:
        rows.append((l - 1) * T + t - 1)
        vals.append(-1.0)
    rows.append(k * T + T + col.stack)
    vals.append(1.0)
    return np.array(rows, dtype=np.int64), np.array(vals)


def _assemble(cols, T: int, instance: Instance) -> LpProblem:
    k, m = instance.k, instance.num_stacks
    parts = [_entries(col, T, k) for col in cols]
    rows = np.concatenate([r for r, _ in parts])
    vals = np.concatenate([v for _, v in parts])
    indptr = np.zeros(len(cols) + 1, dtype=np.int64)
    np.cumsum([len(r) for r, _ in parts], out=indptr[1:])
    n_rows = k * T + T + m
    A = sp.csc_matrix((vals, rows, indptr), shape=(n_rows, len(cols))).tocsr()
    senses = [">="] * (k * T) + ["<="] * T + ["="] * m
    rhs = np.concatenate([np.zeros(k * T), np.ones(T), np.ones(m)])
    tags = ([("balance", l, t) for l in range(1, k + 1) for t in range(1, T + 1)]
            + [("one_move", t) for t in range(1, T + 1)]
            + [("convexity", s) for s in range(m)])
    c = np.array([column_cost(col, T) for col in cols])
    return LpProblem(c, A, senses, rhs, tags)


def build_master(pool: ColumnPool, fixings: Optional[Mapping], T: int,
                 instance: Instance):
    """The master LP over the pool's fixings-compatible columns.

    Returns the problem and the column behind each LP variable.
    """
    cols = pool.candidates(fixings, T)
    return _assemble(cols, T, instance), cols


def extract_duals(result: LpResult, instance: Instance, T: int) -> DualPrices:
    k = instance.k
    y = result.duals
    alpha = np.maximum(y[: k * T], 0.0).reshape(k, T)
    beta = np.maximum(-y[k * T: k * T + T], 0.0)
    gamma = y[k * T + T:].copy()
    return DualPrices(alpha, beta, gamma)


@dataclass
class NodeLP:
    lp_value: float
    columns: list
    primal: np.ndarray
    duals: DualPrices
    generated: int = 0
    iterations: int = 0
    stats: dict = field(default_factory=dict)


def solve_node_lp(pool: ColumnPool, fixings: Optional[Mapping], T: int,
                  instance: Instance, stats=None,
                  lp_callback: Optional[Callable] = None,
                  deadline: Optional[float] = None, eps: float = 1e-6) -> NodeLP:
    """Column generation at one node until no stack prices out."""
    generated = 0
    rounds = 0
    t0 = time.perf_counter()
    cols = pool.candidates(fixings, T)
    while True:
        rounds += 1
        problem = _assemble(cols, T, instance)
        t1 = time.perf_counter()
        result = lp_solve(problem)
        t2 = time.perf_counter()
        if lp_callback is not None:
            lp_callback(problem, result, cols)
        pool.mark_used(cols, result.primal)
        duals = extract_duals(result, instance, T)
        new = []
        for s in range(instance.num_stacks):
            col = price_stack(s, instance, duals, fixings, eps)
            if col is not None and col not in pool:
                new.append(col)
        t3 = time.perf_counter()
        if stats is not None:
            stats.clear_time += t1 - t0
            stats.lp_time += t2 - t1
            stats.pricing_time += t3 - t2
            stats.max_lp_columns = max(stats.max_lp_columns, len(cols))
        for col in new:
            pool.add(col)
        cols.extend(new)
        generated += len(new)
        if stats is not None:
            stats.sequences_generated += len(new)
            stats.max_sequences_in_memory = max(stats.max_sequences_in_memory, len(pool))
        if not new:
            return NodeLP(result.objective_value, cols, result.primal, duals,
                          generated, rounds)
        if deadline is not None and time.perf_counter() > deadline:
            raise TimeUp()
        t0 = time.perf_counter()
