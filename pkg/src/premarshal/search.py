"""Branch and price over increasing horizons.

For ``T = lower bound, lower bound + 1, ...`` a fresh tree is searched.
Each node fixes, for some ``(stack, time)`` pairs, whether the stack gains a
container, loses one, or is left alone. Nodes whose LP value exceeds ``T``
are pruned; the first integral LP solution found is optimal.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .master import ColumnPool, TimeUp, clean_pool, solve_node_lp
from .model import (
    Instance,
    Move,
    PremarshalError,
    Solution,
    is_target,
    lower_bound,
    replay,
)
from .pricing import Action

log = logging.getLogger(__name__)

INT_TOL = 1e-6
PRUNE_TOL = 1e-6
DEFAULT_TIME_LIMIT = 3600.0


class InfeasibleInstance(PremarshalError):
    pass


class NoFractionalChoice(PremarshalError):
    pass


class DecodeError(PremarshalError):
    pass


@dataclass
class RunStats:
    trees_solved: int = 0
    trees_killed: int = 0
    trees_actually_solved: int = 0
    nodes_solved: int = 0
    max_nodes_in_memory: int = 0
    sequences_generated: int = 0
    max_sequences_in_memory: int = 0
    max_lp_columns: int = 0
    lp_time: float = 0.0
    pricing_time: float = 0.0
    clear_time: float = 0.0
    total_time: float = 0.0
    root_lp_of_success: float = float("nan")
    integrality_gap: float = float("nan")
    horizon: int = 0
    cleanups: list = field(default_factory=list)


@dataclass
class TimedOut:
    stats: RunStats
    horizon: int

    @property
    def cost(self):
        return None


@dataclass
class SearchNode:
    fixings: dict
    depth: int
    t_hat: int
    creation_index: int

    def __lt__(self, other: "SearchNode") -> bool:
        # heapq pops the smallest, so "smaller" means "explore first"
        return (self.t_hat, self.creation_index) > (other.t_hat, other.creation_index)


def first_open_time(fixings: Mapping, T: int, m: int) -> int:
    """Smallest t at which some stack has no fixed action (``T + 1`` if none)."""
    for t in range(1, T + 1):
        if any((s, t) not in fixings for s in range(m)):
            return t
    return T + 1


def expand(node: SearchNode, branch_point, T: int, m: int, counter) -> list[SearchNode]:
    s, t = branch_point
    if (s, t) in node.fixings:
        raise ValueError(f"{branch_point} is already fixed")
    children = []
    for act in (Action.ADD, Action.REMOVE, Action.NOTHING):
        fix = dict(node.fixings)
        fix[(s, t)] = act
        children.append(SearchNode(fix, node.depth + 1, first_open_time(fix, T, m),
                                   next(counter)))
    return children


def select_next_node(open_nodes: list[SearchNode]) -> SearchNode:
    """Largest t_hat first, most recently created among ties."""
    return max(open_nodes, key=lambda n: (n.t_hat, n.creation_index))


def is_integral(primal: np.ndarray, tol: float = INT_TOL) -> bool:
    return bool(np.all((np.abs(primal) <= tol) | (np.abs(primal - 1) <= tol)))


def select_branching(node: SearchNode, primal, columns, T: int, m: int):
    """``(stack, t_hat)`` with the most fractional move mass at ``t_hat``."""
    if is_integral(np.asarray(primal)):
        raise NoFractionalChoice("LP solution is integral")
    t_hat = first_open_time(node.fixings, T, m)
    if t_hat > T:
        raise NoFractionalChoice("every (stack, time) pair is already fixed")
    mass = np.zeros(m)
    for col, v in zip(columns, primal):
        if v > 0 and not col.dummy:
            mass[col.stack] += v * col.moves_at(t_hat)
    best = None
    for s in range(m):
        if (s, t_hat) in node.fixings:
            continue
        if best is None or mass[s] > mass[best]:
            best = s
    return best, t_hat


def decode(columns, primal, instance: Instance, T: int) -> list[Move]:
    """Merge the selected per-stack sequences into one timed move list."""
    chosen = [c for c, v in zip(columns, primal) if v > 0.5]
    if any(c.dummy for c in chosen):
        raise DecodeError("a dummy sequence is selected")
    moves = []
    for t in range(1, T + 1):
        adds = [(l, c.stack) for c in chosen for l, tt in c.adds if tt == t]
        rems = [(l, c.stack) for c in chosen for l, tt in c.removes if tt == t]
        if not adds and not rems:
            continue
        if len(adds) != 1 or len(rems) != 1 or adds[0][0] != rems[0][0]:
            raise DecodeError(f"unpaired events at t={t}: adds={adds} removes={rems}")
        moves.append(Move(rems[0][1], adds[0][1], t, adds[0][0]))
    return moves


def simulate_fixed_leaf(fixings: Mapping, instance: Instance, T: int) -> Optional[list[Move]]:
    """Replay a node in which every (stack, time) action is fixed.

    The fixings then determine every move: at each time one stack gives up
    its top container and one stack receives it. Returns the moves if that
    replay is legal and ends in a target lay-out, else ``None``.
    """
    m = instance.num_stacks
    layout = [list(s) for s in instance.stacks]
    moves = []
    for t in range(1, T + 1):
        rems = [s for s in range(m) if fixings.get((s, t)) is Action.REMOVE]
        adds = [s for s in range(m) if fixings.get((s, t)) is Action.ADD]
        if not rems and not adds:
            continue
        if len(rems) != 1 or len(adds) != 1:
            return None
        src, dst = rems[0], adds[0]
        if not layout[src] or len(layout[dst]) >= instance.max_height:
            return None
        label = layout[src].pop()
        layout[dst].append(label)
        moves.append(Move(src, dst, t, label))
    if not is_target(tuple(tuple(s) for s in layout), instance):
        return None
    return moves


class BranchAndPrice:
    """Exact premarshalling solver.

    Parameters mirror the knobs of the method: the wall-clock limit, the
    horizon increment (values above one may return suboptimal solutions),
    and how many solved nodes pass between pool cleanups.

    ``lp_callback(problem, result, columns)`` sees every master LP;
    ``cleanup_callback(nodes_solved, pool_before, pool_after)`` sees every
    pool cleanup. Both exist for instrumentation.
    """

    def __init__(self, time_limit: Optional[float] = DEFAULT_TIME_LIMIT,
                 t_increment: int = 1, cleanup_interval: int = 100,
                 eps: float = 1e-6, lp_callback: Optional[Callable] = None,
                 cleanup_callback: Optional[Callable] = None,
                 max_horizon: Optional[int] = None):
        self.time_limit = time_limit
        self.t_increment = t_increment
        self.cleanup_interval = cleanup_interval
        self.eps = eps
        self.lp_callback = lp_callback
        self.cleanup_callback = cleanup_callback
        self.max_horizon = max_horizon

    def get_params(self) -> dict:
        return {k: getattr(self, k) for k in (
            "time_limit", "t_increment", "cleanup_interval", "eps",
            "lp_callback", "cleanup_callback", "max_horizon")}

    def solve(self, instance: Instance) -> Union[Solution, TimedOut]:
        stats = RunStats()
        start = time.perf_counter()
        deadline = None if self.time_limit is None else start + self.time_limit
        m = instance.num_stacks
        if not is_target(instance.stacks, instance):
            full = instance.n >= m * instance.max_height
            if m < 2 or full:
                raise InfeasibleInstance("no move is possible and the lay-out is not a target")
        pool = ColumnPool(m)
        T = lower_bound(instance.stacks, instance)
        try:
            while True:
                if self.max_horizon is not None and T > self.max_horizon:
                    raise InfeasibleInstance(f"no solution within horizon {self.max_horizon}")
                stats.horizon = T
                found = self._tree(instance, T, pool, stats, deadline)
                if found is not None:
                    stats.total_time = time.perf_counter() - start
                    found.stats = stats
                    return found
                T += self.t_increment
        except TimeUp:
            stats.total_time = time.perf_counter() - start
            return TimedOut(stats, T)

    def _tree(self, instance: Instance, T: int, pool: ColumnPool, stats: RunStats,
              deadline) -> Optional[Solution]:
        m = instance.num_stacks
        counter = itertools.count()
        root = SearchNode({}, 0, first_open_time({}, T, m), next(counter))
        heap = [root]
        stats.trees_solved += 1
        is_root = True
        root_lp = float("nan")
        while heap:
            if deadline is not None and time.perf_counter() > deadline:
                raise TimeUp()
            node = heapq.heappop(heap)
            res = solve_node_lp(pool, node.fixings, T, instance, stats,
                                self.lp_callback, deadline, self.eps)
            stats.nodes_solved += 1
            if self.cleanup_interval and stats.nodes_solved % self.cleanup_interval == 0:
                before = list(pool.columns)
                removed = clean_pool(pool)
                stats.cleanups.append((stats.nodes_solved, removed))
                if self.cleanup_callback is not None:
                    self.cleanup_callback(stats.nodes_solved, before, list(pool.columns))
            if is_root:
                is_root = False
                root_lp = res.lp_value
                if root_lp > T + PRUNE_TOL:
                    stats.trees_killed += 1
                    log.debug("T=%d killed, root LP %.4f", T, root_lp)
                    return None
                stats.trees_actually_solved += 1
            log.debug("T=%d node depth=%d t_hat=%d lp=%.4f", T, node.depth,
                      node.t_hat, res.lp_value)
            if res.lp_value > T + PRUNE_TOL:
                continue
            moves = None
            if is_integral(res.primal):
                moves = decode(res.columns, res.primal, instance, T)
            elif first_open_time(node.fixings, T, m) > T:
                # nothing left to branch on; the fixings alone decide the leaf
                moves = simulate_fixed_leaf(node.fixings, instance, T)
                if moves is None:
                    continue
            if moves is not None:
                return self._finish(instance, moves, T, root_lp, stats)
            branch = select_branching(node, res.primal, res.columns, T, m)
            log.debug("branch on stack %d time %d", *branch)
            for child in expand(node, branch, T, m, counter):
                heapq.heappush(heap, child)
            stats.max_nodes_in_memory = max(stats.max_nodes_in_memory, len(heap))
        return None

    def _finish(self, instance, moves, T, root_lp, stats) -> Solution:
        final = replay(instance, moves)
        if not is_target(final, instance):
            raise DecodeError("decoded moves do not reach a target lay-out")
        if self.t_increment == 1 and len(moves) != T:
            raise DecodeError(f"solution cost {len(moves)} differs from horizon {T}")
        stats.root_lp_of_success = root_lp
        cost = len(moves)
        if cost == 0:
            stats.integrality_gap = 1.0
        else:
            stats.integrality_gap = cost / root_lp if root_lp > 1e-9 else float("inf")
        return Solution(moves, T, root_lp)


def premarshal(instance: Instance, time_limit: Optional[float] = DEFAULT_TIME_LIMIT,
               **kwargs) -> Union[Solution, TimedOut]:
    return BranchAndPrice(time_limit=time_limit, **kwargs).solve(instance)
