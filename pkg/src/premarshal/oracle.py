"""Brute-force ground truth for small instances.

``solve_exact`` is an iterative-deepening search over single moves, guided
by the admissible lower bound and a transposition table over canonical
lay-outs. ``solve_bfs`` is a plain breadth-first search with none of those
shortcuts, used to cross-check the first. ``enumerate_stack_sequences``
lists every event sequence a single stack can perform, which is the
reference for the pricing dynamic program.
"""

from __future__ import annotations

from collections import deque
from typing import Iterator, Mapping, Optional

from .model import (
    Instance,
    Layout,
    Mode,
    Move,
    PremarshalError,
    Solution,
    apply_move,
    is_target,
    lower_bound,
    stack_is_sorted,
)
from .pricing import Action, DualPrices, sequence_value


class NoSolutionWithin(PremarshalError):
    def __init__(self, max_depth: int):
        self.max_depth = max_depth
        super().__init__(f"no solution with at most {max_depth} moves")


def canonical(layout: Layout, mode: Mode = Mode.PRIORITY) -> Layout:
    if mode is Mode.CONFIGURATION:
        return layout
    return tuple(sorted(layout))


def _moves(layout: Layout, instance: Instance, symmetric: bool):
    seen_empty = False
    order = []
    for d, stack in enumerate(layout):
        if not stack:
            if symmetric and seen_empty:
                continue
            seen_empty = True
        order.append(d)
    for s, src in enumerate(layout):
        if not src:
            continue
        for d in order:
            if d != s and len(layout[d]) < instance.max_height:
                yield s, d, src[-1]


def solve_exact(instance: Instance, max_depth: int = 50) -> Solution:
    """Minimum-move solution by iterative deepening A*."""
    symmetric = instance.mode is Mode.PRIORITY
    start = instance.stacks

    def bound(layout):
        return lower_bound(layout, instance)

    path: list[Move] = []

    def dfs(layout: Layout, g: int, budget: int, seen: dict) -> bool:
        if is_target(layout, instance):
            return True
        remaining = budget - g
        if bound(layout) > remaining:
            return False
        key = canonical(layout, instance.mode)
        if seen.get(key, -1) >= remaining:
            return False
        seen[key] = remaining
        for s, d, p in _moves(layout, instance, symmetric):
            mv = Move(s, d, g + 1, p)
            path.append(mv)
            if dfs(apply_move(layout, mv, instance.max_height), g + 1, budget, seen):
                return True
            path.pop()
        return False

    for budget in range(bound(start), max_depth + 1):
        path.clear()
        if dfs(start, 0, budget, {}):
            return Solution(list(path), budget, float("nan"))
    raise NoSolutionWithin(max_depth)


def solve_bfs(instance: Instance, max_depth: int = 50) -> int:
    """Optimal move count by exhaustive breadth-first search."""
    start = instance.stacks
    if is_target(start, instance):
        return 0
    dist = {start: 0}
    queue = deque([start])
    while queue:
        layout = queue.popleft()
        g = dist[layout]
        if g >= max_depth:
            continue
        for s, d, p in _moves(layout, instance, symmetric=False):
            nxt = apply_move(layout, Move(s, d, g + 1, p), instance.max_height)
            if nxt in dist:
                continue
            if is_target(nxt, instance):
                return g + 1
            dist[nxt] = g + 1
            queue.append(nxt)
    raise NoSolutionWithin(max_depth)


def enumerate_stack_sequences(stack: int, instance: Instance, T: int,
                              fixings: Optional[Mapping] = None
                              ) -> Iterator[tuple[frozenset, frozenset]]:
    """Every feasible (adds, removes) pair for one stack over ``T`` slots."""
    fix = {t: a for (s, t), a in (fixings or {}).items() if s == stack}
    h = instance.max_height
    k = instance.k
    config = instance.mode is Mode.CONFIGURATION
    goal = instance.target[stack] if config else None

    def rec(t, content, adds, removes):
        if t > T:
            ok = tuple(content) == goal if config else stack_is_sorted(content)
            if ok:
                yield frozenset(adds), frozenset(removes)
            return
        act = fix.get(t)
        if act in (None, Action.NOTHING):
            yield from rec(t + 1, content, adds, removes)
        if act in (None, Action.REMOVE) and content:
            top = content[-1]
            yield from rec(t + 1, content[:-1], adds, removes + [(top, t)])
        if act in (None, Action.ADD) and len(content) < h:
            for lab in range(1, k + 1):
                yield from rec(t + 1, content + [lab], adds + [(lab, t)], removes)

    yield from rec(1, list(instance.stacks[stack]), [], [])


def best_sequence_value(stack: int, instance: Instance, duals: DualPrices,
                        fixings: Optional[Mapping] = None) -> Optional[float]:
    """Largest ``dual value - cost`` over all feasible sequences (no gamma)."""
    best = None
    for adds, removes in enumerate_stack_sequences(stack, instance, duals.horizon, fixings):
        v = sequence_value(adds, removes, duals)
        if best is None or v > best:
            best = v
    return best
