"""Column pricing for one stack.

A move sequence on a single stack is encoded as a set of labeled intervals
on a discrete time line: an interval ``[a, c; l]`` is a container with
priority ``l`` that arrives on the stack at ``a`` and leaves at ``c``.
Time points ``-h+1..0`` hold the initial containers (the container at
height ``i`` starts at ``i - h``), ``1..T`` are the regular move slots and
the points after ``T`` stand for "still there at the end".

Feasible sequences correspond to interval sets that are pairwise nested or
disjoint, never share an end point and never nest deeper than the stack
height. The best such set is found with a dynamic program over
``(left, right, remaining height)``.

Requirements that every column must meet (represent each initial container,
honour the node's forced adds/removes, and, in configuration mode, fill
every target position) are attached to intervals as *units* worth a large
constant ``U``. ``U`` exceeds the spread of all other interval weights, so
the maximiser satisfies as many requirements as possible first; when fewer
than all are met the stack has no feasible column.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterator, Mapping, Optional

import numpy as np

from .model import Instance, Mode, PremarshalError, stack_is_sorted

EPS = 1e-6


class Action(enum.Enum):
    ADD = "add"
    REMOVE = "remove"
    NOTHING = "nothing"


class Kind(enum.IntEnum):
    INITIAL_KEPT = 0
    INITIAL_REMOVED = 1
    PLACED_KEPT = 2
    PLACED_REMOVED = 3


HEAVY_KINDS = (Kind.INITIAL_KEPT, Kind.INITIAL_REMOVED)


class MalformedIntervalSet(PremarshalError):
    pass


@dataclass(frozen=True)
class DualPrices:
    """Duals of the master LP.

    ``alpha[l-1, t-1]`` prices container balance of priority ``l`` at time
    ``t``, ``beta[t-1]`` the one-move-per-time row and ``gamma[s]`` the
    convexity row of stack ``s``. Signs follow the dual LP: alpha and beta
    are nonnegative, gamma is free.
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    @property
    def horizon(self) -> int:
        return int(self.beta.shape[0])

    @classmethod
    def zeros(cls, k: int, T: int, m: int) -> "DualPrices":
        return cls(np.zeros((k, T)), np.zeros(T), np.zeros(m))


@dataclass(frozen=True)
class LabeledInterval:
    start: int
    end: int
    label: int
    kind: Kind
    weight: float
    units: int = 0


@dataclass(frozen=True)
class PricedColumn:
    """One move sequence for one stack; events are ``(priority, time)``."""

    stack: int
    adds: frozenset = frozenset()
    removes: frozenset = frozenset()
    reduced_cost: float = 0.0
    dummy: bool = False

    @property
    def true_cost(self) -> int:
        return len(self.adds)

    @property
    def key(self):
        return (self.stack, self.dummy, tuple(sorted(self.adds)), tuple(sorted(self.removes)))

    @cached_property
    def actions(self) -> dict[int, Action]:
        out = {t: Action.ADD for _, t in self.adds}
        out.update({t: Action.REMOVE for _, t in self.removes})
        return out

    @cached_property
    def last_time(self) -> int:
        return max(self.actions, default=0)

    def action_at(self, t: int) -> Action:
        return self.actions.get(t, Action.NOTHING)

    def moves_at(self, t: int) -> int:
        return sum(1 for _, tt in self.adds if tt == t) + sum(
            1 for _, tt in self.removes if tt == t
        )


@dataclass
class Timeline:
    """Maps time points to array indices and final-slot points to labels."""

    T: int
    h: int
    mode: Mode
    k: int
    target: tuple = ()

    @property
    def extra(self) -> int:
        # Each priority owns a block of h end slots so that several kept
        # containers of one priority still get distinct end points.
        return self.h if self.mode is Mode.CONFIGURATION else self.k * self.h

    @property
    def first(self) -> int:
        return -self.h + 1

    @property
    def last(self) -> int:
        return self.T + self.extra

    @property
    def size(self) -> int:
        return self.last - self.first + 1

    def index(self, point):
        return np.asarray(point) - self.first

    def point(self, index: int) -> int:
        return int(index) + self.first

    def kept_slots(self, label: int) -> list[int]:
        base = self.T + (label - 1) * self.h
        return list(range(base + 1, base + self.h + 1))

    def target_slot(self, height: int) -> int:
        return self.T + self.h - height + 1


class IntervalSet:
    """Columnar storage for the labeled intervals of one stack."""

    def __init__(self, stack, timeline, start, end, label, kind, weight, units,
                 unit, required):
        self.stack = stack
        self.timeline = timeline
        self.start = np.asarray(start, dtype=np.int64)
        self.end = np.asarray(end, dtype=np.int64)
        self.label = np.asarray(label, dtype=np.int64)
        self.kind = np.asarray(kind, dtype=np.int64)
        self.weight = np.asarray(weight, dtype=float)
        self.units = np.asarray(units, dtype=np.int64)
        self.unit = float(unit)
        self.required = int(required)

    def __len__(self) -> int:
        return int(self.start.shape[0])

    def __iter__(self) -> Iterator[LabeledInterval]:
        for i in range(len(self)):
            yield LabeledInterval(
                int(self.start[i]), int(self.end[i]), int(self.label[i]),
                Kind(int(self.kind[i])), float(self.weight[i]), int(self.units[i]),
            )

    def validate(self) -> None:
        tl = self.timeline
        n = len(self)
        for arr in (self.end, self.label, self.kind, self.weight, self.units):
            if arr.shape != (n,):
                raise MalformedIntervalSet("column arrays differ in length")
        if n == 0:
            return
        if np.any(self.end <= self.start):
            raise MalformedIntervalSet("interval with end <= start")
        if self.start.min() < tl.first or self.end.max() > tl.last:
            raise MalformedIntervalSet("interval outside the time line")
        if not np.all(np.isfinite(self.weight)):
            raise MalformedIntervalSet("non-finite interval weight")
        initial = self.start <= 0
        kept = self.end > tl.T
        expect = np.where(
            initial,
            np.where(kept, Kind.INITIAL_KEPT, Kind.INITIAL_REMOVED),
            np.where(kept, Kind.PLACED_KEPT, Kind.PLACED_REMOVED),
        )
        if np.any(expect != self.kind):
            raise MalformedIntervalSet("interval kind inconsistent with its end points")
        if np.any(self.start[~initial] > tl.T):
            raise MalformedIntervalSet("interval starts after the horizon")

    def format(self) -> str:
        """One line per interval: kind, start, end, label, weight, units."""
        lines = [f"# stack {self.stack} T={self.timeline.T} h={self.timeline.h} "
                 f"unit={self.unit:g} required={self.required}"]
        order = np.lexsort((self.label, self.end, self.start))
        for i in order:
            lines.append(
                f"{Kind(int(self.kind[i])).name:<16} {int(self.start[i]):>4} "
                f"{int(self.end[i]):>4} {int(self.label[i]):>3} "
                f"{float(self.weight[i]):>12.6f} {int(self.units[i])}"
            )
        return "\n".join(lines)


def _stack_fixings(fixings: Optional[Mapping], stack: int) -> dict[int, Action]:
    if not fixings:
        return {}
    return {t: a for (s, t), a in fixings.items() if s == stack}


@dataclass(frozen=True)
class _Template:
    """Dual-independent part of a stack's interval set.

    An interval's weight is ``const + units * U + alpha[add] - alpha[rem]
    - beta[arrive]``; index ``-1`` selects a zero pad entry.
    """

    timeline: Timeline
    start: np.ndarray
    end: np.ndarray
    label: np.ndarray
    kind: np.ndarray
    units: np.ndarray
    const: np.ndarray
    add_idx: np.ndarray
    rem_idx: np.ndarray
    beta_idx: np.ndarray
    required: int


@lru_cache(maxsize=512)
def _template(instance: Instance, stack: int, T: int) -> _Template:
    h = instance.max_height
    k = instance.k
    config = instance.mode is Mode.CONFIGURATION
    x = instance.stacks[stack]
    y = instance.target[stack] if config else ()
    tl = Timeline(T, h, instance.mode, k, y)
    parts = []

    def emit(s, e, lab, kind, units, placed, removed):
        s, e, lab = np.broadcast_arrays(np.atleast_1d(s), np.atleast_1d(e),
                                        np.atleast_1d(lab))
        add = (lab - 1) * T + s - 1 if placed else np.full(s.shape, -1)
        rem = (lab - 1) * T + e - 1 if removed else np.full(s.shape, -1)
        arrive = s - 1 if placed else np.full(s.shape, -1)
        parts.append((s, e, lab, np.full(s.shape, int(kind)), np.full(s.shape, units),
                      np.full(s.shape, -1.0 if placed else 0.0), add, rem, arrive))

    times = np.arange(1, T + 1)
    for i, lab in enumerate(x, start=1):
        a = i - h
        if config:
            if i <= len(y) and y[i - 1] == lab:
                emit(a, tl.target_slot(i), lab, Kind.INITIAL_KEPT, 2, False, False)
        else:
            emit(a, np.array(tl.kept_slots(lab)), lab, Kind.INITIAL_KEPT, 1, False, False)
        if T:
            emit(a, times, lab, Kind.INITIAL_REMOVED, 1, False, True)
    if T:
        if config:
            for i, lab in enumerate(y, start=1):
                emit(times, tl.target_slot(i), lab, Kind.PLACED_KEPT, 1, True, False)
        else:
            for lab in range(1, k + 1):
                for slot in tl.kept_slots(lab):
                    emit(times, slot, lab, Kind.PLACED_KEPT, 0, True, False)
        s_idx, t_idx = np.triu_indices(T, 1)
        for lab in range(1, k + 1):
            emit(s_idx + 1, t_idx + 1, lab, Kind.PLACED_REMOVED, 0, True, True)

    if parts:
        cols = [np.concatenate(c) for c in zip(*parts)]
    else:
        cols = [np.zeros(0, dtype=np.int64)] * 9
    start, end, label, kind, units, const, add, rem, arrive = cols
    arrays = [start, end, label, kind, units, add, rem, arrive]
    start, end, label, kind, units, add, rem, arrive = (
        np.asarray(c, dtype=np.int64) for c in arrays)
    for arr in (start, end, label, kind, units, add, rem, arrive, const):
        arr.setflags(write=False)
    required = len(x) + (len(y) if config else 0)
    return _Template(tl, start, end, label, kind, units, np.asarray(const, float),
                     add, rem, arrive, required)


def build_intervals(stack: int, instance: Instance, duals: DualPrices,
                    fixings: Optional[Mapping] = None) -> IntervalSet:
    """All candidate intervals of one stack with their weights.

    ``fixings`` maps ``(stack, time)`` to an :class:`Action`; entries for
    other stacks are ignored.
    """
    T = duals.horizon
    k = instance.k
    tpl = _template(instance, stack, T)
    alpha = np.asarray(duals.alpha, dtype=float).reshape(k * T)
    beta = np.asarray(duals.beta, dtype=float).reshape(T)
    unit = 2.0 * (alpha.sum() + beta.sum()) + T + 1.0
    ap = np.append(alpha, 0.0)
    bp = np.append(beta, 0.0)
    weight = tpl.const + unit * tpl.units + ap[tpl.add_idx] - ap[tpl.rem_idx] - bp[tpl.beta_idx]
    start, end, label, kind, units = tpl.start, tpl.end, tpl.label, tpl.kind, tpl.units
    required = tpl.required

    fix = _stack_fixings(fixings, stack)
    if fix:
        keep = np.ones(start.shape, dtype=bool)
        for t, act in fix.items():
            if not 1 <= t <= T:
                continue
            if act is Action.NOTHING:
                keep &= (start != t) & (end != t)
            else:
                hit = (start == t) if act is Action.ADD else (end == t)
                weight = weight + np.where(hit, unit, 0.0)
                units = units + hit
                required += 1
        start, end, label, kind = start[keep], end[keep], label[keep], kind[keep]
        weight, units = weight[keep], units[keep]

    return IntervalSet(stack, tpl.timeline, start, end, label, kind, weight, units,
                       unit, required)


@dataclass
class DPResult:
    value: float
    selected: list[LabeledInterval]
    table: np.ndarray = field(repr=False)
    choice: np.ndarray = field(repr=False)
    timeline: Timeline = field(repr=False)

    @property
    def units(self) -> int:
        return sum(iv.units for iv in self.selected)

    def format_table(self, j: Optional[int] = None) -> str:
        """Text dump of A[a, b, j]: one row per left point ``a``."""
        tl = self.timeline
        js = range(self.table.shape[2]) if j is None else [j]
        out = []
        for jj in js:
            out.append(f"# j={jj}; columns b={tl.first}..{tl.last}")
            for ai in range(tl.size):
                row = " ".join(f"{v:.4g}" for v in self.table[ai, :, jj])
                out.append(f"a={tl.point(ai):>4}: {row}")
        return "\n".join(out)


def _best_per_pair(intervals: IntervalSet):
    """Best interval for every (start, end) pair; ties go to the smaller label."""
    tl = intervals.timeline
    n = tl.size
    W = np.full((n, n), -np.inf)
    pick = np.full((n, n), -1, dtype=np.int64)
    if len(intervals):
        a = tl.index(intervals.start)
        c = tl.index(intervals.end)
        order = np.lexsort((intervals.label, -intervals.weight, c, a))
        a_o, c_o = a[order], c[order]
        first = np.ones(order.shape, dtype=bool)
        first[1:] = (a_o[1:] != a_o[:-1]) | (c_o[1:] != c_o[:-1])
        sel = order[first]
        W[a[sel], c[sel]] = intervals.weight[sel]
        pick[a[sel], c[sel]] = sel
    return W, pick


def optimize(intervals: IntervalSet, h: int) -> DPResult:
    """Maximum-weight feasible interval set by dynamic programming.

    ``A[a, b, j]`` is the best weight using intervals inside ``[a, b]`` with
    at most ``j`` of them nested at any point. Either no interval starts at
    ``a`` (value ``A[a+1, b, j]``), or some ``[a, c]`` does, leaving
    ``[a+1, c-1]`` one level higher and ``[c+1, b]`` at the same level.
    """
    intervals.validate()
    tl = intervals.timeline
    n = tl.size
    W, pick = _best_per_pair(intervals)
    A = np.zeros((n + 1, n, h + 1))
    choice = np.full((n, n, h + 1), -1, dtype=np.int64)
    cols = np.arange(n)
    has_start = np.isfinite(W).any(axis=1)
    for a in range(n - 1, -1, -1):
        if not has_start[a]:
            A[a] = A[a + 1]
            continue
        cs = np.arange(a + 1, n)
        valid = (cs[:, None] <= cols[None, :])[:, :, None]
        # all heights at once: inner[c, j-1] covers [a+1, c-1] at height j-1
        inner = W[a, a + 1:, None] + A[a + 1, cs - 1, :h]
        cand = np.where(valid, inner[:, None, :] + A[cs + 1, :, 1:], -np.inf)
        best_i = np.argmax(cand, axis=0)
        best = np.take_along_axis(cand, best_i[None], axis=0)[0]
        skip = A[a + 1, :, 1:]
        take = best > skip
        A[a, :, 1:] = np.where(take, best, skip)
        choice[a, :, 1:] = np.where(take, cs[best_i], -1)

    selected = []
    todo = [(0, n - 1, h)]
    while todo:
        a, b, j = todo.pop()
        if b <= a or j == 0:
            continue
        c = choice[a, b, j]
        if c < 0:
            todo.append((a + 1, b, j))
            continue
        i = pick[a, c]
        selected.append(LabeledInterval(
            int(intervals.start[i]), int(intervals.end[i]), int(intervals.label[i]),
            Kind(int(intervals.kind[i])), float(intervals.weight[i]),
            int(intervals.units[i]),
        ))
        todo.append((a + 1, c - 1, j - 1))
        todo.append((c + 1, b, j))
    selected.sort(key=lambda iv: (iv.start, -iv.end))
    return DPResult(float(A[0, n - 1, h]), selected, A, choice, tl)


def sequence_value(adds, removes, duals: DualPrices) -> float:
    """Dual value of a sequence minus its cost, without the stack's gamma."""
    alpha, beta = duals.alpha, duals.beta
    v = -float(len(adds))
    for l, t in adds:
        v += alpha[l - 1, t - 1] - beta[t - 1]
    for l, t in removes:
        v -= alpha[l - 1, t - 1]
    return v


def reduced_cost(column: PricedColumn, duals: DualPrices) -> float:
    return -sequence_value(column.adds, column.removes, duals) - float(
        duals.gamma[column.stack]
    )


def column_from_selection(stack: int, selected, T: int, duals: DualPrices) -> PricedColumn:
    adds = frozenset((iv.label, iv.start) for iv in selected if 1 <= iv.start <= T)
    removes = frozenset((iv.label, iv.end) for iv in selected if 1 <= iv.end <= T)
    col = PricedColumn(stack, adds, removes)
    return PricedColumn(stack, adds, removes, reduced_cost(col, duals))


def best_column(stack: int, instance: Instance, duals: DualPrices,
                fixings: Optional[Mapping] = None) -> Optional[PricedColumn]:
    """Minimum reduced-cost column for the stack, or ``None`` if no
    sequence is compatible with the fixings."""
    intervals = build_intervals(stack, instance, duals, fixings)
    result = optimize(intervals, instance.max_height)
    if result.units < intervals.required:
        return None
    return column_from_selection(stack, result.selected, duals.horizon, duals)


def solve_pricing(stack: int, intervals: IntervalSet, h: int, duals: DualPrices,
                  eps: float = EPS) -> Optional[PricedColumn]:
    """The best column if its reduced cost is below ``-eps``, else ``None``."""
    result = optimize(intervals, h)
    if result.units < intervals.required:
        return None
    col = column_from_selection(stack, result.selected, duals.horizon, duals)
    return col if col.reduced_cost < -eps else None


def price_stack(stack: int, instance: Instance, duals: DualPrices,
                fixings: Optional[Mapping] = None, eps: float = EPS):
    intervals = build_intervals(stack, instance, duals, fixings)
    return solve_pricing(stack, intervals, instance.max_height, duals, eps)


def column_is_feasible(column: PricedColumn, instance: Instance) -> bool:
    """Replay a column's events on its stack and check the end state."""
    if column.dummy:
        return False
    stack = list(instance.stacks[column.stack])
    events: dict[int, tuple[Action, int]] = {}
    for act, items in ((Action.ADD, column.adds), (Action.REMOVE, column.removes)):
        for l, t in items:
            if t < 1 or t in events:
                return False
            events[t] = (act, l)
    for t in sorted(events):
        act, l = events[t]
        if act is Action.ADD:
            if len(stack) >= instance.max_height:
                return False
            stack.append(l)
        else:
            if not stack or stack[-1] != l:
                return False
            stack.pop()
    if instance.mode is Mode.CONFIGURATION:
        return tuple(stack) == instance.target[column.stack]
    return stack_is_sorted(stack)


def column_respects(column: PricedColumn, fixings: Optional[Mapping]) -> bool:
    """Whether a column agrees with every fixing on its own stack."""
    if column.dummy or not fixings:
        return True
    actions = column.actions
    for (s, t), act in fixings.items():
        if s == column.stack and actions.get(t, Action.NOTHING) is not act:
            return False
    return True
