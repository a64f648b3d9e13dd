"""Instances, lay-outs, moves and the combinatorial lower bound.

A lay-out is a tuple of stacks, each a tuple of priorities listed bottom to
top. Priority 1 is needed first, so a stack is sorted when its numbers never
increase going up.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

Stack = tuple[int, ...]
Layout = tuple[Stack, ...]


class Mode(str, Enum):
    PRIORITY = "priority"
    CONFIGURATION = "configuration"


class PremarshalError(Exception):
    """Base class for errors raised by this package."""


class InvalidMove(PremarshalError):
    pass


class EmptySourceStack(InvalidMove):
    pass


class FullTargetStack(InvalidMove):
    pass


class PriorityMismatch(InvalidMove):
    pass


class EmptyInstance(PremarshalError):
    pass


class InstanceFormatError(PremarshalError, ValueError):
    """Raised when an instance file or dict violates the instance invariants."""

    def __init__(self, field: str, message: str, line: Optional[int] = None):
        self.field = field
        self.message = message
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{field}: {message}")


def as_layout(stacks: Iterable[Iterable[int]]) -> Layout:
    return tuple(tuple(int(p) for p in s) for s in stacks)


@dataclass(frozen=True)
class Instance:
    num_stacks: int
    max_height: int
    stacks: Layout
    mode: Mode = Mode.PRIORITY
    target: Optional[Layout] = None
    num_priorities: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "stacks", as_layout(self.stacks))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.target is not None:
            object.__setattr__(self, "target", as_layout(self.target))
        if self.num_priorities is None:
            labels = [p for s in self.stacks for p in s]
            if self.target is not None:
                labels += [p for s in self.target for p in s]
            object.__setattr__(self, "num_priorities", max(labels, default=1))
        validate_instance(self)

    @property
    def k(self) -> int:
        return self.num_priorities

    @property
    def n(self) -> int:
        return sum(len(s) for s in self.stacks)

    def with_target(self, target: Layout) -> "Instance":
        return Instance(
            self.num_stacks,
            self.max_height,
            self.stacks,
            Mode.CONFIGURATION,
            target,
            self.num_priorities,
        )


def validate_instance(inst: Instance) -> None:
    if inst.num_stacks < 1:
        raise InstanceFormatError("num_stacks", "must be a positive integer")
    if inst.max_height < 1:
        raise InstanceFormatError("max_height", "must be a positive integer")
    if inst.num_priorities < 1:
        raise InstanceFormatError("num_priorities", "must be a positive integer")
    _check_stacks("stacks", inst.stacks, inst)
    if inst.mode is Mode.CONFIGURATION:
        if inst.target is None:
            raise InstanceFormatError("target", "required in configuration mode")
        _check_stacks("target", inst.target, inst)
        a = Counter(p for s in inst.stacks for p in s)
        b = Counter(p for s in inst.target for p in s)
        if a != b:
            raise InstanceFormatError(
                "target", "container multiset differs from the initial lay-out"
            )
    elif inst.target is not None:
        raise InstanceFormatError("target", "must be null in priority mode")


def _check_stacks(name: str, stacks: Layout, inst: Instance) -> None:
    if len(stacks) != inst.num_stacks:
        raise InstanceFormatError(
            name, f"has {len(stacks)} stacks, expected {inst.num_stacks}"
        )
    for i, s in enumerate(stacks):
        if len(s) > inst.max_height:
            raise InstanceFormatError(
                f"{name}[{i}]",
                f"height {len(s)} exceeds max_height {inst.max_height}",
            )
        for j, p in enumerate(s):
            if not 1 <= p <= inst.num_priorities:
                raise InstanceFormatError(
                    f"{name}[{i}][{j}]",
                    f"priority {p} outside [1, {inst.num_priorities}]",
                )


@dataclass(frozen=True)
class Move:
    from_stack: int
    to_stack: int
    time: int
    priority: int

    def __post_init__(self):
        if self.from_stack == self.to_stack:
            raise InvalidMove("from_stack and to_stack must differ")


@dataclass
class Solution:
    moves: list[Move]
    horizon: int
    root_lp_value: float
    stats: Optional[object] = field(default=None, repr=False)

    @property
    def cost(self) -> int:
        return len(self.moves)


def apply_move(layout: Layout, move: Move, max_height: Optional[int] = None) -> Layout:
    src = layout[move.from_stack]
    dst = layout[move.to_stack]
    if not src:
        raise EmptySourceStack(f"stack {move.from_stack} is empty")
    if max_height is not None and len(dst) >= max_height:
        raise FullTargetStack(f"stack {move.to_stack} is full")
    if src[-1] != move.priority:
        raise PriorityMismatch(
            f"top of stack {move.from_stack} is {src[-1]}, not {move.priority}"
        )
    out = list(layout)
    out[move.from_stack] = src[:-1]
    out[move.to_stack] = dst + (src[-1],)
    return tuple(out)


def replay(instance: Instance, moves: Sequence[Move]) -> Layout:
    layout = instance.stacks
    for mv in moves:
        layout = apply_move(layout, mv, instance.max_height)
    return layout


def stack_is_sorted(stack: Sequence[int]) -> bool:
    return all(stack[p + 1] <= stack[p] for p in range(len(stack) - 1))


def is_target(layout: Layout, instance: Instance) -> bool:
    if instance.mode is Mode.CONFIGURATION:
        return as_layout(layout) == instance.target
    return all(stack_is_sorted(s) for s in layout)


def stack_wrongly_placed(stack: Sequence[int]) -> int:
    for p in range(1, len(stack)):
        if stack[p] > stack[p - 1]:
            return len(stack) - p
    return 0


def wrongly_placed(layout: Layout) -> list[int]:
    return [stack_wrongly_placed(s) for s in layout]


def stack_mismatch(stack: Sequence[int], target: Sequence[int]) -> int:
    """Containers at or above the lowest position where a stack differs from its target."""
    for p in range(len(stack)):
        if p >= len(target) or stack[p] != target[p]:
            return len(stack) - p
    return 0


def lower_bound(layout: Layout, instance: Optional[Instance] = None) -> int:
    """Admissible bound on the number of moves still needed.

    In priority mode: all wrongly placed containers, plus the fewest wrongly
    placed containers on any single stack. In configuration mode (when an
    instance is given): containers above the first mismatch, summed.
    """
    if instance is not None and instance.mode is Mode.CONFIGURATION:
        return sum(stack_mismatch(s, t) for s, t in zip(layout, instance.target))
    wp = wrongly_placed(layout)
    if not wp:
        return 0
    return sum(wp) + min(wp)


def mis_overlay(layout: Layout) -> float:
    n = sum(len(s) for s in layout)
    if n == 0:
        raise EmptyInstance("lay-out has no containers")
    return 100.0 * sum(wrongly_placed(layout)) / n


def derive_target(instance: Instance) -> Layout:
    """Greedy sorted completion: lowest priority (largest label) first, bottom up."""
    labels = sorted((p for s in instance.stacks for p in s), reverse=True)
    out: list[list[int]] = [[] for _ in range(instance.num_stacks)]
    i = 0
    for p in labels:
        while len(out[i]) >= instance.max_height:
            i += 1
        out[i].append(p)
    return as_layout(out)


# -- file format -------------------------------------------------------------

_KEYS = ("mode", "num_stacks", "max_height", "num_priorities", "stacks", "target")


def instance_to_dict(inst: Instance) -> dict:
    return {
        "mode": inst.mode.value,
        "num_stacks": inst.num_stacks,
        "max_height": inst.max_height,
        "num_priorities": inst.num_priorities,
        "stacks": [list(s) for s in inst.stacks],
        "target": None if inst.target is None else [list(s) for s in inst.target],
    }


def dumps_instance(inst: Instance) -> str:
    d = instance_to_dict(inst)
    return json.dumps(d, separators=(",", ":")) + "\n"


def _find_line(text: str, key: str) -> Optional[int]:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def loads_instance(text: str) -> Instance:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError("json", exc.msg, exc.lineno) from exc
    if not isinstance(d, dict):
        raise InstanceFormatError("json", "top level must be an object", 1)
    for key in _KEYS:
        if key not in d:
            raise InstanceFormatError(key, "missing field")
    try:
        for key in ("num_stacks", "max_height", "num_priorities"):
            if not isinstance(d[key], int) or isinstance(d[key], bool):
                raise InstanceFormatError(key, "must be an integer")
        for key in ("stacks", "target"):
            v = d[key]
            if v is None and key == "target":
                continue
            if not isinstance(v, list) or not all(
                isinstance(s, list) and all(isinstance(p, int) for p in s) for s in v
            ):
                raise InstanceFormatError(key, "must be a list of integer lists")
        if d["mode"] not in ("priority", "configuration"):
            raise InstanceFormatError("mode", f"unknown mode {d['mode']!r}")
        return Instance(
            num_stacks=d["num_stacks"],
            max_height=d["max_height"],
            stacks=d["stacks"],
            mode=Mode(d["mode"]),
            target=d["target"],
            num_priorities=d["num_priorities"],
        )
    except InstanceFormatError as exc:
        if exc.line is None:
            key = exc.field.split("[")[0]
            raise InstanceFormatError(
                exc.field, exc.message, _find_line(text, key)
            ) from None
        raise


def read_instance(path: str | Path) -> Instance:
    return loads_instance(Path(path).read_text(encoding="utf-8"))


def write_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(dumps_instance(inst), encoding="utf-8", newline="\n")
