"""Random instance generation.

Base instances use six priority levels assigned cyclically to the
containers; the two- and three-level instances are derived from them by
grouping labels, so all three share stack shapes. Randomness comes from
numpy's PCG64 seeded through ``SeedSequence((seed, cell_index))``, which is
portable across platforms and independent of how many cells run in parallel.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import Instance, Mode, PremarshalError, wrongly_placed

PRIORITIES = (2, 3, 6)
STACKS = (3, 5, 7, 9)
HEIGHTS = (4, 6)
FILLS = (50, 70)

MAX_RETRIES = 10**6

_GROUPS = {
    2: {1: 1, 2: 1, 3: 1, 4: 2, 5: 2, 6: 2},
    3: {1: 1, 2: 1, 3: 2, 4: 2, 5: 3, 6: 3},
    6: {i: i for i in range(1, 7)},
}


class GenerationError(PremarshalError):
    pass


@dataclass(frozen=True)
class GenConfig:
    stacks: int
    height: int
    fill_percent: int
    priorities: int = 6
    seed: int = 0
    count: int = 1
    free: bool = False

    def __post_init__(self):
        if self.priorities not in _GROUPS:
            raise ValueError(f"priorities must be one of {sorted(_GROUPS)}")
        if not self.free:
            for name, value, allowed in (
                ("stacks", self.stacks, STACKS),
                ("height", self.height, HEIGHTS),
                ("fill_percent", self.fill_percent, FILLS),
            ):
                if value not in allowed:
                    raise ValueError(f"{name}={value} not in {allowed}")
        if self.stacks < 1 or self.height < 1 or not 0 < self.fill_percent <= 100:
            raise ValueError("stacks/height must be positive and fill in (0, 100]")

    @property
    def n(self) -> int:
        # integer arithmetic truncates exactly, avoiding float rounding
        return self.stacks * self.height * self.fill_percent // 100


def cells() -> list[tuple[int, int, int]]:
    """All (stacks, height, fill) combinations in a fixed order."""
    return list(itertools.product(STACKS, HEIGHTS, FILLS))


def cell_rng(seed: int, cell_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, cell_index))))


def generate_base6(config: GenConfig, rng: np.random.Generator) -> Instance:
    n = config.n
    remaining = [i % 6 + 1 for i in range(n)]
    stacks: list[list[int]] = [[] for _ in range(config.stacks)]
    while remaining:
        label = remaining.pop(int(rng.integers(len(remaining))))
        open_stacks = [i for i, s in enumerate(stacks) if len(s) < config.height]
        stacks[open_stacks[int(rng.integers(len(open_stacks)))]].append(label)
    return Instance(config.stacks, config.height, stacks, Mode.PRIORITY, None, 6)


def regroup(instance6: Instance, priorities: int) -> Instance:
    if instance6.num_priorities != 6:
        raise ValueError("regroup expects a six-level instance")
    table = _GROUPS[priorities]
    stacks = [[table[p] for p in s] for s in instance6.stacks]
    return Instance(
        instance6.num_stacks, instance6.max_height, stacks, Mode.PRIORITY, None, priorities
    )


def generate_triples(config: GenConfig, rng: np.random.Generator, count: int):
    """Yield ``count`` accepted {2,3,6}-level triples, discarding any triple
    in which some variant is already sorted."""
    accepted = 0
    tries = 0
    while accepted < count:
        tries += 1
        if tries > MAX_RETRIES:
            raise GenerationError(
                f"no unsorted instance after {MAX_RETRIES} draws for {config}"
            )
        base = generate_base6(config, rng)
        triple = {p: regroup(base, p) for p in PRIORITIES}
        if any(sum(wrongly_placed(inst.stacks)) == 0 for inst in triple.values()):
            continue
        accepted += 1
        yield triple


def generate_cell(seed: int, cell_index: int, per_cell: int, free_cell=None):
    """Accepted triples for one (stacks, height, fill) cell."""
    s, h, f = free_cell if free_cell is not None else cells()[cell_index]
    config = GenConfig(s, h, f, seed=seed, free=free_cell is not None)
    return list(generate_triples(config, cell_rng(seed, cell_index), per_cell))


def instance_name(p: int, s: int, h: int, f: int, index: int) -> str:
    return f"p{p}_s{s}_h{h}_f{f}_i{index}"


def generate_suite(seed: int, per_cell: int = 20) -> dict[str, Instance]:
    """The full benchmark suite keyed by instance name (48 cells x per_cell)."""
    if per_cell < 1:
        raise ValueError("per_cell must be at least 1")
    out: dict[str, Instance] = {}
    for ci, (s, h, f) in enumerate(cells()):
        for idx, triple in enumerate(generate_cell(seed, ci, per_cell)):
            for p in PRIORITIES:
                out[instance_name(p, s, h, f, idx)] = triple[p]
    return out
