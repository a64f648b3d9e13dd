"""Instance samplers shared by the unit and acceptance tests."""

import numpy as np

from premarshal.model import Instance
from premarshal.oracle import NoSolutionWithin, solve_bfs

# criterion number -> (passed, detail), filled in by test_acceptance
ACCEPTANCE: dict = {}


def random_layout(rng, m, h, n, k):
    stacks = [[] for _ in range(m)]
    for _ in range(n):
        open_ = [j for j in range(m) if len(stacks[j]) < h]
        stacks[int(rng.choice(open_))].append(int(rng.integers(1, k + 1)))
    return stacks


def solvable(inst, depth=40):
    try:
        solve_bfs(inst, depth)
    except NoSolutionWithin:
        return False
    return True


def small_instances(count, seed=2024):
    """Solvable priority-mode instances with m in {3,4}, h in {3,4},
    k in [2,4] and at most 9 containers."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        m = int(rng.choice([3, 4]))
        h = int(rng.choice([3, 4]))
        k = int(rng.integers(2, 5))
        n = int(rng.integers(3, min(9, m * h - 2) + 1))
        inst = Instance(m, h, random_layout(rng, m, h, n, k), num_priorities=k)
        if solvable(inst):
            out.append(inst)
    return out
