"""Acceptance criteria 1-11.

Each test records one pass/fail line, printed in the terminal summary.
Criteria 1, 3, 4 and 5 share one instrumented sweep over 100 random
instances, which is run once per session.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from helpers import ACCEPTANCE, small_instances
from premarshal.generator import cells, generate_suite
from premarshal.lp import certify
from premarshal.model import Instance, Mode, derive_target, is_target, lower_bound, mis_overlay, replay
from premarshal.oracle import best_sequence_value, solve_exact
from premarshal.pricing import Action, DualPrices, best_column, sequence_value
from premarshal.search import BranchAndPrice

pytestmark = pytest.mark.slow


def record(num, ok, detail):
    ACCEPTANCE[num] = (bool(ok), detail)
    assert ok, f"criterion {num}: {detail}"


def solution_violations(inst, sol):
    """Criterion 5 checks for one returned solution."""
    bad = []
    final = replay(inst, sol.moves)
    if not is_target(final, inst):
        bad.append("not a target")
    if sol.cost != sol.horizon:
        bad.append(f"cost {sol.cost} != horizon {sol.horizon}")
    return bad


@pytest.fixture(scope="session")
def sweep():
    """Solve the criterion-1 instances with every master LP certified."""
    insts = small_instances(100)
    lp_stats = {"count": 0, "violations": 0, "worst_gap": 0.0}

    def on_lp(problem, result, columns):
        lp_stats["count"] += 1
        cert = certify(problem, result)
        obj = result.objective_value
        # dual signs: >= rows at least -1e-9, <= rows at most 1e-9
        if not (cert.duality_gap <= 1e-6 * (1 + abs(obj))
                and cert.dual_sign_violation <= 1e-9):
            lp_stats["violations"] += 1
        lp_stats["worst_gap"] = max(lp_stats["worst_gap"], cert.duality_gap / (1 + abs(obj)))

    runs = []
    t0 = time.perf_counter()
    for inst in insts:
        sol = BranchAndPrice(time_limit=600, lp_callback=on_lp).solve(inst)
        runs.append((inst, sol))
    bp_time = time.perf_counter() - t0
    exact = [solve_exact(inst).cost for inst in insts]
    return {"runs": runs, "exact": exact, "bp_time": bp_time, "lp": lp_stats}


def test_criterion_1_optimality(sweep):
    runs, exact = sweep["runs"], sweep["exact"]
    match = sum(sol.cost == e for (_, sol), e in zip(runs, exact))
    t = sweep["bp_time"]
    record(1, match == len(runs) == 100 and t < 300,
           f"{match}/{len(runs)} optimal costs match the oracle; solver time {t:.1f}s (< 300s)")


def test_criterion_2_pricing_oracle():
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    mism = cases = 0
    while cases < 1000:
        h = int(rng.integers(1, 4))
        k = int(rng.integers(1, 4))
        m = int(rng.integers(2, 4))
        T = int(rng.integers(1, 6))
        stacks = [[int(x) for x in rng.integers(1, k + 1, size=rng.integers(0, h + 1))]
                  for _ in range(m)]
        if not any(stacks):
            stacks[0] = [1]
        inst = Instance(m, h, stacks, num_priorities=k)
        if cases % 4 == 3:
            inst = Instance(m, h, stacks, Mode.CONFIGURATION, derive_target(inst), k)
        duals = DualPrices(rng.random((k, T)) * rng.integers(0, 4),
                           rng.random(T) * rng.integers(0, 3), rng.normal(size=m))
        fix = {}
        if cases % 2:
            for _ in range(int(rng.integers(1, 3))):
                fix[(int(rng.integers(m)), int(rng.integers(1, T + 1)))] = \
                    list(Action)[int(rng.integers(3))]
        s = int(rng.integers(m))
        col = best_column(s, inst, duals, fix)
        ref = best_sequence_value(s, inst, duals, fix)
        cases += 1
        if (col is None) != (ref is None):
            mism += 1
        elif col is not None and abs(sequence_value(col.adds, col.removes, duals) - ref) > 1e-9:
            mism += 1
    t = time.perf_counter() - t0
    record(2, mism == 0 and t < 60,
           f"{mism} mismatches in {cases} dual vectors; {t:.1f}s (< 60s)")


def test_criterion_3_lower_bound(sweep):
    bad = sum(lower_bound(inst.stacks, inst) > e
              for (inst, _), e in zip(sweep["runs"], sweep["exact"]))
    record(3, bad == 0, f"{bad} lower-bound violations over {len(sweep['runs'])} instances")


def test_criterion_4_lp_kernel(sweep):
    lp = sweep["lp"]
    record(4, lp["violations"] == 0 and lp["count"] > 0,
           f"{lp['violations']} violations over {lp['count']} master LPs; "
           f"worst relative gap {lp['worst_gap']:.2e}")


@pytest.fixture(scope="session")
def cell_runs():
    suite = generate_suite(seed=1, per_cell=20)
    names = sorted(n for n in suite
                   if n.startswith(("p2_s3_h4_f50_", "p3_s3_h4_f50_")))
    runs = []
    for name in names:
        t0 = time.perf_counter()
        sol = BranchAndPrice(time_limit=60).solve(suite[name])
        runs.append((name, suite[name], sol, time.perf_counter() - t0))
    return runs


def test_criterion_5_validity(sweep, cell_runs):
    pairs = [(i, s) for i, s in sweep["runs"]] + [(i, s) for _, i, s, _ in cell_runs]
    bad = [v for inst, sol in pairs if sol.cost is not None
           for v in solution_violations(inst, sol)]
    record(5, not bad, f"{len(bad)} violations across {len(pairs)} solutions")


def test_criterion_6_cleanup():
    inst = Instance(3, 4, [[3, 6, 4], [2], [1, 5]], num_priorities=6)
    used_since = set()
    events = []
    mismatches = []

    def on_lp(problem, result, columns):
        for col, v in zip(columns, result.primal):
            if not col.dummy and v > 1e-9:
                used_since.add(col.key)

    def on_cleanup(nodes_solved, before, after):
        expected = [c.key for c in before if c.key in used_since]
        if [c.key for c in after] != expected:
            mismatches.append(nodes_solved)
        events.append((nodes_solved, len(before) - len(after)))
        used_since.clear()

    sol = BranchAndPrice(time_limit=600, lp_callback=on_lp,
                         cleanup_callback=on_cleanup).solve(inst)
    total = sol.stats.nodes_solved
    at = [n for n, _ in events]
    expected_at = list(range(100, total + 1, 100))
    ok = at == expected_at and not mismatches and total >= 200 and \
        [e for e in events] == sol.stats.cleanups
    record(6, ok, f"{len(events)} cleanups at {at} over {total} nodes; "
                  f"{len(mismatches)} with a wrong kept set")


def test_criterion_7_suite_shape(tmp_path):
    suite = generate_suite(seed=1, per_cell=20)
    out = tmp_path / "suite"
    proc = subprocess.run([sys.executable, "-m", "premarshal", "gen", "--out", str(out),
                           "--per-cell", "20"], capture_output=True, text=True)
    files = [p for p in out.glob("*.json") if p.name != "manifest.json"]
    n_cells = len({n.rsplit("_i", 1)[0] for n in suite})
    ok = (len(suite) == 960 and len(files) == 960 and n_cells == 48
          and len(cells()) * 3 == 48 and proc.returncode == 0
          and (out / "manifest.json").exists())
    record(7, ok, f"{len(files)} files from gen, {len(suite)} instances in {n_cells} cells")


def test_criterion_8_misoverlay():
    t0 = time.perf_counter()
    suite = generate_suite(seed=1, per_cell=20)
    mean = float(np.mean([mis_overlay(i.stacks) for i in suite.values()]))
    t = time.perf_counter() - t0
    record(8, 33 <= mean <= 44 and t < 60, f"mean mis-overlay {mean:.2f}% in [33, 44]; {t:.1f}s")


def test_criterion_9_cell_sweep(cell_runs):
    solved = [(n, t) for n, _, s, t in cell_runs if s.cost is not None and t <= 60]
    worst = max(t for *_, t in cell_runs)
    record(9, len(cell_runs) == 40 and len(solved) == 40,
           f"{len(solved)}/{len(cell_runs)} solved within 60s; slowest {worst:.1f}s")


def test_criterion_10_integrality_gap(cell_runs):
    gaps = [s.stats.integrality_gap for *_, s, _ in cell_runs if s.cost is not None]
    mean = float(np.mean(gaps)) if gaps else math.nan
    ok = bool(gaps) and 1.0 <= mean <= 1.4 and min(gaps) >= 1.0
    record(10, ok, f"mean gap {mean:.3f} in [1.00, 1.40]; min {min(gaps, default=math.nan):.3f}")


def test_criterion_11_moves_per_container(cell_runs):
    ratios = [s.cost / i.n for _, i, s, _ in cell_runs if s.cost is not None]
    mean = float(np.mean(ratios)) if ratios else math.nan
    record(11, 0.2 <= mean <= 0.9, f"mean moves per container {mean:.3f} in [0.2, 0.9]")
