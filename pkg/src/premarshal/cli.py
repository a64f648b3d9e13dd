"""Command line: ``premarshal gen | solve | bench | oracle``.

Exit codes of ``solve``: 0 solved, 2 time limit reached, 1 error.
The default generator seed is 1; the ``PREMARSHAL_SEED`` environment
variable overrides it, and ``--seed`` overrides both.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import generator as gen
from .model import (
    Instance,
    Mode,
    PremarshalError,
    derive_target,
    read_instance,
    write_instance,
)
from .oracle import NoSolutionWithin, solve_bfs, solve_exact
from .report import (
    ReportRow,
    aggregates_to_csv,
    append_row,
    make_row,
    parse_instance_id,
    write_report,
)
from .search import DEFAULT_TIME_LIMIT, BranchAndPrice

DEFAULT_SEED = 1
EXIT_SOLVED, EXIT_ERROR, EXIT_TIMEOUT = 0, 1, 2

log = logging.getLogger("premarshal")


def default_seed() -> int:
    env = os.environ.get("PREMARSHAL_SEED")
    if env is None or env.strip() == "":
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise SystemExit(f"PREMARSHAL_SEED must be an integer, got {env!r}")


def _free_cell_index(s: int, h: int, f: int) -> int:
    # outside the table: a stream index that cannot collide with table cells
    return len(gen.cells()) + (s * 1000 + h) * 1000 + f


# -- gen ---------------------------------------------------------------------

def cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    prios = args.priorities or list(gen.PRIORITIES)
    for p in prios:
        if p not in gen.PRIORITIES:
            raise PremarshalError(f"priorities must be in {gen.PRIORITIES}, got {p}")
    table = gen.cells()
    if args.free:
        if not (args.stacks and args.height and args.fill):
            raise PremarshalError("--free needs explicit --stacks, --height and --fill")
        wanted = [(s, h, f) for s in args.stacks for h in args.height for f in args.fill]
    else:
        for name, vals, allowed in (("stacks", args.stacks, gen.STACKS),
                                    ("height", args.height, gen.HEIGHTS),
                                    ("fill", args.fill, gen.FILLS)):
            bad = [v for v in vals or () if v not in allowed]
            if bad:
                raise PremarshalError(f"--{name} {bad[0]} not in {allowed} (use --free)")
        wanted = [c for c in table
                  if (not args.stacks or c[0] in args.stacks)
                  and (not args.height or c[1] in args.height)
                  and (not args.fill or c[2] in args.fill)]
    if args.count < 1:
        raise PremarshalError("--count must be at least 1")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for cell in wanted:
        s, h, f = cell
        if cell in table:
            ci = table.index(cell)
            triples = gen.generate_cell(seed, ci, args.count)
        else:
            ci = _free_cell_index(*cell)
            triples = gen.generate_cell(seed, ci, args.count, free_cell=cell)
        for idx, triple in enumerate(triples):
            for p in prios:
                name = gen.instance_name(p, s, h, f, idx)
                write_instance(triple[p], out / f"{name}.json")
                entries.append({"file": f"{name}.json", "P": p, "S": s, "H": h, "F": f,
                                "index": idx, "cell_index": ci})
    manifest = {"seed": seed, "count": args.count, "free": bool(args.free),
                "rng": "numpy PCG64, SeedSequence((seed, cell_index))",
                "instances": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n",
                                       encoding="utf-8", newline="\n")
    print(f"wrote {len(entries)} instances to {out}")
    return 0


# -- solve -------------------------------------------------------------------

def _load(path, mode: Optional[str], derive: bool) -> Instance:
    inst = read_instance(path)
    target = inst.target
    if derive:
        mode, target = Mode.CONFIGURATION.value, derive_target(inst)
    if mode is None:
        return inst
    if Mode(mode) is Mode.PRIORITY:
        target = None
    elif target is None:
        raise PremarshalError("configuration mode needs a target (or --derive-target)")
    return Instance(inst.num_stacks, inst.max_height, inst.stacks, Mode(mode), target,
                    inst.num_priorities)


def cmd_solve(args) -> int:
    try:
        inst = _load(args.instance, args.mode, args.derive_target)
    except (OSError, PremarshalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    solver = BranchAndPrice(time_limit=args.time_limit)
    try:
        result = solver.solve(inst)
    except PremarshalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    row = make_row(Path(args.instance).stem, inst, result)
    if args.stats_out:
        append_row(row, args.stats_out)
    if result.cost is None:
        print(f"time limit reached at horizon {result.horizon}")
        return EXIT_TIMEOUT
    for mv in result.moves:
        print(f"{mv.time}: {mv.from_stack} -> {mv.to_stack} (priority {mv.priority})")
    print(f"cost {result.cost}")
    return EXIT_SOLVED


# -- bench -------------------------------------------------------------------

def _bench_one(path: str, time_limit: Optional[float]) -> ReportRow:
    stem = Path(path).stem
    try:
        inst = read_instance(path)
    except (OSError, PremarshalError) as exc:
        parsed = parse_instance_id(stem) or (0, 0, 0, None, 0)
        log.warning("%s: %s", stem, exc)
        return ReportRow(stem, "error", parsed[0], parsed[1], parsed[2], parsed[3],
                         0, 0.0, False)
    start = time.perf_counter()
    try:
        result = BranchAndPrice(time_limit=time_limit).solve(inst)
    except PremarshalError as exc:
        log.warning("%s: %s", stem, exc)
        return make_row(stem, inst, None, time.perf_counter() - start)
    return make_row(stem, inst, result)


def cmd_bench(args) -> int:
    folder = Path(args.dir)
    if not folder.is_dir():
        print(f"error: {folder} is not a directory", file=sys.stderr)
        return EXIT_ERROR
    paths = sorted(str(p) for p in folder.glob("*.json") if p.name != "manifest.json")
    if args.workers > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as ex:
            rows = list(ex.map(_bench_one, paths, [args.time_limit] * len(paths)))
    else:
        rows = [_bench_one(p, args.time_limit) for p in paths]
    report = Path(args.report) if args.report else folder / "report.csv"
    rows_path, agg_path = write_report(rows, report)
    sys.stdout.write(aggregates_to_csv(rows))
    print(f"wrote {rows_path} and {agg_path}", file=sys.stderr)
    return 0


# -- oracle ------------------------------------------------------------------

def cmd_oracle(args) -> int:
    try:
        inst = _load(args.instance, args.mode, args.derive_target)
        if args.bfs:
            print(f"cost {solve_bfs(inst, args.max_depth)}")
            return 0
        sol = solve_exact(inst, args.max_depth)
    except NoSolutionWithin as exc:
        print(f"no solution: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    except (OSError, PremarshalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for mv in sol.moves:
        print(f"{mv.time}: {mv.from_stack} -> {mv.to_stack} (priority {mv.priority})")
    print(f"cost {sol.cost}")
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="premarshal",
                                 description="Exact container premarshalling solver.")
    ap.add_argument("-v", "--verbose", action="count", default=0,
                    help="-v for progress, -vv for a node-by-node trace")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a benchmark suite")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--count", "--per-cell", dest="count", type=int, default=20,
                   help="accepted lay-outs per (stacks, height, fill) cell")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--priorities", type=int, nargs="+", help="subset of 2 3 6")
    g.add_argument("--stacks", type=int, nargs="+")
    g.add_argument("--height", type=int, nargs="+")
    g.add_argument("--fill", type=int, nargs="+", help="fill percentage")
    g.add_argument("--free", action="store_true",
                   help="allow stacks/height/fill outside the parameter table")
    g.set_defaults(func=cmd_gen)

    def instance_args(p):
        p.add_argument("instance", help="instance JSON file")
        p.add_argument("--mode", choices=[m.value for m in Mode])
        p.add_argument("--derive-target", action="store_true",
                       help="solve in configuration mode towards a greedy sorted target")

    s = sub.add_parser("solve", help="solve one instance")
    instance_args(s)
    s.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT)
    s.add_argument("--stats-out", help="CSV file to append the report row to")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="solve every instance in a directory")
    b.add_argument("dir")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--report", help="CSV path (default DIR/report.csv)")
    b.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT)
    b.set_defaults(func=cmd_bench)

    o = sub.add_parser("oracle", help="brute-force optimum (small instances)")
    instance_args(o)
    o.add_argument("--max-depth", type=int, default=50)
    o.add_argument("--bfs", action="store_true", help="breadth-first cost only")
    o.set_defaults(func=cmd_oracle)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PremarshalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
