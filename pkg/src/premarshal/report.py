"""Per-instance result rows, aggregate tables and a CSV round trip.

Row schema (one line per instance, header first):

==============  ========  ===============================================
column          type      meaning
==============  ========  ===============================================
instance_id     str       file stem, e.g. ``p2_s3_h4_f50_i0``
mode            str       ``priority`` or ``configuration``
P, S, H, F      int       priorities, stacks, height, fill percent
n               int       number of containers
misoverlay_pct  float     wrongly placed containers, percent
solved          bool      ``true``/``false``
cost            int       moves in the optimal solution (blank if unsolved)
root_lp         float     root LP value of the successful tree
int_gap         float     cost / root_lp (1.0 for cost 0)
runtime_s       float     wall clock for the whole run
lp_time_s       float     time inside the LP solver
pricing_time_s  float     time generating columns
clear_time_s    float     time rebuilding the master LP
trees_solved    int       horizons tried
trees_killed    int       trees closed at the root
trees_actual    int       trees searched below the root
nodes_solved    int       node LPs solved
nodes_mem_max   int       most open nodes at once
seqs_generated  int       columns generated
seqs_mem_max    int       largest pool size
lp_cols_max     int       most columns in one LP
==============  ========  ===============================================

The aggregate table has columns ``group, value, count`` followed by the
mean of every numeric row column, blank cells being skipped.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .model import Instance, mis_overlay

COLUMNS = (
    "instance_id", "mode", "P", "S", "H", "F", "n", "misoverlay_pct", "solved",
    "cost", "root_lp", "int_gap", "runtime_s", "lp_time_s", "pricing_time_s",
    "clear_time_s", "trees_solved", "trees_killed", "trees_actual", "nodes_solved",
    "nodes_mem_max", "seqs_generated", "seqs_mem_max", "lp_cols_max",
)

RUNTIME_BUCKETS = (
    ("<1s", 0.0, 1.0),
    ("1s-1min", 1.0, 60.0),
    ("1min-1h", 60.0, 3600.0),
    (">1h", 3600.0, math.inf),
)

_NAME = re.compile(r"^p(\d+)_s(\d+)_h(\d+)_f(\d+)_i(\d+)$")


@dataclass
class ReportRow:
    instance_id: str
    mode: str
    P: int
    S: int
    H: int
    F: Optional[int]
    n: int
    misoverlay_pct: float
    solved: bool
    cost: Optional[int] = None
    root_lp: Optional[float] = None
    int_gap: Optional[float] = None
    runtime_s: float = 0.0
    lp_time_s: float = 0.0
    pricing_time_s: float = 0.0
    clear_time_s: float = 0.0
    trees_solved: int = 0
    trees_killed: int = 0
    trees_actual: int = 0
    nodes_solved: int = 0
    nodes_mem_max: int = 0
    seqs_generated: int = 0
    seqs_mem_max: int = 0
    lp_cols_max: int = 0


_TYPES = {f.name: f.type for f in fields(ReportRow)}


def parse_instance_id(instance_id: str):
    """``(P, S, H, F, index)`` from a generated file name, or ``None``."""
    m = _NAME.match(instance_id)
    return tuple(int(g) for g in m.groups()) if m else None


def make_row(instance_id: str, instance: Instance, result=None,
             runtime: Optional[float] = None) -> ReportRow:
    """Build a row from an instance and a Solution / TimedOut (or ``None``
    when the run failed before producing statistics)."""
    parsed = parse_instance_id(instance_id)
    fill = parsed[3] if parsed else None
    n = instance.n
    mo = mis_overlay(instance.stacks) if n else 0.0
    row = ReportRow(instance_id, instance.mode.value, instance.k, instance.num_stacks,
                    instance.max_height, fill, n, mo, False)
    stats = getattr(result, "stats", None)
    if stats is not None:
        row.runtime_s = stats.total_time
        row.lp_time_s = stats.lp_time
        row.pricing_time_s = stats.pricing_time
        row.clear_time_s = stats.clear_time
        row.trees_solved = stats.trees_solved
        row.trees_killed = stats.trees_killed
        row.trees_actual = stats.trees_actually_solved
        row.nodes_solved = stats.nodes_solved
        row.nodes_mem_max = stats.max_nodes_in_memory
        row.seqs_generated = stats.sequences_generated
        row.seqs_mem_max = stats.max_sequences_in_memory
        row.lp_cols_max = stats.max_lp_columns
    if runtime is not None:
        row.runtime_s = runtime
    if result is not None and result.cost is not None:
        row.solved = True
        row.cost = result.cost
        row.root_lp = stats.root_lp_of_success
        row.int_gap = stats.integrality_gap
    return row


# -- CSV ---------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _parse(name: str, text: str):
    if text == "":
        return None
    typ = _TYPES[name]
    if "bool" in typ:
        if text not in ("true", "false"):
            raise ValueError(f"{name}: expected true/false, got {text!r}")
        return text == "true"
    if "int" in typ:
        return int(text)
    if "float" in typ:
        return float(text)
    return text


def _write(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def rows_to_csv(rows: Sequence[ReportRow]) -> str:
    rows = sorted(rows, key=lambda r: r.instance_id)
    return _write(COLUMNS, ([getattr(r, c) for c in COLUMNS] for r in rows))


def csv_to_rows(text: str) -> list[ReportRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        return []
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected header {header}")
    out = []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(COLUMNS):
            raise ValueError(f"line {lineno}: expected {len(COLUMNS)} cells, got {len(rec)}")
        out.append(ReportRow(**{c: _parse(c, v) for c, v in zip(COLUMNS, rec)}))
    return out


def read_report(path) -> list[ReportRow]:
    return csv_to_rows(Path(path).read_text(encoding="utf-8"))


# -- aggregates --------------------------------------------------------------

NUMERIC = tuple(c for c in COLUMNS if c not in ("instance_id", "mode", "solved")
                and c not in ("P", "S", "H", "F"))
AGG_COLUMNS = ("group", "value", "count", "solved_count") + NUMERIC


def _bucket(runtime: float) -> str:
    for name, lo, hi in RUNTIME_BUCKETS:
        if lo <= runtime < hi:
            return name
    return RUNTIME_BUCKETS[-1][0]


def _mean(values) -> Optional[float]:
    vals = [float(v) for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def aggregate(rows: Sequence[ReportRow]) -> list[tuple]:
    """Mean statistics per group.

    Groups: ``all``, ``solved``/``unsolved``, the four runtime buckets, and
    one group per value of P, S, H and F.
    """
    groups: list[tuple[str, str, list[ReportRow]]] = [("all", "all", list(rows))]
    groups.append(("status", "solved", [r for r in rows if r.solved]))
    groups.append(("status", "unsolved", [r for r in rows if not r.solved]))
    for name, _, _ in RUNTIME_BUCKETS:
        groups.append(("runtime", name, [r for r in rows if _bucket(r.runtime_s) == name]))
    for col in ("P", "S", "H", "F"):
        for v in sorted({getattr(r, col) for r in rows if getattr(r, col) is not None}):
            groups.append((col, str(v), [r for r in rows if getattr(r, col) == v]))
    out = []
    for g, v, members in groups:
        means = [_mean(getattr(r, c) for r in members) for c in NUMERIC]
        out.append((g, v, len(members), sum(r.solved for r in members), *means))
    return out


def aggregates_to_csv(rows: Sequence[ReportRow]) -> str:
    return _write(AGG_COLUMNS, aggregate(rows))


def write_report(rows: Sequence[ReportRow], path) -> tuple[Path, Path]:
    """Write ``path`` (rows) and ``<stem>_agg.csv`` (aggregates) next to it."""
    path = Path(path)
    agg = path.with_name(path.stem + "_agg.csv")
    path.write_text(rows_to_csv(rows), encoding="utf-8", newline="\n")
    agg.write_text(aggregates_to_csv(rows), encoding="utf-8", newline="\n")
    return path, agg


def append_row(row: ReportRow, path) -> None:
    """Append one row, writing the header first if the file is new or empty."""
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    text = _write(COLUMNS, [[getattr(row, c) for c in COLUMNS]])
    if not fresh:
        text = text.split("\n", 1)[1]
    with path.open("a", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def row_dict(row: ReportRow) -> dict:
    return asdict(row)
