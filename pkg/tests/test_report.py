import math

import pytest

from premarshal.model import Instance
from premarshal.report import (
    AGG_COLUMNS,
    COLUMNS,
    RUNTIME_BUCKETS,
    ReportRow,
    aggregate,
    append_row,
    csv_to_rows,
    make_row,
    parse_instance_id,
    read_report,
    rows_to_csv,
    write_report,
)
from premarshal.search import premarshal


def rows():
    return [
        ReportRow("p2_s3_h4_f50_i1", "priority", 2, 3, 4, 50, 6, 50.0, True, 4, 3.5,
                  4 / 3.5, 0.5, 0.2, 0.1, 0.05, 3, 2, 1, 7, 4, 30, 25, 20),
        ReportRow("p3_s3_h4_f50_i0", "priority", 3, 3, 4, 50, 6, 33.3, False,
                  runtime_s=70.0),
        ReportRow("p2_s5_h4_f70_i0", "priority", 2, 5, 4, 70, 14, 21.0, True, 6, 6.0,
                  1.0, 2.0),
    ]


def test_csv_round_trip_and_sorting():
    text = rows_to_csv(rows())
    assert text.splitlines()[0] == ",".join(COLUMNS)
    assert "\r" not in text
    back = csv_to_rows(text)
    assert back == sorted(rows(), key=lambda r: r.instance_id)


def test_parser_rejects_bad_input():
    with pytest.raises(ValueError):
        csv_to_rows("a,b\n1,2\n")
    with pytest.raises(ValueError):
        csv_to_rows(",".join(COLUMNS) + "\nx\n")
    assert csv_to_rows("") == []


def test_aggregates_equal_recomputation():
    agg = {(r[0], r[1]): dict(zip(AGG_COLUMNS, r)) for r in aggregate(rows())}
    assert agg[("all", "all")]["count"] == 3
    assert agg[("all", "all")]["misoverlay_pct"] == pytest.approx((50 + 33.3 + 21) / 3)
    assert agg[("status", "solved")]["count"] == 2
    assert agg[("status", "unsolved")]["cost"] is None
    assert agg[("runtime", "<1s")]["count"] == 1
    assert agg[("runtime", "1min-1h")]["count"] == 1
    assert agg[("P", "2")]["cost"] == pytest.approx(5.0)
    assert {v for g, v in agg if g == "runtime"} == {b[0] for b in RUNTIME_BUCKETS}


def test_write_and_append(tmp_path):
    path, agg = write_report(rows(), tmp_path / "r.csv")
    assert read_report(path) == sorted(rows(), key=lambda r: r.instance_id)
    assert agg.read_text().startswith("group,value,count")
    out = tmp_path / "a.csv"
    append_row(rows()[0], out)
    append_row(rows()[1], out)
    assert read_report(out) == rows()[:2]


def test_make_row_from_solution():
    inst = Instance(3, 3, [[1, 2], [], []])
    sol = premarshal(inst)
    row = make_row("p2_s3_h3_f50_i0", inst, sol)
    assert row.solved and row.cost == 1 and row.int_gap >= 1.0
    assert row.F == 50 and row.nodes_solved >= 1
    assert parse_instance_id("foo") is None
    assert make_row("foo", inst, None).F is None
