import json
import os
import subprocess
import sys

import pytest

from premarshal.cli import main
from premarshal.model import Instance, Mode, derive_target, read_instance, write_instance
from premarshal.oracle import solve_exact
from premarshal.report import read_report


def run(*args, env=None):
    return subprocess.run([sys.executable, "-m", "premarshal", *args],
                          capture_output=True, text=True, env=env)


@pytest.fixture
def tiny(tmp_path):
    path = tmp_path / "p2_s3_h3_f50_i0.json"
    write_instance(Instance(3, 3, [[1, 2], [2, 1, 2], []], num_priorities=2), path)
    return path


def test_gen_single_cell_and_determinism(tmp_path, capsys):
    args = ["gen", "--count", "1", "--stacks", "3", "--height", "4", "--fill", "50",
            "--priorities", "2"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == ["manifest.json", "p2_s3_h4_f50_i0.json"]
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 1 and manifest["instances"][0]["S"] == 3


def test_gen_seed_from_environment(tmp_path):
    env = {**os.environ, "PREMARSHAL_SEED": "42"}
    proc = run("gen", "--out", str(tmp_path), "--count", "1", "--stacks", "3",
               "--height", "4", "--fill", "50", env=env)
    assert proc.returncode == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == 42


def test_gen_rejects_values_outside_table(tmp_path, capsys):
    assert main(["gen", "--out", str(tmp_path), "--stacks", "4"]) == 1
    assert "--free" in capsys.readouterr().err
    assert main(["gen", "--out", str(tmp_path), "--stacks", "4", "--height", "3",
                 "--fill", "50", "--count", "1", "--free"]) == 0
    assert read_instance(tmp_path / "p6_s4_h3_f50_i0.json").n == 6


def test_solve_matches_oracle_and_writes_stats(tiny, tmp_path, capsys):
    stats = tmp_path / "stats.csv"
    assert main(["solve", str(tiny), "--stats-out", str(stats)]) == 0
    out = capsys.readouterr().out
    cost = int(out.strip().splitlines()[-1].split()[1])
    assert cost == solve_exact(read_instance(tiny)).cost
    row, = read_report(stats)
    assert row.solved and row.cost == cost and row.instance_id == tiny.stem


def test_solve_sorted_instance(tmp_path, capsys):
    path = tmp_path / "s.json"
    write_instance(Instance(2, 2, [[2, 1], []]), path)
    assert main(["solve", str(path)]) == 0
    assert capsys.readouterr().out.strip() == "cost 0"


def test_solve_exit_codes(tiny, tmp_path, capsys):
    stats = tmp_path / "s.csv"
    assert main(["solve", str(tiny), "--time-limit", "0", "--stats-out", str(stats)]) == 2
    assert read_report(stats)[0].solved is False
    bad = tmp_path / "bad.json"
    bad.write_text('{"mode": "priority"}')
    assert main(["solve", str(bad)]) == 1
    assert "num_stacks" in capsys.readouterr().err
    assert main(["solve", str(tmp_path / "missing.json")]) == 1
    assert main(["solve", str(tiny), "--mode", "configuration"]) == 1


def test_solve_derive_target(tiny, capsys):
    base = read_instance(tiny)
    cfg = Instance(base.num_stacks, base.max_height, base.stacks, Mode.CONFIGURATION,
                   derive_target(base), base.num_priorities)
    assert main(["solve", str(tiny), "--derive-target"]) == 0
    last = capsys.readouterr().out.strip().splitlines()[-1]
    assert last == f"cost {solve_exact(cfg).cost}"


def test_oracle_command(tiny, capsys):
    assert main(["oracle", str(tiny)]) == 0
    exact = capsys.readouterr().out.strip().splitlines()[-1]
    assert main(["oracle", str(tiny), "--bfs"]) == 0
    assert capsys.readouterr().out.strip() == exact


def test_bench_parallel_sorted_rows(tmp_path):
    suite = tmp_path / "suite"
    assert main(["gen", "--out", str(suite), "--count", "2", "--stacks", "3",
                 "--height", "4", "--fill", "50", "--priorities", "2"]) == 0
    (suite / "zz_broken.json").write_text("{")
    proc = run("bench", str(suite), "--workers", "2", "--time-limit", "60")
    assert proc.returncode == 0
    rows = read_report(suite / "report.csv")
    assert [r.instance_id for r in rows] == sorted(r.instance_id for r in rows)
    assert len(rows) == 3
    assert [r.solved for r in rows] == [True, True, False]
    assert (suite / "report_agg.csv").exists()
    assert proc.stdout.startswith("group,value,count")


def test_bench_empty_dir(tmp_path):
    assert main(["bench", str(tmp_path)]) == 0
    assert read_report(tmp_path / "report.csv") == []
    assert main(["bench", str(tmp_path / "nope")]) == 1
