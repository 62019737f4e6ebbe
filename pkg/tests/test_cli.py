import json
import subprocess
import sys

import pytest

from rtsim.cli import main


def test_run_writes_logs_and_result_line(tmp_path, capsys):
    code = main([
        "run", "--scenario", "fig4_sensing", "--seed", "0",
        "--out", str(tmp_path), "--max-steps", "40",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith("RESULT seed=0 ")
    assert "mse_final=" in out and "trace_final=" in out
    assert (tmp_path / "steps.csv").exists()
    assert (tmp_path / "events.csv").exists()
    assert (tmp_path / "meta.json").exists()
    assert (tmp_path / "log.json").exists()
    rows = (tmp_path / "steps.csv").read_text().strip().split("\n")
    assert len(rows) == 41


def test_run_refuses_overwrite_without_force(tmp_path, capsys):
    args = ["run", "--scenario", "fig4_sensing", "--out", str(tmp_path), "--max-steps", "5"]
    assert main(args) == 0
    capsys.readouterr()
    assert main(args) == 2
    assert "force" in capsys.readouterr().err
    assert main(args + ["--force"]) == 0


def test_missing_scenario_exits_2(tmp_path, capsys):
    code = main(["run", "--scenario", "nope.toml", "--out", str(tmp_path)])
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_config_error_exits_2_with_field(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(
        'dt = 0.1\nmax_steps = 0\n'
        '[[robots]]\nstart = [0.0, 0.0]\ntargets = [0]\n'
        '[[targets]]\nstart = [1.0, 0.0]\npolicy = "constant-control"\nvalue = [0.0, 0.0]\n'
    )
    code = main(["run", "--scenario", str(bad), "--out", str(tmp_path / "out")])
    assert code == 2
    assert "max_steps" in capsys.readouterr().err


def test_batch_aggregate_schema(tmp_path, capsys):
    code = main([
        "batch", "--scenario", "fig4_sensing", "--seed", "0", "--runs", "3",
        "--out", str(tmp_path), "--max-steps", "30", "--workers", "1",
    ])
    assert code == 0
    out_lines = [l for l in capsys.readouterr().out.strip().split("\n") if l.startswith("RESULT")]
    assert len(out_lines) == 3
    agg = (tmp_path / "aggregate.csv").read_text().strip().split("\n")
    assert agg[0] == "# schema=rts-log-v1"
    assert agg[1] == "step,mse_mean,mse_std,trace_mean,trace_std"
    assert len(agg) == 2 + 30
    assert all(len(line.split(",")) == 5 for line in agg[2:])
    for seed in range(3):
        assert (tmp_path / f"seed{seed}" / "steps.csv").exists()


def test_batch_parallel_matches_serial(tmp_path):
    main([
        "batch", "--scenario", "fig4_sensing", "--runs", "2", "--max-steps", "20",
        "--out", str(tmp_path / "serial"), "--workers", "1",
    ])
    main([
        "batch", "--scenario", "fig4_sensing", "--runs", "2", "--max-steps", "20",
        "--out", str(tmp_path / "parallel"), "--workers", "2",
    ])
    assert (tmp_path / "serial" / "aggregate.csv").read_bytes() == (
        tmp_path / "parallel" / "aggregate.csv"
    ).read_bytes()


def test_compare_writes_summary(tmp_path, capsys):
    code = main([
        "compare", "--scenario", "fig4_sensing", "--modes", "resilient,vanilla",
        "--seed", "0", "--runs", "2", "--out", str(tmp_path),
        "--max-steps", "25", "--workers", "1",
    ])
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["schema"] == "rts-log-v1"
    assert set(summary["modes"]) == {"resilient", "vanilla"}
    for mode in ("resilient", "vanilla"):
        assert "mse_final_mean" in summary["modes"][mode]
        assert "trace_final_mean" in summary["modes"][mode]
        assert (tmp_path / f"aggregate_{mode}.csv").exists()
        assert (tmp_path / mode / "seed0" / "steps.csv").exists()


def test_compare_rejects_single_mode(tmp_path, capsys):
    code = main([
        "compare", "--scenario", "fig4_sensing", "--modes", "resilient",
        "--out", str(tmp_path),
    ])
    assert code == 2


def test_validate_quick(capsys):
    code = main(["validate", "--mc-samples", "2000", "--instances", "3"])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS chance-constraint" in out
    assert "PASS slack-equivalence" in out


def test_console_entry_point_help():
    proc = subprocess.run(
        [sys.executable, "-m", "rtsim.cli", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "run" in proc.stdout and "validate" in proc.stdout
