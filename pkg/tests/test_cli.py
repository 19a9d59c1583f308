import json
import os
import subprocess
import sys

import numpy as np
import pytest

from factorstream.cli import main


def run_cli(args):
    return main(args)


class TestSimulateCommand:
    def test_simulate_writes_dataset(self, tmp_path):
        out = tmp_path / "data.json"
        code = run_cli(["simulate", "--model", "hmm", "--n", "12", "--seed", "3", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["model"] == "hmm"
        assert len(payload["observations"]) == 12

    def test_bad_config_exit_code_2(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"model": "lgssm", "A": [[1.0]], "d": 2}))
        code = run_cli([
            "simulate", "--model", "lgssm", "--n", "5", "--seed", "0",
            "--config", str(cfg), "--out", str(tmp_path / "x.json"),
        ])
        assert code == 2


class TestInferCommand:
    def test_lgssm_roundtrip(self, tmp_path):
        data = tmp_path / "d.json"
        report = tmp_path / "r.json"
        assert run_cli(["simulate", "--model", "lgssm", "--n", "25", "--seed", "1", "--out", str(data)]) == 0
        assert run_cli([
            "infer", "--model", "lgssm", "--data", str(data), "--out", str(report),
        ]) == 0
        payload = json.loads(report.read_text())
        assert payload["model"] == "lgssm"
        assert payload["average_errors"]["x"] >= 0
        assert "config" in payload  # provenance

    def test_hmm_with_iterations_and_trace(self, tmp_path):
        data = tmp_path / "d.json"
        report = tmp_path / "r.json"
        trace = tmp_path / "t.jsonl"
        run_cli(["simulate", "--model", "hmm", "--n", "10", "--seed", "1", "--out", str(data)])
        code = run_cli([
            "infer", "--model", "hmm", "--data", str(data),
            "--iterations", "4", "--out", str(report), "--trace", str(trace),
        ])
        assert code == 0
        payload = json.loads(report.read_text())
        assert payload["iterations"] == 4
        assert len(payload["bfe_trace"]) == 4
        lines = trace.read_text().strip().splitlines()
        assert lines
        for line in lines[:20]:
            record = json.loads(line)
            assert set(record) == {"tick", "kind", "source", "payload"}

    def test_model_mismatch_is_config_fault(self, tmp_path):
        data = tmp_path / "d.json"
        run_cli(["simulate", "--model", "hgf", "--n", "5", "--seed", "0", "--out", str(data)])
        code = run_cli([
            "infer", "--model", "lgssm", "--data", str(data), "--out", str(tmp_path / "r.json"),
        ])
        assert code == 2

    def test_hgf_infer(self, tmp_path):
        data = tmp_path / "d.json"
        report = tmp_path / "r.json"
        run_cli(["simulate", "--model", "hgf", "--n", "8", "--seed", "4", "--out", str(data)])
        assert run_cli([
            "infer", "--model", "hgf", "--data", str(data),
            "--iterations", "3", "--out", str(report), "--posteriors",
        ]) == 0
        payload = json.loads(report.read_text())
        assert len(payload["posteriors"]["s1"]) == 8
        assert payload["average_errors"]["s1"] > 0


class TestBenchmarkCommand:
    def test_grid_to_csv(self, tmp_path):
        grid = tmp_path / "grid.json"
        out = tmp_path / "bench.csv"
        grid.write_text(json.dumps([
            {"model": "lgssm", "n": 40, "d": 1, "seed": 0},
            {"model": "lgssm", "n": 80, "d": 1, "seed": 0},
        ]))
        assert run_cli(["benchmark", "--grid", str(grid), "--reps", "1", "--out", str(out)]) == 0
        text = out.read_text()
        assert text.startswith("kind,model,n")
        assert "slope_n" in text

    def test_zero_reps_exit_2(self, tmp_path):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps([{"model": "lgssm", "n": 10}]))
        assert run_cli(["benchmark", "--grid", str(grid), "--reps", "0", "--out", str(tmp_path / "o.csv")]) == 2


def test_console_entry_point_via_module():
    proc = subprocess.run(
        [sys.executable, "-m", "factorstream", "--help"],
        capture_output=True, text=True,
        cwd=os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
    )
    assert proc.returncode == 0
    assert "simulate" in proc.stdout and "benchmark" in proc.stdout
