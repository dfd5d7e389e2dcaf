"""End-to-end tests for the zdquant command line."""

import csv
import json
import tempfile
from pathlib import Path

import pytest
import yaml

from zdquant.cli import main
from zdquant.utils.file_logger import get_logger

BENCHMARK = {
    "version": 1,
    "model": {"transition": [[0.9, 0.1], [0.1, 0.9]]},
    "num_symbols": 2,
    "solver": {"resolution": 20},
    "horizons": [1, 2, 5, 10],
    "oracle_horizons": [1, 2, 3],
    "epsilons": [0.1],
    "simulation": {"num_runs": 10, "horizon": 50},
}


def _run(tmpdir: str, config: dict, command: str, *extra: str) -> int:
    path = Path(tmpdir) / "config.yaml"
    path.write_text(yaml.safe_dump(config), encoding="utf-8")
    try:
        return main([command, "--config", str(path), "--out", str(Path(tmpdir) / "out"), *extra])
    finally:
        get_logger().close()


def _rows(path: Path):
    with open(path, encoding="utf-8") as f:
        return [row for row in csv.reader(line for line in f if not line.startswith("#"))]


class TestCommandsUnit:
    """Each command writes its artifacts and exits 0."""

    def test_couple(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            assert _run(tmpdir, BENCHMARK, "couple") == 0
            out = Path(tmpdir) / "out"
            report = json.loads((out / "coupling.json").read_text(encoding="utf-8"))
            assert report["reference_state"] == 0
            assert report["K"] == pytest.approx(4 * report["K1"])
            assert _rows(out / "coupling_tau.csv")[0] == ["x0", "y0_0", "y0_1"]

    def test_solve_then_downstream_commands(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            out = Path(tmpdir) / "out"
            assert _run(tmpdir, BENCHMARK, "solve") == 0
            summary = json.loads((out / "solve_summary.json").read_text(encoding="utf-8"))
            assert abs(summary["gain"]) <= 1e-9
            assert (out / "triplet.json").exists() and (out / "coupling.json").exists()

            assert _run(tmpdir, BENCHMARK, "converge") == 0
            rows = _rows(out / "converge.csv")
            assert rows[0] == ["T", "J_T", "T_gap", "K", "method"]
            assert [row[0] for row in rows[1:]] == ["1", "2", "5", "10"]
            assert all(row[4] == "exact" for row in rows[1:])

            assert _run(tmpdir, BENCHMARK, "periodic") == 0
            rows = _rows(out / "periodic.csv")
            assert rows[0] == ["epsilon", "period", "cost", "gain", "margin"]
            assert float(rows[1][4]) >= 0.0

            assert _run(tmpdir, BENCHMARK, "simulate", "--seed", "3") == 0
            first = (out / "trace.csv").read_text(encoding="utf-8")
            assert _run(tmpdir, BENCHMARK, "simulate", "--seed", "3", "--threads", "2") == 0
            assert (out / "trace.csv").read_text(encoding="utf-8") == first
            assert first.startswith("# ") and "seed=3" in first.splitlines()[0]
            rows = _rows(out / "simulate.csv")
            assert rows[0] == ["channel", "horizon", "num_runs", "mean", "standard_error"]

    def test_noisy_solve_and_simulate(self):
        config = {**BENCHMARK, "channel": {"bsc": 0.1}}
        with tempfile.TemporaryDirectory() as tmpdir:
            assert _run(tmpdir, config, "solve") == 0
            assert _run(tmpdir, config, "simulate") == 0
            rows = _rows(Path(tmpdir) / "out" / "trace.csv")
            assert rows[0] == ["t", "x", "q", "q_prime", "x_hat", "d", "pi_0", "pi_1"]
            assert len(rows) == 51

    def test_oracle_check(self):
        config = {**BENCHMARK, "model": {"transition": [[0.9, 0.1], [0.2, 0.8]], "initial": [0.5, 0.5]}}
        with tempfile.TemporaryDirectory() as tmpdir:
            assert _run(tmpdir, config, "oracle-check") == 0
            rows = _rows(Path(tmpdir) / "out" / "oracle_check.csv")
            assert rows[0] == ["T", "dp", "oracle", "gap", "status"]
            assert [row[4] for row in rows[1:]] == ["pass", "pass", "pass"]

    def test_solve_reports_lipschitz_check(self):
        """solve SHALL check J^β at the configured beta against K₁‖d‖∞ρ₁."""
        with tempfile.TemporaryDirectory() as tmpdir:
            assert _run(tmpdir, {**BENCHMARK, "beta": 0.9}, "solve") == 0
            summary = json.loads((Path(tmpdir) / "out" / "solve_summary.json").read_text(encoding="utf-8"))
            assert summary["lipschitz_beta"] == 0.9
            assert summary["lipschitz_allowance"] == pytest.approx(2 * summary["grid_slack"])
            assert summary["lipschitz_violation"] <= summary["lipschitz_allowance"]
            assert summary["lipschitz_within"] is True
            assert "sup_h_beta" not in summary

    def test_vanishing_discount_reports_hbeta_bound(self):
        config = {**BENCHMARK, "solver": {"resolution": 20, "method": "vanishing_discount"}}
        with tempfile.TemporaryDirectory() as tmpdir:
            assert _run(tmpdir, config, "solve") == 0
            summary = json.loads((Path(tmpdir) / "out" / "solve_summary.json").read_text(encoding="utf-8"))
            assert summary["K_over_2"] == pytest.approx(summary["K"] / 2)
            assert summary["sup_h_beta"] <= summary["K_over_2"] + summary["grid_slack"]

    def test_reducible_source_converge(self):
        """converge SHALL run on a reducible source and leave every K cell empty."""
        config = {
            **BENCHMARK,
            "model": {"transition": [[1.0, 0.0], [0.0, 1.0]], "initial": [0.5, 0.5]},
            "solver": {"resolution": 10},
        }
        with tempfile.TemporaryDirectory() as tmpdir:
            out = Path(tmpdir) / "out"
            assert _run(tmpdir, config, "solve") == 0
            summary = json.loads((out / "solve_summary.json").read_text(encoding="utf-8"))
            assert "K" not in summary
            assert _run(tmpdir, config, "converge") == 0
            rows = _rows(out / "converge.csv")
            assert [row[0] for row in rows[1:]] == ["1", "2", "5", "10"]
            assert all(row[3] == "" for row in rows[1:])
            assert _run(tmpdir, config, "periodic") == 1

    def test_reruns_are_byte_identical(self):
        """Every CSV artifact SHALL be reproduced byte for byte, whatever the thread count."""
        commands = {
            "couple": "coupling_tau.csv",
            "converge": "converge.csv",
            "periodic": "periodic.csv",
            "oracle-check": "oracle_check.csv",
        }
        with tempfile.TemporaryDirectory() as tmpdir:
            out = Path(tmpdir) / "out"
            assert _run(tmpdir, BENCHMARK, "solve") == 0
            for command, artifact in commands.items():
                assert _run(tmpdir, BENCHMARK, command) == 0
                first = (out / artifact).read_bytes()
                assert _run(tmpdir, BENCHMARK, command, "--threads", "2") == 0
                assert (out / artifact).read_bytes() == first

    def test_stale_coupling_file_is_recomputed(self):
        """A coupling.json written for another chain SHALL NOT feed converge."""
        other = {**BENCHMARK, "model": {"transition": [[0.8, 0.2], [0.2, 0.8]]}}
        with tempfile.TemporaryDirectory() as tmpdir:
            out = Path(tmpdir) / "out"
            assert _run(tmpdir, BENCHMARK, "solve") == 0
            expected = json.loads((out / "solve_summary.json").read_text(encoding="utf-8"))["K"]
            assert _run(tmpdir, other, "couple") == 0
            stale = json.loads((out / "coupling.json").read_text(encoding="utf-8"))["K"]
            assert stale != pytest.approx(expected)
            assert _run(tmpdir, BENCHMARK, "converge") == 0
            rows = _rows(out / "converge.csv")
            assert all(float(row[3]) == pytest.approx(expected, rel=1e-10) for row in rows[1:])


class TestExitCodesUnit:
    """Failures map to documented exit codes."""

    def test_config_error(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            assert _run(tmpdir, {**BENCHMARK, "resolution": 10}, "couple") == 2
            assert _run(tmpdir, {**BENCHMARK, "model": {"transition": [[0.7, 0.7], [0.5, 0.5]]}}, "couple") == 2

    def test_bad_log_level(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            assert _run(tmpdir, BENCHMARK, "couple", "--log-level", "LOUD") == 2

    def test_missing_config(self):
        try:
            assert main(["couple", "--config", "/nonexistent/config.yaml"]) == 2
        finally:
            get_logger().close()

    def test_cap_exceeded(self):
        config = {**BENCHMARK, "caps": {"oracle": 10}}
        with tempfile.TemporaryDirectory() as tmpdir:
            assert _run(tmpdir, config, "oracle-check") == 3

    def test_no_convergence(self):
        config = {
            **BENCHMARK,
            "model": {"transition": [[0.6, 0.3, 0.1], [0.2, 0.6, 0.2], [0.1, 0.3, 0.6]]},
            "solver": {"resolution": 6, "max_iters": 1},
        }
        with tempfile.TemporaryDirectory() as tmpdir:
            assert _run(tmpdir, config, "solve") == 4

    def test_missing_triplet(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            assert _run(tmpdir, BENCHMARK, "converge") == 1

    def test_mismatched_triplet(self):
        other = {**BENCHMARK, "model": {"transition": [[0.8, 0.2], [0.2, 0.8]]}}
        with tempfile.TemporaryDirectory() as tmpdir:
            assert _run(tmpdir, BENCHMARK, "solve") == 0
            assert _run(tmpdir, other, "simulate") == 1

    def test_noisy_oracle_check_is_rejected(self):
        config = {**BENCHMARK, "channel": {"bsc": 0.1}}
        with tempfile.TemporaryDirectory() as tmpdir:
            assert _run(tmpdir, config, "oracle-check") == 2
