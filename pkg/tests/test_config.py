"""Tests for ExperimentConfig loading and validation."""

import json
import tempfile
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from zdquant.channel import Channel
from zdquant.utils.config import THREADS_ENV, ExperimentConfig, resolve_threads
from zdquant.utils.exceptions import ConfigError

EXAMPLE = Path(__file__).resolve().parent.parent / "config.example.yaml"

MINIMAL = """version: 1
model:
  transition:
    - [0.9, 0.1]
    - [0.2, 0.8]
"""


def _write(tmpdir: str, text: str, name: str = "config.yaml") -> Path:
    path = Path(tmpdir) / name
    path.write_text(text, encoding="utf-8")
    return path


class TestConfigRoundTripProperty:
    """Saving and reloading SHALL reproduce the config."""

    @given(
        resolution=st.integers(min_value=1, max_value=200),
        num_symbols=st.integers(min_value=1, max_value=4),
        beta=st.floats(min_value=0.01, max_value=0.99),
        seed=st.integers(min_value=0, max_value=2 ** 31),
        method=st.sampled_from(["rvi", "vanishing_discount"]),
    )
    @settings(max_examples=50)
    def test_json_round_trip(self, resolution, num_symbols, beta, seed, method):
        config = ExperimentConfig.from_dict({
            "version": 1,
            "model": {"transition": [[0.9, 0.1], [0.2, 0.8]]},
            "num_symbols": num_symbols,
            "solver": {"resolution": resolution, "method": method},
            "beta": beta,
            "seed": seed,
        })
        with tempfile.TemporaryDirectory() as tmpdir:
            path = config.save(Path(tmpdir) / "config.json")
            loaded = ExperimentConfig.from_file(path)
        assert loaded == config


class TestConfigUnit:
    def test_example_file_loads(self):
        config = ExperimentConfig.from_file(EXAMPLE)
        assert config.solver.tol == 1e-9
        assert config.epsilons == [0.02, 0.05, 0.1]
        assert config.build_channel() is None

    def test_defaults(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            config = ExperimentConfig.from_file(_write(tmpdir, MINIMAL))
        assert config.num_symbols == 2
        assert config.solver.resolution == 50
        assert config.horizons == list(range(1, 41))
        model = config.build_model()
        assert abs(model.initial.probs[0] - 2 / 3) < 1e-12

    def test_unknown_key_reports_line(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = _write(tmpdir, MINIMAL + "horizon: 5\n")
            with pytest.raises(ConfigError) as info:
                ExperimentConfig.from_file(path)
        assert info.value.line == 6
        assert info.value.exit_code == 2

    def test_unknown_nested_key(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = _write(tmpdir, MINIMAL + "solver:\n  grid: 10\n")
            with pytest.raises(ConfigError) as info:
                ExperimentConfig.from_file(path)
        assert info.value.line == 7

    def test_missing_version(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"model": {"transition": [[1.0]]}})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"version": 2, "model": {"transition": [[1.0]]}})

    def test_invalid_values(self):
        base = {"version": 1, "model": {"transition": [[0.5, 0.5], [0.5, 0.5]]}}
        for override in (
            {"num_symbols": 0},
            {"beta": 1.0},
            {"solver": {"method": "policy_iteration"}},
            {"solver": {"relaxation": 0.0}},
            {"distortion": [[0, 1]]},
            {"channel": {"bsc": "high"}},
            {"horizons": []},
            {"model": {"transition": [[0.5, 0.5]]}},
            {"log_level": "LOUD"},
        ):
            with pytest.raises(ConfigError):
                ExperimentConfig.from_dict({**base, **override})

    def test_invalid_model_becomes_config_error(self):
        config = ExperimentConfig.from_dict({"version": 1, "model": {"transition": [[0.7, 0.7], [0.5, 0.5]]}})
        with pytest.raises(ConfigError):
            config.build_model()

    def test_channels(self):
        base = {"version": 1, "model": {"transition": [[0.5, 0.5], [0.5, 0.5]]}}
        bsc = ExperimentConfig.from_dict({**base, "channel": {"bsc": 0.1}}).build_channel()
        assert isinstance(bsc, Channel) and bsc.matrix[0, 1] == pytest.approx(0.1)
        matrix = ExperimentConfig.from_dict({**base, "channel": {"matrix": [[1, 0], [0, 1]]}}).build_channel()
        assert matrix.is_noiseless
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({**base, "num_symbols": 3, "channel": {"bsc": 0.1}})

    def test_json_config(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "config.json"
            path.write_text(json.dumps({"version": 1, "model": {"transition": [[1.0]]}}), encoding="utf-8")
            config = ExperimentConfig.from_file(path)
        assert config.model.transition == [[1.0]]

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file("/nonexistent/config.yaml")


class TestThreadsUnit:
    """--threads, then the environment, then the config."""

    def test_precedence(self, monkeypatch):
        config = ExperimentConfig.from_dict({"version": 1, "model": {"transition": [[1.0]]}, "threads": 3})
        monkeypatch.delenv(THREADS_ENV, raising=False)
        assert resolve_threads(None, config) == 3
        assert resolve_threads(None) == 1
        monkeypatch.setenv(THREADS_ENV, "5")
        assert resolve_threads(None, config) == 5
        assert resolve_threads(2, config) == 2

    def test_invalid(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "many")
        with pytest.raises(ConfigError):
            resolve_threads(None)
        monkeypatch.delenv(THREADS_ENV)
        with pytest.raises(ConfigError):
            resolve_threads(0)
