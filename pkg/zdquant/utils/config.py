"""Experiment configuration for zdquant."""

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml

from .exceptions import ConfigError, ModelError
from .file_logger import LEVELS

CONFIG_VERSION = 1
THREADS_ENV = "ZDQ_THREADS"

METHODS = ("rvi", "vanishing_discount")
CHANNEL_KINDS = ("noiseless", "bsc", "matrix")

Path_ = Tuple[str, ...]


@dataclass
class ModelSettings:
    transition: List[List[float]] = field(default_factory=list)
    # "stationary" or an explicit distribution
    initial: Union[str, List[float]] = "stationary"


@dataclass
class ChannelSettings:
    kind: str = "noiseless"
    epsilon: Optional[float] = None
    matrix: Optional[List[List[float]]] = None


@dataclass
class SolverSettings:
    resolution: int = 50
    method: str = "rvi"
    tol: float = 1e-9
    relaxation: float = 0.5
    max_iters: int = 200_000
    max_discount_power: int = 10


@dataclass
class CapSettings:
    actions: int = 10 ** 6
    tree: int = 10 ** 6
    oracle: int = 2 ** 24
    grid: int = 2_000_000


@dataclass
class SimulationSettings:
    num_runs: int = 200
    horizon: int = 1000


_SECTIONS = {
    "model": ModelSettings,
    "solver": SolverSettings,
    "caps": CapSettings,
    "simulation": SimulationSettings,
}


def _key_lines(node, path: Path_ = (), lines: Dict[Path_, int] = None) -> Dict[Path_, int]:
    """1-based line of every mapping key, by key path."""
    lines = {} if lines is None else lines
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            key_path = path + (str(key_node.value),)
            lines[key_path] = key_node.start_mark.line + 1
            _key_lines(value_node, key_path, lines)
    return lines


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_matrix(value: Any) -> bool:
    return (
        isinstance(value, list)
        and len(value) > 0
        and all(isinstance(row, list) and row and all(_is_number(v) for v in row) for row in value)
    )


@dataclass
class ExperimentConfig:
    """Everything one zdquant command needs, as loaded from YAML or JSON."""

    version: int = CONFIG_VERSION
    model: ModelSettings = field(default_factory=ModelSettings)
    # "hamming" or an |X|×|X̂| matrix
    distortion: Union[str, List[List[float]]] = "hamming"
    num_symbols: int = 2
    channel: ChannelSettings = field(default_factory=ChannelSettings)
    solver: SolverSettings = field(default_factory=SolverSettings)
    caps: CapSettings = field(default_factory=CapSettings)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    horizons: List[int] = field(default_factory=lambda: list(range(1, 41)))
    oracle_horizons: List[int] = field(default_factory=lambda: [1, 2, 3])
    epsilons: List[float] = field(default_factory=lambda: [0.05])
    beta: float = 0.95
    seed: int = 0
    output_dir: str = "output"
    threads: int = 1
    log_level: str = "INFO"
    _lines: Dict[Path_, int] = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_file(cls, config_path: Union[str, Path]) -> "ExperimentConfig":
        """Load a YAML or JSON config file."""
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"Config file not found: {config_path}")
        text = path.read_text(encoding="utf-8")
        try:
            node = yaml.compose(text)
            # PyYAML reads JSON exponents like 1e-09 as strings
            data = json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            raise ConfigError(f"Invalid config syntax: {e}", line=mark.line + 1 if mark else None)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid config syntax: {e.msg}", line=e.lineno)
        if not isinstance(data, dict):
            raise ConfigError("Config must be a mapping at top level", line=1)
        return cls.from_dict(data, _key_lines(node))

    @classmethod
    def from_dict(cls, data: Dict[str, Any], lines: Dict[Path_, int] = None) -> "ExperimentConfig":
        lines = lines or {}

        def fail(message: str, path: Path_ = ()):
            raise ConfigError(message, line=lines.get(path))

        known = {f.name for f in fields(cls) if not f.name.startswith("_")}
        for key in data:
            if key not in known:
                fail(f"Unknown key '{key}'", (key,))
        if "version" not in data:
            fail("Missing required key 'version'")
        if data["version"] != CONFIG_VERSION:
            fail(f"Unsupported config version {data['version']!r}, expected {CONFIG_VERSION}", ("version",))
        if "model" not in data:
            fail("Missing required section 'model'")

        values: Dict[str, Any] = {"_lines": lines}
        for key, value in data.items():
            if key in _SECTIONS:
                if not isinstance(value, dict):
                    fail(f"Section '{key}' must be a mapping", (key,))
                section = _SECTIONS[key]
                allowed = {f.name for f in fields(section)}
                for sub in value:
                    if sub not in allowed:
                        fail(f"Unknown key '{key}.{sub}'", (key, sub))
                values[key] = section(**value)
            elif key == "channel":
                values[key] = cls._parse_channel(value, lines)
            else:
                values[key] = value
        config = cls(**values)
        config.check()
        return config

    @staticmethod
    def _parse_channel(value: Any, lines: Dict[Path_, int]) -> ChannelSettings:
        if value == "noiseless":
            return ChannelSettings()
        if isinstance(value, dict) and len(value) == 1:
            (kind, payload), = value.items()
            if kind == "bsc" and _is_number(payload):
                return ChannelSettings(kind="bsc", epsilon=float(payload))
            if kind == "matrix" and _is_matrix(payload):
                return ChannelSettings(kind="matrix", matrix=payload)
        raise ConfigError(
            "channel must be 'noiseless', {bsc: epsilon} or {matrix: [[...]]}", line=lines.get(("channel",))
        )

    def _fail(self, message: str, *path: str):
        raise ConfigError(message, line=self._lines.get(tuple(path)))

    def check(self) -> None:
        """Check types, ranges and that referenced dimensions agree."""
        if not _is_matrix(self.model.transition):
            self._fail("model.transition must be a non-empty matrix of numbers", "model", "transition")
        n = len(self.model.transition)
        if any(len(row) != n for row in self.model.transition):
            self._fail(f"model.transition must be square, got {n} rows", "model", "transition")
        initial = self.model.initial
        if isinstance(initial, str):
            if initial != "stationary":
                self._fail(f"model.initial must be 'stationary' or a list, got '{initial}'", "model", "initial")
        elif not (isinstance(initial, list) and len(initial) == n and all(_is_number(v) for v in initial)):
            self._fail(f"model.initial must list {n} probabilities", "model", "initial")

        if isinstance(self.distortion, str):
            if self.distortion != "hamming":
                self._fail(f"distortion must be 'hamming' or a matrix, got '{self.distortion}'", "distortion")
        elif not _is_matrix(self.distortion) or len(self.distortion) != n:
            self._fail(f"distortion matrix must have {n} rows", "distortion")

        if not isinstance(self.num_symbols, int) or self.num_symbols < 1:
            self._fail("num_symbols must be a positive integer", "num_symbols")
        if self.channel.kind == "bsc" and self.num_symbols != 2:
            self._fail("a bsc channel needs num_symbols = 2", "channel")
        if self.channel.kind == "matrix" and len(self.channel.matrix) != self.num_symbols:
            self._fail(f"channel matrix must have num_symbols = {self.num_symbols} rows", "channel")

        s = self.solver
        if not isinstance(s.resolution, int) or s.resolution < 1:
            self._fail("solver.resolution must be an integer >= 1", "solver", "resolution")
        if s.method not in METHODS:
            self._fail(f"solver.method must be one of {METHODS}", "solver", "method")
        if not _is_number(s.tol) or s.tol <= 0:
            self._fail("solver.tol must be > 0", "solver", "tol")
        if not _is_number(s.relaxation) or not 0 < s.relaxation <= 1:
            self._fail("solver.relaxation must lie in (0, 1]", "solver", "relaxation")
        for name in ("max_iters", "max_discount_power"):
            if not isinstance(getattr(s, name), int) or getattr(s, name) < 1:
                self._fail(f"solver.{name} must be a positive integer", "solver", name)
        for name in ("actions", "tree", "oracle", "grid"):
            if not isinstance(getattr(self.caps, name), int) or getattr(self.caps, name) < 1:
                self._fail(f"caps.{name} must be a positive integer", "caps", name)
        for name in ("num_runs", "horizon"):
            if not isinstance(getattr(self.simulation, name), int) or getattr(self.simulation, name) < 1:
                self._fail(f"simulation.{name} must be a positive integer", "simulation", name)

        for name in ("horizons", "oracle_horizons"):
            value = getattr(self, name)
            if not isinstance(value, list) or not value or not all(isinstance(v, int) and v >= 1 for v in value):
                self._fail(f"{name} must be a non-empty list of positive integers", name)
        if not isinstance(self.epsilons, list) or not all(_is_number(e) and e > 0 for e in self.epsilons):
            self._fail("epsilons must be a list of positive numbers", "epsilons")
        if not _is_number(self.beta) or not 0 < self.beta < 1:
            self._fail("beta must lie in (0, 1)", "beta")
        if not isinstance(self.seed, int) or self.seed < 0:
            self._fail("seed must be a non-negative integer", "seed")
        if not isinstance(self.threads, int) or self.threads < 1:
            self._fail("threads must be a positive integer", "threads")
        if not isinstance(self.output_dir, str):
            self._fail("output_dir must be a string", "output_dir")
        if str(self.log_level).upper() not in LEVELS:
            self._fail(f"log_level must be one of {', '.join(LEVELS)}", "log_level")

    def to_dict(self) -> Dict[str, Any]:
        """Serializable form; from_dict(to_dict()) reproduces the config."""
        data = {f.name: getattr(self, f.name) for f in fields(self) if not f.name.startswith("_")}
        for key in _SECTIONS:
            data[key] = asdict(data[key])
        channel = self.channel
        if channel.kind == "noiseless":
            data["channel"] = "noiseless"
        elif channel.kind == "bsc":
            data["channel"] = {"bsc": channel.epsilon}
        else:
            data["channel"] = {"matrix": channel.matrix}
        return data

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
        return path

    def build_model(self):
        from ..source import MarkovModel

        try:
            return MarkovModel.from_lists(self.model.transition, self.model.initial)
        except ModelError as e:
            self._fail(f"invalid model: {e}", "model")

    def build_distortion(self):
        from ..quantizer import DistortionSpec

        try:
            if self.distortion == "hamming":
                return DistortionSpec.hamming(len(self.model.transition))
            return DistortionSpec(self.distortion)
        except ModelError as e:
            self._fail(f"invalid distortion: {e}", "distortion")

    def build_channel(self):
        """Channel object, or None for the noiseless setting."""
        from ..channel import Channel

        try:
            if self.channel.kind == "noiseless":
                return None
            if self.channel.kind == "bsc":
                return Channel.bsc(self.channel.epsilon)
            return Channel(self.channel.matrix)
        except ModelError as e:
            self._fail(f"invalid channel: {e}", "channel")


def resolve_threads(flag: Optional[int], config: Optional[ExperimentConfig] = None) -> int:
    """--threads, then $ZDQ_THREADS, then the config value, then 1."""
    if flag is not None:
        threads = flag
    elif os.environ.get(THREADS_ENV):
        try:
            threads = int(os.environ[THREADS_ENV])
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got '{os.environ[THREADS_ENV]}'")
    elif config is not None:
        threads = config.threads
    else:
        threads = 1
    if threads < 1:
        raise ConfigError(f"Thread count must be >= 1, got {threads}")
    return threads
