"""Walrand-Varaiya encoder policies: belief -> quantizer."""

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .belief import BeliefGrid
from .quantizer import Quantizer
from .source import Belief, BeliefLike, as_probs
from .utils.exceptions import DimensionMismatch


class Policy(Protocol):
    def prepare(self, belief: np.ndarray, t: int) -> np.ndarray:
        """Belief actually used at time t (periodic policies reset it)."""
        ...

    def select(self, belief: np.ndarray) -> Quantizer:
        """Quantizer Q_t = η̂(π_t)."""
        ...


@dataclass(frozen=True, eq=False)
class FixedPolicy:
    """The same quantizer at every step."""

    quantizer: Quantizer

    def prepare(self, belief: np.ndarray, t: int) -> np.ndarray:
        return belief

    def select(self, belief: np.ndarray) -> Quantizer:
        return self.quantizer


@dataclass(frozen=True, eq=False)
class GridPolicy:
    """Stationary policy f* tabulated on a belief grid, looked up by projection."""

    grid: BeliefGrid
    actions: Sequence[Quantizer]
    indices: np.ndarray

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64)
        if indices.shape != (len(self.grid),):
            raise DimensionMismatch(f"Policy has {indices.size} entries, grid has {len(self.grid)} points")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "actions", tuple(self.actions))

    def prepare(self, belief: np.ndarray, t: int) -> np.ndarray:
        return belief

    def action_index(self, belief: BeliefLike) -> int:
        return int(self.indices[self.grid.project(belief)])

    def select(self, belief: BeliefLike) -> Quantizer:
        return self.actions[self.action_index(belief)]


@dataclass(frozen=True, eq=False)
class PeriodicPolicy:
    """Stationary policy whose belief is reset to `reset` at every t ≡ 0 (mod period)."""

    base: Policy
    period: int
    reset: Belief

    def __post_init__(self):
        if self.period < 1:
            raise DimensionMismatch(f"period must be >= 1, got {self.period}")
        if not isinstance(self.reset, Belief):
            object.__setattr__(self, "reset", Belief(self.reset))

    def prepare(self, belief: np.ndarray, t: int) -> np.ndarray:
        if t % self.period == 0:
            return self.reset.probs
        return self.base.prepare(belief, t)

    def select(self, belief: BeliefLike) -> Quantizer:
        return self.base.select(as_probs(belief))
