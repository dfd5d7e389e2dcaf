"""Quantizer action space, distortion measures and the per-stage cost c(π, Q)."""

from dataclasses import dataclass
from itertools import product
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .channel import Channel
from .source import BeliefLike, as_probs
from .utils.exceptions import ActionSpaceTooLarge, DimensionMismatch, NegativeEntry

DEFAULT_ACTION_CAP = 10 ** 6

LABELED = "labeled"
PARTITION = "partition"
DEDUP_MODES = (LABELED, PARTITION)


@dataclass(frozen=True)
class Quantizer:
    """Map Q: X -> {0..M-1}; labels[x] is the channel symbol sent for state x."""

    labels: Tuple[int, ...]
    num_symbols: int

    def __post_init__(self):
        labels = tuple(int(label) for label in self.labels)
        if not labels:
            raise DimensionMismatch("Quantizer needs at least one source state")
        if self.num_symbols < 1:
            raise DimensionMismatch(f"num_symbols must be >= 1, got {self.num_symbols}")
        if min(labels) < 0 or max(labels) >= self.num_symbols:
            raise DimensionMismatch(
                f"Quantizer labels {labels} out of range for M={self.num_symbols}"
            )
        object.__setattr__(self, "labels", labels)

    def __call__(self, state: int) -> int:
        return self.labels[state]

    @property
    def num_states(self) -> int:
        return len(self.labels)

    def cell(self, symbol: int) -> Tuple[int, ...]:
        """Codecell Q⁻¹(symbol)."""
        return tuple(x for x, label in enumerate(self.labels) if label == symbol)

    def cells(self) -> List[Tuple[int, ...]]:
        return [self.cell(symbol) for symbol in range(self.num_symbols)]

    def canonical(self) -> "Quantizer":
        """Relabel cells in order of first appearance."""
        mapping = {}
        for label in self.labels:
            mapping.setdefault(label, len(mapping))
        return Quantizer(tuple(mapping[label] for label in self.labels), self.num_symbols)

    def is_injective(self) -> bool:
        return len(set(self.labels)) == len(self.labels)

    @classmethod
    def constant(cls, num_states: int, num_symbols: int, symbol: int = 0) -> "Quantizer":
        return cls((symbol,) * num_states, num_symbols)

    @classmethod
    def identity(cls, num_states: int, num_symbols: int = None) -> "Quantizer":
        return cls(tuple(range(num_states)), num_symbols or num_states)


@dataclass(frozen=True, eq=False)
class DistortionSpec:
    """Single-letter distortion d(x, x̂) as an |X|×|X̂| matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or 0 in matrix.shape:
            raise DimensionMismatch(f"Distortion matrix must be 2-D and non-empty, got {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise DimensionMismatch("Distortion matrix has non-finite entries")
        if np.any(matrix < 0):
            raise NegativeEntry("Distortion matrix has a negative entry")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "sup_norm", float(matrix.max()))

    @property
    def num_states(self) -> int:
        return self.matrix.shape[0]

    @property
    def reproduction_size(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def hamming(cls, num_states: int, reproduction_size: int = None) -> "DistortionSpec":
        size = reproduction_size or num_states
        matrix = np.ones((num_states, size))
        for x in range(min(num_states, size)):
            matrix[x, x] = 0.0
        return cls(matrix)

    def scaled(self, factor: float) -> "DistortionSpec":
        return DistortionSpec(self.matrix * factor)


def _labeled(num_states: int, num_symbols: int) -> Iterator[Tuple[int, ...]]:
    return product(range(num_symbols), repeat=num_states)


def _restricted_growth(num_states: int, num_symbols: int) -> Iterator[Tuple[int, ...]]:
    """Canonical partition labelings in lexicographic order."""
    def extend(prefix: Tuple[int, ...], used: int):
        if len(prefix) == num_states:
            yield prefix
            return
        for label in range(min(used + 1, num_symbols)):
            yield from extend(prefix + (label,), max(used, label + 1))

    yield from extend((), 0)


def enumerate_quantizers(
    num_states: int,
    num_symbols: int,
    dedup_mode: str = LABELED,
    cap: int = DEFAULT_ACTION_CAP,
) -> List[Quantizer]:
    """All M-cell quantizers on X, optionally one per induced partition."""
    if num_states < 1 or num_symbols < 1:
        raise DimensionMismatch(f"Need |X| >= 1 and M >= 1, got {num_states}, {num_symbols}")
    if dedup_mode not in DEDUP_MODES:
        raise DimensionMismatch(f"Unknown dedup mode '{dedup_mode}'. Supported: {DEDUP_MODES}")

    if dedup_mode == LABELED:
        size = num_symbols ** num_states
        if size > cap:
            raise ActionSpaceTooLarge(
                f"M^|X| = {size} quantizers exceed the cap {cap}", size=size, cap=cap
            )
        return [Quantizer(labels, num_symbols) for labels in _labeled(num_states, num_symbols)]

    quantizers = []
    for labels in _restricted_growth(num_states, num_symbols):
        if len(quantizers) >= cap:
            raise ActionSpaceTooLarge(
                f"More than {cap} partitions of {num_states} states", size=len(quantizers) + 1, cap=cap
            )
        quantizers.append(Quantizer(labels, num_symbols))
    return quantizers


def likelihood_matrix(quantizer: Quantizer, channel: Optional[Channel] = None) -> np.ndarray:
    """S×|X| array of Pr(observed symbol s | X=x) under quantizer Q.

    Without a channel this is the codecell indicator 1{Q(x)=s}; with a channel
    it is T(s|Q(x)).
    """
    labels = np.asarray(quantizer.labels)
    if channel is None:
        return np.eye(quantizer.num_symbols)[labels].T
    if channel.input_size != quantizer.num_symbols:
        raise DimensionMismatch(
            f"Channel has {channel.input_size} inputs, quantizer uses {quantizer.num_symbols} symbols"
        )
    return channel.matrix[labels].T


def _check_dims(probs: np.ndarray, quantizer: Quantizer, distortion: DistortionSpec):
    if probs.size != quantizer.num_states or distortion.num_states != quantizer.num_states:
        raise DimensionMismatch(
            f"Belief has {probs.size} states, quantizer {quantizer.num_states}, "
            f"distortion {distortion.num_states}"
        )


def stage_cost(
    belief: BeliefLike,
    quantizer: Quantizer,
    distortion: DistortionSpec,
    channel: Optional[Channel] = None,
) -> float:
    """c(π, Q) = Σ_s min_x̂ Σ_x π(x) Pr(s|x, Q) d(x, x̂)."""
    probs = as_probs(belief)
    _check_dims(probs, quantizer, distortion)
    weighted = likelihood_matrix(quantizer, channel) * probs[None, :]
    return float((weighted @ distortion.matrix).min(axis=1).sum())


def reproduction_for(weights: np.ndarray, distortion: DistortionSpec) -> int:
    """argmin_x̂ Σ_x w(x) d(x, x̂); smallest index on ties, 0 for zero mass."""
    if weights.sum() <= 0.0:
        return 0
    return int(np.argmin(weights @ distortion.matrix))


def optimal_reproduction(
    belief: BeliefLike,
    quantizer: Quantizer,
    distortion: DistortionSpec,
    cell_index: int,
    channel: Optional[Channel] = None,
) -> int:
    """Best reproduction symbol for received symbol `cell_index`."""
    probs = as_probs(belief)
    _check_dims(probs, quantizer, distortion)
    weights = likelihood_matrix(quantizer, channel)[cell_index] * probs
    return reproduction_for(weights, distortion)


def prior_guess_cost(belief: BeliefLike, distortion: DistortionSpec) -> float:
    """min_x̂ E_π[d(X, x̂)]: the cost of decoding from the prior alone."""
    return float((as_probs(belief) @ distortion.matrix).min())


def best_memoryless_cost(
    belief: BeliefLike, distortion: DistortionSpec, num_symbols: int
) -> float:
    """min over single quantizers of c(π, Q); the memoryless optimum for i.i.d. sources."""
    probs = as_probs(belief)
    quantizers = enumerate_quantizers(probs.size, num_symbols, PARTITION)
    return min(stage_cost(probs, q, distortion) for q in quantizers)
