"""Discrete memoryless channels T(q'|q) between encoder and decoder."""

from dataclasses import dataclass

import numpy as np

from .utils.exceptions import DimensionMismatch, NegativeEntry, NonStochasticMatrix

ROW_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic M×M' matrix; row q is the output law for input q."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or 0 in matrix.shape:
            raise DimensionMismatch(f"Channel matrix must be 2-D and non-empty, got {matrix.shape}")
        if np.any(matrix < 0):
            raise NegativeEntry("Channel matrix has a negative entry")
        sums = matrix.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOLERANCE)
        if bad.size:
            raise NonStochasticMatrix(
                f"Channel row {bad[0]} sums to {sums[bad[0]]:.12g}", row=int(bad[0])
            )
        matrix = matrix / sums[:, None]
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "_cdf", np.cumsum(matrix, axis=1))

    @property
    def input_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def output_size(self) -> int:
        return self.matrix.shape[1]

    @property
    def is_noiseless(self) -> bool:
        """Identity channel: output always equals input."""
        return self.input_size == self.output_size and bool(
            np.array_equal(self.matrix, np.eye(self.input_size))
        )

    @classmethod
    def noiseless(cls, num_symbols: int) -> "Channel":
        return cls(np.eye(num_symbols))

    @classmethod
    def bsc(cls, epsilon: float) -> "Channel":
        """Binary symmetric channel with crossover probability epsilon."""
        if not 0.0 <= epsilon <= 1.0:
            raise NonStochasticMatrix(f"BSC crossover must lie in [0, 1], got {epsilon}")
        return cls(np.array([[1.0 - epsilon, epsilon], [epsilon, 1.0 - epsilon]]))

    @classmethod
    def uniform(cls, input_size: int, output_size: int) -> "Channel":
        return cls(np.full((input_size, output_size), 1.0 / output_size))

    def transmit(self, symbol: int, rng: np.random.Generator) -> int:
        """Draw the channel output for one input; consumes exactly one uniform."""
        u = rng.random()
        cdf = self._cdf[symbol]
        return int(min(np.searchsorted(cdf, u, side="right"), cdf.size - 1))

    def describe(self) -> str:
        if self.is_noiseless:
            return f"noiseless({self.input_size})"
        return f"matrix {self.input_size}x{self.output_size}"
