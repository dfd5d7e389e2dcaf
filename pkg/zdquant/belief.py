"""Belief filtering, the L1 Wasserstein metric and simplex discretization."""

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Optional, Union

import numpy as np
from scipy.optimize import linprog

from .channel import Channel
from .quantizer import Quantizer, likelihood_matrix
from .source import Belief, BeliefLike, MarkovModel, as_probs
from .utils.exceptions import DimensionMismatch, GridTooLarge, ZeroProbabilitySymbol

__all__ = [
    "Channel",
    "BeliefGrid",
    "filter_update",
    "symbol_probability",
    "noisy_filter_update",
    "observation_probability",
    "posterior",
    "wasserstein1",
    "transport_wasserstein1",
    "optimal_coupling",
    "project_to_grid",
]

ZERO_MASS = 1e-15
DEFAULT_GRID_CAP = 2_000_000
# Round-half-down window for projection ties
TIE_WINDOW = 1e-9

TransitionLike = Union[MarkovModel, np.ndarray]


def _transition(model: TransitionLike) -> np.ndarray:
    if isinstance(model, MarkovModel):
        return model.transition
    return np.asarray(model, dtype=float)


def bayes_step(probs: np.ndarray, likelihood: np.ndarray, transition: np.ndarray, symbol: int) -> np.ndarray:
    """Condition on the observed symbol, then propagate through P."""
    weighted = probs * likelihood
    mass = weighted.sum()
    if mass <= ZERO_MASS:
        raise ZeroProbabilitySymbol(
            f"Symbol {symbol} has probability {mass:.3g} under the current belief", symbol=symbol
        )
    return (weighted @ transition) / mass


def symbol_probability(belief: BeliefLike, quantizer: Quantizer, symbol: int) -> float:
    """π(Q⁻¹(q))."""
    probs = as_probs(belief)
    return float(probs[np.asarray(quantizer.labels) == symbol].sum())


def observation_probability(
    belief: BeliefLike, quantizer: Quantizer, symbol: int, channel: Optional[Channel] = None
) -> float:
    """Pr(q' | π, Q) = Σ_x π(x) T(q'|Q(x)); equals symbol_probability without a channel."""
    probs = as_probs(belief)
    return float((likelihood_matrix(quantizer, channel)[symbol] * probs).sum())


def filter_update(belief: BeliefLike, quantizer: Quantizer, symbol: int, model: TransitionLike) -> Belief:
    """Noiseless filtering equation π' = (1/π(Q⁻¹(q))) Σ_{x∈Q⁻¹(q)} P(·|x)π(x)."""
    probs = as_probs(belief)
    likelihood = (np.asarray(quantizer.labels) == symbol).astype(float)
    return Belief(bayes_step(probs, likelihood, _transition(model), symbol))


def noisy_filter_update(
    belief: BeliefLike, quantizer: Quantizer, output: int, model: TransitionLike, channel: Channel
) -> Belief:
    """Filter over a noisy channel: π'(x') ∝ Σ_x π(x) T(q'|Q(x)) P(x'|x)."""
    probs = as_probs(belief)
    likelihood = likelihood_matrix(quantizer, channel)[output]
    return Belief(bayes_step(probs, likelihood, _transition(model), output))


def posterior(
    belief: BeliefLike, quantizer: Quantizer, output: int, channel: Optional[Channel] = None
) -> Belief:
    """Within-step Bayes update Pr(X_t | history, q'_t), before propagation."""
    probs = as_probs(belief)
    weighted = probs * likelihood_matrix(quantizer, channel)[output]
    mass = weighted.sum()
    if mass <= ZERO_MASS:
        raise ZeroProbabilitySymbol(f"Symbol {output} has zero probability", symbol=output)
    return Belief(weighted / mass)


def _same_size(mu: np.ndarray, zeta: np.ndarray):
    if mu.shape != zeta.shape:
        raise DimensionMismatch(f"Distributions have shapes {mu.shape} and {zeta.shape}")


def wasserstein1(mu: BeliefLike, zeta: BeliefLike) -> float:
    """ρ₁ for states embedded as consecutive integers: Σ_k |F_μ(k) − F_ζ(k)|."""
    mu, zeta = as_probs(mu), as_probs(zeta)
    _same_size(mu, zeta)
    return float(np.abs(np.cumsum(mu - zeta)[:-1]).sum())


def transport_wasserstein1(mu: BeliefLike, zeta: BeliefLike) -> float:
    """ρ₁ as a transport linear program; reference value for wasserstein1."""
    mu, zeta = as_probs(mu), as_probs(zeta)
    _same_size(mu, zeta)
    n = mu.size
    states = np.arange(n)
    cost = np.abs(states[:, None] - states[None, :]).astype(float)
    a_eq = []
    for i in range(n):
        row = np.zeros((n, n))
        row[i, :] = 1.0
        a_eq.append(row.reshape(-1))
    for j in range(n):
        col = np.zeros((n, n))
        col[:, j] = 1.0
        a_eq.append(col.reshape(-1))
    b_eq = np.concatenate([mu, zeta])
    result = linprog(cost.reshape(-1), A_eq=np.array(a_eq)[:-1], b_eq=b_eq[:-1], bounds=(0, None))
    return float(result.fun)


def optimal_coupling(mu: BeliefLike, zeta: BeliefLike) -> np.ndarray:
    """Monotone (north-west corner) joint law λ with marginals μ, ζ; optimal for |x−y|."""
    mu, zeta = as_probs(mu).copy(), as_probs(zeta).copy()
    _same_size(mu, zeta)
    n = mu.size
    plan = np.zeros((n, n))
    i = j = 0
    while i < n and j < n:
        moved = min(mu[i], zeta[j])
        plan[i, j] += moved
        mu[i] -= moved
        zeta[j] -= moved
        if mu[i] <= 1e-15:
            i += 1
        else:
            j += 1
    return plan


@dataclass(frozen=True, eq=False)
class BeliefGrid:
    """Type lattice of beliefs with denominator n, in lexicographic order."""

    num_states: int
    resolution: int
    cap: int = DEFAULT_GRID_CAP

    def __post_init__(self):
        if self.num_states < 1 or self.resolution < 1:
            raise DimensionMismatch(
                f"Grid needs |X| >= 1 and n >= 1, got {self.num_states}, {self.resolution}"
            )
        size = self.expected_size(self.num_states, self.resolution)
        if size > self.cap:
            raise GridTooLarge(f"Grid of {size} points exceeds the cap {self.cap}", size=size, cap=self.cap)
        n, k = self.resolution, self.num_states
        counts = np.empty((size, k), dtype=np.int64)
        for row, bars in enumerate(combinations(range(n + k - 1), k - 1)):
            edges = (-1,) + bars + (n + k - 1,)
            counts[row] = np.diff(edges) - 1
        radix = (n + 1) ** np.arange(k - 1, -1, -1, dtype=np.int64)
        codes = counts @ radix
        points = counts / n
        for array in (counts, codes, points):
            array.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "_radix", radix)

    @staticmethod
    def expected_size(num_states: int, resolution: int) -> int:
        return comb(resolution + num_states - 1, num_states - 1)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def covering_radius(self) -> float:
        """Upper bound |X|/(2n) on ρ₁ from any belief to its projection."""
        return self.num_states / (2.0 * self.resolution)

    def belief(self, index: int) -> Belief:
        return Belief(self.points[index])

    def project_many(self, beliefs: np.ndarray) -> np.ndarray:
        """Vectorized project_to_grid over rows of a (B, |X|) array."""
        probs = np.atleast_2d(np.asarray(beliefs, dtype=float))
        if probs.shape[1] != self.num_states:
            raise DimensionMismatch(f"Beliefs have {probs.shape[1]} states, grid has {self.num_states}")
        n = self.resolution
        scaled = np.cumsum(probs, axis=1)[:, :-1] * n
        # Coordinate-wise nearest CDF level, ties rounded down (lexicographically smallest)
        levels = np.clip(np.ceil(scaled - 0.5 - TIE_WINDOW), 0, n).astype(np.int64)
        levels = np.maximum.accumulate(levels, axis=1) if levels.shape[1] else levels
        bounds = np.concatenate(
            [np.zeros((probs.shape[0], 1), dtype=np.int64), levels, np.full((probs.shape[0], 1), n)],
            axis=1,
        )
        counts = np.diff(bounds, axis=1)
        index = np.searchsorted(self.codes, counts @ self._radix)
        return index

    def project(self, belief: BeliefLike) -> int:
        return int(self.project_many(as_probs(belief)[None, :])[0])


def project_to_grid(belief: BeliefLike, grid: BeliefGrid) -> int:
    """Index of the ρ₁-nearest grid point (lexicographically smallest on ties)."""
    return grid.project(belief)
