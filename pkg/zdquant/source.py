"""Finite-state Markov source: validation, structure checks and sampling."""

import hashlib
from dataclasses import dataclass
from functools import reduce
from math import gcd
from typing import Sequence, Union

import numpy as np
from scipy.linalg import solve
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .utils.exceptions import (
    DimensionMismatch,
    NegativeEntry,
    NonStochasticMatrix,
    NotIrreducible,
)

# Raise only when a row is clearly off; stored arrays are renormalized
SUM_TOLERANCE = 1e-9
STATIONARY_RESIDUAL = 1e-10


def _check_distribution(probs: np.ndarray, what: str, row: int = None):
    if probs.ndim != 1 or probs.size == 0:
        raise DimensionMismatch(f"{what} must be a non-empty vector, got shape {probs.shape}")
    if not np.all(np.isfinite(probs)):
        raise NonStochasticMatrix(f"{what} has non-finite entries", row=row)
    if np.any(probs < 0):
        raise NegativeEntry(f"{what} has a negative entry: {probs.min():.3g}")
    if np.any(probs > 1 + SUM_TOLERANCE):
        raise NonStochasticMatrix(f"{what} has an entry above 1", row=row)
    total = probs.sum()
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise NonStochasticMatrix(f"{what} sums to {total:.12g}, expected 1", row=row)


@dataclass(frozen=True, eq=False)
class Belief:
    """Probability vector on the source alphabet (the belief-MDP state)."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.probs, dtype=float)
        _check_distribution(arr, "belief")
        arr = arr / arr.sum()
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    def __len__(self) -> int:
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)

    @classmethod
    def point_mass(cls, num_states: int, state: int) -> "Belief":
        probs = np.zeros(num_states)
        probs[state] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, num_states: int) -> "Belief":
        return cls(np.full(num_states, 1.0 / num_states))

    def allclose(self, other: "BeliefLike", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.probs, as_probs(other), rtol=0.0, atol=atol))

    def key(self, decimals: int = 14) -> tuple:
        """Hashable key used to merge numerically equal beliefs."""
        return tuple(np.round(self.probs, decimals) + 0.0)


BeliefLike = Union[Belief, np.ndarray, Sequence[float]]


def as_probs(belief: BeliefLike) -> np.ndarray:
    """Return the probability vector behind a Belief or array-like."""
    if isinstance(belief, Belief):
        return belief.probs
    return np.asarray(belief, dtype=float)


@dataclass(frozen=True, eq=False)
class MarkovModel:
    """Time-homogeneous finite-state Markov chain {X_t} ~ (π₀, P)."""

    transition: np.ndarray
    initial: Belief

    def __post_init__(self):
        matrix = np.array(self.transition, dtype=float)
        initial = self.initial if isinstance(self.initial, Belief) else Belief(self.initial)
        object.__setattr__(self, "transition", matrix)
        object.__setattr__(self, "initial", initial)
        validate(self)
        matrix = matrix / matrix.sum(axis=1, keepdims=True)
        matrix.setflags(write=False)
        object.__setattr__(self, "transition", matrix)

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @classmethod
    def from_lists(cls, transition, initial="stationary") -> "MarkovModel":
        """Build from nested lists; `initial` may be the string 'stationary'."""
        matrix = np.array(transition, dtype=float)
        if isinstance(initial, str):
            if initial != "stationary":
                raise DimensionMismatch(f"Unknown initial distribution keyword: {initial}")
            provisional = cls(matrix, Belief.uniform(matrix.shape[0]))
            return provisional.with_initial(stationary_distribution(provisional))
        return cls(matrix, Belief(initial))

    def with_initial(self, initial: BeliefLike) -> "MarkovModel":
        belief = initial if isinstance(initial, Belief) else Belief(initial)
        return MarkovModel(self.transition, belief)

    def fingerprint(self) -> str:
        """SHA-256 of the transition matrix and initial distribution."""
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.transition).tobytes())
        digest.update(np.ascontiguousarray(self.initial.probs).tobytes())
        return digest.hexdigest()


def validate(model: MarkovModel) -> None:
    """Check row-stochasticity of P and that π₀ is a distribution."""
    matrix = np.asarray(model.transition, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise DimensionMismatch(f"Transition matrix must be square, got shape {matrix.shape}")
    if np.any(matrix < 0):
        raise NegativeEntry(f"Transition matrix has a negative entry: {matrix.min():.3g}")
    for row_index, row in enumerate(matrix):
        _check_distribution(row, f"transition row {row_index}", row=row_index)
    initial = as_probs(model.initial)
    if initial.size != matrix.shape[0]:
        raise DimensionMismatch(
            f"Initial distribution has {initial.size} entries, chain has {matrix.shape[0]} states"
        )
    _check_distribution(initial, "initial distribution")


def _adjacency(model: MarkovModel) -> np.ndarray:
    return (np.asarray(model.transition) > 0).astype(np.int8)


def is_irreducible(model: MarkovModel) -> bool:
    """True iff the positive-transition graph is strongly connected."""
    n_components, _ = connected_components(_adjacency(model), directed=True, connection="strong")
    return n_components == 1


def _component_period(adjacency: np.ndarray, members: np.ndarray) -> int:
    """gcd of cycle lengths inside one strongly connected component (0 if acyclic)."""
    sub = adjacency[np.ix_(members, members)]
    if not sub.any():
        return 0
    order, predecessors = breadth_first_order(sub, 0, directed=True, return_predecessors=True)
    level = np.full(len(members), -1)
    level[0] = 0
    for node in order[1:]:
        level[node] = level[predecessors[node]] + 1
    sources, targets = np.nonzero(sub)
    return reduce(gcd, (int(level[u] + 1 - level[v]) for u, v in zip(sources, targets)), 0)


def period(model: MarkovModel) -> int:
    """Largest period over states; 1 means every state is aperiodic."""
    adjacency = _adjacency(model)
    _, labels = connected_components(adjacency, directed=True, connection="strong")
    periods = [
        _component_period(adjacency, np.flatnonzero(labels == label))
        for label in np.unique(labels)
    ]
    if any(p == 0 for p in periods):
        return 0
    return max(periods)


def is_aperiodic(model: MarkovModel) -> bool:
    """True iff the gcd of cycle lengths through every state equals 1."""
    return period(model) == 1


def stationary_distribution(model: MarkovModel) -> Belief:
    """Unique invariant distribution π* with π*P = π*."""
    if not is_irreducible(model):
        raise NotIrreducible("Invariant distribution is not unique for a reducible chain")
    n = model.num_states
    system = model.transition.T - np.eye(n)
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = solve(system, rhs)
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    residual = np.abs(pi @ model.transition - pi).sum()
    if residual > STATIONARY_RESIDUAL:
        raise NotIrreducible(f"Stationary solve residual {residual:.3g} too large")
    return Belief(pi)


def n_step_marginal(model: MarkovModel, steps: int) -> Belief:
    """Marginal π₀Pᵗ of X_t."""
    probs = model.initial.probs.copy()
    for _ in range(steps):
        probs = probs @ model.transition
    return Belief(probs)


def next_states(cdf: np.ndarray, states: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Randomization-function step X_{t+1} = F(X_t, U_t) via inverse CDF rows."""
    rows = cdf[states]
    drawn = (uniforms[:, None] >= rows).sum(axis=1)
    return np.minimum(drawn, cdf.shape[1] - 1)


def draw(cdf_row: np.ndarray, uniform: float) -> int:
    return int(min(np.searchsorted(cdf_row, uniform, side="right"), cdf_row.size - 1))


def sample_path(model: MarkovModel, horizon: int, seed) -> np.ndarray:
    """Sample X_0..X_{horizon-1}; deterministic given the seed (int or SeedSequence)."""
    if horizon < 1:
        raise DimensionMismatch(f"horizon must be >= 1, got {horizon}")
    rng = np.random.default_rng(seed)
    uniforms = rng.random(horizon)
    cdf = np.cumsum(model.transition, axis=1)
    path = np.empty(horizon, dtype=np.int64)
    path[0] = draw(np.cumsum(model.initial.probs), uniforms[0])
    for t in range(1, horizon):
        path[t] = draw(cdf[path[t - 1]], uniforms[t])
    return path
