"""Grid belief MDP: per-action costs, branch probabilities and projected children.

Every infinite-horizon routine (discounted VI, relative VI, the ACOE residual)
runs the same Bellman operator over a precomputed BeliefKernel, so the
filter, the projection and the stage cost are evaluated once per
(grid point, action, symbol) instead of once per sweep.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..batch import BatchRunner
from ..belief import ZERO_MASS, BeliefGrid
from ..channel import Channel
from ..quantizer import (
    DEFAULT_ACTION_CAP,
    LABELED,
    PARTITION,
    DistortionSpec,
    Quantizer,
    enumerate_quantizers,
    likelihood_matrix,
)
from ..source import BeliefLike, MarkovModel, as_probs
from ..utils.exceptions import DimensionMismatch
from ..utils.file_logger import get_logger


@dataclass(frozen=True, eq=False)
class ValueFunction:
    """Values on the points of a BeliefGrid; off-grid beliefs are looked up by projection."""

    grid: BeliefGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.grid),):
            raise DimensionMismatch(f"{values.size} values for a grid of {len(self.grid)} points")
        if not np.all(np.isfinite(values)):
            raise DimensionMismatch("Value function has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __call__(self, belief: BeliefLike) -> float:
        return float(self.values[self.grid.project(belief)])

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    @property
    def span(self) -> float:
        return float(self.values.max() - self.values.min())

    @classmethod
    def zeros(cls, grid: BeliefGrid) -> "ValueFunction":
        return cls(grid, np.zeros(len(grid)))


def action_set(
    num_states: int,
    num_symbols: int,
    channel: Optional[Channel] = None,
    cap: int = DEFAULT_ACTION_CAP,
) -> List[Quantizer]:
    """Quantizers the solvers range over.

    Codecells are all that matter without a channel or over an identity channel,
    so those use one quantizer per partition; other channels see the labels.
    """
    if channel is not None and channel.input_size != num_symbols:
        raise DimensionMismatch(f"Channel has {channel.input_size} inputs but M={num_symbols}")
    mode = PARTITION if channel is None or channel.is_noiseless else LABELED
    return enumerate_quantizers(num_states, num_symbols, mode, cap)


def branch(
    points: np.ndarray,
    likelihood: np.ndarray,
    transition: np.ndarray,
    distortion: DistortionSpec,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One action applied to a batch of beliefs.

    Returns the stage costs (B,), the observed-symbol probabilities (B, S) with
    impossible symbols zeroed, and the filtered beliefs (B, S, |X|). Rows of
    impossible symbols are left as zeros.
    """
    weighted = points[:, None, :] * likelihood[None, :, :]
    mass = weighted.sum(axis=2)
    cost = (weighted @ distortion.matrix).min(axis=2).sum(axis=1)
    possible = mass > ZERO_MASS
    propagated = weighted @ transition
    children = np.where(possible[..., None], propagated / np.where(possible, mass, 1.0)[..., None], 0.0)
    return cost, np.where(possible, mass, 0.0), children


@dataclass(frozen=True, eq=False)
class BeliefKernel:
    """Transition structure of the grid MDP.

    cost[g, a] is c(z_g, Q_a); prob[g, a, s] the probability of observing s;
    child[g, a, s] the grid index of the projected filtered belief (0 where
    prob is 0, which never contributes to an expectation).
    """

    grid: BeliefGrid
    actions: Tuple[Quantizer, ...]
    cost: np.ndarray
    prob: np.ndarray
    child: np.ndarray

    @property
    def num_actions(self) -> int:
        return len(self.actions)

    def q_values(self, h: np.ndarray, beta: float) -> np.ndarray:
        """c(z, a) + β Σ_s p(s|z, a) h(child): shape (grid, actions)."""
        return self.cost + beta * (self.prob * h[self.child]).sum(axis=2)

    def backup(self, h: np.ndarray, beta: float) -> Tuple[np.ndarray, np.ndarray]:
        """Bellman operator; ties resolve to the smallest action index."""
        q = self.q_values(h, beta)
        best = np.argmin(q, axis=1)
        return q[np.arange(q.shape[0]), best], best

    def policy_step(self, policy: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cost, probabilities and children of the stationary policy on the grid."""
        rows = np.arange(len(self.grid))
        return self.cost[rows, policy], self.prob[rows, policy], self.child[rows, policy]


def build_kernel(
    model: MarkovModel,
    distortion: DistortionSpec,
    grid: BeliefGrid,
    actions: Sequence[Quantizer],
    channel: Optional[Channel] = None,
    threads: int = 1,
    progress: bool = False,
) -> BeliefKernel:
    """Evaluate cost, branch probabilities and projected children for every grid point and action."""
    if grid.num_states != model.num_states or distortion.num_states != model.num_states:
        raise DimensionMismatch(
            f"Grid has {grid.num_states} states, model {model.num_states}, "
            f"distortion {distortion.num_states}"
        )
    actions = tuple(actions)
    points = grid.points

    def evaluate(quantizer: Quantizer):
        cost, mass, children = branch(
            points, likelihood_matrix(quantizer, channel), model.transition, distortion
        )
        flat = children.reshape(-1, grid.num_states)
        index = np.zeros(flat.shape[0], dtype=np.int64)
        possible = mass.reshape(-1) > 0.0
        if possible.any():
            index[possible] = grid.project_many(flat[possible])
        return cost, mass, index.reshape(mass.shape)

    runner = BatchRunner(threads, description="kernel actions")
    if progress and threads == 1:
        columns = [evaluate(q) for q in tqdm(actions, desc="Building kernel", unit="action")]
    else:
        columns = runner.map(evaluate, actions)

    cost = np.stack([c for c, _, _ in columns], axis=1)
    prob = np.stack([m for _, m, _ in columns], axis=1)
    child = np.stack([i for _, _, i in columns], axis=1)
    get_logger().info(
        f"Kernel built: {len(grid)} grid points x {len(actions)} actions x {prob.shape[2]} symbols"
    )
    return BeliefKernel(grid, actions, cost, prob, child)


def bellman_backup(
    belief: BeliefLike,
    h: ValueFunction,
    beta: float,
    model: MarkovModel,
    distortion: DistortionSpec,
    actions: Sequence[Quantizer],
    channel: Optional[Channel] = None,
) -> Tuple[float, int]:
    """min over actions of c(π, Q) + β Σ_q p(q) h(project(φ(π, Q, q))) at a single belief."""
    probs = as_probs(belief)[None, :]
    totals = np.empty(len(actions))
    for a, quantizer in enumerate(actions):
        cost, mass, children = branch(
            probs, likelihood_matrix(quantizer, channel), model.transition, distortion
        )
        expectation = 0.0
        for s in np.flatnonzero(mass[0] > 0.0):
            expectation += mass[0, s] * h.values[h.grid.project(children[0, s])]
        totals[a] = cost[0] + beta * expectation
    best = int(np.argmin(totals))
    return float(totals[best]), best
