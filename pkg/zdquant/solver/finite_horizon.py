"""Exact finite-horizon dynamic programming on the reachable belief tree."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..channel import Channel
from ..quantizer import DistortionSpec, Quantizer, likelihood_matrix
from ..source import BeliefLike, MarkovModel, as_probs
from ..utils.exceptions import DimensionMismatch, TreeTooLarge
from ..utils.file_logger import get_logger
from .kernel import action_set, branch

DEFAULT_TREE_CAP = 10 ** 6
MERGE_DECIMALS = 14


def merge_key(probs: np.ndarray) -> tuple:
    """Beliefs equal to MERGE_DECIMALS decimals share a tree node."""
    return tuple(np.round(probs, MERGE_DECIMALS) + 0.0)


@dataclass
class FiniteHorizonPlan:
    """J^T_t on the beliefs reachable from π₀ and the minimizing quantizers.

    Stage t holds beliefs[t] (N_t, |X|) and values[t] (N_t,); stage T values
    are zero. choices[t][i] indexes `actions`, and children[t][i, s] is the
    stage t+1 node reached on symbol s (-1 for impossible symbols).
    """

    horizon: int
    actions: Tuple[Quantizer, ...]
    beliefs: List[np.ndarray] = field(default_factory=list)
    values: List[np.ndarray] = field(default_factory=list)
    choices: List[np.ndarray] = field(default_factory=list)
    children: List[np.ndarray] = field(default_factory=list)
    _index: List[Dict[tuple, int]] = field(default_factory=list, repr=False)

    @property
    def value(self) -> float:
        """J^T_0(π₀): the optimal expected average distortion."""
        return float(self.values[0][0])

    @property
    def first_action(self) -> Quantizer:
        return self.actions[int(self.choices[0][0])]

    @property
    def tree_size(self) -> int:
        return sum(len(b) for b in self.beliefs)

    def node(self, t: int, belief: BeliefLike) -> int:
        """Index of a reachable belief at stage t."""
        try:
            return self._index[t][merge_key(as_probs(belief))]
        except KeyError:
            raise KeyError(f"Belief {as_probs(belief)} is not reachable at stage {t}")

    def action_at(self, t: int, belief: BeliefLike) -> Quantizer:
        return self.actions[int(self.choices[t][self.node(t, belief)])]


def estimated_tree_size(num_actions: int, num_outputs: int, horizon: int) -> int:
    """Σ_{t<T} (A·S)^t: the unmerged tree size."""
    branching = num_actions * num_outputs
    return sum(branching ** t for t in range(horizon))


def finite_horizon_dp(
    model: MarkovModel,
    distortion: DistortionSpec,
    num_symbols: int,
    horizon: int,
    channel: Optional[Channel] = None,
    cap: int = DEFAULT_TREE_CAP,
) -> FiniteHorizonPlan:
    """Backward recursion J_T ≡ 0, J_t(π) = min_Q [c(π,Q)/T + E J_{t+1}(π')] from π₀.

    The tree grows forward over every action and symbol, merging equal
    beliefs; TreeTooLarge is raised as soon as the merged tree exceeds `cap`.
    """
    if horizon < 1:
        raise DimensionMismatch(f"horizon must be >= 1, got {horizon}")
    logger = get_logger()
    actions = tuple(action_set(model.num_states, num_symbols, channel))
    likelihoods = [likelihood_matrix(q, channel) for q in actions]
    logger.debug(
        f"Finite-horizon DP: T={horizon}, {len(actions)} actions, "
        f"unmerged tree bound {estimated_tree_size(len(actions), likelihoods[0].shape[0], horizon)}"
    )

    plan = FiniteHorizonPlan(horizon=horizon, actions=actions)
    stage = model.initial.probs[None, :]
    plan.beliefs.append(stage)
    plan._index.append({merge_key(stage[0]): 0})
    costs: List[np.ndarray] = []
    masses: List[np.ndarray] = []
    total = 1

    for t in range(horizon):
        stage = plan.beliefs[t]
        stage_cost = np.empty((len(stage), len(actions)))
        stage_mass = np.empty((len(stage), len(actions), likelihoods[0].shape[0]))
        stage_children = np.full(stage_mass.shape, -1, dtype=np.int64)
        index: Dict[tuple, int] = {}
        reached: List[np.ndarray] = []
        for a, likelihood in enumerate(likelihoods):
            cost, mass, children = branch(stage, likelihood, model.transition, distortion)
            stage_cost[:, a] = cost
            stage_mass[:, a] = mass
            if t + 1 == horizon:
                continue
            for i, s in zip(*np.nonzero(mass)):
                key = merge_key(children[i, s])
                if key not in index:
                    index[key] = len(reached)
                    reached.append(children[i, s])
                stage_children[i, a, s] = index[key]
            if total + len(reached) > cap:
                raise TreeTooLarge(
                    f"Reachable belief tree exceeds the cap {cap} at stage {t + 1}",
                    size=total + len(reached),
                    cap=cap,
                )
        costs.append(stage_cost)
        masses.append(stage_mass)
        plan.children.append(stage_children)
        if t + 1 < horizon:
            total += len(reached)
            plan.beliefs.append(np.array(reached))
            plan._index.append(index)

    plan.values = [None] * (horizon + 1)
    plan.choices = [None] * horizon
    plan.values[horizon] = np.zeros(0)
    future = None
    for t in range(horizon - 1, -1, -1):
        q = costs[t] / horizon
        if future is not None:
            lookup = np.where(plan.children[t] >= 0, future[np.maximum(plan.children[t], 0)], 0.0)
            q = q + (masses[t] * lookup).sum(axis=2)
        best = np.argmin(q, axis=1)
        plan.choices[t] = best
        plan.values[t] = q[np.arange(q.shape[0]), best]
        future = plan.values[t]
    logger.info(f"Finite-horizon DP: T={horizon}, {plan.tree_size} tree nodes, J={plan.value:.12g}")
    return plan
