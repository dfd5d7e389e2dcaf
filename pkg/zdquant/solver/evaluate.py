"""Exact and Monte Carlo evaluation of encoder policies."""

from typing import Dict, Optional, Tuple

import numpy as np

from ..batch import BatchRunner, child_seeds
from ..belief import ZERO_MASS
from ..channel import Channel
from ..codec import run_session
from ..policy import PeriodicPolicy, Policy
from ..quantizer import DistortionSpec, likelihood_matrix
from ..source import BeliefLike, MarkovModel, as_probs, stationary_distribution
from ..utils.exceptions import DimensionMismatch, TreeTooLarge, ZeroProbabilitySymbol
from ..utils.file_logger import get_logger
from .finite_horizon import merge_key

DEFAULT_EVAL_CAP = 200_000

# (true belief, belief the codec holds, probability of reaching the node)
_Node = Tuple[np.ndarray, np.ndarray, float]


def _expand(node: _Node, policy: Policy, t: int, distortion: DistortionSpec, channel):
    true, held, _ = node
    belief = policy.prepare(held, t)
    likelihood = likelihood_matrix(policy.select(belief), channel)
    actual = true * likelihood
    assumed = belief * likelihood
    # Reproductions come from the codec's belief, distortion from the true law
    choice = np.where(assumed.sum(axis=1) > 0.0, np.argmin(assumed @ distortion.matrix, axis=1), 0)
    expected = actual @ distortion.matrix
    cost = float(expected[np.arange(expected.shape[0]), choice].sum())
    return actual, assumed, cost


def evaluate_policy_exact(
    policy: Policy,
    model: MarkovModel,
    distortion: DistortionSpec,
    horizon: int,
    start: Optional[BeliefLike] = None,
    channel: Optional[Channel] = None,
    cap: int = DEFAULT_EVAL_CAP,
) -> float:
    """(1/T) E[Σ_{t<T} d(X_t, X̂_t)] by forward expansion of the belief tree.

    Nodes carry the true conditional law next to the belief the encoder and
    decoder hold, which differ only after a periodic reset. Equal nodes are
    merged and their weights added; no sampling is involved.
    """
    if horizon < 1:
        raise DimensionMismatch(f"horizon must be >= 1, got {horizon}")
    initial = model.initial.probs if start is None else as_probs(start)
    if initial.size != model.num_states:
        raise DimensionMismatch(f"Start belief has {initial.size} states, model {model.num_states}")

    layer: Dict[tuple, _Node] = {merge_key(np.concatenate([initial, initial])): (initial, initial, 1.0)}
    total = 0.0
    for t in range(horizon):
        following: Dict[tuple, _Node] = {}
        for node in layer.values():
            weight = node[2]
            actual, assumed, cost = _expand(node, policy, t, distortion, channel)
            total += weight * cost
            if t + 1 == horizon:
                continue
            mass = actual.sum(axis=1)
            held_mass = assumed.sum(axis=1)
            for s in np.flatnonzero(mass > ZERO_MASS):
                if held_mass[s] <= ZERO_MASS:
                    raise ZeroProbabilitySymbol(
                        f"Symbol {s} is possible but has zero mass under the codec belief", symbol=int(s)
                    )
                true_child = (actual[s] @ model.transition) / mass[s]
                held_child = (assumed[s] @ model.transition) / held_mass[s]
                key = merge_key(np.concatenate([true_child, held_child]))
                reached = weight * mass[s]
                if key in following:
                    following[key] = (following[key][0], following[key][1], following[key][2] + reached)
                else:
                    following[key] = (true_child, held_child, reached)
        if len(following) > cap:
            raise TreeTooLarge(
                f"Policy evaluation tree has {len(following)} beliefs at stage {t + 1}, cap {cap}",
                size=len(following),
                cap=cap,
            )
        layer = following
    return total / horizon


def evaluate_periodic_exact(
    policy: PeriodicPolicy,
    model: MarkovModel,
    distortion: DistortionSpec,
    channel: Optional[Channel] = None,
    cap: int = DEFAULT_EVAL_CAP,
) -> float:
    """Exact per-period cost of a periodic policy from a stationary start.

    Each period sees X at its stationary law and a freshly reset codec, so one
    period gives the infinite-horizon average.
    """
    stationary = stationary_distribution(model)
    return evaluate_policy_exact(
        policy, model.with_initial(stationary), distortion, policy.period, start=stationary,
        channel=channel, cap=cap,
    )


def simulate_policy(
    policy: Policy,
    model: MarkovModel,
    distortion: DistortionSpec,
    channel: Optional[Channel],
    horizon: int,
    num_runs: int,
    seed: int,
    threads: int = 1,
) -> Tuple[float, float]:
    """Mean and standard error of the per-run average distortion over seeded codec sessions."""
    if num_runs < 1:
        raise DimensionMismatch(f"num_runs must be >= 1, got {num_runs}")
    seeds = child_seeds(seed, num_runs)

    def one_run(run_seed):
        return run_session(model, channel, policy, distortion, horizon, run_seed).mean_distortion

    runner = BatchRunner(threads, description="codec sessions")
    samples = np.array(runner.map(one_run, seeds))
    mean = float(samples.mean())
    error = float(samples.std(ddof=1) / np.sqrt(num_runs)) if num_runs > 1 else 0.0
    get_logger().info(f"Simulated {num_runs} sessions of length {horizon}: {mean:.6g} ± {error:.3g}")
    return mean, error
