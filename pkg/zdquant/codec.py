"""Online zero-delay encoder and decoder driven by a belief policy.

Both ends start from π₀ and apply the same filter to the same symbol, so
their beliefs agree bit for bit: with a noiseless channel the encoder knows
q directly, with a noisy channel it waits for the fed-back output q'.
"""

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .belief import ZERO_MASS, bayes_step
from .channel import Channel
from .policy import PeriodicPolicy, Policy
from .quantizer import DistortionSpec, Quantizer, likelihood_matrix, reproduction_for
from .source import Belief, BeliefLike, MarkovModel, as_probs, sample_path
from .utils.exceptions import DimensionMismatch, SynchronyError, ZdqError, ZeroProbabilitySymbol

BELIEF_DECIMALS = 12

SeedLike = Union[int, np.random.SeedSequence]


@dataclass(frozen=True, eq=False)
class EncoderState:
    """Encoder memory: the belief π_t, the clock and a quantizer awaiting feedback."""

    belief: np.ndarray
    policy: Policy
    model: MarkovModel
    channel: Optional[Channel] = None
    clock: int = 0
    pending: Optional[Quantizer] = None
    pending_belief: Optional[np.ndarray] = None

    @property
    def period(self) -> Optional[int]:
        return self.policy.period if isinstance(self.policy, PeriodicPolicy) else None

    @property
    def uses_feedback(self) -> bool:
        return self.channel is not None


@dataclass(frozen=True, eq=False)
class DecoderState:
    belief: np.ndarray
    policy: Policy
    model: MarkovModel
    distortion: DistortionSpec
    channel: Optional[Channel] = None
    clock: int = 0


def new_encoder(model: MarkovModel, policy: Policy, channel: Optional[Channel] = None) -> EncoderState:
    return EncoderState(belief=model.initial.probs, policy=policy, model=model, channel=channel)


def new_decoder(
    model: MarkovModel, policy: Policy, distortion: DistortionSpec, channel: Optional[Channel] = None
) -> DecoderState:
    return DecoderState(
        belief=model.initial.probs, policy=policy, model=model, distortion=distortion, channel=channel
    )


def encode_step(state: EncoderState, x: int) -> Tuple[int, EncoderState]:
    """q_t = Q_t(x_t) with Q_t = η̂(π_t)."""
    if not 0 <= x < state.model.num_states:
        raise DimensionMismatch(f"Source symbol {x} outside 0..{state.model.num_states - 1}")
    if state.pending is not None:
        raise ZdqError(f"Encoder at t={state.clock} is still waiting for feedback")
    belief = state.policy.prepare(state.belief, state.clock)
    quantizer = state.policy.select(belief)
    q = quantizer(x)
    if state.channel is None:
        likelihood = likelihood_matrix(quantizer)[q]
        updated = bayes_step(belief, likelihood, state.model.transition, q)
        return q, replace(state, belief=updated, clock=state.clock + 1)
    return q, replace(state, pending=quantizer, pending_belief=belief)


def receive_feedback(state: EncoderState, output: int) -> EncoderState:
    """Apply the noisy filter for the channel output q' fed back to the encoder."""
    if state.pending is None:
        raise ZdqError(f"Encoder at t={state.clock} has no pending channel input")
    likelihood = likelihood_matrix(state.pending, state.channel)[output]
    updated = bayes_step(state.pending_belief, likelihood, state.model.transition, output)
    return replace(state, belief=updated, clock=state.clock + 1, pending=None, pending_belief=None)


def decode_step(state: DecoderState, symbol: int) -> Tuple[int, DecoderState]:
    """Reproduce X_t from the received symbol, then advance the belief like the encoder."""
    belief = state.policy.prepare(state.belief, state.clock)
    quantizer = state.policy.select(belief)
    likelihood = likelihood_matrix(quantizer, state.channel)
    if not 0 <= symbol < likelihood.shape[0]:
        raise DimensionMismatch(f"Received symbol {symbol} outside the channel output alphabet")
    weights = belief * likelihood[symbol]
    if weights.sum() <= ZERO_MASS:
        raise ZeroProbabilitySymbol(
            f"Received symbol {symbol} at t={state.clock} has zero probability", symbol=symbol
        )
    reproduction = reproduction_for(weights, state.distortion)
    updated = bayes_step(belief, likelihood[symbol], state.model.transition, symbol)
    return reproduction, replace(state, belief=updated, clock=state.clock + 1)


def make_periodic(policy: Policy, period: int, reset: BeliefLike) -> PeriodicPolicy:
    """Reset both ends to `reset` (normally π*) at every t ≡ 0 mod period."""
    return PeriodicPolicy(policy, period, Belief(as_probs(reset)))


@dataclass
class SessionTrace:
    """Per-step record of a codec session."""

    states: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    reproductions: np.ndarray
    distortions: np.ndarray
    beliefs: np.ndarray
    params: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return self.states.size

    @property
    def mean_distortion(self) -> float:
        return float(self.distortions.mean())

    def write_csv(self, path: Union[str, Path], params: Optional[Dict[str, Any]] = None) -> Path:
        """Write the trace; session parameters go on a leading `# ` comment line."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        echo = {**self.params, **(params or {})}
        with open(path, "w", newline="", encoding="utf-8") as f:
            f.write("# " + " ".join(f"{k}={v}" for k, v in echo.items()) + "\n")
            writer = csv.writer(f)
            writer.writerow(
                ["t", "x", "q", "q_prime", "x_hat", "d"]
                + [f"pi_{i}" for i in range(self.beliefs.shape[1])]
            )
            for t in range(len(self)):
                writer.writerow(
                    [t, int(self.states[t]), int(self.inputs[t]), int(self.outputs[t]),
                     int(self.reproductions[t]), f"{self.distortions[t]:.12g}"]
                    + [f"{p:.{BELIEF_DECIMALS}f}" for p in self.beliefs[t]]
                )
        return path


def _seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def run_session(
    model: MarkovModel,
    channel: Optional[Channel],
    policy: Policy,
    distortion: DistortionSpec,
    horizon: int,
    seed: SeedLike,
) -> SessionTrace:
    """Encode, transmit and decode `horizon` source symbols.

    The source path and the channel noise come from independent child seeds,
    so changing the channel never changes the source path.
    """
    source_seed, channel_seed = _seed_sequence(seed).spawn(2)
    path = sample_path(model, horizon, source_seed)
    channel_rng = np.random.default_rng(channel_seed)
    encoder = new_encoder(model, policy, channel)
    decoder = new_decoder(model, policy, distortion, channel)

    inputs = np.empty(horizon, dtype=np.int64)
    outputs = np.empty(horizon, dtype=np.int64)
    reproductions = np.empty(horizon, dtype=np.int64)
    beliefs = np.empty((horizon, model.num_states))
    for t, x in enumerate(path):
        beliefs[t] = policy.prepare(encoder.belief, t)
        q, encoder = encode_step(encoder, int(x))
        if channel is None:
            received = q
        else:
            received = channel.transmit(q, channel_rng)
            encoder = receive_feedback(encoder, received)
        reproductions[t], decoder = decode_step(decoder, received)
        if not np.array_equal(encoder.belief, decoder.belief):
            raise SynchronyError(f"Encoder and decoder beliefs differ after step {t}", step=t)
        inputs[t], outputs[t] = q, received

    distortions = distortion.matrix[path, reproductions]
    return SessionTrace(
        states=path,
        inputs=inputs,
        outputs=outputs,
        reproductions=reproductions,
        distortions=distortions,
        beliefs=beliefs,
        params={
            "horizon": horizon,
            "channel": channel.describe() if channel is not None else "none",
            "period": policy.period if isinstance(policy, PeriodicPolicy) else "none",
        },
    )


def witsenhausen_replay(
    policy: Policy,
    model: MarkovModel,
    channel: Optional[Channel],
    states: Sequence[int],
    outputs: Sequence[int],
) -> np.ndarray:
    """Recompute each q_t from (q'_0..q'_{t-1}, x_t) alone, refolding the belief from π₀ every step."""
    replayed = np.empty(len(states), dtype=np.int64)
    for t, x in enumerate(states):
        belief = model.initial.probs
        for s in range(t + 1):
            belief = policy.prepare(belief, s)
            quantizer = policy.select(belief)
            if s == t:
                break
            likelihood = likelihood_matrix(quantizer, channel)[outputs[s]]
            belief = bayes_step(belief, likelihood, model.transition, int(outputs[s]))
        replayed[t] = quantizer(int(x))
    return replayed
