"""Tests for the online encoder/decoder pair."""

import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import SYMMETRIC
from zdquant.channel import Channel
from zdquant.codec import (
    decode_step,
    encode_step,
    make_periodic,
    new_decoder,
    new_encoder,
    receive_feedback,
    run_session,
    witsenhausen_replay,
)
from zdquant.policy import FixedPolicy
from zdquant.quantizer import DistortionSpec, Quantizer
from zdquant.source import MarkovModel, stationary_distribution
from zdquant.utils.exceptions import DimensionMismatch, ZdqError, ZeroProbabilitySymbol

HAMMING2 = DistortionSpec.hamming(2)
HAMMING3 = DistortionSpec.hamming(3)
IDENTITY = FixedPolicy(Quantizer.identity(2))


class TestSessionProperty:
    """Sessions are deterministic and the two ends stay in lockstep."""

    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_identity_channel_matches_noiseless(self, seed, three_state_triplet):
        model = MarkovModel.from_lists([[0.6, 0.3, 0.1], [0.2, 0.6, 0.2], [0.1, 0.3, 0.6]])
        policy = three_state_triplet.as_policy()
        clean = run_session(model, None, policy, HAMMING3, 60, seed)
        identity = run_session(model, Channel.noiseless(2), policy, HAMMING3, 60, seed)
        for name in ("states", "inputs", "outputs", "reproductions", "beliefs"):
            assert np.array_equal(getattr(clean, name), getattr(identity, name))

    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_replay_recovers_inputs(self, seed, bsc_triplet):
        """Each q_t SHALL be a function of (q'_0..q'_{t-1}, x_t) alone."""
        model = MarkovModel.from_lists(SYMMETRIC)
        channel = Channel.bsc(0.1)
        policy = bsc_triplet.as_policy()
        trace = run_session(model, channel, policy, HAMMING2, 30, seed)
        replayed = witsenhausen_replay(policy, model, channel, trace.states, trace.outputs)
        assert np.array_equal(replayed, trace.inputs)


class TestEncoderUnit:
    def test_injective_sends_the_state(self, symmetric_model):
        encoder = new_encoder(symmetric_model, IDENTITY)
        for x in (0, 1, 1, 0):
            q, encoder = encode_step(encoder, x)
            assert q == x
        assert encoder.clock == 4

    def test_constant_sends_zero(self, symmetric_model):
        encoder = new_encoder(symmetric_model, FixedPolicy(Quantizer.constant(2, 2)))
        q, encoder = encode_step(encoder, 1)
        assert q == 0
        assert np.allclose(encoder.belief, np.array([0.5, 0.5]) @ np.array(SYMMETRIC))

    def test_rejects_bad_symbol(self, symmetric_model):
        with pytest.raises(DimensionMismatch):
            encode_step(new_encoder(symmetric_model, IDENTITY), 2)

    def test_feedback_protocol(self, symmetric_model):
        encoder = new_encoder(symmetric_model, IDENTITY, Channel.bsc(0.1))
        assert encoder.uses_feedback
        q, encoder = encode_step(encoder, 0)
        with pytest.raises(ZdqError):
            encode_step(encoder, 0)
        encoder = receive_feedback(encoder, 1)
        assert encoder.clock == 1 and encoder.pending is None
        with pytest.raises(ZdqError):
            receive_feedback(encoder, 0)

    def test_feedback_posterior(self):
        model = MarkovModel(np.eye(2), [0.5, 0.5])
        encoder = new_encoder(model, IDENTITY, Channel.bsc(0.1))
        _, encoder = encode_step(encoder, 0)
        encoder = receive_feedback(encoder, 0)
        assert np.allclose(encoder.belief, [0.9, 0.1])

    def test_identity_feedback_matches_noiseless(self, symmetric_model):
        quantizer = Quantizer((0, 1), 2)
        clean = new_encoder(symmetric_model, FixedPolicy(quantizer))
        noisy = new_encoder(symmetric_model, FixedPolicy(quantizer), Channel.noiseless(2))
        for x in (1, 0, 0, 1):
            q, clean = encode_step(clean, x)
            q_noisy, noisy = encode_step(noisy, x)
            noisy = receive_feedback(noisy, q_noisy)
            assert np.array_equal(clean.belief, noisy.belief)

    def test_useless_channel_predicts(self, symmetric_model):
        encoder = new_encoder(symmetric_model, IDENTITY, Channel.uniform(2, 2))
        _, encoder = encode_step(encoder, 1)
        encoder = receive_feedback(encoder, 0)
        assert np.allclose(encoder.belief, np.array([0.5, 0.5]) @ np.array(SYMMETRIC))


class TestDecoderUnit:
    def test_injective_reproduces_state(self, symmetric_model):
        decoder = new_decoder(symmetric_model, IDENTITY, HAMMING2)
        for x in (1, 1, 0):
            x_hat, decoder = decode_step(decoder, x)
            assert x_hat == x

    def test_single_symbol_guesses_the_prior(self):
        model = MarkovModel.from_lists([[0.9, 0.1], [0.5, 0.5]])
        decoder = new_decoder(model, FixedPolicy(Quantizer.constant(2, 1)), HAMMING2)
        x_hat, _ = decode_step(decoder, 0)
        assert x_hat == 0

    def test_zero_probability_symbol(self):
        model = MarkovModel(np.eye(2), [1.0, 0.0])
        decoder = new_decoder(model, IDENTITY, HAMMING2)
        with pytest.raises(ZeroProbabilitySymbol):
            decode_step(decoder, 1)


class TestSessionUnit:
    def test_injective_session_is_lossless(self, three_state_model):
        trace = run_session(three_state_model, None, FixedPolicy(Quantizer.identity(3)), HAMMING3, 200, 5)
        assert trace.mean_distortion == 0.0
        assert np.array_equal(trace.reproductions, trace.states)

    def test_seeded(self, three_state_model, three_state_triplet):
        policy = three_state_triplet.as_policy()
        first = run_session(three_state_model, None, policy, HAMMING3, 100, 99)
        second = run_session(three_state_model, None, policy, HAMMING3, 100, 99)
        assert np.array_equal(first.states, second.states)
        assert np.array_equal(first.reproductions, second.reproductions)

    def test_channel_does_not_change_source_path(self, symmetric_model, bsc_triplet):
        policy = bsc_triplet.as_policy()
        clean = run_session(symmetric_model, None, IDENTITY, HAMMING2, 100, 4)
        noisy = run_session(symmetric_model, Channel.bsc(0.1), policy, HAMMING2, 100, 4)
        assert np.array_equal(clean.states, noisy.states)

    def test_long_noisy_session_stays_synchronized(self, symmetric_model, bsc_triplet):
        """10^5 steps over BSC(0.1) without a SynchronyError."""
        trace = run_session(symmetric_model, Channel.bsc(0.1), bsc_triplet.as_policy(), HAMMING2, 100_000, 2025)
        assert len(trace) == 100_000
        assert 0.0 < trace.mean_distortion < 0.2

    def test_periodic_session_resets(self, three_state_model, three_state_triplet):
        stationary = stationary_distribution(three_state_model)
        periodic = make_periodic(three_state_triplet.as_policy(), 5, stationary)
        trace = run_session(three_state_model, None, periodic, HAMMING3, 23, 8)
        for t in range(0, 23, 5):
            assert np.array_equal(trace.beliefs[t], periodic.reset.probs)
        assert trace.params["period"] == 5

    def test_trace_csv(self, symmetric_model, bsc_triplet):
        trace = run_session(symmetric_model, Channel.bsc(0.1), bsc_triplet.as_policy(), HAMMING2, 12, 6)
        with tempfile.TemporaryDirectory() as tmpdir:
            path = trace.write_csv(Path(tmpdir) / "trace.csv", {"seed": 6})
            lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("# ") and "seed=6" in lines[0] and "horizon=12" in lines[0]
        assert lines[1] == "t,x,q,q_prime,x_hat,d,pi_0,pi_1"
        assert len(lines) == 14
        belief = lines[2].split(",")[-2:]
        assert all(len(value.split(".")[1]) == 12 for value in belief)
