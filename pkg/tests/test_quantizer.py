"""Tests for quantizer enumeration and the per-stage cost."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import distributions
from zdquant.channel import Channel
from zdquant.quantizer import (
    LABELED,
    PARTITION,
    DistortionSpec,
    Quantizer,
    best_memoryless_cost,
    enumerate_quantizers,
    optimal_reproduction,
    prior_guess_cost,
    stage_cost,
)
from zdquant.utils.exceptions import ActionSpaceTooLarge, DimensionMismatch, NegativeEntry

HAMMING2 = DistortionSpec.hamming(2)
HAMMING3 = DistortionSpec.hamming(3)


class TestStageCostProperty:
    """Structural properties of c(π, Q)."""

    @given(probs=distributions(3), labels=st.tuples(*[st.integers(0, 1)] * 3))
    @settings(max_examples=100)
    def test_cost_is_sum_over_cells(self, probs, labels):
        """c(π, Q) SHALL equal the sum of per-cell minima."""
        quantizer = Quantizer(labels, 2)
        expected = 0.0
        for cell in quantizer.cells():
            if cell:
                weights = np.zeros(3)
                weights[list(cell)] = probs[list(cell)]
                expected += (weights @ HAMMING3.matrix).min()
        assert abs(stage_cost(probs, quantizer, HAMMING3) - expected) < 1e-12

    @given(probs=distributions(3), labels=st.tuples(*[st.integers(0, 2)] * 3))
    @settings(max_examples=100)
    def test_relabeling_cells_keeps_cost(self, probs, labels):
        """Permuting symbol labels SHALL not change the cost."""
        quantizer = Quantizer(labels, 3)
        relabeled = Quantizer(tuple((label + 1) % 3 for label in labels), 3)
        assert abs(stage_cost(probs, quantizer, HAMMING3) - stage_cost(probs, relabeled, HAMMING3)) < 1e-12

    @given(probs=distributions(3), labels=st.tuples(*[st.integers(0, 1)] * 3))
    @settings(max_examples=100)
    def test_cost_bounds(self, probs, labels):
        """0 <= c(π, Q) <= min_x̂ E_π d(X, x̂)."""
        cost = stage_cost(probs, Quantizer(labels, 2), HAMMING3)
        assert -1e-15 <= cost <= prior_guess_cost(probs, HAMMING3) + 1e-12

    @given(
        first=distributions(3),
        second=distributions(3),
        weight=st.floats(min_value=0.0, max_value=1.0),
        labels=st.tuples(*[st.integers(0, 1)] * 3),
    )
    @settings(max_examples=100)
    def test_cost_is_concave(self, first, second, weight, labels):
        """c(·, Q) is a sum of minima of linear functions."""
        quantizer = Quantizer(labels, 2)
        mixed = weight * first + (1 - weight) * second
        lhs = stage_cost(mixed, quantizer, HAMMING3)
        rhs = weight * stage_cost(first, quantizer, HAMMING3) + (1 - weight) * stage_cost(second, quantizer, HAMMING3)
        assert lhs >= rhs - 1e-12

    @given(probs=distributions(2), labels=st.tuples(*[st.integers(0, 1)] * 2))
    @settings(max_examples=50)
    def test_identity_channel_matches_noiseless(self, probs, labels):
        quantizer = Quantizer(labels, 2)
        assert stage_cost(probs, quantizer, HAMMING2, Channel.noiseless(2)) == stage_cost(probs, quantizer, HAMMING2)


class TestEnumerationUnit:
    """Unit tests for enumerate_quantizers."""

    def test_labeled_counts_and_order(self):
        labeled = enumerate_quantizers(2, 2, LABELED)
        assert [q.labels for q in labeled] == [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert len(enumerate_quantizers(3, 2, LABELED)) == 8

    def test_partition_counts(self):
        assert [q.labels for q in enumerate_quantizers(2, 2, PARTITION)] == [(0, 0), (0, 1)]
        assert len(enumerate_quantizers(3, 2, PARTITION)) == 4
        # S(4,1) + S(4,2) + S(4,3)
        assert len(enumerate_quantizers(4, 3, PARTITION)) == 14

    def test_partitions_are_canonical_and_distinct(self):
        partitions = enumerate_quantizers(4, 3, PARTITION)
        assert all(q == q.canonical() for q in partitions)
        assert len({frozenset(q.cells()) for q in partitions}) == len(partitions)

    def test_cap(self):
        with pytest.raises(ActionSpaceTooLarge) as info:
            enumerate_quantizers(4, 4, LABELED, cap=100)
        assert info.value.size == 256
        assert info.value.exit_code == 3

    def test_invalid_arguments(self):
        with pytest.raises(DimensionMismatch):
            enumerate_quantizers(0, 2)
        with pytest.raises(DimensionMismatch):
            enumerate_quantizers(2, 2, "ordered")
        with pytest.raises(DimensionMismatch):
            Quantizer((0, 2), 2)


class TestStageCostUnit:
    """Worked examples."""

    def test_injective_is_free(self):
        assert stage_cost([0.3, 0.7], Quantizer.identity(2), HAMMING2) == 0.0

    def test_constant_pays_prior_guess(self):
        assert abs(stage_cost([0.7, 0.3], Quantizer.constant(2, 1), HAMMING2) - 0.3) < 1e-15

    def test_asymmetric_distortion(self):
        distortion = DistortionSpec([[0, 1], [2, 0]])
        assert abs(stage_cost([0.5, 0.5], Quantizer.constant(2, 1), distortion) - 0.5) < 1e-15
        assert optimal_reproduction([0.5, 0.5], Quantizer.constant(2, 1), distortion, 0) == 1

    def test_reproduction_ties_and_empty_cells(self):
        constant = Quantizer.constant(2, 2)
        assert optimal_reproduction([0.5, 0.5], constant, HAMMING2, 0) == 0
        assert optimal_reproduction([0.5, 0.5], constant, HAMMING2, 1) == 0
        assert optimal_reproduction([0.2, 0.8], Quantizer.identity(2), HAMMING2, 1) == 1

    def test_uniform_channel_erases_information(self):
        channel = Channel.uniform(2, 2)
        cost = stage_cost([0.7, 0.3], Quantizer.identity(2), HAMMING2, channel)
        assert abs(cost - prior_guess_cost([0.7, 0.3], HAMMING2)) < 1e-12

    def test_best_memoryless(self):
        probs = [0.5, 0.3, 0.2]
        assert abs(best_memoryless_cost(probs, HAMMING3, 1) - 0.5) < 1e-12
        assert abs(best_memoryless_cost(probs, HAMMING3, 2) - 0.2) < 1e-12
        assert best_memoryless_cost(probs, HAMMING3, 3) == 0.0

    def test_distortion_validation(self):
        with pytest.raises(NegativeEntry):
            DistortionSpec([[0, -1], [1, 0]])
        assert DistortionSpec([[0, 3], [1, 0]]).sup_norm == 3.0
        assert np.array_equal(HAMMING2.scaled(2.0).matrix, [[0, 2], [2, 0]])
