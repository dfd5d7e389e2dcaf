"""Shared sources and solved triplets for the zdquant tests."""

import numpy as np
import pytest
from hypothesis import strategies as st

from zdquant.belief import BeliefGrid
from zdquant.channel import Channel
from zdquant.quantizer import DistortionSpec
from zdquant.solver import solve_average_cost
from zdquant.source import MarkovModel

SYMMETRIC = [[0.9, 0.1], [0.1, 0.9]]
ASYMMETRIC = [[0.9, 0.1], [0.2, 0.8]]
IID_UNIFORM = [[0.5, 0.5], [0.5, 0.5]]
THREE_STATE = [[0.6, 0.3, 0.1], [0.2, 0.6, 0.2], [0.1, 0.3, 0.6]]


@st.composite
def positive_chains(draw, min_states: int = 2, max_states: int = 3):
    """Transition matrices with every entry positive (irreducible and aperiodic)."""
    n = draw(st.integers(min_value=min_states, max_value=max_states))
    rows = [
        draw(st.lists(st.integers(min_value=1, max_value=20), min_size=n, max_size=n))
        for _ in range(n)
    ]
    matrix = np.array(rows, dtype=float)
    return matrix / matrix.sum(axis=1, keepdims=True)


@st.composite
def distributions(draw, size: int):
    weights = np.array(
        draw(st.lists(st.integers(min_value=0, max_value=50), min_size=size, max_size=size)), dtype=float
    )
    if weights.sum() == 0:
        weights[0] = 1.0
    return weights / weights.sum()


@pytest.fixture
def symmetric_model():
    return MarkovModel.from_lists(SYMMETRIC)


@pytest.fixture
def asymmetric_model():
    return MarkovModel.from_lists(ASYMMETRIC)


@pytest.fixture
def three_state_model():
    return MarkovModel.from_lists(THREE_STATE)


@pytest.fixture(scope="session")
def three_state_triplet():
    """RVI triplet of the three-state chain, M=2, Hamming, n=20."""
    model = MarkovModel.from_lists(THREE_STATE)
    grid = BeliefGrid(3, 20)
    return solve_average_cost(model, DistortionSpec.hamming(3), 2, grid)


@pytest.fixture(scope="session")
def bsc_triplet():
    """RVI triplet of the symmetric binary chain over BSC(0.1), n=20."""
    model = MarkovModel.from_lists(SYMMETRIC)
    grid = BeliefGrid(2, 20)
    return solve_average_cost(model, DistortionSpec.hamming(2), 2, grid, channel=Channel.bsc(0.1))
