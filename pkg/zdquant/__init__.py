"""
zdquant
Optimal zero-delay quantization of finite-alphabet Markov sources over
noiseless channels and noisy channels with feedback.
"""
from .belief import BeliefGrid, filter_update, noisy_filter_update, project_to_grid, wasserstein1
from .channel import Channel
from .codec import make_periodic, run_session
from .coupling import CouplingReport, coupling_report
from .oracle import OraclePolicy, exhaustive_min
from .policy import FixedPolicy, GridPolicy, PeriodicPolicy
from .quantizer import DistortionSpec, Quantizer, enumerate_quantizers, stage_cost
from .solver import CanonicalTriplet, finite_horizon_dp, solve_average_cost
from .source import Belief, MarkovModel, stationary_distribution
from .utils.config import ExperimentConfig

__version__ = "1.0.0"

__all__ = [
    "Belief",
    "BeliefGrid",
    "CanonicalTriplet",
    "Channel",
    "CouplingReport",
    "DistortionSpec",
    "ExperimentConfig",
    "FixedPolicy",
    "GridPolicy",
    "MarkovModel",
    "OraclePolicy",
    "PeriodicPolicy",
    "Quantizer",
    "coupling_report",
    "enumerate_quantizers",
    "exhaustive_min",
    "filter_update",
    "finite_horizon_dp",
    "make_periodic",
    "noisy_filter_update",
    "project_to_grid",
    "run_session",
    "solve_average_cost",
    "stage_cost",
    "stationary_distribution",
    "wasserstein1",
]
