"""Belief-MDP solvers: finite horizon, discounted and average cost."""

from .average_cost import (
    RVI,
    VANISHING_DISCOUNT,
    CanonicalTriplet,
    acoe_residual,
    canonical_identity,
    solve_average_cost,
)
from .discounted import DiscountedSolution, discounted_value_iteration, iterate_discounted
from .evaluate import evaluate_periodic_exact, evaluate_policy_exact, simulate_policy
from .finite_horizon import FiniteHorizonPlan, finite_horizon_dp
from .kernel import BeliefKernel, ValueFunction, action_set, bellman_backup, build_kernel

__all__ = [
    "RVI",
    "VANISHING_DISCOUNT",
    "BeliefKernel",
    "CanonicalTriplet",
    "DiscountedSolution",
    "FiniteHorizonPlan",
    "ValueFunction",
    "acoe_residual",
    "action_set",
    "bellman_backup",
    "build_kernel",
    "canonical_identity",
    "discounted_value_iteration",
    "evaluate_periodic_exact",
    "evaluate_policy_exact",
    "finite_horizon_dp",
    "iterate_discounted",
    "simulate_policy",
    "solve_average_cost",
]
