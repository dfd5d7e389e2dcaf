"""Discounted-cost value iteration on the belief grid."""

from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from ..belief import BeliefGrid
from ..channel import Channel
from ..policy import GridPolicy
from ..quantizer import DistortionSpec
from ..source import MarkovModel
from ..utils.exceptions import InvalidDiscount, NoConvergence
from ..utils.file_logger import get_logger
from .kernel import BeliefKernel, ValueFunction, action_set, build_kernel

DEFAULT_MAX_ITERS = 200_000
# Updates below a few ulps of |J| cannot shrink further
ULP_FLOOR = 8 * np.finfo(float).eps


@dataclass
class DiscountedSolution:
    values: ValueFunction
    policy: GridPolicy
    beta: float
    iterations: int
    residual: float

    def __iter__(self):
        # Unpacks as (J^β, policy)
        return iter((self.values, self.policy))


def check_discount(beta: float) -> None:
    if not 0.0 < beta < 1.0:
        raise InvalidDiscount(f"Discount factor must lie in (0, 1), got {beta}")


def iterate_discounted(
    kernel: BeliefKernel, beta: float, initial: Optional[np.ndarray] = None
) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Yield (J_t, greedy action indices) for t = 1, 2, ... starting from J₀."""
    check_discount(beta)
    values = np.zeros(len(kernel.grid)) if initial is None else np.array(initial, dtype=float)
    while True:
        values, best = kernel.backup(values, beta)
        yield values, best


def stopping_threshold(tol: float, beta: float) -> float:
    """Sup-norm update size that guarantees ‖J − J^β‖∞ ≤ tol/2."""
    return tol * (1.0 - beta) / (2.0 * beta)


def discounted_value_iteration(
    model: MarkovModel,
    distortion: DistortionSpec,
    num_symbols: int,
    beta: float,
    grid: BeliefGrid,
    tol: float = 1e-9,
    channel: Optional[Channel] = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    kernel: Optional[BeliefKernel] = None,
    initial: Optional[np.ndarray] = None,
) -> DiscountedSolution:
    """Iterate J_t = min_a [c + β E J_{t−1}] until the update drops below tol(1−β)/(2β)."""
    check_discount(beta)
    if tol <= 0:
        raise InvalidDiscount(f"tol must be positive, got {tol}")
    logger = get_logger()
    if kernel is None:
        actions = action_set(model.num_states, num_symbols, channel)
        kernel = build_kernel(model, distortion, grid, actions, channel)

    threshold = stopping_threshold(tol, beta)
    previous = np.zeros(len(grid)) if initial is None else np.array(initial, dtype=float)
    for iteration, (values, best) in enumerate(iterate_discounted(kernel, beta, previous), start=1):
        update = float(np.abs(values - previous).max())
        floor = ULP_FLOOR * max(1.0, float(np.abs(values).max()))
        if update <= max(threshold, floor):
            logger.info(f"Discounted VI (beta={beta}) converged in {iteration} iterations, update {update:.3g}")
            return DiscountedSolution(
                values=ValueFunction(grid, values),
                policy=GridPolicy(grid, kernel.actions, best),
                beta=beta,
                iterations=iteration,
                residual=beta * update,
            )
        if iteration >= max_iters:
            raise NoConvergence(
                f"Discounted VI (beta={beta}) did not converge in {max_iters} iterations "
                f"(last update {update:.3g})",
                max_iters=max_iters,
            )
        previous = values
