"""Average-cost optimality equation on the belief grid.

Relative value iteration is the primary method; the vanishing-discount
sequence β_k = 1 − 2^−k is kept as an independent cross-check.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix

from ..belief import BeliefGrid
from ..channel import Channel
from ..policy import GridPolicy
from ..quantizer import DistortionSpec, Quantizer
from ..source import MarkovModel, is_aperiodic, is_irreducible, stationary_distribution
from ..utils.decorator import timer
from ..utils.exceptions import DimensionMismatch, NoConvergence, NotIrreducible, SpanStalled
from ..utils.file_logger import get_logger
from .discounted import discounted_value_iteration
from .kernel import BeliefKernel, ValueFunction, action_set, build_kernel

RVI = "rvi"
VANISHING_DISCOUNT = "vanishing_discount"
METHODS = (RVI, VANISHING_DISCOUNT)

DEFAULT_TOL = 1e-9
DEFAULT_RELAXATION = 0.5
DEFAULT_MAX_ITERS = 200_000
DEFAULT_DISCOUNT_POWER = 10
# RVI gives up when a window of iterations shrinks the span by less than 0.1%
STALL_WINDOW = 1000
STALL_RATIO = 0.999


@dataclass
class CanonicalTriplet:
    """(g*, h, f*) with h(reference) = 0; policy[i] indexes `actions`."""

    gain: float
    h: ValueFunction
    policy: np.ndarray
    actions: Tuple[Quantizer, ...]
    reference_index: int
    method: str = RVI
    tolerance: float = DEFAULT_TOL
    iterations: int = 0
    residual: float = float("nan")
    channel: Optional[Channel] = None
    # False when the source is reducible or periodic: no K is reported then
    bound_valid: bool = True
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def grid(self) -> BeliefGrid:
        return self.h.grid

    def as_policy(self) -> GridPolicy:
        return GridPolicy(self.grid, self.actions, self.policy)


def reference_belief_index(model: MarkovModel, grid: BeliefGrid) -> Tuple[int, bool]:
    """Grid index nearest π*; falls back to π₀ when π* is not unique."""
    try:
        return grid.project(stationary_distribution(model)), True
    except NotIrreducible:
        get_logger().warning("Source is reducible; h is normalized at the projection of π₀")
        return grid.project(model.initial), False


def _relative_value_iteration(
    kernel: BeliefKernel, reference: int, tol: float, relaxation: float, max_iters: int
) -> Tuple[float, np.ndarray, np.ndarray, int, float]:
    logger = get_logger()
    h = np.zeros(len(kernel.grid))
    checkpoint = np.inf
    for iteration in range(1, max_iters + 1):
        updated, best = kernel.backup(h, 1.0)
        diff = updated - h
        span = float(diff.max() - diff.min())
        if span <= tol:
            gain = float(diff.max() + diff.min()) / 2.0
            logger.info(f"RVI converged in {iteration} iterations, span {span:.3g}, gain {gain:.12g}")
            return gain, h, best, iteration, span
        if iteration % STALL_WINDOW == 0:
            logger.debug(f"RVI iteration {iteration}: span {span:.3g}")
            if span > STALL_RATIO * checkpoint:
                # Th − h has settled on one gain per closed class
                gain_range = (float(diff.min()), float(diff.max()))
                raise SpanStalled(
                    f"RVI span stalled at {span:.3g} after {iteration} iterations",
                    iterations=iteration,
                    gain_range=gain_range,
                )
            checkpoint = span
        h = (1.0 - relaxation) * h + relaxation * updated
        h = h - h[reference]
    raise NoConvergence(f"RVI did not reach span {tol:g} in {max_iters} iterations", max_iters=max_iters)


def _vanishing_discount(
    kernel: BeliefKernel,
    model: MarkovModel,
    distortion: DistortionSpec,
    reference: int,
    tol: float,
    max_power: int,
    max_iters: int,
):
    history = []
    initial = None
    iterations = 0
    solution = None
    for k in range(1, max_power + 1):
        beta = 1.0 - 2.0 ** -k
        solution = discounted_value_iteration(
            model,
            distortion,
            kernel.actions[0].num_symbols,
            beta,
            kernel.grid,
            tol=tol,
            max_iters=max_iters,
            kernel=kernel,
            initial=initial,
        )
        iterations += solution.iterations
        values = solution.values.values
        gain = (1.0 - beta) * float(values[reference])
        h_beta = values - values[reference]
        history.append({"beta": beta, "gain": gain, "sup_h": float(np.abs(h_beta).max())})
        get_logger().debug(f"beta={beta}: gain {gain:.12g}, sup|h_beta| {history[-1]['sup_h']:.6g}")
        # Warm start from J^β ≈ g/(1−β) + h_β at the next discount
        next_beta = 1.0 - 2.0 ** -(k + 1)
        initial = gain / (1.0 - next_beta) + h_beta
    return gain, h_beta, solution.policy.indices, iterations, history


@timer
def solve_average_cost(
    model: MarkovModel,
    distortion: DistortionSpec,
    num_symbols: int,
    grid: BeliefGrid,
    method: str = RVI,
    tol: float = DEFAULT_TOL,
    channel: Optional[Channel] = None,
    relaxation: float = DEFAULT_RELAXATION,
    max_iters: int = DEFAULT_MAX_ITERS,
    max_discount_power: int = DEFAULT_DISCOUNT_POWER,
    kernel: Optional[BeliefKernel] = None,
    threads: int = 1,
) -> CanonicalTriplet:
    """Canonical triplet (g*, h, f*) of the grid belief MDP."""
    if method not in METHODS:
        raise DimensionMismatch(f"Unknown method '{method}'. Supported: {METHODS}")
    if not 0.0 < relaxation <= 1.0:
        raise DimensionMismatch(f"relaxation must lie in (0, 1], got {relaxation}")
    logger = get_logger()
    bound_valid = is_irreducible(model) and is_aperiodic(model)
    if not bound_valid:
        logger.warning("Source is not irreducible and aperiodic; g* may depend on π₀ and no K is reported")
    reference, _ = reference_belief_index(model, grid)

    if kernel is None:
        actions = action_set(model.num_states, num_symbols, channel)
        kernel = build_kernel(model, distortion, grid, actions, channel, threads=threads)

    diagnostics: Dict[str, Any] = {}
    solved_by = method
    if method == RVI:
        try:
            gain, h, policy, iterations, _ = _relative_value_iteration(
                kernel, reference, tol, relaxation, max_iters
            )
        except SpanStalled as e:
            logger.warning(
                f"{e}; gains {e.gain_range[0]:.6g}..{e.gain_range[1]:.6g} differ across closed classes, "
                f"falling back to {VANISHING_DISCOUNT}"
            )
            gain, h, policy, iterations, history = _vanishing_discount(
                kernel, model, distortion, reference, tol, max_discount_power, max_iters
            )
            iterations += e.iterations
            solved_by = VANISHING_DISCOUNT
            diagnostics.update(
                multichain=True,
                gain_range=list(e.gain_range),
                rvi_iterations=e.iterations,
                hbeta_history=history,
            )
    else:
        gain, h, policy, iterations, history = _vanishing_discount(
            kernel, model, distortion, reference, tol, max_discount_power, max_iters
        )
        diagnostics["hbeta_history"] = history

    updated, _ = kernel.backup(h, 1.0)
    residual = float(np.abs(gain + h - updated).max())
    triplet = CanonicalTriplet(
        gain=gain,
        h=ValueFunction(grid, h),
        policy=policy,
        actions=kernel.actions,
        reference_index=reference,
        method=solved_by,
        tolerance=tol,
        iterations=iterations,
        residual=residual,
        channel=channel,
        bound_valid=bound_valid,
        diagnostics=diagnostics,
    )
    logger.info(f"{solved_by}: g* = {gain:.12g}, ACOE residual {residual:.3g}")
    return triplet


def acoe_residual(
    triplet: CanonicalTriplet,
    model: MarkovModel,
    distortion: DistortionSpec,
    num_symbols: int,
    grid: BeliefGrid,
    channel: Optional[Channel] = None,
    kernel: Optional[BeliefKernel] = None,
) -> float:
    """max_z |g* + h(z) − min_Q (c(z, Q) + Σ_q p(q) h(project(φ(z, Q, q))))|."""
    if len(grid) != len(triplet.grid) or grid.num_states != triplet.grid.num_states:
        raise DimensionMismatch("Triplet was solved on a different grid")
    if kernel is None:
        actions = action_set(model.num_states, num_symbols, channel)
        kernel = build_kernel(model, distortion, grid, actions, channel)
    h = triplet.h.values
    updated, _ = kernel.backup(h, 1.0)
    return float(np.abs(triplet.gain + h - updated).max())


def policy_matrix(kernel: BeliefKernel, policy: np.ndarray) -> csr_matrix:
    """Sparse grid-to-grid transition matrix under a stationary policy."""
    _, prob, child = kernel.policy_step(policy)
    size = len(kernel.grid)
    rows = np.repeat(np.arange(size), prob.shape[1])
    return csr_matrix((prob.reshape(-1), (rows, child.reshape(-1))), shape=(size, size))


def canonical_identity(
    triplet: CanonicalTriplet, kernel: BeliefKernel, horizon: int, start_index: int
) -> Tuple[float, float]:
    """Both sides of J_T(z₀) = g* + (h(z₀) − E h(Z_T)) / T on the grid MDP under f*.

    The two sides differ by at most the ACOE residual.
    """
    cost, _, _ = kernel.policy_step(triplet.policy)
    transition = policy_matrix(kernel, triplet.policy).T.tocsr()
    h = triplet.h.values
    distribution = np.zeros(len(kernel.grid))
    distribution[start_index] = 1.0
    total = 0.0
    for _ in range(horizon):
        total += float(distribution @ cost)
        distribution = transition @ distribution
    lhs = total / horizon
    rhs = triplet.gain + (h[start_index] - float(distribution @ h)) / horizon
    return lhs, rhs
