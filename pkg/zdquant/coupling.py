"""Coupling constants of the source chain.

Two independent copies X, Y of the chain are run until they sit together at
a reference state b; τ is that hitting time. K₁ = max E[τ | X₀=x, Y₀=y]
bounds how fast beliefs forget their start, and K = 2K₁‖d‖∞|X| bounds the
finite-horizon gap T·(J_T − g*).
"""

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import LinAlgError, solve

from .batch import BatchRunner, child_seeds
from .belief import BeliefGrid, optimal_coupling, wasserstein1
from .channel import Channel
from .quantizer import DistortionSpec
from .solver.discounted import discounted_value_iteration
from .solver.kernel import BeliefKernel
from .source import Belief, BeliefLike, MarkovModel, is_aperiodic, is_irreducible, next_states
from .utils.exceptions import DimensionMismatch, NoConvergence, NotIrreducibleAperiodic
from .utils.file_logger import get_logger

SOLVE_RESIDUAL = 1e-9
# Relative width within which two K₁ values count as a tie
TIE_RELATIVE = 1e-12
DEFAULT_MAX_STEPS = 1_000_000

TransitionLike = Union[MarkovModel, np.ndarray, Sequence[Sequence[float]]]


def _transition(chain: TransitionLike) -> np.ndarray:
    if isinstance(chain, MarkovModel):
        return chain.transition
    return MarkovModel(np.asarray(chain, dtype=float), Belief.uniform(len(chain))).transition


def _require_ergodic(matrix: np.ndarray) -> None:
    model = MarkovModel(matrix, Belief.uniform(matrix.shape[0]))
    if not (is_irreducible(model) and is_aperiodic(model)):
        raise NotIrreducibleAperiodic("Coupling times are finite only for irreducible aperiodic chains")


def expected_coupling_times(chain: TransitionLike, reference: int) -> np.ndarray:
    """E[τ | X₀=x, Y₀=y] for τ the first time both copies are at `reference`.

    Solves k(b,b) = 0, k(s) = 1 + Σ_s' (P⊗P)(s'|s) k(s') over the |X|² product states.
    """
    matrix = _transition(chain)
    n = matrix.shape[0]
    if not 0 <= reference < n:
        raise DimensionMismatch(f"Reference state {reference} outside 0..{n - 1}")
    _require_ergodic(matrix)
    product = np.kron(matrix, matrix)
    target = reference * n + reference
    system = np.eye(n * n) - product
    system[target, :] = 0.0
    system[target, target] = 1.0
    rhs = np.ones(n * n)
    rhs[target] = 0.0
    try:
        times = solve(system, rhs)
    except LinAlgError as e:
        raise NotIrreducibleAperiodic(f"Coupling system is singular: {e}")
    residual = float(np.abs(system @ times - rhs).max())
    if not np.all(np.isfinite(times)) or residual > SOLVE_RESIDUAL:
        raise NotIrreducibleAperiodic(f"Coupling solve residual {residual:.3g} too large")
    return np.clip(times, 0.0, None).reshape(n, n)


def chain_fingerprint(chain: TransitionLike, distortion: DistortionSpec) -> str:
    """SHA-256 over the transition and distortion matrices, the only inputs K depends on."""
    digest = hashlib.sha256(np.ascontiguousarray(_transition(chain)).tobytes())
    digest.update(np.ascontiguousarray(distortion.matrix).tobytes())
    return digest.hexdigest()


def choose_reference_state(chain: TransitionLike) -> Tuple[int, float]:
    """Reference state with the smallest K₁ (smallest index on ties) and that K₁."""
    per_state = _per_state_k1(_transition(chain))
    best = float(per_state.min())
    reference = int(np.flatnonzero(per_state <= best + TIE_RELATIVE * max(1.0, best))[0])
    return reference, float(per_state[reference])


def _per_state_k1(matrix: np.ndarray) -> np.ndarray:
    return np.array([expected_coupling_times(matrix, b).max() for b in range(matrix.shape[0])])


@dataclass
class CouplingReport:
    """Coupling constants for one source and distortion."""

    expected_tau: np.ndarray
    K1: float
    reference_state: int
    K: float
    per_state_K1: np.ndarray
    sup_distortion: float
    num_states: int
    fingerprint: Optional[str] = None

    def grid_slack(self, resolution: int) -> float:
        """K₁‖d‖∞ times the grid covering radius |X|/(2n)."""
        return self.K1 * self.sup_distortion * self.num_states / (2.0 * resolution)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "expected_tau": self.expected_tau.tolist(),
            "K1": self.K1,
            "reference_state": self.reference_state,
            "K": self.K,
            "per_state_K1": self.per_state_K1.tolist(),
            "sup_distortion": self.sup_distortion,
            "num_states": self.num_states,
            "fingerprint": self.fingerprint,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CouplingReport":
        return cls(
            expected_tau=np.array(data["expected_tau"], dtype=float),
            K1=float(data["K1"]),
            reference_state=int(data["reference_state"]),
            K=float(data["K"]),
            per_state_K1=np.array(data["per_state_K1"], dtype=float),
            sup_distortion=float(data["sup_distortion"]),
            num_states=int(data["num_states"]),
            fingerprint=data.get("fingerprint"),
        )

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
        return path

    def write_csv(self, path: Union[str, Path]) -> Path:
        """expected_tau as CSV: one row per X₀, one column per Y₀."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["x0"] + [f"y0_{y}" for y in range(self.num_states)])
            for x, row in enumerate(self.expected_tau):
                writer.writerow([x] + [f"{v:.12g}" for v in row])
        return path


def coupling_report(chain: TransitionLike, distortion: DistortionSpec) -> CouplingReport:
    matrix = _transition(chain)
    if distortion.num_states != matrix.shape[0]:
        raise DimensionMismatch(
            f"Distortion has {distortion.num_states} source states, chain has {matrix.shape[0]}"
        )
    per_state = _per_state_k1(matrix)
    reference, k1 = choose_reference_state(matrix)
    n = matrix.shape[0]
    report = CouplingReport(
        expected_tau=expected_coupling_times(matrix, reference),
        K1=k1,
        reference_state=reference,
        K=2.0 * k1 * distortion.sup_norm * n,
        per_state_K1=per_state,
        sup_distortion=distortion.sup_norm,
        num_states=n,
        fingerprint=chain_fingerprint(matrix, distortion),
    )
    get_logger().info(f"Coupling: b={reference}, K1={k1:.12g}, K={report.K:.12g}")
    return report


def _simulate_pair(cdf: np.ndarray, reference: int, start: Tuple[int, int], runs: int, seed, max_steps: int):
    rng = np.random.default_rng(seed)
    x = np.full(runs, start[0], dtype=np.int64)
    y = np.full(runs, start[1], dtype=np.int64)
    tau = np.zeros(runs, dtype=np.int64)
    alive = ~((x == reference) & (y == reference))
    steps = 0
    while alive.any():
        if steps >= max_steps:
            raise NoConvergence(f"Coupling simulation from {start} exceeded {max_steps} steps", max_iters=max_steps)
        idx = np.flatnonzero(alive)
        uniforms = rng.random((2, idx.size))
        # Independent randomization variables for the two copies
        x[idx] = next_states(cdf, x[idx], uniforms[0])
        y[idx] = next_states(cdf, y[idx], uniforms[1])
        tau[idx] += 1
        alive[idx] = ~((x[idx] == reference) & (y[idx] == reference))
        steps += 1
    return tau


def monte_carlo_tau(
    chain: TransitionLike,
    reference: int,
    pairs: Optional[Iterable[Tuple[int, int]]] = None,
    runs: int = 10_000,
    seed: int = 0,
    max_steps: int = DEFAULT_MAX_STEPS,
    threads: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """Sample means and standard errors of τ per start pair (NaN where not simulated)."""
    matrix = _transition(chain)
    n = matrix.shape[0]
    pairs = [tuple(p) for p in (pairs if pairs is not None else np.ndindex(n, n))]
    cdf = np.cumsum(matrix, axis=1)
    seeds = child_seeds(seed, len(pairs))

    def simulate(job):
        pair, pair_seed = job
        return _simulate_pair(cdf, reference, pair, runs, pair_seed, max_steps)

    samples = BatchRunner(threads, description="coupling pairs").map(simulate, list(zip(pairs, seeds)))
    means = np.full((n, n), np.nan)
    errors = np.full((n, n), np.nan)
    for (x, y), tau in zip(pairs, samples):
        means[x, y] = tau.mean()
        errors[x, y] = tau.std(ddof=1) / np.sqrt(runs) if runs > 1 else 0.0
    return means, errors


@dataclass
class CouplingBound:
    """E[τ] under the transport coupling against K₁·Pr(X₀≠Y₀) and K₁·ρ₁."""

    expected_tau: float
    mismatch: float
    rho1: float
    K1: float

    @property
    def holds(self) -> bool:
        slack = TIE_RELATIVE * max(1.0, self.K1)
        return self.expected_tau <= self.K1 * self.mismatch + slack and self.mismatch <= self.rho1 + slack


def coupling_bound_check(chain: TransitionLike, reference: int, mu: BeliefLike, zeta: BeliefLike) -> CouplingBound:
    """Start (X₀, Y₀) from the monotone optimal transport plan of (μ, ζ).

    Copies that start together move together, so only off-diagonal mass
    waits for τ.
    """
    matrix = _transition(chain)
    times = expected_coupling_times(matrix, reference)
    plan = optimal_coupling(mu, zeta)
    off_diagonal = ~np.eye(matrix.shape[0], dtype=bool)
    return CouplingBound(
        expected_tau=float((plan * times)[off_diagonal].sum()),
        mismatch=float(plan[off_diagonal].sum()),
        rho1=wasserstein1(mu, zeta),
        K1=float(times.max()),
    )


def verify_lipschitz(
    model: MarkovModel,
    distortion: DistortionSpec,
    num_symbols: int,
    grid: BeliefGrid,
    beta: float,
    pairs: Iterable[Tuple[BeliefLike, BeliefLike]],
    report: Optional[CouplingReport] = None,
    tol: float = 1e-9,
    channel: Optional[Channel] = None,
    kernel: Optional[BeliefKernel] = None,
) -> float:
    """max over pairs of |J^β(μ) − J^β(ζ)| − K₁‖d‖∞ρ₁(μ, ζ); positive beyond grid slack is a defect."""
    report = report or coupling_report(model, distortion)
    solution = discounted_value_iteration(
        model, distortion, num_symbols, beta, grid, tol=tol, channel=channel, kernel=kernel
    )
    values = solution.values
    constant = report.K1 * distortion.sup_norm
    worst = -np.inf
    for mu, zeta in pairs:
        gap = abs(values(mu) - values(zeta)) - constant * wasserstein1(mu, zeta)
        worst = max(worst, gap)
    get_logger().info(f"Lipschitz check at beta={beta}: max violation {worst:.3g}")
    return float(worst)


def hbeta_bound(history: Sequence[Dict[str, float]], report: CouplingReport) -> Tuple[float, float]:
    """(sup over the discount sequence of sup|h_β|, K/2)."""
    observed = max((entry["sup_h"] for entry in history), default=0.0)
    return float(observed), report.K / 2.0
