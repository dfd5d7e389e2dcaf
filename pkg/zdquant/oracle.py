"""Brute-force minimum over zero-delay encoders that see (q-history, current x).

Ground truth for the belief DP on tiny instances. Histories q_0..q_{t-1} are
indexed in base M, most significant symbol first.
"""

from dataclasses import dataclass
from itertools import islice, product
from typing import Dict, List, Optional, Tuple

import numpy as np

from .batch import BatchRunner
from .quantizer import DistortionSpec, reproduction_for
from .source import MarkovModel
from .utils.exceptions import DimensionMismatch, IncompleteTable, SearchSpaceTooLarge
from .utils.file_logger import get_logger

DEFAULT_SEARCH_CAP = 2 ** 24
HISTORY = "history"
ENUMERATE = "enumerate"
STRATEGIES = (HISTORY, ENUMERATE)


@dataclass
class OraclePolicy:
    """encoder_tables[t][h, x] = q_t; decoder_tables[t][h'] = x̂_t with h' = h·M + q_t."""

    encoder_tables: List[np.ndarray]
    decoder_tables: List[np.ndarray]
    num_symbols: int

    @property
    def horizon(self) -> int:
        return len(self.encoder_tables)

    def validate(self, num_states: int, reproduction_size: int, horizon: int) -> None:
        """Raise IncompleteTable unless every stage has full, in-range tables."""
        m = self.num_symbols
        if len(self.encoder_tables) != horizon or len(self.decoder_tables) != horizon:
            raise IncompleteTable(
                f"Expected {horizon} stages, got {len(self.encoder_tables)} encoder and "
                f"{len(self.decoder_tables)} decoder tables"
            )
        for t, (enc, dec) in enumerate(zip(self.encoder_tables, self.decoder_tables)):
            enc, dec = np.asarray(enc), np.asarray(dec)
            if enc.shape != (m ** t, num_states):
                raise IncompleteTable(f"Encoder table {t} has shape {enc.shape}, expected {(m ** t, num_states)}")
            if dec.shape != (m ** (t + 1),):
                raise IncompleteTable(f"Decoder table {t} has shape {dec.shape}, expected {(m ** (t + 1),)}")
            if enc.min() < 0 or enc.max() >= m:
                raise IncompleteTable(f"Encoder table {t} has symbols outside 0..{m - 1}")
            if dec.min() < 0 or dec.max() >= reproduction_size:
                raise IncompleteTable(f"Decoder table {t} has reproductions outside 0..{reproduction_size - 1}")


def search_space_size(num_states: int, num_symbols: int, horizon: int) -> int:
    """Π_t M^(M^t·|X|): the number of distinct encoder table sets."""
    entries = num_states * sum(num_symbols ** t for t in range(horizon))
    return num_symbols ** entries


def _source_paths(model: MarkovModel, horizon: int) -> Tuple[np.ndarray, np.ndarray]:
    """Every path x_0..x_{T-1} with its probability, in lexicographic order."""
    paths = np.array(list(product(range(model.num_states), repeat=horizon)), dtype=np.int64)
    probs = model.initial.probs[paths[:, 0]].copy()
    for t in range(1, horizon):
        probs *= model.transition[paths[:, t - 1], paths[:, t]]
    return paths, probs


def _path_cost(
    encoder_tables: List[np.ndarray],
    paths: np.ndarray,
    probs: np.ndarray,
    distortion: DistortionSpec,
    num_symbols: int,
    decoder_tables: Optional[List[np.ndarray]] = None,
) -> Tuple[float, List[np.ndarray]]:
    """Expected average distortion; optimal decoders are computed when none are given."""
    horizon = paths.shape[1]
    history = np.zeros(paths.shape[0], dtype=np.int64)
    total = 0.0
    decoders = []
    for t in range(horizon):
        x = paths[:, t]
        history = history * num_symbols + encoder_tables[t][history, x]
        if decoder_tables is not None:
            decoder = np.asarray(decoder_tables[t])
            total += float((probs * distortion.matrix[x, decoder[history]]).sum())
        else:
            expected = np.zeros((num_symbols ** (t + 1), distortion.reproduction_size))
            np.add.at(expected, history, probs[:, None] * distortion.matrix[x])
            decoder = np.argmin(expected, axis=1)
            total += float(expected[np.arange(expected.shape[0]), decoder].sum())
        decoders.append(decoder)
    return total / horizon, decoders


def _history_search(model: MarkovModel, distortion: DistortionSpec, num_symbols: int, horizon: int):
    """Minimize separately below every history node over all labeled maps.

    Weights are unnormalized joint probabilities Pr(X_t = x, q-history), so the
    subtree values add up to the expected total distortion.
    """
    maps = [np.array(labels) for labels in product(range(num_symbols), repeat=model.num_states)]

    def best_below(t: int, history: int, weights: np.ndarray):
        if t == horizon:
            return 0.0, {}, {}
        best = None
        for labels in maps:
            value = 0.0
            encoders: Dict[Tuple[int, int], np.ndarray] = {(t, history): labels}
            decoders: Dict[Tuple[int, int], int] = {}
            for q in range(num_symbols):
                cell = weights * (labels == q)
                value += float((cell @ distortion.matrix).min())
                child_history = history * num_symbols + q
                decoders[(t, child_history)] = reproduction_for(cell, distortion)
                if cell.sum() <= 0.0:
                    continue
                child_value, child_enc, child_dec = best_below(t + 1, child_history, cell @ model.transition)
                value += child_value
                encoders.update(child_enc)
                decoders.update(child_dec)
            if best is None or value < best[0]:
                best = (value, encoders, decoders)
        return best

    value, encoders, decoders = best_below(0, 0, model.initial.probs)
    encoder_tables = [np.zeros((num_symbols ** t, model.num_states), dtype=np.int64) for t in range(horizon)]
    decoder_tables = [np.zeros(num_symbols ** (t + 1), dtype=np.int64) for t in range(horizon)]
    for (t, history), labels in encoders.items():
        encoder_tables[t][history] = labels
    for (t, history), reproduction in decoders.items():
        decoder_tables[t][history] = reproduction
    return value / horizon, OraclePolicy(encoder_tables, decoder_tables, num_symbols)


def _tables_from_flat(flat: Tuple[int, ...], num_states: int, num_symbols: int, horizon: int) -> List[np.ndarray]:
    tables, offset = [], 0
    for t in range(horizon):
        size = num_symbols ** t * num_states
        tables.append(np.array(flat[offset:offset + size], dtype=np.int64).reshape(num_symbols ** t, num_states))
        offset += size
    return tables


def _enumerate_search(
    model: MarkovModel, distortion: DistortionSpec, num_symbols: int, horizon: int, total: int, threads: int
):
    paths, probs = _source_paths(model, horizon)
    entries = model.num_states * sum(num_symbols ** t for t in range(horizon))
    chunks = max(1, threads)
    bounds = [(total * i // chunks, total * (i + 1) // chunks) for i in range(chunks)]

    def scan(bound):
        start, stop = bound
        best = None
        candidates = islice(product(range(num_symbols), repeat=entries), start, stop)
        for index, flat in enumerate(candidates, start=start):
            tables = _tables_from_flat(flat, model.num_states, num_symbols, horizon)
            value, decoders = _path_cost(tables, paths, probs, distortion, num_symbols)
            if best is None or value < best[0]:
                best = (value, index, tables, decoders)
        return best

    results = [r for r in BatchRunner(threads, description="oracle table chunks").map(scan, bounds) if r]
    # (value, lexicographic table index) keeps the reduction independent of chunking
    value, _, tables, decoders = min(results, key=lambda r: (r[0], r[1]))
    return value, OraclePolicy(tables, decoders, num_symbols)


def exhaustive_min(
    model: MarkovModel,
    distortion: DistortionSpec,
    num_symbols: int,
    horizon: int,
    strategy: str = HISTORY,
    cap: int = DEFAULT_SEARCH_CAP,
    threads: int = 1,
) -> Tuple[float, OraclePolicy]:
    """Exact minimum of (1/T) E[Σ d(X_t, X̂_t)] with the decoder optimal per history."""
    if horizon < 1 or num_symbols < 1:
        raise DimensionMismatch(f"Need T >= 1 and M >= 1, got T={horizon}, M={num_symbols}")
    if strategy not in STRATEGIES:
        raise DimensionMismatch(f"Unknown oracle strategy '{strategy}'. Supported: {STRATEGIES}")
    if distortion.num_states != model.num_states:
        raise DimensionMismatch(
            f"Distortion has {distortion.num_states} source states, model has {model.num_states}"
        )
    size = search_space_size(model.num_states, num_symbols, horizon)
    if size > cap:
        raise SearchSpaceTooLarge(
            f"{size} encoder table sets exceed the oracle cap {cap}", size=size, cap=cap
        )
    if strategy == HISTORY:
        value, policy = _history_search(model, distortion, num_symbols, horizon)
    else:
        value, policy = _enumerate_search(model, distortion, num_symbols, horizon, size, threads)
    get_logger().info(f"Oracle ({strategy}) T={horizon}, M={num_symbols}: {value:.12g}")
    return value, policy


def evaluate_oracle_policy(
    policy: OraclePolicy, model: MarkovModel, distortion: DistortionSpec, horizon: int
) -> float:
    """Expected average distortion of fixed encoder and decoder tables by path enumeration."""
    policy.validate(model.num_states, distortion.reproduction_size, horizon)
    paths, probs = _source_paths(model, horizon)
    encoders = [np.asarray(table, dtype=np.int64) for table in policy.encoder_tables]
    value, _ = _path_cost(encoders, paths, probs, distortion, policy.num_symbols, policy.decoder_tables)
    return value


def random_oracle_policy(
    num_states: int, num_symbols: int, horizon: int, reproduction_size: int, seed: int
) -> OraclePolicy:
    rng = np.random.default_rng(seed)
    return OraclePolicy(
        encoder_tables=[rng.integers(0, num_symbols, (num_symbols ** t, num_states)) for t in range(horizon)],
        decoder_tables=[rng.integers(0, reproduction_size, num_symbols ** (t + 1)) for t in range(horizon)],
        num_symbols=num_symbols,
    )
