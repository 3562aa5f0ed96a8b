"""Erasure channel, past-state ensembles, and the Monte-Carlo trial engine.

Each trial draws a fresh past state, builds a code instance sized to it,
sends one bus word through the erasure channel, and decodes. Trials are
keyed by (seed, trial index) through a counter-based generator, so results
are reproducible and independent of execution order or parallelism.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import sqrt
from typing import Optional

import numpy as np

from .buscore import BitsLike, BusState, as_bits, fib, state_from_runs, _run_bounds
from .bpdecode import ERASED, ErasureWord, bp_decode, build_factor_graph
from .densevo import DeModel, de_trajectory
from .ira import DegreeDistribution, IraGraph, ira_encode, rate_ldpc, recc_from_rldpc, sample_graph
from .jointcode import WireLayout, build_layout, _segments_payload_bits

__all__ = [
    "EnsembleSpec",
    "SimConfig",
    "TrialStats",
    "ModifiedPastState",
    "bec_transmit",
    "gen_past_uniform",
    "gen_past_modified",
    "run_trials",
    "de_vs_simulation",
    "wilson_interval",
]


@dataclass(frozen=True)
class EnsembleSpec:
    """How past bus states are drawn: 'uniform' over all words of length n,
    or 'modified' (independent runs interleaved at random, parities tied to
    the dedicated length-1 runs)."""

    kind: str
    n: int
    r_ecc: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("uniform", "modified"):
            raise ValueError(f"ensemble kind must be 'uniform' or 'modified', got {self.kind!r}")
        if self.n < 1:
            raise ValueError("ensemble length must be >= 1")
        if self.kind == "modified":
            if self.r_ecc is None or not 0.75 < self.r_ecc <= 1.0:
                raise ValueError("modified ensemble needs r_ecc in (3/4, 1]")


@dataclass(frozen=True)
class SimConfig:
    ensemble: EnsembleSpec
    dist: DegreeDistribution
    eps: float
    trials: int
    seed: int
    mode: str = "uniform-codeword"
    max_outer: int = 200
    jobs: int = 1

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"eps must lie in [0, 1], got {self.eps}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.mode not in ("uniform-codeword", "info-bits"):
            raise ValueError(f"mode must be 'uniform-codeword' or 'info-bits', got {self.mode!r}")


@dataclass
class TrialStats:
    """Aggregated error counts; ratios are derived, never stored."""

    trials: int = 0
    bits_code: int = 0
    bit_errors_code: int = 0
    bits_info: int = 0
    bit_errors_info: int = 0
    block_errors: int = 0
    insufficient_free_wire_events: int = 0
    rng_seed: int = 0

    def add(self, other: "TrialStats") -> "TrialStats":
        return TrialStats(
            trials=self.trials + other.trials,
            bits_code=self.bits_code + other.bits_code,
            bit_errors_code=self.bit_errors_code + other.bit_errors_code,
            bits_info=self.bits_info + other.bits_info,
            bit_errors_info=self.bit_errors_info + other.bit_errors_info,
            block_errors=self.block_errors + other.block_errors,
            insufficient_free_wire_events=(
                self.insufficient_free_wire_events + other.insufficient_free_wire_events
            ),
            rng_seed=self.rng_seed or other.rng_seed,
        )

    @property
    def pb_code(self) -> float:
        return self.bit_errors_code / self.bits_code if self.bits_code else 0.0

    @property
    def pb_info(self) -> float:
        return self.bit_errors_info / self.bits_info if self.bits_info else 0.0

    @property
    def pe(self) -> float:
        return self.block_errors / self.trials if self.trials else 0.0

    @property
    def insufficient_rate(self) -> float:
        return self.insufficient_free_wire_events / self.trials if self.trials else 0.0


@dataclass(frozen=True)
class ModifiedPastState:
    """A modified-ensemble draw: the state plus the 1-based wires of the
    payload part and of the parity-designated part."""

    state: BusState
    part1_wires: tuple[int, ...]
    part2_wires: tuple[int, ...]


def wilson_interval(successes: int, total: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if total == 0:
        return 0.0, 1.0
    p = successes / total
    denom = 1.0 + z * z / total
    center = (p + z * z / (2 * total)) / denom
    half = z * sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based stream for one trial; streams never overlap across
    trial indices, so any execution order gives identical statistics."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, trial_index & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def bec_transmit(b: BitsLike, eps: float, rng: np.random.Generator) -> ErasureWord:
    """Erase each symbol independently with probability eps; never flips."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    bits = as_bits(b)
    out = bits.copy()
    out[rng.random(bits.size) < eps] = ERASED
    return ErasureWord(out)


def gen_past_uniform(n: int, rng: np.random.Generator) -> BusState:
    """Past state with independent fair bits."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return BusState(rng.integers(0, 2, n, dtype=np.uint8))


# Fibonacci ratio table for uniform sampling of valid run continuations in
# transition space (strings with no two adjacent transitions): with r
# positions left, P(transition here) = F(r) / F(r+2).
_RATIO1: list[float] = []


def _ratio1(up_to: int) -> np.ndarray:
    while len(_RATIO1) <= up_to:
        r = len(_RATIO1)
        _RATIO1.append(fib(r) / fib(r + 2) if r >= 1 else 0.0)
    return np.asarray(_RATIO1)


def _sample_valid_word(a: np.ndarray, starts: np.ndarray, lengths: np.ndarray,
                       rng: np.random.Generator) -> np.ndarray:
    """Uniform valid continuation, independently per run.

    Works on transition indicators t = b xor a: validity is exactly 'no two
    adjacent transitions inside a run', and the runs decouple. Sampling is
    sequential within each run with Fibonacci-ratio probabilities, swept
    position-by-position across all runs at once.
    """
    n = a.size
    t = np.zeros(n, dtype=np.uint8)
    d_max = int(lengths.max())
    ratios = _ratio1(d_max + 1)
    forced = np.zeros(starts.size, dtype=bool)
    for j in range(d_max):
        act = np.flatnonzero(lengths > j)
        if act.size == 0:
            break
        pos = starts[act] + j
        rem = lengths[act] - j
        u = rng.random(act.size)
        one = (u < ratios[rem]) & ~forced[act]
        t[pos[one]] = 1
        forced[act] = one
    return (a ^ t).astype(np.uint8)


def _sample_run_length(n_runs: int, r_ecc: float, rng: np.random.Generator) -> np.ndarray:
    """Lengths for the payload part of the modified ensemble: length 1 with
    probability (2r - 3/2)/(2r - 1), otherwise 1 + Geometric(1/2)."""
    p1 = (2 * r_ecc - 1.5) / (2 * r_ecc - 1.0)
    lengths = np.where(
        rng.random(n_runs) < p1,
        1,
        1 + rng.geometric(0.5, n_runs),
    )
    return lengths.astype(np.int64)


def gen_past_modified(
    spec: EnsembleSpec, rng: np.random.Generator
) -> ModifiedPastState:
    """Draw a past state as randomly interleaved independent runs.

    The payload part contributes round(n (r_ecc - 1/2)) runs with the
    heavy-tailed length law above; the parity part contributes
    round(len1 (1 - r_ecc)/r_ecc) runs of length one, where len1 is the
    realized payload-part length. The first bit is uniform and the rest
    follow from the run structure.
    """
    if spec.kind != "modified":
        raise ValueError("spec.kind must be 'modified'")
    r = float(spec.r_ecc)
    n1 = max(1, round(spec.n * (r - 0.5)))
    lengths1 = _sample_run_length(n1, r, rng)
    ell1 = int(lengths1.sum())
    n2 = round(ell1 * (1.0 - r) / r)
    lengths = np.concatenate((lengths1, np.ones(n2, dtype=np.int64)))
    labels = np.concatenate((np.ones(n1, dtype=bool), np.zeros(n2, dtype=bool)))
    perm = rng.permutation(n1 + n2)
    lengths, labels = lengths[perm], labels[perm]
    first_bit = int(rng.integers(0, 2))
    state = state_from_runs(first_bit, lengths)
    wire_is_part1 = np.repeat(labels, lengths)
    part1 = np.flatnonzero(wire_is_part1) + 1
    part2 = np.flatnonzero(~wire_is_part1) + 1
    return ModifiedPastState(
        state=state,
        part1_wires=tuple(int(w) for w in part1),
        part2_wires=tuple(int(w) for w in part2),
    )


def _gen_modified_layout(
    spec: EnsembleSpec, rng: np.random.Generator
) -> tuple[np.ndarray, WireLayout]:
    """Modified-ensemble draw as (bits, layout): parity slots are exactly
    the parity-part wires, segments the payload-part runs."""
    draw = gen_past_modified(spec, rng)
    arr = draw.state.bits
    starts, lengths = _run_bounds(arr)
    part2 = {w - 1 for w in draw.part2_wires}
    slots = []
    segments = []
    for s, d in zip(starts, lengths):
        s, d = int(s), int(d)
        if d == 1 and s in part2:
            slots.append(s)
        else:
            segments.append((s, d))
    layout = WireLayout(
        n=arr.size, parity_slots=tuple(slots), pinned=(), segments=tuple(segments)
    )
    return arr, layout


def _insufficient_counts(n: int) -> tuple[int, ...]:
    # trials, bits_code, errs_code, bits_info, errs_info, blocks, insufficient
    return (1, n, n, 0, 0, 1, 1)


def _graph_for_layout(layout: WireLayout, dist: DegreeDistribution,
                      rng: np.random.Generator) -> IraGraph:
    if layout.num_parity == 0:
        empty = np.zeros(0, dtype=np.int64)
        return IraGraph(layout.num_info, 0, empty, empty.copy())
    return sample_graph(layout.num_info, layout.num_parity, dist, rng)


def _run_one_trial(config: SimConfig, trial_index: int) -> tuple[int, ...]:
    rng = trial_rng(config.seed, trial_index)
    ens = config.ensemble
    if ens.kind == "uniform":
        r_ecc = recc_from_rldpc(rate_ldpc(config.dist))
        arr = rng.integers(0, 2, ens.n, dtype=np.uint8)
        starts, lengths = _run_bounds(arr)
        p_req = round(ens.n * (1.0 - r_ecc))
        if int(np.count_nonzero(lengths == 1)) < p_req:
            return _insufficient_counts(ens.n)
        layout = build_layout(arr, p_req)
    else:
        arr, layout = _gen_modified_layout(ens, rng)
        starts, lengths = _run_bounds(arr)
    n = arr.size
    graph = _graph_for_layout(layout, config.dist, rng)

    info_idx = layout.info_wire_array
    slot_idx = layout.parity_slot_array
    if config.mode == "uniform-codeword":
        word = _sample_valid_word(arr, starts, lengths, rng)
    else:
        _, k = _segments_payload_bits(arr, layout)
        payload = rng.integers(0, 2, k, dtype=np.uint8)
        from .jointcode import embedded_encode

        word = embedded_encode(payload, arr, graph).word.bits.copy()
    word[slot_idx] = ira_encode(word[info_idx], graph)

    received = bec_transmit(word, config.eps, rng)
    fg = build_factor_graph(arr, graph, layout)
    result = bp_decode(received, fg, max_outer=config.max_outer, extract_payload=False)
    out = result.word.symbols
    decided = out != ERASED
    if not np.array_equal(out[decided], word[decided]):
        raise RuntimeError("decoder emitted a bit that differs from the transmitted word")
    residual = result.residual_erasures
    residual_info = int(np.count_nonzero(out[info_idx] == ERASED))
    return (
        1,
        n,
        residual,
        int(info_idx.size),
        residual_info,
        int(residual > 0),
        0,
    )


def _run_chunk(config: SimConfig, lo: int, hi: int) -> tuple[int, ...]:
    totals = (0,) * 7
    for t in range(lo, hi):
        counts = _run_one_trial(config, t)
        totals = tuple(a + b for a, b in zip(totals, counts))
    return totals


def run_trials(config: SimConfig) -> TrialStats:
    """Run the configured Monte-Carlo campaign and aggregate counts.

    A trial whose past state lacks enough free wires for the required
    parities is declared a block error without decoding; its code bits all
    count as errors, and it is tallied separately so alternative accounting
    can be recomputed. Payload-bit counts skip such trials (no layout
    exists). Statistics are invariant to ``jobs``.
    """
    if config.jobs > 1 and config.trials > 1:
        workers = min(config.jobs, config.trials)
        chunk = -(-config.trials // (workers * 4))
        bounds = [(lo, min(lo + chunk, config.trials)) for lo in range(0, config.trials, chunk)]
        totals = (0,) * 7
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for counts in pool.map(_run_chunk, *zip(*[(config, lo, hi) for lo, hi in bounds])):
                totals = tuple(a + b for a, b in zip(totals, counts))
    else:
        totals = _run_chunk(config, 0, config.trials)
    return TrialStats(
        trials=totals[0],
        bits_code=totals[1],
        bit_errors_code=totals[2],
        bits_info=totals[3],
        bit_errors_info=totals[4],
        block_errors=totals[5],
        insufficient_free_wire_events=totals[6],
        rng_seed=config.seed,
    )


def de_vs_simulation(
    eps: float,
    dist: DegreeDistribution,
    n: int,
    iterations: int,
    seed: int,
) -> list[tuple[int, float, float]]:
    """Pair the decoder's per-iteration erased-edge fraction with the
    density-evolution prediction.

    Runs one uniform-ensemble instance of length n with trace recording and
    the analytic recursion side by side; traces shorter than ``iterations``
    (early convergence) are padded with their final value. Rows are
    (iteration, empirical fraction, predicted fraction).
    """
    r_ecc = recc_from_rldpc(rate_ldpc(dist))
    rng = trial_rng(seed, 0)
    arr = rng.integers(0, 2, n, dtype=np.uint8)
    starts, lengths = _run_bounds(arr)
    p_req = round(n * (1.0 - r_ecc))
    if int(np.count_nonzero(lengths == 1)) < p_req:
        raise ValueError("drawn past state lacks free wires; use a larger n or another seed")
    layout = build_layout(arr, p_req)
    graph = _graph_for_layout(layout, dist, rng)
    word = _sample_valid_word(arr, starts, lengths, rng)
    info_idx = layout.info_wire_array
    slot_idx = layout.parity_slot_array
    word[slot_idx] = ira_encode(word[info_idx], graph)
    received = bec_transmit(word, eps, rng)
    fg = build_factor_graph(arr, graph, layout)
    result = bp_decode(received, fg, max_outer=iterations, record_trace=True,
                       extract_payload=False)
    empirical = list(result.x_ecc_trace or ())
    model = DeModel.for_code(dist, r_ecc)
    states, _ = de_trajectory(eps, model, max_iter=iterations)
    predicted = [s.x_ecc for s in states]
    empirical += [empirical[-1] if empirical else 0.0] * (iterations - len(empirical))
    predicted += [predicted[-1] if predicted else 0.0] * (iterations - len(predicted))
    return [(t + 1, empirical[t], predicted[t]) for t in range(iterations)]
