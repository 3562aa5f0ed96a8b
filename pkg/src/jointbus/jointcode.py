"""Embedded joint coding: parities placed on free wires of the past state.

The encoder chain: pick parity wires among the free wires of the past bus
state (falling back to shield pairs carved out of long runs when free wires
run short), CAC-encode the payload onto the remaining wires, feed those bits
to the repeat-accumulate code, and drop the parities into the reserved
slots. Parity placement is a deterministic function of the past state, so a
receiver that tracks the bus can reproduce it without side information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from .buscore import BitsLike, BusState, as_bits, _run_bounds
from .cac import RunCodebook, cac_rate
from .ira import IraGraph, ira_encode

__all__ = [
    "WireLayout",
    "ParitySelection",
    "EmbeddedCodeword",
    "RateComparison",
    "DminResult",
    "build_layout",
    "select_parity_wires",
    "payload_size",
    "embedded_encode",
    "decode_payload",
    "rate_shielded",
    "rate_embedded",
    "wires_needed",
    "compare_rates",
    "dmin_witness",
    "dmin_bruteforce",
]


@dataclass(frozen=True)
class WireLayout:
    """Wire placement for one code instance, in 0-based array positions.

    ``parity_slots`` lists every parity-carrying wire in ascending order,
    which is also the accumulator chain order. ``pinned`` wires repeat their
    own past bit to shield an adjacent parity. ``segments`` are the
    (start, length) alternating stretches left for CAC-coded payload bits;
    their union, in wire order, is ``info_wires``.
    """

    n: int
    parity_slots: tuple[int, ...]
    pinned: tuple[tuple[int, int], ...]
    segments: tuple[tuple[int, int], ...]

    @cached_property
    def seg_starts(self) -> np.ndarray:
        return np.fromiter((s for s, _ in self.segments), dtype=np.int64, count=len(self.segments))

    @cached_property
    def seg_lengths(self) -> np.ndarray:
        return np.fromiter((d for _, d in self.segments), dtype=np.int64, count=len(self.segments))

    @cached_property
    def info_wire_array(self) -> np.ndarray:
        lengths = self.seg_lengths
        total = int(lengths.sum())
        if total == 0:
            return np.zeros(0, dtype=np.int64)
        offsets = np.concatenate(([0], np.cumsum(lengths)[:-1]))
        return np.arange(total) - np.repeat(offsets, lengths) + np.repeat(self.seg_starts, lengths)

    @cached_property
    def parity_slot_array(self) -> np.ndarray:
        return np.fromiter(self.parity_slots, dtype=np.int64, count=len(self.parity_slots))

    @property
    def info_wires(self) -> tuple[int, ...]:
        return tuple(int(w) for w in self.info_wire_array)

    @property
    def num_info(self) -> int:
        return int(self.seg_lengths.sum())

    @property
    def num_parity(self) -> int:
        return len(self.parity_slots)


class ParitySelection(NamedTuple):
    """1-based parity placement: chosen free wires plus shield pairs."""

    parity_wires: tuple[int, ...]
    shield_pairs: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class EmbeddedCodeword:
    """One encoded bus word together with its wire roles (1-based)."""

    word: BusState
    parity_wires: tuple[int, ...]
    info_wires: tuple[int, ...]
    shield_pairs: tuple[tuple[int, int], ...]
    layout: WireLayout


@dataclass(frozen=True)
class RateComparison:
    """Shielded vs embedded rate for one past state and ECC rate."""

    r_cac: float
    r_shielded: float
    r_embedded: float
    margin: float
    cac_rate_lower_bound: float


@dataclass(frozen=True)
class DminResult:
    """Exhaustive minimum distances of the joint code and the ECC alone."""

    d_embedded: int
    d_ecc: int


def _stride_select(free_count: int, p_needed: int) -> list[int]:
    """Indices of parity wires within the free-wire list, spread uniformly."""
    chosen: set[int] = set()
    for i in range(p_needed):
        j = round(i * free_count / p_needed)
        while j in chosen:
            j += 1
        if j >= free_count:
            j = min(set(range(free_count)) - chosen)
        chosen.add(j)
    return sorted(chosen)


def build_layout(a: BitsLike, p_needed: int) -> WireLayout:
    """Deterministic parity/info/shield placement for ``p_needed`` parities.

    With enough free wires, parity wires are taken from the free-wire list
    by uniform stride. Otherwise every free wire carries a parity and each
    remaining parity claims a shield pair: the two rightmost wires of the
    longest remaining run, the left one pinned to its past bit so that the
    parity on the right one can never oppose a neighbour.
    """
    arr = as_bits(a)
    if p_needed < 0:
        raise ValueError("p_needed must be >= 0")
    starts, lengths = _run_bounds(arr)
    runs = list(zip((int(s) for s in starts), (int(d) for d in lengths)))
    free = [s for s, d in runs if d == 1]
    pinned: list[tuple[int, int]] = []
    if p_needed <= len(free):
        slots = [free[j] for j in _stride_select(len(free), p_needed)]
        taken = set(slots)
        segments = [(s, d) for s, d in runs if not (d == 1 and s in taken)]
    else:
        slots = list(free)
        segments = [(s, d) for s, d in runs if d > 1]
        deficit = p_needed - len(free)
        for _ in range(deficit):
            segments.sort()
            best = max(range(len(segments)), key=lambda i: (segments[i][1], -i), default=-1)
            if best < 0 or segments[best][1] < 2:
                raise ValueError(
                    f"cannot place {p_needed} parities: {len(free)} free wires and "
                    f"shield capacity exhausted (at most {(arr.size - len(free)) // 2} pairs)"
                )
            s, d = segments.pop(best)
            pinned.append((s + d - 2, int(arr[s + d - 2])))
            slots.append(s + d - 1)
            if d - 2 >= 1:
                segments.append((s, d - 2))
    return WireLayout(
        n=arr.size,
        parity_slots=tuple(sorted(slots)),
        pinned=tuple(sorted(pinned)),
        segments=tuple(sorted(segments)),
    )


def select_parity_wires(a: BitsLike, p_needed: int) -> ParitySelection:
    """1-based parity placement for ``p_needed`` parities (see build_layout)."""
    layout = build_layout(a, p_needed)
    shield = tuple((pin + 1, pin + 2) for pin, _ in layout.pinned)
    shield_slots = {pin + 1 for pin, _ in layout.pinned}
    parity = tuple(w + 1 for w in layout.parity_slots if w not in shield_slots)
    return ParitySelection(parity_wires=parity, shield_pairs=shield)


def payload_size(a: BitsLike, p_needed: int) -> int:
    """Payload bits carried by one bus word under the given parity budget."""
    layout = build_layout(a, p_needed)
    return _segments_payload_bits(as_bits(a), layout)[1]


def _segments_payload_bits(arr: np.ndarray, layout: WireLayout):
    books = [RunCodebook(arr[s : s + d]) for s, d in layout.segments]
    total = math.prod(b.codeword_count for b in books)
    return books, total.bit_length() - 1


def embedded_encode(
    info_bits: BitsLike,
    a: BitsLike,
    graph: IraGraph,
    selection: Optional[ParitySelection] = None,
) -> EmbeddedCodeword:
    """Encode a payload into a crosstalk-safe bus word with embedded parities.

    ``graph`` must be sized for the layout: num_parity parities and one info
    node per payload-carrying wire. If ``selection`` is given it is checked
    against the placement recomputed from ``a`` (the receiver can only
    reproduce placements that are functions of the past state).
    """
    arr = as_bits(a)
    layout = build_layout(arr, graph.num_parity)
    if selection is not None and selection != select_parity_wires(arr, graph.num_parity):
        raise ValueError("parity selection does not match the placement derived from the past state")
    if graph.num_info != layout.num_info:
        raise ValueError(
            f"graph has {graph.num_info} info nodes but the layout carries {layout.num_info}"
        )
    books, k = _segments_payload_bits(arr, layout)
    bits = as_bits(info_bits) if len(info_bits) else np.zeros(0, dtype=np.uint8)
    if bits.size != k:
        raise ValueError(f"payload must have exactly {k} bits, got {bits.size}")
    index = 0
    for b in bits:
        index = (index << 1) | int(b)
    word = np.zeros(arr.size, dtype=np.uint8)
    digits: list[int] = []
    for book in reversed(books):
        index, dig = divmod(index, book.codeword_count)
        digits.append(dig)
    digits.reverse()
    for (s, d), book, dig in zip(layout.segments, books, digits):
        word[s : s + d] = book.unrank(dig)
    systematic = word[layout.info_wire_array]
    parities = ira_encode(systematic, graph)
    word[layout.parity_slot_array] = parities
    for pin, val in layout.pinned:
        word[pin] = val
    shield_slots = {pin + 1 for pin, _ in layout.pinned}
    return EmbeddedCodeword(
        word=BusState(word),
        parity_wires=tuple(w + 1 for w in layout.parity_slots if w not in shield_slots),
        info_wires=tuple(w + 1 for w in layout.info_wires),
        shield_pairs=tuple((pin + 1, pin + 2) for pin, _ in layout.pinned),
        layout=layout,
    )


def decode_payload(word: BitsLike, a: BitsLike, p_needed: int) -> np.ndarray:
    """Recover the payload from a fully known bus word (no erasures).

    Raises if the payload-carrying wires violate a crosstalk constraint or
    if the recombined index falls outside the 2**K payload range.
    """
    arr = as_bits(a)
    w = as_bits(word)
    if w.size != arr.size:
        raise ValueError("word length does not match the past state")
    layout = build_layout(arr, p_needed)
    books, k = _segments_payload_bits(arr, layout)
    index = 0
    for (s, d), book in zip(layout.segments, books):
        try:
            index = index * book.codeword_count + book.rank(w[s : s + d])
        except ValueError as exc:
            raise ValueError(f"wires {s + 1}..{s + d}: {exc}") from None
    if index >> k:
        raise ValueError(f"word index {index} falls outside the used range [0, 2**{k})")
    out = np.empty(k, dtype=np.uint8)
    for i in range(k - 1, -1, -1):
        out[i] = index & 1
        index >>= 1
    return out


def rate_shielded(r_cac: float, r_ecc: float) -> float:
    """Bus rate when every parity is duplicated onto a shield pair."""
    return r_cac / (2.0 / r_ecc - 1.0)


def rate_embedded(r_cac: float, r_ecc: float) -> float:
    """Bus rate when parities ride free wires: r_cac + r_ecc - 1.

    Assumes the past state offers enough free wires for all parities.
    """
    return r_cac + r_ecc - 1.0


def wires_needed(k_info: int, rate: float) -> int:
    """ceil(k_info / rate): bus width needed to move k_info payload bits."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    return math.ceil(k_info / rate)


def compare_rates(a: BitsLike, r_ecc: float) -> RateComparison:
    """Shielded vs embedded rates for one past state.

    Requires a free-wire fraction of at least 1 - r_ecc, under which the
    CAC rate is certifiably at least 1 - r_ecc/2 and the embedded margin is
    non-negative.
    """
    arr = as_bits(a)
    _, lengths = _run_bounds(arr)
    free_fraction = int(np.count_nonzero(lengths == 1)) / arr.size
    if free_fraction < 1.0 - r_ecc:
        raise ValueError(
            f"free-wire fraction {free_fraction:.4f} is below the required {1.0 - r_ecc:.4f}"
        )
    r_cac = cac_rate(arr)
    r_s = rate_shielded(r_cac, r_ecc)
    r_e = rate_embedded(r_cac, r_ecc)
    return RateComparison(
        r_cac=r_cac,
        r_shielded=r_s,
        r_embedded=r_e,
        margin=r_e - r_s,
        cac_rate_lower_bound=1.0 - r_ecc / 2.0,
    )


def _pair_ok(t: np.ndarray, i: int) -> bool:
    return not (t[i] == 1 and t[i + 1] == 1)


def _fix_segment(a_seg: np.ndarray, c0_seg: np.ndarray) -> np.ndarray:
    """Companion word for one run: zero where c0 already satisfies the
    constraints, patched inside each violated stretch.

    Violated stretches are the maximal blocks where c0 opposes the past run
    on consecutive pairs (always length >= 2). Interior positions get 1;
    the two boundary bits take the first value pair (trying 0 first) that
    keeps both the companion and its XOR with c0 constraint-clean.
    """
    d = a_seg.size
    t0 = c0_seg ^ a_seg
    c1 = np.zeros(d, dtype=np.uint8)
    i = 0
    while i < d:
        if t0[i] == 0:
            i += 1
            continue
        j = i
        while j + 1 < d and t0[j + 1] == 1:
            j += 1
        if j > i:  # lone mismatches are not violations
            c1[i + 1 : j] = 1
            lo, hi = max(i - 1, 0), min(j + 1, d - 1)
            for first in (0, 1):
                for last in (0, 1):
                    c1[i], c1[j] = first, last
                    t1 = c1[lo : hi + 1] ^ a_seg[lo : hi + 1]
                    t2 = t1 ^ c0_seg[lo : hi + 1]  # equals (c0 xor c1) xor a
                    if all(_pair_ok(t1, p) and _pair_ok(t2, p) for p in range(hi - lo)):
                        break
                else:
                    continue
                break
            else:
                raise RuntimeError("no admissible boundary completion for a violated stretch")
        i = j + 1
    t1 = c1 ^ a_seg
    t2 = t1 ^ c0_seg
    if np.any((t1[:-1] == 1) & (t1[1:] == 1)) or np.any((t2[:-1] == 1) & (t2[1:] == 1)):
        raise RuntimeError("companion construction left a violated pair")
    return c1


def dmin_witness(c0_info: BitsLike, a: BitsLike, graph: IraGraph) -> tuple[BusState, BusState]:
    """Split a code difference word into two constraint-satisfying codewords.

    Given the systematic part of a nonzero ECC codeword c0, returns full bus
    words (c1, c2) that each satisfy every crosstalk constraint of ``a`` and
    every parity check, with c1 xor c2 = c0. Their Hamming distance is the
    weight of c0, so minimum distance pairs exist inside the joint code.
    """
    arr = as_bits(a)
    layout = build_layout(arr, graph.num_parity)
    if layout.pinned:
        raise ValueError("witness construction requires all parities on free wires")
    if graph.num_info != layout.num_info:
        raise ValueError("graph does not match the layout for this past state")
    c0 = as_bits(c0_info)
    if c0.size != layout.num_info:
        raise ValueError(f"expected {layout.num_info} systematic bits, got {c0.size}")
    if not c0.any():
        raise ValueError("c0 must be a nonzero codeword")
    c1 = np.zeros(c0.size, dtype=np.uint8)
    off = 0
    for s, d in layout.segments:
        c1[off : off + d] = _fix_segment(arr[s : s + d], c0[off : off + d])
        off += d
    words = []
    for sys_bits in (c1, c1 ^ c0):
        w = np.zeros(arr.size, dtype=np.uint8)
        w[layout.info_wire_array] = sys_bits
        w[layout.parity_slot_array] = ira_encode(sys_bits, graph)
        words.append(BusState(w))
    return words[0], words[1]


def _segment_words(book: RunCodebook) -> np.ndarray:
    """All valid continuations of one run, packed as integers (first wire
    most significant)."""
    d = len(book)
    out = np.empty(book.codeword_count, dtype=np.int64)
    for k in range(book.codeword_count):
        bits = book.unrank(k)
        v = 0
        for b in bits:
            v = (v << 1) | int(b)
        out[k] = v
    return out


def _xor_closure(values: np.ndarray, width: int) -> np.ndarray:
    """All pairwise XOR differences of ``values`` (width-bit ints)."""
    seen = np.zeros(1 << width, dtype=bool)
    chunk = max(1, (1 << 22) // max(values.size, 1))
    for i in range(0, values.size, chunk):
        seen[(values[i : i + chunk, None] ^ values[None, :]).ravel()] = True
    return np.flatnonzero(seen).astype(np.int64)


def _word_weights(packed: np.ndarray, width: int, graph: IraGraph) -> np.ndarray:
    """Weight of the full codeword (systematic + accumulated parities) for
    each packed systematic word."""
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    adj = np.zeros((width, graph.num_parity), dtype=np.int64)
    if graph.num_edges:
        np.add.at(adj, (graph.edge_info, graph.edge_check), 1)
    adj &= 1
    weights = np.empty(packed.size, dtype=np.int64)
    chunk = max(1, (1 << 22) // max(width, 1))
    for i in range(0, packed.size, chunk):
        bits = (packed[i : i + chunk, None] >> shifts[None, :]) & 1
        s = bits @ adj & 1
        par = np.cumsum(s, axis=1) & 1
        weights[i : i + chunk] = bits.sum(axis=1) + par.sum(axis=1)
    return weights


def dmin_bruteforce(a: BitsLike, graph: IraGraph) -> DminResult:
    """Exhaustive minimum distances of the joint code and the ECC alone.

    The joint code is every constraint-satisfying systematic word completed
    with its parities; distances reduce to weights of XOR differences,
    which factor across runs. Feasible up to 20 systematic bits.
    """
    arr = as_bits(a)
    layout = build_layout(arr, graph.num_parity)
    if layout.pinned:
        raise ValueError("distance scan requires all parities on free wires")
    if graph.num_info != layout.num_info:
        raise ValueError("graph does not match the layout for this past state")
    width = layout.num_info
    if width > 20:
        raise ValueError(f"exhaustive scan limited to 20 systematic bits, got {width}")
    if width == 0:
        raise ValueError("no systematic bits to scan")
    diffs = np.zeros(1, dtype=np.int64)
    for s, d in layout.segments:
        seg = _xor_closure(_segment_words(RunCodebook(arr[s : s + d])), d)
        diffs = ((diffs[:, None] << d) | seg[None, :]).ravel()
    diffs = diffs[diffs != 0]
    d_emb = int(_word_weights(diffs, width, graph).min())
    everything = np.arange(1, 1 << width, dtype=np.int64)
    d_ecc = int(_word_weights(everything, width, graph).min())
    return DminResult(d_embedded=d_emb, d_ecc=d_ecc)
