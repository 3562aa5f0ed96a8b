"""Crosstalk-avoidance codec: counting, enumerative rank/unrank, word codec.

Given the past bus state, the valid next states are the words with no
opposing transition on any adjacent wire pair. Valid words factor across
alternating runs of the past state, and each run of length d admits exactly
F(d+2) continuations, so the code is realized run by run with a global
mixed-radix wrapper.
"""

from __future__ import annotations

import math

import numpy as np

from .buscore import BitsLike, as_bits, fib, _run_bounds

__all__ = [
    "UNSET",
    "RunCodebook",
    "count_codewords",
    "run_unrank",
    "run_rank",
    "k_info",
    "cac_encode",
    "cac_decode",
    "cac_rate",
]

# Marker used in partial bus words for wires the codec does not assign.
UNSET = np.uint8(2)


class RunCodebook:
    """Enumerative codec for the continuations of one alternating run.

    Codewords are ordered lexicographically (0 < 1, wire order). Ranking uses
    a suffix-count table: ``counts[i][v]`` is the number of valid completions
    of positions i.. given bit v at position i; all entries are Fibonacci
    numbers, kept as exact integers.
    """

    def __init__(self, past_run_bits: BitsLike):
        past = as_bits(past_run_bits)
        if past.size > 1 and np.any(past[1:] == past[:-1]):
            raise ValueError("past run bits must alternate")
        d = past.size
        counts = [[0, 0] for _ in range(d)]
        counts[d - 1] = [1, 1]
        for i in range(d - 2, -1, -1):
            nxt = counts[i + 1]
            # Bit equal to the past bit makes no transition: both next bits
            # are allowed. A transition forbids the neighbour transitioning.
            counts[i][past[i]] = nxt[0] + nxt[1]
            counts[i][1 - past[i]] = nxt[past[i + 1]]
        self.past = past
        self._counts = counts

    @property
    def codeword_count(self) -> int:
        c = self._counts[0]
        return c[0] + c[1]

    def __len__(self) -> int:
        return self.past.size

    def _allowed(self, i: int, prev_bit: int, v: int) -> bool:
        if i == 0:
            return True
        past = self.past
        return not (prev_bit != past[i - 1] and v != past[i])

    def unrank(self, index: int) -> np.ndarray:
        """index-th valid continuation in lexicographic order."""
        total = self.codeword_count
        if not 0 <= index < total:
            raise ValueError(f"index {index} out of range [0, {total})")
        out = np.empty(self.past.size, dtype=np.uint8)
        rem = int(index)
        for i in range(self.past.size):
            for v in (0, 1):
                if not self._allowed(i, out[i - 1] if i else 0, v):
                    continue
                c = self._counts[i][v]
                if rem < c:
                    out[i] = v
                    break
                rem -= c
        return out

    def rank(self, continuation: BitsLike) -> int:
        """Inverse of ``unrank`` for a valid continuation."""
        word = as_bits(continuation)
        if word.size != self.past.size:
            raise ValueError("continuation length does not match the run length")
        idx = 0
        for i in range(word.size):
            v = int(word[i])
            if not self._allowed(i, int(word[i - 1]) if i else 0, v):
                raise ValueError(
                    f"continuation opposes the past run at position {i + 1} within the run"
                )
            if v == 1:
                idx += self._counts[i][0] if self._allowed(i, int(word[i - 1]) if i else 0, 0) else 0
        return idx


def count_codewords(a: BitsLike) -> int:
    """Number of valid next states for past state ``a``: prod F(d_m + 2)."""
    arr = as_bits(a)
    _, lengths = _run_bounds(arr)
    out = 1
    for d in lengths:
        out *= fib(int(d) + 2)
    return out


def run_unrank(past_run_bits: BitsLike, index: int) -> np.ndarray:
    """index-th valid continuation of one alternating run (lexicographic)."""
    return RunCodebook(past_run_bits).unrank(index)


def run_rank(past_run_bits: BitsLike, continuation: BitsLike) -> int:
    """Lexicographic position of a valid continuation of one run."""
    return RunCodebook(past_run_bits).rank(continuation)


def _active_runs(a: np.ndarray, excluded: set[int]) -> list[tuple[int, int]]:
    """(start, length) of runs kept for encoding, 0-based, wire order.

    Excluded wires must be free (length-1 runs); they are dropped entirely
    so the mixed radix never touches them.
    """
    starts, lengths = _run_bounds(a)
    free = set(int(s) for s in starts[lengths == 1])
    bad = excluded - free
    if bad:
        wires = sorted(w + 1 for w in bad)
        raise ValueError(f"excluded wires must be free wires; wires {wires} are not free")
    return [
        (int(s), int(d))
        for s, d in zip(starts, lengths)
        if not (d == 1 and int(s) in excluded)
    ]


def _excluded_set(excluded_wires) -> set[int]:
    return {int(w) - 1 for w in excluded_wires}


def k_info(a: BitsLike, excluded_wires: tuple[int, ...] = ()) -> int:
    """Payload size in bits for past state ``a`` with the given exclusions.

    floor(log2) of the codeword count over the non-excluded runs; the
    fractional remainder of the index space is never used.
    """
    arr = as_bits(a)
    runs = _active_runs(arr, _excluded_set(excluded_wires))
    total = 1
    for _, d in runs:
        total *= fib(d + 2)
    return total.bit_length() - 1


def cac_encode(
    info_bits: BitsLike, a: BitsLike, excluded_wires: tuple[int, ...] = ()
) -> np.ndarray:
    """Encode a payload onto all wires except ``excluded_wires`` (1-based).

    The payload is read as a big-endian integer, decomposed by mixed radix
    over the per-run codeword counts (first run most significant), and each
    digit is unranked within its run. Returns a full-length array with
    ``UNSET`` on excluded wires; every assigned pair satisfies the
    crosstalk constraints of ``a``.
    """
    arr = as_bits(a)
    bits = as_bits(info_bits) if len(info_bits) else np.zeros(0, dtype=np.uint8)
    excluded = _excluded_set(excluded_wires)
    runs = _active_runs(arr, excluded)
    books = [RunCodebook(arr[s : s + d]) for s, d in runs]
    counts = [b.codeword_count for b in books]
    total = math.prod(counts)
    k = total.bit_length() - 1
    if bits.size != k:
        raise ValueError(f"payload must have exactly {k} bits, got {bits.size}")
    index = 0
    for b in bits:
        index = (index << 1) | int(b)
    digits: list[int] = []
    for c in reversed(counts):
        index, dig = divmod(index, c)
        digits.append(dig)
    digits.reverse()
    out = np.full(arr.size, UNSET, dtype=np.uint8)
    for (s, d), book, dig in zip(runs, books, digits):
        out[s : s + d] = book.unrank(dig)
    return out


def cac_decode(
    b_partial: BitsLike, a: BitsLike, excluded_wires: tuple[int, ...] = ()
) -> np.ndarray:
    """Recover the payload from a partial bus word; inverse of ``cac_encode``.

    Values on excluded wires are ignored. Raises if the word violates a
    crosstalk constraint or if its recombined index falls outside the
    2**K payload range.
    """
    arr = as_bits(a)
    if isinstance(b_partial, str):
        word = np.array([int(c) for c in b_partial], dtype=np.uint8)
    else:
        word = np.asarray(b_partial, dtype=np.uint8)
    if word.size != arr.size:
        raise ValueError("word length does not match the past state")
    if not np.all(word <= UNSET):
        raise ValueError("partial-word symbols must be 0, 1, or unset")
    excluded = _excluded_set(excluded_wires)
    runs = _active_runs(arr, excluded)
    books = [RunCodebook(arr[s : s + d]) for s, d in runs]
    counts = [b.codeword_count for b in books]
    total = math.prod(counts)
    k = total.bit_length() - 1
    index = 0
    for (s, d), book in zip(runs, books):
        try:
            index = index * book.codeword_count + book.rank(word[s : s + d])
        except ValueError as exc:
            raise ValueError(f"wires {s + 1}..{s + d}: {exc}") from None
    if index >> k:
        raise ValueError(f"word index {index} falls outside the used range [0, 2**{k})")
    out = np.empty(k, dtype=np.uint8)
    for i in range(k - 1, -1, -1):
        out[i] = index & 1
        index >>= 1
    return out


def cac_rate(a: BitsLike) -> float:
    """Information rate (1/N) sum log2 F(d_m + 2) for past state ``a``."""
    arr = as_bits(a)
    _, lengths = _run_bounds(arr)
    return sum(math.log2(fib(int(d) + 2)) for d in lengths) / arr.size
