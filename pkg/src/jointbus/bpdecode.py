"""Joint iterative erasure decoding over the combined constraint graph.

The decoder passes {0, 1, ?} messages over a factor graph holding pairwise
crosstalk checks inside each alternating run, the sparse code checks, and
the parity accumulator chain. One outer iteration follows the schedule:

  1. information variables -> crosstalk checks
  2. crosstalk checks -> information variables (repeated within runs until
     nothing changes; a forced wire never transitions, so one pass reaches
     the fixed point)
  3. information variables -> code checks
  4. code checks <-> parity variables until the chain converges
  5. code checks -> information variables

Erasures only ever disappear, so the outer loop stops at the first
iteration that changes no message. The engine below is array-based: known/
unknown flags are tracked per edge, the chain fixed point is computed by
prefix scans, and values are filled in as nodes resolve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from .buscore import BitsLike, as_bits
from .ira import IraGraph
from .jointcode import WireLayout, build_layout, _segments_payload_bits

__all__ = [
    "ERASED",
    "ErasureWord",
    "FactorGraph",
    "DecodeResult",
    "build_factor_graph",
    "cac_node_update",
    "variable_node_update",
    "ecc_node_update",
    "bp_decode",
]

ERASED = 2  # symbol value for '?'

SymbolsLike = Union["ErasureWord", str, Iterable[int], np.ndarray]


class ErasureWord:
    """Length-N channel output over {0, 1, ?}.

    Serializes as a string over {0, 1, e} ('?' also accepted on input).
    Known symbols are never altered by decoding.
    """

    __slots__ = ("_symbols",)

    def __init__(self, symbols: SymbolsLike):
        if isinstance(symbols, ErasureWord):
            arr = symbols.symbols
        elif isinstance(symbols, str):
            table = {"0": 0, "1": 1, "e": ERASED, "?": ERASED}
            try:
                arr = np.array([table[c] for c in symbols], dtype=np.uint8)
            except KeyError:
                raise ValueError(f"erasure string may contain only 0, 1, e, got {symbols!r}")
        else:
            arr = np.asarray(symbols, dtype=np.uint8)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("an erasure word needs at least one symbol")
        if not np.all(arr <= ERASED):
            raise ValueError("erasure-word symbols must be 0, 1, or the erasure marker")
        arr = arr.copy()
        arr.setflags(write=False)
        self._symbols = arr

    @property
    def symbols(self) -> np.ndarray:
        return self._symbols

    @property
    def num_erased(self) -> int:
        return int(np.count_nonzero(self._symbols == ERASED))

    def __len__(self) -> int:
        return self._symbols.size

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ErasureWord):
            return np.array_equal(self._symbols, other._symbols)
        return NotImplemented

    def __str__(self) -> str:
        return "".join("01e"[s] for s in self._symbols)

    def __repr__(self) -> str:
        return f"ErasureWord({str(self)!r})"


@dataclass(frozen=True)
class FactorGraph:
    """Decoding graph for one past state, code instance, and wire layout."""

    a_bits: np.ndarray
    layout: WireLayout
    graph: IraGraph
    info_wires: np.ndarray     # wire index of info node i
    parity_slots: np.ndarray   # wire index of parity j, chain order
    pinned_wires: np.ndarray
    pinned_vals: np.ndarray
    adj_prev: np.ndarray       # wire i shares a segment with wire i-1
    edge_wire: np.ndarray      # wire index of each sparse edge's variable end

    @property
    def n(self) -> int:
        return self.a_bits.size

    @property
    def num_info_vars(self) -> int:
        return self.info_wires.size

    @property
    def num_parity_vars(self) -> int:
        return self.parity_slots.size

    @property
    def num_cac_checks(self) -> int:
        return int(np.count_nonzero(self.adj_prev))

    @property
    def num_ecc_checks(self) -> int:
        return self.parity_slots.size


@dataclass(frozen=True)
class DecodeResult:
    """Outcome of one decoding run."""

    word: ErasureWord
    info_bits: Optional[tuple[int, ...]]
    iterations: int
    converged: bool
    residual_erasures: int
    x_ecc_trace: Optional[tuple[float, ...]] = None


def build_factor_graph(
    a: BitsLike, graph: IraGraph, layout: Optional[WireLayout] = None
) -> FactorGraph:
    """Assemble the decoding graph; the layout defaults to the placement
    derived from the past state and the graph's parity count."""
    arr = as_bits(a)
    if layout is None:
        layout = build_layout(arr, graph.num_parity)
    if layout.n != arr.size:
        raise ValueError("layout does not match the past-state length")
    if graph.num_parity != layout.num_parity or graph.num_info != layout.num_info:
        raise ValueError(
            f"graph sized ({graph.num_info}, {graph.num_parity}) does not match the layout "
            f"({layout.num_info}, {layout.num_parity})"
        )
    info_wires = layout.info_wire_array
    seg_id = np.full(arr.size, -1, dtype=np.int64)
    if info_wires.size:
        seg_id[info_wires] = np.repeat(
            np.arange(len(layout.segments), dtype=np.int64), layout.seg_lengths
        )
    adj_prev = np.zeros(arr.size, dtype=bool)
    adj_prev[1:] = (seg_id[1:] >= 0) & (seg_id[1:] == seg_id[:-1])
    pinned_wires = np.fromiter((w for w, _ in layout.pinned), dtype=np.int64, count=len(layout.pinned))
    pinned_vals = np.fromiter((v for _, v in layout.pinned), dtype=np.uint8, count=len(layout.pinned))
    parity_slots = layout.parity_slot_array
    edge_wire = info_wires[graph.edge_info] if graph.num_edges else np.zeros(0, dtype=np.int64)
    return FactorGraph(
        a_bits=arr,
        layout=layout,
        graph=graph,
        info_wires=info_wires,
        parity_slots=parity_slots,
        pinned_wires=pinned_wires,
        pinned_vals=pinned_vals,
        adj_prev=adj_prev,
        edge_wire=edge_wire,
    )


def cac_node_update(
    past_pair: tuple[int, int], incoming: int, from_side: str
) -> int:
    """Message through one pairwise crosstalk check.

    For past pair (0, 1) the forbidden next pair is (1, 0): a known 1
    entering from the left forces the right wire to 1, and a known 0
    entering from the right forces the left wire to 0; the mirrored rule
    applies for past pair (1, 0). Every other input yields an erasure.
    """
    ap, an = int(past_pair[0]), int(past_pair[1])
    if ap == an:
        raise ValueError("a crosstalk check exists only where the past bits differ")
    if from_side not in ("left", "right"):
        raise ValueError(f"from_side must be 'left' or 'right', got {from_side!r}")
    if incoming == ERASED:
        return ERASED
    forb_left, forb_right = 1 - ap, 1 - an
    if from_side == "left":
        return (1 - forb_right) if incoming == forb_left else ERASED
    return (1 - forb_left) if incoming == forb_right else ERASED


def variable_node_update(channel: int, incoming: Iterable[int]) -> tuple[list[int], int]:
    """Extrinsic per-edge outputs and the final decision of one variable.

    Each outgoing edge repeats any known value among the channel and the
    other edges; the decision may also use the edge's own input. Two
    distinct known inputs cannot happen on an erasure channel and raise.
    """
    inc = [int(v) for v in incoming]
    vals = [int(channel), *inc]
    known = {v for v in vals if v != ERASED}
    if len(known) > 1:
        raise ValueError("contradictory known inputs at a variable node")
    out = []
    for k in range(len(inc)):
        others = {v for i, v in enumerate(vals) if v != ERASED and i != k + 1}
        out.append(others.pop() if others else ERASED)
    return out, (known.pop() if known else ERASED)


def ecc_node_update(incoming: Iterable[int]) -> list[int]:
    """Per-edge outputs of one XOR check: known iff all other inputs are."""
    inc = [int(v) for v in incoming]
    unknown = [i for i, v in enumerate(inc) if v == ERASED]
    if len(unknown) >= 2:
        return [ERASED] * len(inc)
    total = 0
    for v in inc:
        if v != ERASED:
            total ^= v
    if len(unknown) == 1:
        out = [ERASED] * len(inc)
        out[unknown[0]] = total
        return out
    return [total ^ v for v in inc]


def bp_decode(
    received: SymbolsLike,
    fg: FactorGraph,
    max_outer: int = 200,
    saturate_runs: bool = True,
    record_trace: bool = False,
    extract_payload: bool = True,
) -> DecodeResult:
    """Run the scheduled message-passing decoder on one received word.

    Stops at the first outer iteration that changes no message (reported as
    ``converged``) or after ``max_outer`` iterations. When every wire
    resolves and ``extract_payload`` is set, the payload is re-extracted
    from the code-carrying wires; a resolved word whose index falls outside
    the payload range yields ``info_bits=None``. ``record_trace`` captures
    the erased fraction of the variable-to-check messages of step 3 per
    iteration.
    """
    rcv = received if isinstance(received, ErasureWord) else ErasureWord(received)
    n = fg.n
    if len(rcv) != n:
        raise ValueError(f"received word has {len(rcv)} symbols, bus has {n} wires")
    a = fg.a_bits
    symbols = rcv.symbols

    resolved = symbols != ERASED
    val = np.where(resolved, symbols, 0).astype(np.uint8)
    src_ch = resolved.copy()
    if fg.pinned_wires.size:
        # The receiver knows pinned wires repeat their past bit.
        val[fg.pinned_wires] = fg.pinned_vals
        resolved[fg.pinned_wires] = True
        src_ch[fg.pinned_wires] = True

    num_e = fg.edge_wire.size
    num_p = fg.num_parity_vars
    num_i = fg.num_info_vars
    e_info = fg.graph.edge_info
    e_chk = fg.graph.edge_check
    known_ci = np.zeros(num_e, dtype=bool)
    cnt_ci = np.zeros(num_i, dtype=np.int64)
    src_ecc_wire = np.zeros(n, dtype=bool)
    src_cac = np.zeros(n, dtype=bool)

    ch_p = src_ch[fg.parity_slots]
    val_p_ch = val[fg.parity_slots]
    idx_p = np.arange(num_p, dtype=np.int64)

    trace: list[float] = []
    iterations = 0
    converged = False
    prev_sig = (-1, -1, -1)

    for it in range(1, max_outer + 1):
        iterations = it

        # Steps 1-2: a known transitioning wire pins both in-run neighbours
        # to their past bits; pinned values never transition, so repeating
        # the pass cannot force anything new.
        passes = 0
        while True:
            passes += 1
            m = (src_ch | src_ecc_wire) & (val != a) & resolved
            force = np.zeros(n, dtype=bool)
            force[1:] = m[:-1] & fg.adj_prev[1:]
            force[:-1] |= m[1:] & fg.adj_prev[1:]
            grew = bool(np.any(force & ~src_cac))
            src_cac |= force
            newly = force & ~resolved
            val[newly] = a[newly]
            resolved |= force
            if not (saturate_runs and grew and passes < n):
                break

        # Step 3: extrinsic variable-to-check messages.
        intrinsic = src_ch | src_cac
        if num_e:
            ext = intrinsic[fg.edge_wire] | ((cnt_ci[e_info] - known_ci) > 0)
        else:
            ext = np.zeros(0, dtype=bool)
        if record_trace:
            trace.append(float(1.0 - ext.mean()) if num_e else 0.0)

        # Step 4: chain fixed point. ok marks checks whose sparse inputs are
        # all known; knowledge spreads along the chain from known parities
        # (and the implicit zero before parity 0) until the first break.
        unk = np.bincount(e_chk[~ext], minlength=num_p) if num_e else np.zeros(num_p, np.int64)
        ok = unk == 0
        s = np.zeros(num_p, dtype=np.int64)
        if num_e:
            ones = ext & (val[fg.edge_wire] == 1)
            s = np.bincount(e_chk[ones], minlength=num_p) & 1
        if num_p:
            lsp = np.maximum.accumulate(np.where(ch_p, idx_p, -1))
            lbp = np.maximum.accumulate(np.where(~ok, idx_p, -1))
            kf = lsp >= lbp  # parity j -> check j+1 known
            pass_r = np.concatenate(([False], ok[::-1][:-1]))
            lsp_r = np.maximum.accumulate(np.where(ch_p[::-1], idx_p, -1))
            lbp_r = np.maximum.accumulate(np.where(~pass_r, idx_p, -1))
            kb = (lsp_r >= lbp_r)[::-1]  # parity j -> check j known
            kf_prev = np.concatenate(([True], kf[:-1]))
            res_fwd = ok & kf_prev
            res_bwd = np.concatenate((ok[1:] & kb[1:], [False]))
            parity_known = ch_p | res_fwd | res_bwd

            cum = np.bitwise_xor.accumulate(s)
            src_idx = np.concatenate(([-1], lsp[:-1]))
            base_fwd = np.where(src_idx >= 0, val_p_ch[src_idx] ^ cum[src_idx], 0)
            v_fwd = (base_fwd ^ cum).astype(np.uint8)
            tmp = lsp_r[::-1]
            nxt_seed = np.concatenate((tmp[1:], [-1]))
            r_star = np.where(nxt_seed >= 0, num_p - 1 - nxt_seed, 0)
            v_bwd = (val_p_ch[r_star] ^ cum[r_star] ^ cum).astype(np.uint8)
            val_p = np.where(ch_p, val_p_ch, np.where(res_fwd, v_fwd, v_bwd)).astype(np.uint8)

            newly_p = parity_known & ~resolved[fg.parity_slots]
            if newly_p.any():
                wires = fg.parity_slots[newly_p]
                val[wires] = val_p[newly_p]
                resolved[wires] = True
        else:
            kf_prev = np.zeros(0, dtype=bool)
            kb = np.zeros(0, dtype=bool)
            val_p = np.zeros(0, dtype=np.uint8)
            parity_known = np.zeros(0, dtype=bool)

        # Step 5: check-to-variable messages and value fill-in.
        if num_e:
            chain_ok = kf_prev & kb
            other_ok = (unk[e_chk] == 0) | ((unk[e_chk] == 1) & ~ext)
            known_ci = other_ok & chain_ok[e_chk]
            newly_edges = known_ci & ~resolved[fg.edge_wire]
            if newly_edges.any():
                ej = e_chk[newly_edges]
                valp_prev = np.concatenate(([0], val_p[:-1])).astype(np.uint8)
                fill = (s[ej] ^ valp_prev[ej] ^ val_p[ej]).astype(np.uint8)
                wires = fg.edge_wire[newly_edges]
                val[wires] = fill
                resolved[wires] = True
            cnt_ci = np.bincount(e_info[known_ci], minlength=num_i)
            src_ecc_wire[fg.info_wires] = cnt_ci > 0

        if resolved.all():
            converged = True
            break
        sig = (int(resolved.sum()), int(known_ci.sum()), int(src_cac.sum()))
        if sig == prev_sig:
            converged = True
            break
        prev_sig = sig

    residual = int(np.count_nonzero(~resolved))
    out = np.where(resolved, val, ERASED).astype(np.uint8)
    info_bits = None
    if residual == 0 and extract_payload:
        # A resolved word that violates a constraint or indexes past the
        # payload range carries no payload; the word itself is still
        # returned for inspection.
        try:
            books, k = _segments_payload_bits(a, fg.layout)
            index = 0
            for (seg_s, seg_d), book in zip(fg.layout.segments, books):
                index = index * book.codeword_count + book.rank(val[seg_s : seg_s + seg_d])
        except ValueError:
            index, k = 1, 0
        if not index >> k:
            bits = []
            for i in range(k - 1, -1, -1):
                bits.append((index >> i) & 1)
            info_bits = tuple(bits)
    return DecodeResult(
        word=ErasureWord(out),
        info_bits=info_bits,
        iterations=iterations,
        converged=converged,
        residual_erasures=residual,
        x_ecc_trace=tuple(trace) if record_trace else None,
    )
