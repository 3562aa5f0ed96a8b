"""Independent reference implementations used as test oracles.

Everything here is deliberately slow and literal: per-edge message dicts,
explicit schedules, and worklist peeling. The production decoder must agree
with these on small instances.
"""

from __future__ import annotations

import numpy as np

from jointbus.bpdecode import ERASED, cac_node_update, ecc_node_update
from jointbus.buscore import as_bits
from jointbus.ira import IraGraph
from jointbus.jointcode import WireLayout, build_layout


def valid_words(a) -> list[np.ndarray]:
    """All next states with no opposing transition, by exhaustive filter."""
    arr = as_bits(a)
    n = arr.size
    out = []
    for w in range(1 << n):
        bits = np.array([(w >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.uint8)
        t = bits ^ arr
        if not np.any((arr[:-1] != arr[1:]) & (t[:-1] == 1) & (t[1:] == 1)):
            out.append(bits)
    return out


def random_instance(rng, n_max=64, dist=None, allow_shields=False):
    """Random (a, layout, graph) triple for decoder cross-testing."""
    from jointbus.ira import DegreeDistribution, sample_graph

    dist = dist or DegreeDistribution.regular(3, 12)
    while True:
        n = int(rng.integers(8, n_max + 1))
        a = rng.integers(0, 2, n, dtype=np.uint8)
        p = max(1, round(n * 0.2))
        try:
            layout = build_layout(a, p)
        except ValueError:
            continue
        if layout.pinned and not allow_shields:
            continue
        graph = sample_graph(layout.num_info, layout.num_parity, dist, rng)
        return a, layout, graph


def encode_instance(rng, a, layout, graph):
    """Uniform random codeword for an instance (valid word + parities)."""
    from jointbus.cac import RunCodebook
    from jointbus.ira import ira_encode

    arr = as_bits(a)
    word = arr.copy()
    for s, d in layout.segments:
        book = RunCodebook(arr[s : s + d])
        word[s : s + d] = book.unrank(int(rng.integers(0, book.codeword_count)))
    word[layout.parity_slot_array] = ira_encode(word[layout.info_wire_array], graph)
    for pin, v in layout.pinned:
        word[pin] = v
    return word


class ReferenceDecoder:
    """Literal message-passing decoder over dict-held per-edge messages."""

    def __init__(self, a, graph: IraGraph, layout: WireLayout):
        arr = as_bits(a)
        self.a = arr
        self.n = arr.size
        self.graph = graph
        self.layout = layout
        self.info_wires = list(layout.info_wires)
        self.parity_slots = list(layout.parity_slots)
        self.pinned = dict(layout.pinned)
        # pairwise crosstalk checks inside segments: (left wire, right wire)
        self.cac_checks = []
        for s, d in layout.segments:
            for w in range(s, s + d - 1):
                self.cac_checks.append((w, w + 1))
        self.cac_of_wire = {w: [] for w in range(self.n)}
        for c, (u, v) in enumerate(self.cac_checks):
            self.cac_of_wire[u].append((c, "left"))
            self.cac_of_wire[v].append((c, "right"))
        self.edges_of_wire = {w: [] for w in range(self.n)}
        self.edges_of_check = {j: [] for j in range(graph.num_parity)}
        for e in range(graph.num_edges):
            w = self.info_wires[graph.edge_info[e]]
            j = int(graph.edge_check[e])
            self.edges_of_wire[w].append(e)
            self.edges_of_check[j].append(e)

    def decode(self, received, max_outer=200):
        g = self.graph
        num_p = g.num_parity
        channel = {w: int(s) for w, s in enumerate(np.asarray(received, dtype=np.uint8))}
        for w, v in self.pinned.items():
            channel[w] = v

        v2c_cac = {(c, side): ERASED for c, pair in enumerate(self.cac_checks) for side in ("left", "right")}
        c2v_cac = dict(v2c_cac)
        v2c_ecc = {e: ERASED for e in range(g.num_edges)}
        c2v_ecc = dict(v2c_ecc)
        p2c_pair = {j: ERASED for j in range(num_p)}
        c2p_pair = dict(p2c_pair)
        p2c_chain = dict(p2c_pair)   # parity j -> check j+1
        c2p_chain = dict(p2c_pair)   # check j+1 -> parity j

        def wire_inputs(w, skip=None):
            vals = [channel[w]]
            for c, side in self.cac_of_wire.get(w, ()):
                if skip != ("cac", c, side):
                    vals.append(c2v_cac[(c, side)])
            for e in self.edges_of_wire.get(w, ()):
                if skip != ("ecc", e):
                    vals.append(c2v_ecc[e])
            return vals

        def known(vals):
            seen = {v for v in vals if v != ERASED}
            if len(seen) > 1:
                raise AssertionError("contradictory messages on an erasure channel")
            return seen.pop() if seen else ERASED

        iterations = 0
        for it in range(1, max_outer + 1):
            iterations = it
            before = (dict(c2v_cac), dict(c2v_ecc), dict(p2c_pair), dict(p2c_chain))
            # steps 1-2 (repeated until the run messages settle)
            while True:
                for c, (u, v) in enumerate(self.cac_checks):
                    v2c_cac[(c, "left")] = known(wire_inputs(u, skip=("cac", c, "left")))
                    v2c_cac[(c, "right")] = known(wire_inputs(v, skip=("cac", c, "right")))
                changed = False
                for c, (u, v) in enumerate(self.cac_checks):
                    pair = (int(self.a[u]), int(self.a[v]))
                    out_r = cac_node_update(pair, v2c_cac[(c, "left")], "left")
                    out_l = cac_node_update(pair, v2c_cac[(c, "right")], "right")
                    if c2v_cac[(c, "right")] != out_r or c2v_cac[(c, "left")] != out_l:
                        changed = True
                    c2v_cac[(c, "right")] = out_r
                    c2v_cac[(c, "left")] = out_l
                if not changed:
                    break
            # step 3
            for e in range(g.num_edges):
                w = self.info_wires[g.edge_info[e]]
                v2c_ecc[e] = known(wire_inputs(w, skip=("ecc", e)))
            # step 4: chain to convergence
            while True:
                snapshot = (dict(p2c_pair), dict(p2c_chain), dict(c2p_pair), dict(c2p_chain))
                for j in range(num_p):
                    inputs = [v2c_ecc[e] for e in self.edges_of_check[j]]
                    inputs.append(p2c_pair[j])
                    if j >= 1:
                        inputs.append(p2c_chain[j - 1])
                    outs = ecc_node_update(inputs)
                    c2p_pair[j] = outs[len(self.edges_of_check[j])]
                    if j >= 1:
                        c2p_chain[j - 1] = outs[len(self.edges_of_check[j]) + 1]
                for j in range(num_p):
                    ch = channel[self.parity_slots[j]]
                    right = c2p_chain[j] if j < num_p - 1 else ERASED
                    p2c_pair[j] = known([ch, right])
                    p2c_chain[j] = known([ch, c2p_pair[j]]) if j < num_p - 1 else ERASED
                if (dict(p2c_pair), dict(p2c_chain), dict(c2p_pair), dict(c2p_chain)) == snapshot:
                    break
            # step 5
            for j in range(num_p):
                edges = self.edges_of_check[j]
                inputs = [v2c_ecc[e] for e in edges]
                inputs.append(p2c_pair[j])
                if j >= 1:
                    inputs.append(p2c_chain[j - 1])
                outs = ecc_node_update(inputs)
                for k, e in enumerate(edges):
                    c2v_ecc[e] = outs[k]
            if (dict(c2v_cac), dict(c2v_ecc), dict(p2c_pair), dict(p2c_chain)) == before:
                break

        out = np.empty(self.n, dtype=np.uint8)
        for w in range(self.n):
            if w in self.pinned:
                out[w] = self.pinned[w]
                continue
            vals = [channel[w]]
            for c, side in self.cac_of_wire.get(w, ()):
                vals.append(c2v_cac[(c, side)])
            for e in self.edges_of_wire.get(w, ()):
                vals.append(c2v_ecc[e])
            if w in self.parity_slots:
                j = self.parity_slots.index(w)
                vals.append(c2p_pair[j])
                if j < num_p - 1:
                    vals.append(c2p_chain[j])
            out[w] = known(vals)
        return out, iterations


def peel_decode(a, graph: IraGraph, layout: WireLayout, received) -> np.ndarray:
    """Worklist peeling: apply any single-unknown rule until stalled.

    Rules: a known transitioning wire pins its in-run neighbours; a parity
    check with exactly one unknown participant instance solves it.
    """
    arr = as_bits(a)
    n = arr.size
    sym = np.asarray(received, dtype=np.uint8).copy()
    for pin, v in layout.pinned:
        sym[pin] = v
    pairs = []
    for s, d in layout.segments:
        pairs.extend((w, w + 1) for w in range(s, s + d - 1))
    info_wires = list(layout.info_wires)
    slots = list(layout.parity_slots)
    # participants of check j as wire instances (parities via sentinel ids)
    participants = {j: [] for j in range(graph.num_parity)}
    for e in range(graph.num_edges):
        participants[int(graph.edge_check[e])].append(info_wires[graph.edge_info[e]])
    for j in range(graph.num_parity):
        participants[j].append(slots[j])
        if j >= 1:
            participants[j].append(slots[j - 1])
    changed = True
    while changed:
        changed = False
        for u, v in pairs:
            if sym[u] != ERASED and sym[u] != arr[u] and sym[v] == ERASED:
                sym[v] = arr[v]
                changed = True
            if sym[v] != ERASED and sym[v] != arr[v] and sym[u] == ERASED:
                sym[u] = arr[u]
                changed = True
        for j in range(graph.num_parity):
            inst = participants[j]
            unknown = [w for w in inst if sym[w] == ERASED]
            if len(unknown) == 1:
                acc = 0
                for w in inst:
                    if sym[w] != ERASED:
                        acc ^= int(sym[w])
                sym[unknown[0]] = acc
                changed = True
    return sym
