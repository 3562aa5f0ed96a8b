import numpy as np
import pytest

from jointbus import (
    DegreeDistribution,
    IraGraph,
    ira_encode,
    rate_ldpc,
    recc_from_rldpc,
    sample_graph,
    validate_checks,
)


def _chain_graph(edges, num_info, num_parity):
    ei = np.array([e[0] for e in edges], dtype=np.int64)
    ec = np.array([e[1] for e in edges], dtype=np.int64)
    return IraGraph(num_info, num_parity, ei, ec)


def test_regular_distribution():
    d = DegreeDistribution.regular(3, 12)
    assert d.L_coeffs == ((3, 1.0),)
    assert d.lambda_coeffs == ((3, 1.0),)
    assert d.avg_var_degree == 3
    assert d.avg_chk_degree == 12
    assert d.lam(0.5) == pytest.approx(0.25)
    assert d.rho(0.5) == pytest.approx(0.5 ** 11)
    assert d.L(0.5) == pytest.approx(0.125)


def test_parse_shorthand():
    assert DegreeDistribution.parse("3,12") == DegreeDistribution.regular(3, 12)
    with pytest.raises(ValueError):
        DegreeDistribution.parse("3;12")


def test_edge_node_consistency():
    d = DegreeDistribution(((2, 0.5), (4, 0.5)), ((6, 1.0),))
    lam = dict(d.lambda_coeffs)
    # lambda_i proportional to i * L_i
    assert lam[2] == pytest.approx(2 * 0.5 / 3.0)
    assert lam[4] == pytest.approx(4 * 0.5 / 3.0)
    back = DegreeDistribution.from_edge_perspective(d.lambda_coeffs, d.rho_coeffs)
    for (da, wa), (db, wb) in zip(back.L_coeffs, d.L_coeffs):
        assert da == db and wa == pytest.approx(wb)
    assert d.lam(1.0) == pytest.approx(1.0)
    assert d.L(1.0) == pytest.approx(1.0)


def test_distribution_validation():
    with pytest.raises(ValueError):
        DegreeDistribution(((0, 1.0),), ((6, 1.0),))
    with pytest.raises(ValueError):
        DegreeDistribution(((2, -0.5),), ((6, 1.0),))


def test_rate_ldpc():
    assert rate_ldpc(DegreeDistribution.regular(3, 12)) == pytest.approx(0.75)
    assert rate_ldpc(DegreeDistribution.regular(3, 6)) == pytest.approx(0.5)
    assert rate_ldpc(DegreeDistribution.regular(3, 3)) == pytest.approx(0.0)


def test_recc_from_rldpc():
    assert recc_from_rldpc(0.75) == pytest.approx(0.8)
    assert recc_from_rldpc(1.0) == pytest.approx(1.0)
    assert recc_from_rldpc(0.9) == pytest.approx(1 / 1.1)
    for bad in (2 / 3, 0.5, 1.1):
        with pytest.raises(ValueError):
            recc_from_rldpc(bad)


def test_sample_graph_regular_degrees():
    rng = np.random.default_rng(0)
    g = sample_graph(120, 30, DegreeDistribution.regular(3, 12), rng)
    assert g.num_edges == 360
    assert np.all(g.info_degrees() == 3)
    assert np.all(g.check_degrees() == 12)


def test_sample_graph_empty_info():
    rng = np.random.default_rng(0)
    g = sample_graph(0, 5, DegreeDistribution.regular(3, 12), rng)
    assert g.num_edges == 0 and g.num_parity == 5


def test_sample_graph_deterministic_given_seed():
    d = DegreeDistribution.regular(3, 12)
    g1 = sample_graph(40, 10, d, np.random.default_rng(77))
    g2 = sample_graph(40, 10, d, np.random.default_rng(77))
    assert np.array_equal(g1.edge_info, g2.edge_info)
    assert np.array_equal(g1.edge_check, g2.edge_check)


def test_sample_graph_balances_rounding_residual():
    rng = np.random.default_rng(1)
    # 51 * 3 = 153 sockets vs 13 * 12 = 156: one check absorbs the deficit
    g = sample_graph(51, 13, DegreeDistribution.regular(3, 12), rng)
    assert g.num_edges == 153
    degs = g.check_degrees()
    assert degs.sum() == 153
    assert np.all(degs[:-1] == 12) and degs[-1] == 9
    # deficits larger than one node's degree walk backwards
    g = sample_graph(48, 13, DegreeDistribution.regular(3, 12), rng)
    assert g.check_degrees().sum() == 144


def test_ira_encode_zero_input():
    rng = np.random.default_rng(4)
    g = sample_graph(24, 6, DegreeDistribution.regular(3, 12), rng)
    assert ira_encode(np.zeros(24, dtype=np.uint8), g).tolist() == [0] * 6


def test_ira_encode_single_check():
    g = _chain_graph([(0, 0)], num_info=1, num_parity=1)
    assert ira_encode([1], g).tolist() == [1]
    assert ira_encode([0], g).tolist() == [0]


def test_ira_encode_accumulates():
    # two checks, one info neighbour each: p1 = s1, p2 = p1 xor s2
    g = _chain_graph([(0, 0), (1, 1)], num_info=2, num_parity=2)
    assert ira_encode([1, 0], g).tolist() == [1, 1]
    assert ira_encode([1, 1], g).tolist() == [1, 0]
    assert ira_encode([0, 1], g).tolist() == [0, 1]


def test_ira_encode_collapses_multi_edges():
    g = _chain_graph([(0, 0), (0, 0)], num_info=1, num_parity=1)
    assert ira_encode([1], g).tolist() == [0]


def test_validate_checks_and_linearity():
    rng = np.random.default_rng(8)
    g = sample_graph(50, 13, DegreeDistribution.regular(3, 12), rng)
    for _ in range(50):
        u = rng.integers(0, 2, 50, dtype=np.uint8)
        v = rng.integers(0, 2, 50, dtype=np.uint8)
        pu, pv = ira_encode(u, g), ira_encode(v, g)
        assert validate_checks(u, pu, g)
        assert np.array_equal(ira_encode(u ^ v, g), pu ^ pv)
    p = ira_encode(u, g).copy()
    p[3] ^= 1
    assert not validate_checks(u, p, g)


def test_validate_checks_accepts_other_codeword():
    # info node 0 feeds only check 0; flipping it and every parity yields
    # another codeword of this two-check code
    g = _chain_graph([(0, 0), (1, 1)], num_info=2, num_parity=2)
    base = np.array([0, 0], dtype=np.uint8)
    assert validate_checks(base, ira_encode(base, g), g)
    other_sys = np.array([1, 0], dtype=np.uint8)
    other_par = np.array([1, 1], dtype=np.uint8)
    assert validate_checks(other_sys, other_par, g)


def test_parity_ratio_by_construction():
    rng = np.random.default_rng(6)
    g = sample_graph(1200, 300, DegreeDistribution.regular(3, 12), rng)
    assert g.num_parity / g.num_info == pytest.approx(0.25)
