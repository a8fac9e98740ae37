import itertools
import math

import numpy as np
import pytest

from conftest import random_irregular_graph, random_ldpc, random_tanner_code
from tannerlab.channel import BEC, BSC, ExtendedRealError, sample_transmission
from tannerlab.codes import TannerCode, enumerate_codewords, make_local_code
from tannerlab.decode import (
    DecodeError, cert_nwms, ml_brute, nwms, nwms2, nwms2_messages, nwms_messages, verify, verify_values,
    weight_preset,
)
from tannerlab.devtree import local_opt_brute, min_deviation_costs
from tannerlab.graph import TannerGraph


# ---------------------------------------------------------------------------
# hand examples


def test_all_positive_gives_zero(hamming):
    lam = np.abs(np.random.default_rng(0).normal(size=7)) + 0.1
    for h in (1, 3, 5):
        w = np.arange(1, h + 1, dtype=float)
        assert not nwms(hamming, lam, h, w).any()
        assert not nwms2(hamming, np.zeros(7), lam, h, w).any()
        assert verify(hamming, np.zeros(7), lam, h, w, 2)
        out = cert_nwms(hamming, lam, h, w)
        assert out.certified and not out.word.any()
    assert ml_brute(hamming, lam)[1]


def test_rep2_trace(rep2):
    lam = np.array([1.0, -3.0])
    assert nwms(rep2, lam, 1, [1]).tolist() == [1, 0]
    mu, _ = nwms_messages(rep2, lam, 1, [1])
    assert mu.tolist() == [-3.0, 1.0]
    assert nwms2(rep2, np.zeros(2), lam, 1, [1]).tolist() == [1, 0]
    assert not verify(rep2, [0, 0], lam, 1, [1], 2)
    out = cert_nwms(rep2, lam, 1, [1])
    assert not out.certified
    word, unique = ml_brute(rep2, lam)
    assert word.tolist() == [1, 1] and unique


def test_ml_examples(spc3):
    word, unique = ml_brute(spc3, np.array([1.0, -1.0, 0.0]))
    assert word.tolist() == [0, 1, 1] and unique
    word, unique = ml_brute(spc3, np.array([1.0, 0.0, 0.0]))
    assert not unique  # 000 and 011 tie at 0


def test_ml_extended_reals(hamming):
    # all-zero word over the BEC: only +inf and 0 appear
    lam = np.array([np.inf, 0.0, np.inf, np.inf, 0.0, np.inf, np.inf])
    word, unique = ml_brute(hamming, lam)
    assert not word.any() and unique
    W = enumerate_codewords(hamming)
    c = W[W.sum(axis=1) == 3][0]
    lam = np.where(c == 1, 0.0, np.inf)  # a codeword supported on erasures only: tie
    assert not ml_brute(hamming, lam)[1]
    _, lam = sample_transmission(BEC(0.0), np.array([1, 1, 0, 1, 0, 0, 1], dtype=np.uint8), 1)
    with pytest.raises(ExtendedRealError):
        ml_brute(hamming, lam)


def test_weight_presets():
    assert weight_preset("minsum", 3, 3).tolist() == [3, 6, 12]
    assert weight_preset("unit", 4).tolist() == [1, 1, 1, 1]
    assert np.allclose(weight_preset("normalized", 2, 3, 1.25), [3, 4.8])
    with pytest.raises(DecodeError):
        weight_preset("geometric", 2)


def test_input_validation(hamming):
    lam = np.ones(7)
    with pytest.raises(DecodeError):
        nwms(hamming, lam, 2, [1.0])
    with pytest.raises(DecodeError):
        nwms(hamming, lam, 1, [0.0])
    with pytest.raises(DecodeError):
        nwms(hamming, lam, 1, [-1.0])
    with pytest.raises(DecodeError):
        verify(hamming, np.eye(7)[0], lam, 1, [1.0], 2)  # not a codeword
    with pytest.raises(DecodeError):
        verify(hamming, np.zeros(7), lam, 1, [1.0], 3)  # d above d*
    g = TannerGraph(8, (tuple(range(8)),))
    code = TannerCode(g, (make_local_code("ExtHamming(8,4)"),))
    with pytest.raises(DecodeError):
        nwms(code, np.ones(8), 1, [1.0])


def test_bec_erasures_and_infinite_clash(hamming):
    lam = np.array([np.inf, 0.0, np.inf, np.inf, 0.0, np.inf, np.inf])
    # two erasures on a Hamming code are always recoverable
    assert not nwms(hamming, lam, 3, np.ones(3)).any()
    bad = np.array([np.inf, -np.inf, np.inf, np.inf, np.inf, np.inf, np.inf])
    with pytest.raises(ExtendedRealError):
        nwms(hamming, bad, 3, np.ones(3))


# ---------------------------------------------------------------------------
# NWMS versus NWMS2


def _random_instance(rng, max_n=60):
    if rng.random() < 0.5:
        code = random_ldpc(rng, max_n=max_n, dl_choices=(2, 3, 4), dr_choices=(3, 4, 5, 6))
    else:
        n = int(rng.integers(3, 21))
        code = TannerCode.ldpc(random_irregular_graph(rng, n, int(rng.integers(1, n)), 0.3))
    h = int(rng.integers(1, 9))
    w = rng.uniform(0, 2, h)
    w[rng.random(h) < 0.2] = 0.0
    if not w.any():
        w[0] = 1.0
    lam = rng.normal(0.5, 1.5, code.N)
    return code, lam, h, w


def test_nwms_nwms2_messages_agree():
    rng = np.random.default_rng(2024)
    for _ in range(60):
        code, lam, h, w = _random_instance(rng)
        l0 = rng.normal(size=code.N)  # arbitrary offset; only l1 - l0 matters
        mu, tr = nwms_messages(code, lam, h, w, trace=True)
        m0, m1, tr2 = nwms2_messages(code, l0, l0 + lam, h, w, trace=True)
        scale = max(1.0, float(np.abs(lam).max()) * float(w.sum()))
        for a, b in zip(tr.var_to_check + tr.check_to_var, tr2.var_to_check + tr2.check_to_var):
            assert np.abs(a - (b[:, 1] - b[:, 0])).max() <= 1e-9 * scale
        assert np.abs(mu - (m1 - m0)).max() <= 1e-9 * scale
        assert np.array_equal(nwms(code, lam, h, w), nwms2(code, l0, l0 + lam, h, w))


# ---------------------------------------------------------------------------
# dynamic-programming semantics on materialized computation trees


def _computation_tree(g, r, h):
    """Variable nodes (graph var, coefficient) and check nodes (parent index, child indices)."""
    var_nodes = [(r, 0.0, None)]  # (variable, depth level k, product of 1/(deg-1) over prefixes)
    checks = []
    coef = []
    frontier = [(0, None, 1.0)]  # (tree var index, check it came from, prefix product)
    for k in range(1, h + 1):
        nxt = []
        for vi, came, prod in frontier:
            v = var_nodes[vi][0]
            for j, _ in g.var_checks[v]:
                if j == came:
                    continue
                kids = []
                for u in g.check_vars[j]:
                    if u == v:
                        continue
                    du = g.var_degree(u)
                    var_nodes.append((u, k, prod))
                    kids.append(len(var_nodes) - 1)
                    nxt.append((len(var_nodes) - 1, j, prod / (du - 1) if du > 1 else prod))
                checks.append((vi, kids))
        frontier = nxt
    return var_nodes, checks


def _brute_tree_minimum(g, r, h, w, l0, l1):
    nodes, checks = _computation_tree(g, r, h)
    m = len(nodes) - 1
    assert m <= 20
    coef = np.array([w[k - 1] / g.var_degree(u) * prod for u, k, prod in nodes[1:]])
    cost0 = coef * np.array([l0[u] for u, _, _ in nodes[1:]])
    cost1 = coef * np.array([l1[u] for u, _, _ in nodes[1:]])
    idx = np.arange(2 ** m, dtype=np.int64)
    Z = ((idx[:, None] >> np.arange(m)) & 1).astype(np.int64)
    out = []
    for a in (0, 1):
        full = np.hstack([np.full((len(Z), 1), a), Z])
        ok = np.ones(len(Z), dtype=bool)
        for par, kids in checks:
            ok &= (full[:, par] + full[:, kids].sum(axis=1)) % 2 == 0
        W = Z @ cost1 + (1 - Z) @ cost0
        out.append(float(W[ok].min()))
    return out


def test_dp_semantics_brute_force():
    rng = np.random.default_rng(5)
    graphs = [TannerGraph(2, ((0, 1), (0, 1))), TannerGraph(3, ((0, 1, 2),))]
    while len(graphs) < 12:
        n = int(rng.integers(3, 13))
        g = random_irregular_graph(rng, n, int(rng.integers(1, 5)), 0.3)
        if g.check_degrees().max() <= 4 and g.var_degrees().max() <= 3:
            graphs.append(g)
    checked = 0
    for g in graphs:
        code = TannerCode.ldpc(g)
        for h in (1, 2):
            w = rng.uniform(0.2, 2, h)
            l0, l1 = rng.normal(size=g.num_variables), rng.normal(size=g.num_variables)
            m0, m1, _ = nwms2_messages(code, l0, l1, h, w)
            for r in range(g.num_variables):
                nodes, _ = _computation_tree(g, r, h)
                if len(nodes) - 1 > 20:
                    continue
                b0, b1 = _brute_tree_minimum(g, r, h, w, l0, l1)
                assert m0[r] == pytest.approx(b0, rel=1e-9, abs=1e-9)
                assert m1[r] == pytest.approx(b1, rel=1e-9, abs=1e-9)
                checked += 1
    assert checked >= 40


# ---------------------------------------------------------------------------
# VERIFY versus brute-force deviations


def test_verify_matches_deviation_minimum(hamming):
    rng = np.random.default_rng(11)
    W = enumerate_codewords(hamming)
    for _ in range(40):
        x = W[rng.integers(len(W))]
        h = int(rng.integers(1, 3))
        w = rng.uniform(0.1, 2, h)
        _, lam = sample_transmission(BSC(0.01 + 0.2 * rng.random()), x, int(rng.integers(1 << 30)))
        lam = lam + 0.01 * rng.normal(size=7)
        vals = verify_values(hamming, x, lam, h, w, 2)
        brute = min_deviation_costs(hamming, x, lam, h, w, 2)
        assert np.allclose(vals / w.sum(), brute, rtol=1e-9, atol=1e-12)
        assert verify(hamming, x, lam, h, w, 2) == local_opt_brute(hamming, x, lam, h, w, 2)


def test_verify_matches_brute_general_local_codes():
    rng = np.random.default_rng(12)
    mismatches = 0
    for _ in range(40):
        code = random_tanner_code(rng, max_n=14)
        W = enumerate_codewords(code)
        x = W[rng.integers(len(W))]
        lam = rng.normal(0.8, 1.0, code.N)
        h = 1
        w = rng.uniform(0.1, 2, h)
        for d in range(2, code.d_star + 1):
            if d > int(code.graph.check_degrees().min()):
                continue
            vals = verify_values(code, x, lam, h, w, d)
            brute = min_deviation_costs(code, x, lam, h, w, d)
            mismatches += not np.allclose(vals / w.sum(), brute, rtol=1e-9, atol=1e-12)
    assert mismatches == 0


def test_bsc_hamming_verify_equals_brute(hamming):
    rng = np.random.default_rng(13)
    for k in range(30):
        _, lam = sample_transmission(BSC(0.01), np.zeros(7, dtype=np.uint8), k)
        for h in (1, 2):
            w = rng.uniform(0.1, 2, h)
            assert verify(hamming, np.zeros(7), lam, h, w, 2) == local_opt_brute(hamming, np.zeros(7), lam, h, w, 2)


# ---------------------------------------------------------------------------
# symmetry, all-zero assumption, failure direction


def symmetry_case(code, x, lam, h, w):
    """(messages antisymmetric, decisions symmetric, tie present).

    mu_v = 0 is decided as 1, which is not symmetric, so decisions are only
    compared when no final value is exactly 0.
    """
    flipped = np.where(x == 1, -lam, lam)
    mu, _ = nwms_messages(code, lam, h, w)
    mu_f, _ = nwms_messages(code, flipped, h, w)
    anti = np.array_equal(mu_f, np.where(x == 1, -mu, mu))
    tie = bool((mu == 0).any())
    same = np.array_equal(x ^ nwms(code, lam, h, w), nwms(code, flipped, h, w))
    return anti, same, tie


def test_nwms_symmetry():
    rng = np.random.default_rng(21)
    ties = 0
    for _ in range(100):
        code = random_ldpc(rng, max_n=16)
        W = enumerate_codewords(code)
        x = W[rng.integers(len(W))]
        lam = rng.normal(0.3, 1.0, code.N)
        h = int(rng.integers(1, 6))
        w = rng.uniform(0.1, 2, h)
        anti, same, tie = symmetry_case(code, x, lam, h, w)
        assert anti
        assert same or tie
        ties += tie
        flipped = np.where(x == 1, -lam, lam)
        assert verify(code, x, lam, h, w, 2) == verify(code, np.zeros(code.N), flipped, h, w, 2)
    assert ties < 50


def test_tie_is_the_only_asymmetry():
    # two checks both see variable 1 as their weakest input, with opposite sign products
    code = TannerCode.ldpc(TannerGraph(4, ((0, 1, 2), (0, 1, 3))))
    lam = np.array([2.0, 1.0, 5.0, -5.0])
    x = np.array([1, 1, 0, 0], dtype=np.uint8)
    anti, same, tie = symmetry_case(code, x, lam, 1, [1.0])
    assert anti and tie and not same


def test_all_zero_coupling():
    # transmitting x with noise n fails iff transmitting 0 with the sign-remapped noise fails
    rng = np.random.default_rng(22)
    code = random_ldpc(rng, max_n=12)
    W = enumerate_codewords(code)
    mag = math.log(0.9 / 0.1)
    h, w = 4, np.ones(4)
    for _ in range(300):
        x = W[rng.integers(len(W))]
        e = (rng.random(code.N) < 0.1).astype(np.uint8)
        y = x ^ e
        lam_x = mag * (1 - 2.0 * y)
        lam_0 = mag * (1 - 2.0 * e)
        mu_x, _ = nwms_messages(code, lam_x, h, w)
        mu_0, _ = nwms_messages(code, lam_0, h, w)
        assert np.array_equal(mu_0, np.where(x == 1, -mu_x, mu_x))
        if not (mu_0 == 0).any():
            fail_x = not np.array_equal(nwms(code, lam_x, h, w), x)
            fail_0 = nwms(code, lam_0, h, w).any()
            assert fail_x == fail_0


def test_nonzero_output_implies_not_locally_optimal(hamming):
    hits = 0
    for k in range(300):
        _, lam = sample_transmission(BSC(0.15), np.zeros(7, dtype=np.uint8), 1000 + k)
        h = 1 + k % 2
        w = np.ones(h)
        if nwms(hamming, lam, h, w).any():
            hits += 1
            assert not local_opt_brute(hamming, np.zeros(7), lam, h, w, 2)
    assert hits > 10


def test_certificate_chain_small():
    rng = np.random.default_rng(31)
    seen = 0
    for _ in range(150):
        code = random_ldpc(rng, max_n=12)
        W = enumerate_codewords(code)
        x = W[rng.integers(len(W))]
        lam = np.where(x == 1, -1.0, 1.0) * rng.normal(1.0, 1.0, code.N)
        h = int(rng.integers(1, 4))
        w = rng.uniform(0.1, 2, h)
        if verify(code, x, lam, h, w, 2):
            seen += 1
            assert np.array_equal(nwms(code, lam, h, w), x)
            out = cert_nwms(code, lam, h, w)
            assert out.certified and np.array_equal(out.word, x)
            word, unique = ml_brute(code, lam)
            assert unique and np.array_equal(word, x)
    assert seen > 20


def test_nwms_linear_in_weights(hamming):
    # scaling w and lambda by positive constants never changes decisions
    rng = np.random.default_rng(41)
    for _ in range(20):
        lam = rng.normal(size=7)
        w = rng.uniform(0.1, 2, 3)
        assert np.array_equal(nwms(hamming, lam, 3, w), nwms(hamming, 3.0 * lam, 3, 0.5 * w))


def test_message_counts(hamming):
    _, tr = nwms_messages(hamming, np.ones(7), 4, np.ones(4), trace=True)
    assert len(tr.var_to_check) == 4
    assert all(len(m) == hamming.graph.num_edges for m in tr.var_to_check + tr.check_to_var)


def test_verify_d_range_on_exthamming():
    h = 1
    g = TannerGraph(8, (tuple(range(8)), (0, 2, 4, 6, 1, 3, 5, 7)))
    code = TannerCode(g, (make_local_code("ExtHamming(8,4)"),) * 2)
    rng = np.random.default_rng(51)
    for d in (2, 3, 4):
        lam = rng.normal(0.5, 1.0, 8)
        w = rng.uniform(0.1, 2, h)
        vals = verify_values(code, np.zeros(8), lam, h, w, d)
        assert np.allclose(vals / w.sum(), min_deviation_costs(code, np.zeros(8), lam, h, w, d), rtol=1e-9)


def test_ml_unique_on_generic_llrs():
    code = TannerCode.ldpc(TannerGraph(3, ((0, 1, 2),)))
    for signs in itertools.product((1.0, -1.0), repeat=3):
        lam = np.array(signs) * np.array([1.0, 2.0, 4.0])
        assert ml_brute(code, lam)[1]
