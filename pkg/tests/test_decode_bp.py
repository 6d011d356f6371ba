import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rasc import channel, code, decode_bp as bp, ring
from rasc.code import CodeConfig, ParityGraph
from rasc.errors import FilterError, ParameterError
from rasc.ring import RingParams

P22 = RingParams(2, 2)


def brute_check(incoming, p, out_weight):
    """Belief of v with sum(w_k b_k) + w0 v = 0, by enumerating every configuration."""
    probs = [np.exp(l - l.max()) for l, _ in incoming]
    out = np.zeros(p.Q)
    for combo in itertools.product(range(p.Q), repeat=len(incoming)):
        s = 0
        w = 1.0
        for (llr, wt), b, pr in zip(incoming, combo, probs):
            s = ring.add_idx(s, ring.mul_idx(wt, b, p), p)
            w *= pr[b]
        for v in range(p.Q):
            if ring.add_idx(s, ring.mul_idx(out_weight, v, p), p) == 0:
                out[v] += w
    return np.log(np.maximum(out / out.max(), bp.PROB_FLOOR))


# ---------------------------------------------------------------------------
# variable nodes


def test_vn_update_basic():
    x = np.array([0.0, 1.0, -2.0, 3.0])
    assert np.allclose(bp.vn_update(None, [x]), x - 3.0)
    assert np.all(bp.vn_update(np.zeros(4), [np.zeros(4), np.zeros(4)]) == 0)
    with pytest.raises(ParameterError):
        bp.vn_update(None, [np.zeros(4), np.zeros(5)])


def test_vn_hidden_qam():
    rng = np.random.default_rng(0)
    out = bp.vn_update(None, [rng.normal(size=16)], hidden=True, constraint="qam", p=P22)
    assert np.count_nonzero(np.isfinite(out)) == 4
    assert np.all(np.isfinite(out[:4]))
    assert out.max() == 0
    full = bp.vn_update(None, [rng.normal(size=16)], hidden=True, constraint="full", p=P22)
    assert np.all(np.isfinite(full))


# ---------------------------------------------------------------------------
# check nodes


def test_cn_degree_one_is_permuted_input():
    rng = np.random.default_rng(1)
    x = rng.normal(size=16)
    out = bp.cn_update_full([(x, 1)], P22, 1)
    # v = -b, and -b = b for L = 2
    assert np.allclose(out, x - x.max())
    p3 = RingParams(3, 2)
    y = rng.normal(size=81)
    out3 = bp.cn_update_full([(y, 1)], p3, 1)
    assert np.allclose(out3, (y - y.max())[ring.neg_table(p3)])


@pytest.mark.parametrize("p", [P22, RingParams(3, 2)], ids=str)
def test_cn_delta_inputs(p):
    fbs = ring.bijective_filters(p)
    rng = np.random.default_rng(2)
    for _ in range(20):
        u, v = rng.integers(p.Q, size=2)
        g = int(fbs[rng.integers(len(fbs))])
        du = np.full(p.Q, -1e3)
        du[u] = 0
        dv = np.full(p.Q, -1e3)
        dv[v] = 0
        for method in ("full", "fft"):
            out = bp.cn_update([(du, 1), (dv, g)], p, 1, method)
            target = ring.neg_idx(ring.add_idx(u, ring.mul_idx(g, v, p), p), p)
            assert out.argmax() == target
            assert out[target] == 0


def test_cn_uniform():
    out = bp.cn_update_full([(np.zeros(16), 1), (np.zeros(16), 11)], P22, 11)
    assert np.allclose(out, 0)


@pytest.mark.parametrize("p", [P22, RingParams(2, 1), RingParams(3, 1)], ids=str)
def test_cn_full_matches_brute_force(p):
    rng = np.random.default_rng(3)
    fbs = ring.bijective_filters(p)
    for _ in range(5):
        w1, w2, w0 = (int(fbs[i]) for i in rng.integers(len(fbs), size=3))
        a, b = rng.normal(scale=2, size=(2, p.Q))
        ref = brute_check([(a, w1), (b, w2)], p, w0)
        assert np.allclose(bp.cn_update_full([(a, w1), (b, w2)], p, w0), ref, atol=1e-9)


def test_cn_rejects_non_bijective_weight():
    with pytest.raises(FilterError):
        bp.cn_update_full([(np.zeros(16), 3)], P22, 1)


def test_wht_involution():
    x = np.random.default_rng(4).normal(size=(3, 64))
    assert np.allclose(bp.walsh_hadamard(bp.walsh_hadamard(x)), 64 * x)


@pytest.mark.parametrize("p", [RingParams(2, 2), RingParams(2, 3), RingParams(3, 2),
                               RingParams(4, 2)], ids=str)
def test_fft_matches_full(p):
    rng = np.random.default_rng(p.Q)
    n = 1000 if p.Q <= 64 else 100
    fbs = ring.bijective_filters(p)
    a, b = rng.normal(scale=3, size=(2, n, p.Q))
    w1, w2, w0 = (int(fbs[i]) for i in rng.integers(len(fbs), size=3))
    fast = bp.cn_update_fft([(a, w1), (b, w2)], p, w0)
    slow = bp.cn_update_full([(a, w1), (b, w2)], p, w0)
    assert np.abs(fast - slow).max() <= 1e-6


def test_group_transform_round_trip():
    for p in (RingParams(3, 2), RingParams(4, 2), RingParams(2, 3)):
        x = np.random.default_rng(0).random((5, p.Q))
        assert np.allclose(bp.group_inverse(bp.group_transform(x, p), p), x)


def test_messages_normalised():
    rng = np.random.default_rng(5)
    out = bp.cn_update([(rng.normal(size=(10, 16)), 1), (rng.normal(size=(10, 16)), 11)], P22)
    assert np.all(out.max(axis=1) == 0)


# ---------------------------------------------------------------------------
# decoder


def _chain_graph(p, fb, info):
    info = np.asarray(info)
    n = info.size
    checks = tuple((int(np.flatnonzero(info == i)[0]),) for i in range(n))
    return ParityGraph(p, fb, n, n, info, np.arange(n), np.arange(n) - 1, checks)


def _marginals(logp, labels, Q):
    w = np.exp(logp - logp.max())
    m = np.array([[w[labels[:, t] == a].sum() for a in range(Q)] for t in range(labels.shape[1])])
    return m / m.sum(axis=1, keepdims=True)


def _probs(llr):
    e = np.exp(llr - llr.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def test_bp_exact_on_cycle_free_graph():
    # one check per info symbol: the graph is a chain, so BP is exact
    p, fb, info = P22, 11, [2, 0, 3, 1]
    g = _chain_graph(p, fb, info)
    dec = bp.BPDecoder(g, method="full")
    S = np.array(list(itertools.product(range(4), repeat=4)))
    X = code.accumulate(S[:, info], fb, p)
    ch = channel.ChannelParams.from_snr_db(0.0, p)
    rng = np.random.default_rng(0)
    for _ in range(30):
        s = S[rng.integers(len(S))]
        y = channel.transmit(code.accumulate(s[info], fb, p), ch, p, rng)
        llr = channel.channel_llrs(y, ch, p)
        logp = llr[np.arange(4), X].sum(axis=1)
        _, diag = dec.decode(llr, 10, early_stop=False)
        assert np.allclose(_probs(diag.info_llrs)[:, :4], _marginals(logp, S, 4), atol=1e-9)
        assert np.allclose(_probs(diag.parity_llrs), _marginals(logp, X, 16), atol=1e-9)


def map_agreement(snr_db, draws=100, seed=0, interleaver_seed=0):
    """Draws where BP and exhaustive MAP disagree in argmax at some node."""
    p = P22
    cfg = CodeConfig(p, 2, 4, 11, interleaver_seed=interleaver_seed)
    dec = bp.BPDecoder(code.build_graph(cfg))
    S = np.array(list(itertools.product(range(4), repeat=4)))
    X = code.encode(S, cfg)
    ch = channel.ChannelParams.from_snr_db(snr_db, p)
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(draws):
        s = S[rng.integers(len(S))]
        y = channel.transmit(code.encode(s, cfg), ch, p, rng)
        llr = channel.channel_llrs(y, ch, p)
        logp = llr[np.arange(X.shape[1]), X].sum(axis=1)
        s_hat, diag = dec.decode(llr, 100, early_stop=False)
        ok = np.array_equal(s_hat, _marginals(logp, S, 4).argmax(axis=1))
        ok &= np.array_equal(diag.parity_llrs.argmax(axis=1), _marginals(logp, X, 16).argmax(axis=1))
        bad += not ok
    return bad


def test_bp_matches_map_small_instance():
    assert map_agreement(10.0) == 0


def test_noiseless_decoding():
    cfg = CodeConfig(RingParams(3, 2), 2, 50, 45, interleaver_seed=1)
    g = code.build_graph(cfg)
    s = cfg.random_input(np.random.default_rng(0))
    x = code.encode(s, cfg)
    ch = channel.ChannelParams(1e-6)
    llr = channel.channel_llrs(ring.points(cfg.ring)[x], ch, cfg.ring)
    for method in ("fft", "full"):
        s_hat, diag = bp.decode(llr, g, 20, method=method)
        assert np.array_equal(s_hat, s)
        assert diag.parity_satisfied and diag.iterations <= 2
        assert np.array_equal(diag.parity_decisions, x)


def test_decoder_accepts_full_length_llrs():
    cfg = CodeConfig(P22, 2, 10, 11)
    g = code.build_graph(cfg)
    dec = bp.BPDecoder(g)
    s = cfg.random_input(np.random.default_rng(0))
    x = code.encode(s, cfg)
    llr = channel.channel_llrs(ring.points(P22)[x], channel.ChannelParams(1e-3), P22)
    full = np.vstack([np.zeros((10, 16)), llr])
    assert np.array_equal(dec.decode(full)[0], s)
    with pytest.raises(ParameterError):
        dec.decode(llr[:5])
    with pytest.raises(ParameterError):
        bp.BPDecoder(g, method="nope")


def test_syndrome_matches_verify_parity():
    cfg = CodeConfig(P22, 3, 30, 11, interleaver_seed=5, terminate=True)
    dec = bp.decoder_for(cfg)
    rng = np.random.default_rng(1)
    s = cfg.random_input(rng)
    x = code.encode(s, cfg)
    assert dec.syndrome_ok(s, x) and code.verify_parity(x, s, cfg)
    y = x.copy()
    y[7] ^= 1
    assert dec.syndrome_ok(s, y) == code.verify_parity(y, s, cfg) is False


def test_ser_decreases_with_snr():
    cfg = CodeConfig(P22, 3, 200, 11, interleaver_seed=0)
    dec = bp.decoder_for(cfg)
    rng = np.random.default_rng(0)
    errs = []
    for snr in (-4.0, -2.0, 2.0):
        ch = channel.ChannelParams.from_snr_db(snr, P22)
        e = 0
        for _ in range(5):
            s = cfg.random_input(rng)
            y = channel.transmit(code.encode(s, cfg), ch, P22, rng)
            e += np.count_nonzero(dec.decode(channel.channel_llrs(y, ch, P22), 50)[0] != s)
        errs.append(e)
    assert errs[0] > errs[1] > errs[2]


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6), L=st.sampled_from([2, 3]))
def test_diagnostics_invariants(seed, L):
    p = RingParams(L, 2)
    fbs = ring.bijective_filters(p)
    cfg = CodeConfig(p, 2, 8, fbs[seed % len(fbs)], interleaver_seed=seed)
    rng = np.random.default_rng(seed)
    s = cfg.random_input(rng)
    ch = channel.ChannelParams.from_snr_db(3.0, p)
    llr = channel.channel_llrs(channel.transmit(code.encode(s, cfg), ch, p, rng), ch, p)
    s_hat, diag = bp.decode(llr, code.build_graph(cfg), 7)
    assert 1 <= diag.iterations <= 7
    assert len(diag.changes) == diag.iterations
    assert np.all(s_hat < L * L)
    assert np.all(diag.info_llrs.max(axis=1) == 0)
    assert set(diag.to_dict()) >= {"iterations", "parity_satisfied", "changes"}
