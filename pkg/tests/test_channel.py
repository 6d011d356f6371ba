import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rasc import channel, ring
from rasc.channel import ChannelParams
from rasc.errors import ParameterError
from rasc.ring import RingParams

P22 = RingParams(2, 2)


def test_snr_round_trip():
    for p in (P22, RingParams(2, 3), RingParams(3, 2)):
        for snr in (-3.0, 0.0, 0.79, 7.5):
            ch = ChannelParams.from_snr_db(snr, p)
            assert ch.snr_db(p) == pytest.approx(snr, abs=1e-12)
    assert ChannelParams.from_sigma(0.5).sigma2 == pytest.approx(0.25)
    with pytest.raises(ParameterError):
        ChannelParams(0.0)


def test_transmit_noiseless_and_variance():
    rng = np.random.default_rng(0)
    x = rng.integers(16, size=100)
    y = channel.transmit(x, ChannelParams(1e-30), P22, rng)
    assert np.allclose(y, ring.points(P22)[x])
    z = channel.transmit(np.zeros(100_000, dtype=int), ChannelParams(0.7), P22, rng) - ring.points(P22)[0]
    assert np.mean(np.abs(z) ** 2) == pytest.approx(0.7, rel=0.02)
    assert np.var(z.real) == pytest.approx(0.35, rel=0.03)


def test_transmit_seeded():
    a = channel.transmit([1, 2, 3], ChannelParams(1.0), P22, np.random.default_rng(4))
    b = channel.transmit([1, 2, 3], ChannelParams(1.0), P22, np.random.default_rng(4))
    assert np.array_equal(a, b)


@settings(max_examples=50, deadline=None)
@given(re=st.floats(-3, 3), im=st.floats(-3, 3), s2=st.floats(0.05, 5.0),
       p=st.sampled_from([P22, RingParams(2, 3), RingParams(3, 2)]))
def test_llr_matches_direct_density(re, im, s2, p):
    y = complex(re, im)
    llr = channel.channel_llrs(np.array([y]), ChannelParams(s2), p)[0]
    assert llr[0] == 0
    dens = np.exp(-np.abs(y - ring.points(p)) ** 2 / s2) / (math.pi * s2)
    post = dens / dens.sum()
    w = np.exp(llr - llr.max())
    assert np.allclose(w / w.sum(), post, atol=1e-12)
    assert np.allclose(channel.posterior(np.array([y]), ChannelParams(s2), p)[0], post, atol=1e-12)


def test_llr_argmax_high_snr():
    p = RingParams(3, 2)
    pts = ring.points(p)
    llr = channel.channel_llrs(pts, ChannelParams(1e-4), p)
    assert np.array_equal(llr.argmax(axis=1), np.arange(p.Q))
    assert np.all(np.abs(llr) <= channel.LLR_CLAMP)


def test_merged_symbols_share_llrs():
    p = RingParams(2, 3)
    a = ring.index_of(ring.RingElement(p, (0, 1, 0, 0, 0, 0)))
    b = ring.index_of(ring.RingElement(p, (0, 0, 1, 0, 0, 1)))
    y = np.random.default_rng(0).normal(size=20) + 1j
    llr = channel.channel_llrs(y, ChannelParams(0.5), p)
    assert np.array_equal(llr[:, a], llr[:, b])


def test_coset_zero_is_identity():
    p = P22
    llr = channel.channel_llrs(np.array([0.3 + 0.1j]), ChannelParams(0.5), p)
    assert np.allclose(channel.coset_delabel(llr, np.array([0]), p), llr)
    assert np.array_equal(channel.coset_apply([3, 4], [0, 0], p), [3, 4])


def test_coset_delabel_points_to_truth():
    p = RingParams(2, 3)
    rng = np.random.default_rng(1)
    x = rng.integers(p.Q, size=200)
    c = channel.random_coset(p, 200, rng)
    tx = channel.coset_apply(x, c, p)
    y = channel.transmit(tx, ChannelParams(1e-4), p, rng)
    llr = channel.coset_delabel(channel.channel_llrs(y, ChannelParams(1e-4), p), c, p)
    # relabelled entry a refers to x = a; ties only among merged points
    top = llr.max(axis=1)
    assert np.array_equal(llr[np.arange(200), x], top)


def test_coset_symmetry():
    # symbol error rate of the delabelled LLRs does not depend on the codeword
    p = P22
    ch = ChannelParams.from_snr_db(3.0, p)

    def ser(symbol, seed):
        rng = np.random.default_rng(seed)
        n = 10_000
        c = channel.random_coset(p, n, rng)
        tx = channel.coset_apply(np.full(n, symbol), c, p)
        llr = channel.channel_llrs(channel.transmit(tx, ch, p, rng), ch, p)
        rel = channel.coset_delabel(llr, c, p)
        return np.mean(rel.argmax(axis=1) != symbol)

    a, b = ser(0, 1), ser(13, 2)
    se = math.sqrt(a * (1 - a) / 10_000 + b * (1 - b) / 10_000)
    assert abs(a - b) < 4 * se


def test_shannon():
    assert channel.shannon_limit_db(1.0) == pytest.approx(0.0, abs=1e-12)
    assert channel.shannon_limit_db(2.0) == pytest.approx(10 * math.log10(3))
    assert channel.shannon_gap(1.0, 0.79) == pytest.approx(0.79)
    assert channel.shannon_limit_db(2 / 3) == pytest.approx(-2.3107, abs=1e-4)
    with pytest.raises(ParameterError):
        channel.shannon_limit_db(0.0)


def test_ebn0():
    assert channel.ebn0_db(3.0, 2.0) == pytest.approx(3.0 - 10 * math.log10(2))
