"""Complex AWGN channel, channel LLRs and random-coset symmetrisation.

``sigma2`` is always the total variance of the circularly-symmetric complex
noise, so ``SNR = Es/N0 = avg_power / sigma2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ring
from .errors import ParameterError
from .ring import RingParams

DENSITY_FLOOR = 1e-300
LLR_CLAMP = 700.0
_LOG_FLOOR = math.log(DENSITY_FLOOR)


@dataclass(frozen=True)
class ChannelParams:
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ParameterError(f"sigma2 must be positive, got {self.sigma2}")

    @classmethod
    def from_snr_db(cls, snr_db: float, p: RingParams) -> "ChannelParams":
        return cls(sigma2_from_snr_db(snr_db, p))

    @classmethod
    def from_sigma(cls, sigma: float) -> "ChannelParams":
        return cls(sigma * sigma)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def snr_db(self, p: RingParams) -> float:
        return snr_db_from_sigma2(self.sigma2, p)


def sigma2_from_snr_db(snr_db: float, p: RingParams) -> float:
    return ring.avg_power(p) / 10 ** (snr_db / 10)


def snr_db_from_sigma2(sigma2: float, p: RingParams) -> float:
    return 10 * math.log10(ring.avg_power(p) / sigma2)


def ebn0_db(snr_db: float, rate_bpcu: float) -> float:
    """Convert Es/N0 to Eb/N0."""
    return snr_db - 10 * math.log10(rate_bpcu)


def transmit(x, ch: ChannelParams, p: RingParams, rng: np.random.Generator) -> np.ndarray:
    """Map symbols to centred constellation points and add complex noise."""
    s = ring.points(p)[np.asarray(x, dtype=np.int64)]
    scale = math.sqrt(ch.sigma2 / 2)
    noise = rng.normal(scale=scale, size=s.shape + (2,))
    return s + (noise[..., 0] + 1j * noise[..., 1])


def channel_llrs(y, ch: ChannelParams, p: RingParams) -> np.ndarray:
    """LLR vectors ``log P(y|a_i) - log P(y|a_0)`` for every received sample.

    Output has shape ``y.shape + (Q,)``.  Identical constellation points get
    identical entries.
    """
    y = np.asarray(y, dtype=complex)
    d2 = np.abs(y[..., None] - ring.points(p)) ** 2
    logp = -d2 / ch.sigma2
    logp -= logp.max(axis=-1, keepdims=True)
    np.maximum(logp, _LOG_FLOOR, out=logp)
    llr = logp - logp[..., :1]
    return np.clip(llr, -LLR_CLAMP, LLR_CLAMP, out=llr)


def posterior(y, ch: ChannelParams, p: RingParams) -> np.ndarray:
    """Symbol posterior under a uniform prior (normalised channel LLRs)."""
    llr = channel_llrs(y, ch, p)
    w = np.exp(llr - llr.max(axis=-1, keepdims=True))
    return w / w.sum(axis=-1, keepdims=True)


def coset_apply(x, coset, p: RingParams) -> np.ndarray:
    """Add a coset vector to the codeword before modulation."""
    return ring.adder(p)(np.asarray(x, dtype=np.int64), np.asarray(coset, dtype=np.int64))


def coset_delabel(llrs, coset_symbol, p: RingParams) -> np.ndarray:
    """Relabel LLRs computed for ``x + c`` so that entry ``a`` refers to ``x = a``.

    For the all-zero codeword the true symbol ends up at index 0.
    """
    llrs = np.asarray(llrs)
    c = np.asarray(coset_symbol, dtype=np.int64)
    k = np.arange(p.Q)
    idx = ring.adder(p)(k, c[..., None])
    out = np.take_along_axis(llrs, idx, axis=-1)
    return out - out[..., :1]


def random_coset(p: RingParams, size, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(p.Q, size=size)


def shannon_limit_db(rate_bpcu: float) -> float:
    """Minimum SNR (dB) for the given rate under a Gaussian input."""
    if not rate_bpcu > 0:
        raise ParameterError("rate must be positive")
    return 10 * math.log10(2 ** rate_bpcu - 1)


def shannon_gap(rate_bpcu: float, threshold_snr_db: float) -> float:
    return threshold_snr_db - shannon_limit_db(rate_bpcu)
