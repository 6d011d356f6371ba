"""Repeat-accumulate signal code: encoder, parity graph and rate."""
from __future__ import annotations

import csv
import enum
import functools
import math
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from . import ring
from .errors import FilterError, InputError, ParameterError
from .ring import RingParams


class InputConstraint(enum.Enum):
    QAM = "qam"
    FULL_RING = "full"

    @classmethod
    def parse(cls, value) -> "InputConstraint":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        for c in cls:
            if v in (c.value, c.name.lower()):
                return c
        raise ParameterError(f"unknown input constraint {value!r}")


@dataclass(frozen=True)
class CodeConfig:
    ring: RingParams
    q: int
    Ns: int
    fb: int
    input_constraint: InputConstraint = InputConstraint.QAM
    interleaver_seed: int = 0
    terminate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "input_constraint",
                           InputConstraint.parse(self.input_constraint))
        if self.q < 2:
            raise ParameterError(f"q must be >= 2, got {self.q}")
        if self.Ns < 1:
            raise ParameterError(f"Ns must be >= 1, got {self.Ns}")
        ring.check_filter(self.fb, self.ring)
        if not ring.is_bijective(self.fb, self.ring):
            raise FilterError(f"filter FB={self.fb} is not bijective; the code is catastrophic")

    @property
    def Nc(self) -> int:
        """Number of transmitted (parity) symbols."""
        return self.q * self.Ns + int(self.terminate)

    @property
    def M(self) -> int:
        """Number of parity checks."""
        return self.Nc

    def input_alphabet(self) -> np.ndarray:
        if self.input_constraint is InputConstraint.QAM:
            return ring.qam_indices(self.ring)
        return np.arange(self.ring.Q)

    def interleaver(self) -> np.ndarray:
        return interleaver_permutation(self.q * self.Ns, self.interleaver_seed)

    def random_input(self, rng: np.random.Generator, size=None) -> np.ndarray:
        alphabet = self.input_alphabet()
        shape = (self.Ns,) if size is None else (size, self.Ns)
        return alphabet[rng.integers(alphabet.size, size=shape)]


@functools.lru_cache(maxsize=32)
def interleaver_permutation(n: int, seed: int) -> np.ndarray:
    """Seeded uniform permutation; ``c'[t] = c[perm[t]]``."""
    perm = np.random.default_rng(seed).permutation(n)
    perm.setflags(write=False)
    return perm


def _check_input(s, cfg: CodeConfig) -> np.ndarray:
    s = ring.as_index_array(s, cfg.ring) if not isinstance(s, np.ndarray) else s.astype(np.int64)
    if s.shape[-1] != cfg.Ns:
        raise InputError(f"expected {cfg.Ns} input symbols, got {s.shape[-1]}")
    cfg.ring.check_index(s)
    if cfg.input_constraint is InputConstraint.QAM and np.any(s >= cfg.ring.L ** 2):
        raise InputError("input symbol outside the L^2-QAM subset Z_L[j]")
    return s


def repeat_interleave(s, cfg: CodeConfig, perm: np.ndarray | None = None) -> np.ndarray:
    """Repeat every symbol ``q`` times, then permute."""
    s = _check_input(s, cfg)
    c = np.repeat(s, cfg.q, axis=-1)
    perm = cfg.interleaver() if perm is None else np.asarray(perm)
    return c[..., perm]


def accumulate(c_prime, g1: int, p: RingParams, terminate: bool = False) -> np.ndarray:
    """Run ``x_t = -(c'_t + g1 x_{t-1}) mod L`` from ``x_0 = 0``.

    Works on a single sequence or a batch (leading axes).  With ``terminate``
    one more step with zero input is appended.
    """
    if not ring.is_bijective(g1, p):
        raise FilterError(f"filter FB={g1} is not bijective")
    c_prime = np.asarray(c_prime, dtype=np.int64)
    add, gmul = ring.adder(p), ring.multiplier(g1, p)
    if p.Q <= 1024:
        k = np.arange(p.Q)
        table = ring.neg_table(p)[add(k[:, None], gmul(k)[None, :])]

        def step(ct, prev):
            return table[ct, prev]
    else:
        def step(ct, prev):
            return ring.neg_idx(add(ct, gmul(prev)), p)
    n = c_prime.shape[-1] + int(terminate)
    x = np.zeros(c_prime.shape[:-1] + (n,), dtype=np.int64)
    prev = np.zeros(c_prime.shape[:-1], dtype=np.int64)
    for t in range(n):
        ct = c_prime[..., t] if t < c_prime.shape[-1] else 0
        prev = step(ct, prev)
        x[..., t] = prev
    return x


def encode(s, cfg: CodeConfig) -> np.ndarray:
    """Non-systematic codeword (parity symbols only), length ``Nc``."""
    return accumulate(repeat_interleave(s, cfg), cfg.fb, cfg.ring, cfg.terminate)


def check_residuals(x, s, cfg: CodeConfig) -> np.ndarray:
    """Ring value of every check ``x_t + c'_t + g1 x_{t-1}`` (zero when satisfied)."""
    p = cfg.ring
    x = np.asarray(x, dtype=np.int64)
    cp = repeat_interleave(s, cfg)
    if cfg.terminate:
        cp = np.concatenate([cp, np.zeros(cp.shape[:-1] + (1,), dtype=np.int64)], axis=-1)
    if x.shape[-1] != cp.shape[-1]:
        raise ParameterError(f"codeword length {x.shape[-1]} != Nc = {cp.shape[-1]}")
    prev = np.concatenate([np.zeros(x.shape[:-1] + (1,), dtype=np.int64), x[..., :-1]], axis=-1)
    add = ring.adder(p)
    return add(add(x, cp), ring.multiplier(cfg.fb, p)(prev))


def verify_parity(x, s, cfg: CodeConfig) -> bool:
    return bool(np.all(check_residuals(x, s, cfg) == 0))


def rate(cfg: CodeConfig) -> float:
    """Information rate in bits per channel use."""
    p = cfg.ring
    if cfg.input_constraint is InputConstraint.FULL_RING:
        if p.Nbv != 2:
            raise ParameterError("full-ring input rate is only defined for Nbv = 2")
        bits = math.log2(p.L ** 4)
    else:
        bits = math.log2(p.L ** 2)
    return cfg.Ns * bits / cfg.Nc


@dataclass(frozen=True)
class ParityGraph:
    """Tanner graph of a RASC.

    Check ``m`` (0-based) ties info symbol ``info[m]`` and parity ``m`` with
    weight 1 to parity ``m - 1`` with weight ``g1``.  ``info[m] = -1`` marks the
    terminating check and ``prev[m] = -1`` the first check.  Variable columns
    are ``0..Ns-1`` for the hidden info symbols and ``Ns..Ns+Nc-1`` for parity.
    """
    ring: RingParams
    fb: int
    Ns: int
    Nc: int
    info: np.ndarray
    cur: np.ndarray
    prev: np.ndarray
    info_checks: tuple = field(repr=False)

    @property
    def M(self) -> int:
        return self.info.size

    @property
    def N(self) -> int:
        return self.Ns + self.Nc

    def edges(self):
        """Yield ``(check, variable column, weight index)`` triples."""
        for m in range(self.M):
            if self.info[m] >= 0:
                yield m, int(self.info[m]), 1
            if self.prev[m] >= 0:
                yield m, self.Ns + int(self.prev[m]), self.fb
            yield m, self.Ns + int(self.cur[m]), 1

    def matrix(self) -> np.ndarray:
        """Dense ``M x N`` matrix of weight indices (0 = no edge)."""
        H = np.zeros((self.M, self.N), dtype=np.int64)
        for m, n, w in self.edges():
            H[m, n] = w
        return H

    def column_degrees(self) -> np.ndarray:
        return np.count_nonzero(self.matrix(), axis=0)


def build_graph(cfg: CodeConfig, info_map=None) -> ParityGraph:
    """Parity graph of ``cfg``.

    ``info_map`` optionally gives, for each check before termination, the
    (0-based) info symbol feeding it; by default it follows the interleaver.
    """
    n = cfg.q * cfg.Ns
    if info_map is None:
        info_map = cfg.interleaver() // cfg.q
    info_map = np.asarray(info_map, dtype=np.int64)
    if info_map.shape != (n,):
        raise ParameterError(f"info map must have {n} entries")
    counts = np.bincount(info_map, minlength=cfg.Ns)
    if counts.size != cfg.Ns or np.any(counts != cfg.q):
        raise ParameterError("every info symbol must feed exactly q checks")
    info = np.concatenate([info_map, np.full(int(cfg.terminate), -1, dtype=np.int64)])
    M = info.size
    cur = np.arange(M)
    prev = cur - 1
    order = np.argsort(info_map, kind="stable")
    info_checks = tuple(order.reshape(cfg.Ns, cfg.q).tolist())
    for a in (info, cur, prev):
        a.setflags(write=False)
    return ParityGraph(cfg.ring, cfg.fb, cfg.Ns, cfg.Nc, info, cur, prev, info_checks)


def write_codeword_csv(fh: IO[str], x, p: RingParams) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "index", "re", "im"])
    pts = ring.points(p)
    for t, k in enumerate(np.asarray(x).tolist(), start=1):
        z = pts[k]
        w.writerow([t, k, f"{z.real:.9g}", f"{z.imag:.9g}"])


# ---------------------------------------------------------------------------
# turbo signal code parity constraint


@dataclass(frozen=True)
class TurboCheckReport:
    passed: bool
    frames: int
    mismatched_frames: int
    g1: int
    ff: int


def turbo_encode(s, f0: int, f1: int, g1: int, p: RingParams) -> np.ndarray:
    """One-feedback, two-feedforward turbo signal encoder with modulo shaping.

    ``u_t = s_t + g1 u_{t-1} (mod L)`` and ``x_t = f1 u_{t-1} + f0 u_t``.
    """
    s = np.asarray(s, dtype=np.int64)
    add = ring.adder(p)
    mg, m0, m1 = (ring.multiplier(w, p) for w in (g1, f0, f1))
    u_prev = np.zeros(s.shape[:-1], dtype=np.int64)
    x = np.empty_like(s)
    for t in range(s.shape[-1]):
        u = add(s[..., t], mg(u_prev))
        x[..., t] = add(m1(u_prev), m0(u))
        u_prev = u
    return x


def turbo_parity_identity_check(g1: int, p: RingParams | None = None, frames: int = 1000,
                                length: int = 64, seed: int = 0) -> TurboCheckReport:
    """Check that the parity-forced turbo encoder passes its input through.

    With ``f0 = -1`` and ``f1 = g1`` the output equals ``-s_t``, which is
    ``s_t`` when ``L = 2``; such a code has no coding gain.
    """
    p = RingParams(2, 2) if p is None else p
    if p.L != 2:
        raise ParameterError("the pass-through identity is stated for L = 2")
    ring.check_filter(g1, p)
    f0 = int(ring.neg_idx(1, p))
    f1 = int(g1)
    rng = np.random.default_rng(seed)
    s = rng.integers(p.Q, size=(frames, length))
    x = turbo_encode(s, f0, f1, g1, p)
    bad = int(np.count_nonzero(np.any(x != s, axis=1)))
    ff = f0 + f1 * p.Q  # FF index of (f0, f1) per the FB digit convention
    return TurboCheckReport(bad == 0, frames, bad, int(g1), ff)
