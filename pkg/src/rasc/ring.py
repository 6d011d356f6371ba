"""Arithmetic on the coset C(L, Nbv) of the ring of formal power series.

An element is ``sum_i (v_i^I + j v_i^Q) w^i`` with ``w = exp(j pi / (2 Nbv))`` and
all ``2 Nbv`` coefficients taken modulo ``L``.  Elements are identified by the
integer index whose base-L digits are the coefficients in the order
``(v_0^I, v_0^Q, v_1^I, v_1^Q, ...)``; the same encoding is used for filter
indices (FB).

Products are computed in ``Z_L[w] / (w^(2 Nbv) + 1)`` with ``j = w^Nbv``, the
negacyclic reduction consistent with the complex embedding.

Most functions come in two flavours: a small :class:`RingElement` value type for
readable scalar code, and vectorised ``*_idx`` functions acting on integer index
arrays, which is what the encoder and decoders use.
"""
from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .errors import FilterError, ParameterError

MAX_CARDINALITY = 65536
_TABLE_LIMIT = 1024


@dataclass(frozen=True)
class RingParams:
    L: int
    Nbv: int

    def __post_init__(self):
        if int(self.L) != self.L or int(self.Nbv) != self.Nbv:
            raise ParameterError("L and Nbv must be integers")
        if self.L < 2:
            raise ParameterError(f"L must be >= 2, got {self.L}")
        if self.Nbv < 1:
            raise ParameterError(f"Nbv must be >= 1, got {self.Nbv}")
        if self.L ** (2 * self.Nbv) > MAX_CARDINALITY:
            raise ParameterError(
                f"C({self.L},{self.Nbv}) has {self.L ** (2 * self.Nbv)} elements; "
                f"at most {MAX_CARDINALITY} are supported")

    @property
    def D(self) -> int:
        """Number of integer coefficients per element."""
        return 2 * self.Nbv

    @property
    def Q(self) -> int:
        """Cardinality of the coset, ``L ** (2 Nbv)``."""
        return self.L ** self.D

    @property
    def is_power_of_two(self) -> bool:
        return self.L & (self.L - 1) == 0

    def check_index(self, k) -> None:
        k = np.asarray(k)
        if k.size and (k.min() < 0 or k.max() >= self.Q):
            raise ParameterError(f"ring index out of range [0, {self.Q})")


# ---------------------------------------------------------------------------
# digit / monomial views


@functools.lru_cache(maxsize=None)
def _weights(p: RingParams) -> np.ndarray:
    return p.L ** np.arange(p.D, dtype=np.int64)


def digits(k, p: RingParams) -> np.ndarray:
    """Coefficient digits of index/indices ``k``; trailing axis has length D."""
    k = np.asarray(k, dtype=np.int64)
    return (k[..., None] // _weights(p)) % p.L


def from_digits(d, p: RingParams) -> np.ndarray:
    d = np.asarray(d, dtype=np.int64) % p.L
    return d @ _weights(p)


@functools.lru_cache(maxsize=None)
def all_digits(p: RingParams) -> np.ndarray:
    out = digits(np.arange(p.Q), p)
    out.setflags(write=False)
    return out


def _to_monomial(d: np.ndarray, nbv: int) -> np.ndarray:
    # (I0, Q0, I1, Q1, ...) -> coefficients of w^0 .. w^(2 Nbv - 1)
    return np.concatenate([d[..., 0::2], d[..., 1::2]], axis=-1)


def _from_monomial(m: np.ndarray, nbv: int) -> np.ndarray:
    out = np.empty_like(m)
    out[..., 0::2] = m[..., :nbv]
    out[..., 1::2] = m[..., nbv:]
    return out


def _negacyclic_product(a: np.ndarray, b: np.ndarray, L: int) -> np.ndarray:
    D = a.shape[-1]
    shape = np.broadcast_shapes(a.shape, b.shape)
    out = np.zeros(shape, dtype=np.int64)
    for i in range(D):
        ai = a[..., i:i + 1]
        # w^i * w^k = w^(i+k), and w^D = -1
        out[..., i:] += ai * b[..., :D - i]
        if i:
            out[..., :i] -= ai * b[..., D - i:]
    return out % L


# ---------------------------------------------------------------------------
# vectorised index arithmetic


def add_idx(a, b, p: RingParams) -> np.ndarray:
    return from_digits(digits(a, p) + digits(b, p), p)


def neg_idx(a, p: RingParams) -> np.ndarray:
    return from_digits(-digits(a, p), p)


def sub_idx(a, b, p: RingParams) -> np.ndarray:
    return from_digits(digits(a, p) - digits(b, p), p)


def mul_idx(a, b, p: RingParams) -> np.ndarray:
    ma = _to_monomial(digits(a, p), p.Nbv)
    mb = _to_monomial(digits(b, p), p.Nbv)
    return from_digits(_from_monomial(_negacyclic_product(ma, mb, p.L), p.Nbv), p)


def conj_idx(a, p: RingParams) -> np.ndarray:
    """Complex conjugation ``w -> w^-1 = -w^(2 Nbv - 1)``, a ring automorphism."""
    d = digits(a, p)
    n = p.Nbv
    # polynomial coefficients c_k of w^k: c_i = v_i^I, c_{i+n} = v_i^Q
    c = np.concatenate([d[..., 0::2], d[..., 1::2]], axis=-1)
    out = np.empty_like(c)
    out[..., 0] = c[..., 0]
    out[..., 1:] = -c[..., :0:-1]
    dd = np.empty_like(d)
    dd[..., 0::2] = out[..., :n]
    dd[..., 1::2] = out[..., n:]
    return from_digits(dd, p)


def unit_j(p: RingParams) -> int:
    """Index of the imaginary unit ``j`` (``v_0^Q = 1``)."""
    return p.L


@functools.lru_cache(maxsize=None)
def add_table(p: RingParams) -> np.ndarray:
    """Full Q x Q addition table (only for small rings)."""
    if p.Q > _TABLE_LIMIT:
        raise ParameterError(f"addition table not available for Q = {p.Q}")
    k = np.arange(p.Q)
    t = add_idx(k[:, None], k[None, :], p)
    t.setflags(write=False)
    return t


def adder(p: RingParams):
    """Fast ``(a, b) -> a + b`` on index arrays, table-backed for small rings."""
    if p.Q <= _TABLE_LIMIT:
        t = add_table(p)
        return lambda a, b: t[a, b]
    return lambda a, b: add_idx(a, b, p)


def multiplier(g: int, p: RingParams):
    """Fast ``a -> g * a`` on index arrays."""
    if p.Q <= _TABLE_LIMIT:
        t = mul_image(g, p)
        return lambda a: t[a]
    return lambda a: mul_idx(int(g), a, p)


@functools.lru_cache(maxsize=None)
def neg_table(p: RingParams) -> np.ndarray:
    t = neg_idx(np.arange(p.Q), p)
    t.setflags(write=False)
    return t


# ---------------------------------------------------------------------------
# element value type


@dataclass(frozen=True)
class RingElement:
    params: RingParams
    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) != self.params.D:
            raise ParameterError(
                f"expected {self.params.D} coefficients, got {len(self.coeffs)}")
        if any(not 0 <= c < self.params.L for c in self.coeffs):
            raise ParameterError(f"coefficients must lie in [0, {self.params.L})")

    @classmethod
    def from_index(cls, k: int, p: RingParams) -> "RingElement":
        return element_of(k, p)

    @property
    def index(self) -> int:
        return index_of(self, self.params)

    def __add__(self, other: "RingElement") -> "RingElement":
        return add(self, other)

    def __neg__(self) -> "RingElement":
        return neg(self)

    def __sub__(self, other: "RingElement") -> "RingElement":
        return add(self, neg(other))

    def __mul__(self, other: "RingElement") -> "RingElement":
        return mul(self, other)

    def __repr__(self):
        return f"RingElement(L={self.params.L}, Nbv={self.params.Nbv}, {self.coeffs})"


def index_of(e: RingElement, p: RingParams | None = None) -> int:
    p = e.params if p is None else p
    if p != e.params:
        raise ParameterError("element belongs to a different ring")
    return int(from_digits(np.array(e.coeffs), p))


def element_of(k: int, p: RingParams) -> RingElement:
    k = int(k)
    if not 0 <= k < p.Q:
        raise ParameterError(f"index {k} out of range [0, {p.Q})")
    return RingElement(p, tuple(int(c) for c in digits(k, p)))


def zero(p: RingParams) -> RingElement:
    return element_of(0, p)


def one(p: RingParams) -> RingElement:
    return element_of(1, p)


def _same(a: RingElement, b: RingElement) -> RingParams:
    if a.params != b.params:
        raise ParameterError(f"mismatched rings {a.params} and {b.params}")
    return a.params


def add(a: RingElement, b: RingElement) -> RingElement:
    p = _same(a, b)
    return element_of(add_idx(a.index, b.index, p), p)


def neg(a: RingElement) -> RingElement:
    return element_of(neg_idx(a.index, a.params), a.params)


def mul(a: RingElement, b: RingElement) -> RingElement:
    p = _same(a, b)
    return element_of(mul_idx(a.index, b.index, p), p)


# ---------------------------------------------------------------------------
# complex embedding


@functools.lru_cache(maxsize=None)
def _basis(p: RingParams) -> np.ndarray:
    w = np.exp(1j * np.pi * np.arange(p.Nbv) / (2 * p.Nbv))
    b = np.empty(p.D, dtype=complex)
    b[0::2] = w
    b[1::2] = 1j * w
    return b


def center_offset(p: RingParams) -> complex:
    """Mean of the uncentred constellation."""
    return complex((p.L - 1) / 2 * _basis(p).sum())


def embed_idx(k, p: RingParams) -> np.ndarray:
    return digits(k, p) @ _basis(p)


def embed_centered_idx(k, p: RingParams) -> np.ndarray:
    return embed_idx(k, p) - center_offset(p)


@functools.lru_cache(maxsize=None)
def points(p: RingParams) -> np.ndarray:
    """Centred complex point of every ring element, ordered by index.

    Rounded to 12 decimals so that merged elements share bit-identical points.
    """
    pts = np.round(embed_centered_idx(np.arange(p.Q), p), 12)
    pts.setflags(write=False)
    return pts


def embed(e: RingElement) -> complex:
    return complex(embed_idx(e.index, e.params))


def embed_centered(e: RingElement) -> complex:
    return complex(embed_centered_idx(e.index, e.params))


def avg_power(p: RingParams) -> float:
    return p.Nbv * (p.L ** 2 - 1) / 6


def constellation(p: RingParams, g: int | None = None):
    """Return ``(indices, points)`` of the centred constellation.

    With a filter ``g`` the points are those of ``g * a`` for every ``a``; the
    index column still names ``a``.
    """
    k = np.arange(p.Q)
    src = k if g is None else mul_idx(g, k, p)
    return k, points(p)[src]


def distinct_points(pts: np.ndarray, decimals: int = 9) -> int:
    z = np.round(np.asarray(pts), decimals) + 0.0  # folds -0.0
    return len(set(zip(z.real.tolist(), z.imag.tolist())))


def write_constellation_csv(fh: IO[str], p: RingParams, g: int | None = None) -> None:
    idx, pts = constellation(p, g)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "re", "im"])
    for k, z in zip(idx.tolist(), pts.tolist()):
        w.writerow([k, f"{z.real:.9g}", f"{z.imag:.9g}"])


# ---------------------------------------------------------------------------
# filters


def check_filter(fb: int, p: RingParams) -> None:
    if not 0 <= int(fb) < p.Q:
        raise ParameterError(f"filter index {fb} out of range [0, {p.Q})")


def mul_image(g: int, p: RingParams) -> np.ndarray:
    check_filter(g, p)
    return mul_idx(int(g), np.arange(p.Q), p)


def is_bijective(g: int, p: RingParams) -> bool:
    return np.unique(mul_image(g, p)).size == p.Q


@functools.lru_cache(maxsize=None)
def _mul_permutation(g: int, p: RingParams) -> np.ndarray:
    perm = mul_image(g, p)
    if np.unique(perm).size != p.Q:
        raise FilterError(f"filter FB={g} is not bijective on C({p.L},{p.Nbv})")
    perm.setflags(write=False)
    return perm


def mul_permutation(g: int, p: RingParams) -> np.ndarray:
    """``perm[a] = index(g * a)``; raises :class:`FilterError` if ``g`` is not a unit."""
    return _mul_permutation(int(g), p)


def inverse_permutation(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


@functools.lru_cache(maxsize=None)
def bijective_filters(p: RingParams) -> tuple:
    """All bijective filter indices, ascending."""
    units = []
    k = np.arange(p.Q)
    # every unit a satisfies a*b = 1 for some b; test images chunk-wise
    for g in range(p.Q):
        img = mul_idx(g, k, p)
        if np.unique(img).size == p.Q:
            units.append(g)
    return tuple(units)


def taps(fb: int, p: RingParams) -> list:
    """Coefficient pairs ``(v_i^I, v_i^Q)`` in ascending ``i``."""
    check_filter(fb, p)
    d = digits(int(fb), p).tolist()
    return [(d[2 * i], d[2 * i + 1]) for i in range(p.Nbv)]


def format_taps(fb: int, p: RingParams) -> str:
    return ",".join(f"({a},{b})" for a, b in taps(fb, p))


def qam_indices(p: RingParams) -> np.ndarray:
    """Indices of the ``L^2``-QAM subset ``Z_L[j]`` (only ``v_0`` non-zero)."""
    return np.arange(p.L * p.L)


@functools.lru_cache(maxsize=None)
def qam_mask(p: RingParams) -> np.ndarray:
    m = np.zeros(p.Q, dtype=bool)
    m[: p.L * p.L] = True
    m.setflags(write=False)
    return m


def log2_cardinality(p: RingParams) -> float:
    return p.D * math.log2(p.L)


def as_index_array(seq: Sequence, p: RingParams) -> np.ndarray:
    """Accept RingElements or integer indices and return an index array."""
    out = np.array([e.index if isinstance(e, RingElement) else int(e) for e in seq],
                   dtype=np.int64)
    p.check_index(out)
    return out
