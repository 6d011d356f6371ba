"""Sum-product (BP) decoding of RASCs over C(L, Nbv).

Messages are LLR vectors of length Q relative to symbol 0 and renormalised so
their largest entry is 0.  Check nodes work in the probability domain: either
an exact O(Q^2) group convolution (``method="full"``) or the group Fourier
transform of ``(Z_L)^(2 Nbv)`` (``method="fft"``), which reduces to a sign-free
Walsh-Hadamard transform when ``L = 2``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from . import ring
from .code import CodeConfig, InputConstraint, ParityGraph
from .errors import ParameterError
from .ring import RingParams

PROB_FLOOR = 1e-30
_LOG_PROB_FLOOR = np.log(PROB_FLOOR)
_CHUNK = 1 << 21
_DENSE_WHT = 1024


# ---------------------------------------------------------------------------
# message helpers


def normalize(llr: np.ndarray) -> np.ndarray:
    """Shift every vector so that its maximum entry is exactly 0."""
    return llr - llr.max(axis=-1, keepdims=True)


def to_prob(llr: np.ndarray) -> np.ndarray:
    return np.exp(normalize(llr))


def from_prob(prob: np.ndarray) -> np.ndarray:
    prob = prob / prob.max(axis=-1, keepdims=True)
    return np.log(np.maximum(prob, PROB_FLOOR))


def vn_update(f, incoming, hidden: bool = False, constraint=None, p: RingParams | None = None):
    """Variable node: ``f + sum(incoming)`` renormalised.

    For a hidden node under the QAM constraint, non-QAM symbols are set to
    ``-inf``.  ``f`` may be ``None`` (hidden nodes carry no channel LLR).
    """
    msgs = [np.asarray(m, dtype=float) for m in incoming]
    if f is not None:
        msgs.append(np.asarray(f, dtype=float))
    if not msgs:
        raise ParameterError("vn_update needs at least one input")
    Q = msgs[0].shape[-1]
    if any(m.shape[-1] != Q for m in msgs):
        raise ParameterError("message length mismatch")
    out = np.sum(np.broadcast_arrays(*msgs), axis=0)
    if hidden and InputConstraint.parse(constraint or "qam") is InputConstraint.QAM:
        if p is None:
            raise ParameterError("ring parameters needed for the QAM restriction")
        out = np.where(ring.qam_mask(p), out, -np.inf)
    return normalize(out)


@dataclass(frozen=True)
class _Kernel:
    p: RingParams
    sub: np.ndarray  # sub[c, a] = c - a
    neg: np.ndarray


@functools.lru_cache(maxsize=None)
def _kernel(p: RingParams) -> _Kernel:
    k = np.arange(p.Q)
    sub = ring.sub_idx(k[:, None], k[None, :], p)
    return _Kernel(p, sub, ring.neg_table(p))


@functools.lru_cache(maxsize=None)
def _weight_maps(w: int, p: RingParams):
    """(gather index for the weighted input, gather index for the output)."""
    perm = ring.mul_permutation(w, p)
    inbound = ring.inverse_permutation(perm)  # P(w v = b) = P(v = w^-1 b)
    outbound = ring.neg_table(p)[perm]        # P(v = b) = P(S = -(w b))
    return inbound, outbound


def _weighted_probs(incoming, p: RingParams):
    for llr, w in incoming:
        inbound, _ = _weight_maps(int(w), p)
        yield to_prob(np.asarray(llr, dtype=float))[..., inbound]


def group_convolve(a: np.ndarray, b: np.ndarray, p: RingParams) -> np.ndarray:
    """Exact distribution of the ring sum of two independent symbols."""
    sub = _kernel(p).sub
    a, b = np.broadcast_arrays(a, b)
    shape = a.shape
    a = a.reshape(-1, p.Q)
    b = b.reshape(-1, p.Q)
    out = np.empty_like(a)
    step = max(1, _CHUNK // (p.Q * p.Q))
    for i in range(0, a.shape[0], step):
        out[i:i + step] = np.einsum("na,nca->nc", a[i:i + step], b[i:i + step][:, sub])
    return out.reshape(shape)


def cn_update_full(incoming, p: RingParams, out_weight: int = 1) -> np.ndarray:
    """Check node by direct configuration sums.

    ``incoming`` is a list of ``(llr, weight)``; the result is the belief over
    the target variable ``v`` with weight ``out_weight`` such that the weighted
    sum of all symbols on the check is zero.
    """
    probs = list(_weighted_probs(incoming, p))
    if not probs:
        raise ParameterError("cn_update_full needs at least one input")
    acc = probs[0]
    for pr in probs[1:]:
        acc = group_convolve(acc, pr, p)
        acc = acc / acc.max(axis=-1, keepdims=True)
    _, outbound = _weight_maps(int(out_weight), p)
    return from_prob(acc[..., outbound])


# ---------------------------------------------------------------------------
# transforms


@functools.lru_cache(maxsize=None)
def _hadamard(n: int) -> np.ndarray:
    h = np.ones((1, 1))
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return h


def walsh_hadamard(x: np.ndarray) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform along the last axis."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n & (n - 1):
        raise ParameterError("WHT length must be a power of two")
    if n <= _DENSE_WHT:
        return x @ _hadamard(n)
    lead = x.shape[:-1]
    h = 1
    while h < n:
        y = x.reshape(lead + (n // (2 * h), 2, h))
        a, b = y[..., 0, :], y[..., 1, :]
        x = np.stack([a + b, a - b], axis=-2).reshape(lead + (n,))
        h *= 2
    return x


@functools.lru_cache(maxsize=None)
def _characters(p: RingParams):
    """Real and imaginary parts of the character table of ``(Z_L)^D``."""
    d = ring.all_digits(p)
    phase = 2 * np.pi * ((d @ d.T) % p.L) / p.L
    cr, ci = np.cos(phase), -np.sin(phase)
    return np.hstack([cr, ci]), np.vstack([cr, ci])


def group_transform(x: np.ndarray, p: RingParams) -> np.ndarray:
    if p.L == 2:
        return walsh_hadamard(x)
    if p.Q <= _DENSE_WHT:
        y = np.asarray(x, dtype=float) @ _characters(p)[0]
        return y[..., :p.Q] + 1j * y[..., p.Q:]
    lead = x.shape[:-1]
    axes = tuple(range(len(lead), len(lead) + p.D))
    return np.fft.fftn(x.reshape(lead + (p.L,) * p.D), axes=axes).reshape(lead + (p.Q,))


def group_inverse(X: np.ndarray, p: RingParams) -> np.ndarray:
    """Inverse of :func:`group_transform`; only the real part is returned."""
    if p.L == 2:
        return walsh_hadamard(X) / p.Q
    if p.Q <= _DENSE_WHT:
        stacked = _characters(p)[1]
        return np.concatenate([X.real, X.imag], axis=-1) @ stacked / p.Q
    lead = X.shape[:-1]
    axes = tuple(range(len(lead), len(lead) + p.D))
    x = np.fft.ifftn(X.reshape(lead + (p.L,) * p.D), axes=axes)
    return x.real.reshape(lead + (p.Q,))


def spectrum(llr, w: int, p: RingParams) -> np.ndarray:
    """Group transform of the distribution of ``w v`` for messages about ``v``."""
    (pr,) = _weighted_probs([(llr, w)], p)
    return group_transform(pr, p)


def from_spectrum(X: np.ndarray, out_weight: int, p: RingParams) -> np.ndarray:
    """Check-node output LLRs from the product of the other edges' spectra."""
    _, outbound = _weight_maps(int(out_weight), p)
    return from_prob(group_inverse(X, p)[..., outbound])


def cn_update_fft(incoming, p: RingParams, out_weight: int = 1) -> np.ndarray:
    """Check node via the group Fourier transform; same result as :func:`cn_update_full`."""
    spectra = [group_transform(pr, p) for pr in _weighted_probs(incoming, p)]
    if not spectra:
        raise ParameterError("cn_update_fft needs at least one input")
    acc = spectra[0]
    for s in spectra[1:]:
        acc = acc * s
    return from_spectrum(acc, out_weight, p)


def cn_update(incoming, p: RingParams, out_weight: int = 1, method: str = "fft") -> np.ndarray:
    if method == "fft":
        return cn_update_fft(incoming, p, out_weight)
    if method == "full":
        return cn_update_full(incoming, p, out_weight)
    raise ParameterError(f"unknown check-node method {method!r}")


def default_method(p: RingParams) -> str:
    return "fft" if p.is_power_of_two else "full"


# ---------------------------------------------------------------------------
# decoder


@dataclass
class DecodeDiagnostics:
    iterations: int = 0
    parity_satisfied: bool = False
    changes: list = field(default_factory=list)
    info_llrs: np.ndarray | None = field(default=None, repr=False)
    parity_llrs: np.ndarray | None = field(default=None, repr=False)
    parity_decisions: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"iterations": self.iterations,
                "parity_satisfied": self.parity_satisfied,
                "changes": list(self.changes)}


class GraphDecoder:
    """Shared flooding-schedule bookkeeping for the RASC parity graph.

    Each check ``m`` has three slots: 0 = info (weight 1), 1 = parity ``m``
    (weight 1), 2 = parity ``m - 1`` (weight g1).  Missing slots are tied to a
    known zero symbol.
    """

    def __init__(self, graph: ParityGraph, constraint=InputConstraint.QAM):
        self.graph = graph
        self.p = graph.ring
        self.constraint = InputConstraint.parse(constraint)
        self.weights = (1, 1, graph.fb)
        self.has_slot = np.stack([graph.info >= 0, np.ones(graph.M, bool), graph.prev >= 0], axis=1)
        self.info_edges = np.asarray(graph.info_checks, dtype=np.int64)  # (Ns, q)
        self.mask = ring.qam_mask(self.p) if self.constraint is InputConstraint.QAM else None
        self._add = ring.add_table(self.p)
        self._gmul = ring.mul_permutation(graph.fb, self.p)

    def split_llrs(self, y_llrs) -> tuple:
        y_llrs = np.asarray(y_llrs, dtype=float)
        g = self.graph
        if y_llrs.shape == (g.Nc, self.p.Q):
            return np.zeros((g.Ns, self.p.Q)), y_llrs
        if y_llrs.shape == (g.N, self.p.Q):
            return y_llrs[:g.Ns], y_llrs[g.Ns:]
        raise ParameterError(f"expected LLRs of shape ({g.Nc}, {self.p.Q}) or ({g.N}, {self.p.Q})")

    def syndrome_ok(self, s_hat: np.ndarray, x_hat: np.ndarray) -> bool:
        g = self.graph
        info = np.where(g.info >= 0, s_hat[np.maximum(g.info, 0)], 0)
        prev = np.where(g.prev >= 0, x_hat[np.maximum(g.prev, 0)], 0)
        res = self._add[self._add[x_hat[g.cur], info], self._gmul[prev]]
        return bool(np.all(res == 0))


class BPDecoder(GraphDecoder):
    def __init__(self, graph: ParityGraph, constraint=InputConstraint.QAM, method: str | None = None):
        super().__init__(graph, constraint)
        self.method = method or default_method(self.p)
        if self.method not in ("fft", "full"):
            raise ParameterError(f"unknown check-node method {self.method!r}")
        self._in = [_weight_maps(w, self.p)[0] for w in self.weights]
        self._out = [_weight_maps(w, self.p)[1] for w in self.weights]

    def _check_update(self, Qm: np.ndarray) -> np.ndarray:
        p = self.p
        P = to_prob(Qm)
        delta = np.zeros(p.Q)
        delta[0] = 1.0
        P = np.where(self.has_slot[..., None], P, delta)
        W = np.stack([P[:, k][:, self._in[k]] for k in range(3)], axis=1)
        R = np.empty_like(Qm)
        if self.method == "fft":
            F = group_transform(W, p)
            for k in range(3):
                conv = group_inverse(F[:, (k + 1) % 3] * F[:, (k + 2) % 3], p)
                R[:, k] = from_prob(conv[:, self._out[k]])
        else:
            for k in range(3):
                conv = group_convolve(W[:, (k + 1) % 3], W[:, (k + 2) % 3], p)
                R[:, k] = from_prob(conv[:, self._out[k]])
        return R

    def decode(self, y_llrs, max_iter: int = 100, early_stop: bool = True):
        """Flooding BP; returns ``(s_hat, DecodeDiagnostics)``."""
        g, p = self.graph, self.p
        f_info, f_par = self.split_llrs(y_llrs)
        M = g.M
        R = np.zeros((M, 3, p.Q))
        Qm = np.zeros((M, 3, p.Q))
        ie = self.info_edges
        diag = DecodeDiagnostics()
        s_hat = np.full(g.Ns, -1)
        for it in range(1, max_iter + 1):
            # variable nodes
            Ri = R[ie, 0]                                    # (Ns, q, Q)
            tot_i = f_info + Ri.sum(axis=1)
            qi = tot_i[:, None, :] - Ri
            if self.mask is not None:
                qi = np.where(self.mask, qi, -np.inf)
            Qm[ie, 0] = normalize(qi)
            Qm[:, 1] = f_par[g.cur]
            Qm[:-1, 1] += R[1:, 2]         # parity m also sits in slot 2 of check m+1
            Qm[1:, 2] = f_par[g.prev[1:]] + R[:-1, 1]
            Qm[:, 1:] = normalize(Qm[:, 1:])
            # check nodes
            R = self._check_update(Qm)
            # decisions
            tot_i = f_info + R[ie, 0].sum(axis=1)
            if self.mask is not None:
                tot_i = np.where(self.mask, tot_i, -np.inf)
            new = np.argmax(tot_i, axis=1)
            tot_p = f_par + R[:, 1]
            tot_p[:-1] += R[1:, 2]
            x_hat = np.argmax(tot_p, axis=1)
            diag.changes.append(int(np.count_nonzero(new != s_hat)))
            s_hat = new
            diag.iterations = it
            diag.parity_satisfied = self.syndrome_ok(s_hat, x_hat)
            if early_stop and diag.parity_satisfied:
                break
        diag.info_llrs = normalize(tot_i)
        diag.parity_llrs = normalize(tot_p)
        diag.parity_decisions = x_hat
        return s_hat, diag


def decode(y_llrs, graph: ParityGraph, max_iter: int = 100, method: str | None = None,
           constraint=InputConstraint.QAM, early_stop: bool = True):
    return BPDecoder(graph, constraint, method).decode(y_llrs, max_iter, early_stop)


def decoder_for(cfg: CodeConfig, method: str | None = None) -> BPDecoder:
    from .code import build_graph
    return BPDecoder(build_graph(cfg), cfg.input_constraint, method)
