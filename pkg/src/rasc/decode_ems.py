"""Modified extended min-sum (EMS) decoding of RASCs.

Messages keep only the ``Nm`` largest LLRs, sorted in decreasing order and
labelled with their ring symbols; every dropped symbol is represented by the
compensation value ``gamma = last_kept - log(Q - Nm) - eta``.  Check nodes use a
max-log search of the ``Nm x Nm`` virtual matrix with a bounded sorter.

The inner loops are numba kernels working on flat arrays; :class:`TruncMsg`
and the module-level functions wrap them for single messages.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from . import ring
from .code import InputConstraint, ParityGraph
from .decode_bp import DecodeDiagnostics, GraphDecoder
from .errors import ParameterError
from .ring import RingParams

NEG_INF = -np.inf

# eta per Nm used for the L = 3 and L = 4 curves
DEFAULT_ETA = {20: -3.0, 40: -3.5, 64: -4.7, 128: -5.5}


@dataclass(frozen=True)
class EmsConfig:
    Nm: int
    eta: float | None = None

    def __post_init__(self):
        if self.Nm < 1:
            raise ParameterError(f"Nm must be >= 1, got {self.Nm}")
        if self.eta is None:
            if self.Nm not in DEFAULT_ETA:
                raise ParameterError(f"no default eta for Nm={self.Nm}; pass eta explicitly")
            object.__setattr__(self, "eta", DEFAULT_ETA[self.Nm])

    def check(self, p: RingParams) -> None:
        if self.Nm > p.Q:
            raise ParameterError(f"Nm={self.Nm} exceeds Q={p.Q}")


@dataclass
class TruncMsg:
    values: np.ndarray
    symbols: np.ndarray
    gamma: float

    def __len__(self):
        return self.values.size

    def to_dense(self, Q: int) -> np.ndarray:
        out = np.full(Q, self.gamma, dtype=float)
        out[self.symbols] = self.values
        return out


# ---------------------------------------------------------------------------
# numba kernels


@nb.njit(cache=True)
def _gamma(last, n, Q, eta):
    if n >= Q:
        return NEG_INF
    return last - math.log(Q - n) - eta


@nb.njit(cache=True)
def _truncate_k(llr, Nm, eta, out_v, out_s):
    Q = llr.size
    order = np.argsort(-llr, kind="mergesort")
    n = 0
    finite = 0
    for i in range(Q):
        if llr[i] > NEG_INF:
            finite += 1
    lim = min(Nm, finite)
    for k in range(lim):
        out_v[k] = llr[order[k]]
        out_s[k] = order[k]
        n += 1
    if n == 0:
        return 0, 0.0
    top = out_v[0]
    for k in range(n):
        out_v[k] -= top
    if finite > n:
        return n, _gamma(out_v[n - 1], n, Q, eta)
    return n, NEG_INF


@nb.njit(cache=True)
def _finish(cand_v, cand_s, nc, Nm, Q, eta, exact, out_v, out_s):
    # stable sort candidates by decreasing value, keep Nm, normalise
    order = np.argsort(-cand_v[:nc], kind="mergesort")
    n = min(Nm, nc)
    for k in range(n):
        out_v[k] = cand_v[order[k]]
        out_s[k] = cand_s[order[k]]
    if n == 0:
        return 0, NEG_INF
    top = out_v[0]
    for k in range(n):
        out_v[k] -= top
    if exact and nc <= Nm:
        return n, NEG_INF
    return n, _gamma(out_v[n - 1], n, Q, eta)


@nb.njit(cache=True)
def _vn_k(v1, s1, n1, g1, v2, s2, n2, g2, Nm, Q, eta, best, pos, cand_v, cand_s, out_v, out_s):
    """Elementary variable-node step; ``pos``/``best`` are length-Q scratch
    arrays that must hold -1 / -inf on entry and are restored on exit."""
    if n1 == 0 and n2 == 0:
        return 0, 0.0
    if n2 == 0:
        # uninformative partner: constant shift of r1
        for k in range(n1):
            out_v[k] = v1[k]
            out_s[k] = s1[k]
        return n1, g1
    if n1 == 0:
        for k in range(n2):
            out_v[k] = v2[k]
            out_s[k] = s2[k]
        return n2, g2
    for l in range(n2):
        pos[s2[l]] = l
    nc = 0
    for k in range(n1):
        sym = s1[k]
        y = v2[pos[sym]] if pos[sym] >= 0 else g2
        val = v1[k] + y
        if val > NEG_INF:
            if best[sym] == NEG_INF:
                cand_s[nc] = sym
                nc += 1
            if val > best[sym]:
                best[sym] = val
    for k in range(n2):
        sym = s2[k]
        val = g1 + v2[k]
        if val > NEG_INF:
            if best[sym] == NEG_INF:
                cand_s[nc] = sym
                nc += 1
            if val > best[sym]:
                best[sym] = val
    for c in range(nc):
        cand_v[c] = best[cand_s[c]]
        best[cand_s[c]] = NEG_INF
    for l in range(n2):
        pos[s2[l]] = -1
    exact = g1 == NEG_INF and g2 == NEG_INF
    return _finish(cand_v, cand_s, nc, Nm, Q, eta, exact, out_v, out_s)


@nb.njit(cache=True)
def _hidden_k(v, s, n, g, Nm, Q, L2, eta, present, cand_v, cand_s, out_v, out_s):
    """Restrict to the QAM subset: non-QAM entries are dropped (-inf), absent
    QAM symbols receive gamma'."""
    if n == 0:
        gp = g
        lz = -1
    else:
        lz = -1
        for k in range(n):
            if s[k] < L2:
                lz = k
        if lz >= 0:
            gp = v[lz] - math.log(Q - lz) - eta
        else:
            gp = g if g > NEG_INF else 0.0
    nc = 0
    for k in range(n):
        if s[k] < L2:
            cand_v[nc] = v[k]
            cand_s[nc] = s[k]
            present[s[k]] = True
            nc += 1
    for a in range(L2):
        if not present[a]:
            cand_v[nc] = gp
            cand_s[nc] = a
            nc += 1
        else:
            present[a] = False
    order = np.argsort(-cand_v[:nc], kind="mergesort")
    m = min(Nm, nc)
    for k in range(m):
        out_v[k] = cand_v[order[k]]
        out_s[k] = cand_s[order[k]]
    top = out_v[0]
    for k in range(m):
        out_v[k] -= top
    if m == L2:
        return m, NEG_INF
    return m, gp - top


@nb.njit(cache=True)
def _above(val, seq, r, t):
    # row r outranks row t: larger value, then earlier insertion
    return val[r] > val[t] or (val[r] == val[t] and seq[r] < seq[t])


@nb.njit(cache=True)
def _sift_down(heap, size, val, seq, i):
    r = heap[i]
    while True:
        c = 2 * i + 1
        if c >= size:
            break
        if c + 1 < size and _above(val, seq, heap[c + 1], heap[c]):
            c += 1
        if not _above(val, seq, heap[c], r):
            break
        heap[i] = heap[c]
        i = c
    heap[i] = r


@nb.njit(cache=True)
def _cn_k(v1, s1, n1, g1, v2, s2, n2, g2, map1, map2, outmap, add, Nm, Q, eta, max_ext,
          seen, val, seq, heap, col, out_v, out_s):
    """Elementary check-node step over the virtual matrix; at most ``max_ext``
    extractions before padding from the sorter.

    Each row of the virtual matrix has one live candidate, so the sorter is a
    heap of row ids keyed by ``(val, seq)``.
    """
    if n1 == 0 or n2 == 0:
        return 0, 0.0
    # v1 is sorted, so the first column already satisfies the heap order
    for k in range(n1):
        val[k] = v1[k] + v2[0]
        seq[k] = k
        col[k] = 0
        heap[k] = k
    size = n1
    nseq = n1
    n = 0
    ext = 0
    while size > 0 and n < Nm and ext < max_ext:
        r = heap[0]
        ext += 1
        sym = outmap[add[map1[s1[r]], map2[s2[col[r]]]]]
        if not seen[sym]:
            seen[sym] = True
            out_v[n] = val[r]
            out_s[n] = sym
            n += 1
        if col[r] + 1 < n2:
            col[r] += 1
            val[r] = v1[r] + v2[col[r]]
            seq[r] = nseq
            nseq += 1
        else:
            size -= 1
            heap[0] = heap[size]
        if size > 0:
            _sift_down(heap, size, val, seq, 0)
    exhausted = size == 0
    # pad from what is left in the sorter, best first
    if n < Nm and size > 0:
        rows = heap[:size]
        by_seq = rows[np.argsort(seq[rows])]
        order = by_seq[np.argsort(-val[by_seq], kind="mergesort")]
        for r in order:
            if n >= Nm:
                break
            sym = outmap[add[map1[s1[r]], map2[s2[col[r]]]]]
            if not seen[sym]:
                seen[sym] = True
                out_v[n] = val[r]
                out_s[n] = sym
                n += 1
    for k in range(n):
        seen[out_s[k]] = False
    top = out_v[0]
    for k in range(n):
        out_v[k] -= top
    if exhausted and g1 == NEG_INF and g2 == NEG_INF:
        return n, NEG_INF
    return n, _gamma(out_v[n - 1], n, Q, eta)


@nb.njit(cache=True)
def _copy_msg(src_v, src_s, n, dst_v, dst_s):
    for k in range(n):
        dst_v[k] = src_v[k]
        dst_s[k] = src_s[k]


@nb.njit(cache=True)
def _iterate(Fv, Fs, Fn, Fg, Qv, Qs, Qn, Qg, Rv, Rs, Rn, Rg,
             has_slot, info_edges, maps, outmaps, add, qam, Nm, Q, L2, eta,
             dec_s, dec_x):
    M = has_slot.shape[0]
    Ns, q = info_edges.shape
    # scratch
    best = np.full(Q, NEG_INF)
    pos = np.full(Q, -1, dtype=np.int64)
    present = np.zeros(Q, dtype=np.bool_)
    seen = np.zeros(Q, dtype=np.bool_)
    cap = 2 * Nm + Q
    cand_v = np.empty(cap)
    cand_s = np.empty(cap, dtype=np.int64)
    av = np.empty(Q)
    as_ = np.empty(Q, dtype=np.int64)
    bv = np.empty(Q)
    bs = np.empty(Q, dtype=np.int64)
    hv = np.empty(cap)
    hq = np.empty(cap, dtype=np.int64)
    h1 = np.empty(cap, dtype=np.int64)
    h2 = np.empty(cap, dtype=np.int64)
    dv = np.zeros(1)
    ds = np.zeros(1, dtype=np.int64)

    # ---- variable nodes: info (hidden)
    for i in range(Ns):
        for e in range(q):
            na = 0
            ga = 0.0
            first = True
            for o in range(q):
                if o == e:
                    continue
                m = info_edges[i, o]
                if first:
                    _copy_msg(Rv[m, 0], Rs[m, 0], Rn[m, 0], av, as_)
                    na = Rn[m, 0]
                    ga = Rg[m, 0]
                    first = False
                else:
                    na, ga = _vn_k(av, as_, na, ga, Rv[m, 0], Rs[m, 0], Rn[m, 0], Rg[m, 0],
                                   Nm, Q, eta, best, pos, cand_v, cand_s, bv, bs)
                    _copy_msg(bv, bs, na, av, as_)
            m = info_edges[i, e]
            if qam:
                n, g = _hidden_k(av, as_, na, ga, Nm, Q, L2, eta, present, cand_v, cand_s,
                                 Qv[m, 0], Qs[m, 0])
            else:
                _copy_msg(av, as_, na, Qv[m, 0], Qs[m, 0])
                n, g = na, ga
            Qn[m, 0] = n
            Qg[m, 0] = g
    # ---- variable nodes: parity j sits in (j, 1) and (j + 1, 2)
    for j in range(M):
        if j + 1 < M:
            n, g = _vn_k(Fv[j], Fs[j], Fn[j], Fg[j], Rv[j + 1, 2], Rs[j + 1, 2], Rn[j + 1, 2],
                         Rg[j + 1, 2], Nm, Q, eta, best, pos, cand_v, cand_s, Qv[j, 1], Qs[j, 1])
            Qn[j, 1] = n
            Qg[j, 1] = g
            n, g = _vn_k(Fv[j], Fs[j], Fn[j], Fg[j], Rv[j, 1], Rs[j, 1], Rn[j, 1], Rg[j, 1],
                         Nm, Q, eta, best, pos, cand_v, cand_s, Qv[j + 1, 2], Qs[j + 1, 2])
            Qn[j + 1, 2] = n
            Qg[j + 1, 2] = g
        else:
            _copy_msg(Fv[j], Fs[j], Fn[j], Qv[j, 1], Qs[j, 1])
            Qn[j, 1] = Fn[j]
            Qg[j, 1] = Fg[j]
    # ---- check nodes
    for m in range(M):
        for k in range(3):
            if not has_slot[m, k]:
                continue
            a = (k + 1) % 3
            b = (k + 2) % 3
            if has_slot[m, a]:
                pv, ps, pn, pg = Qv[m, a], Qs[m, a], Qn[m, a], Qg[m, a]
            else:
                pv, ps, pn, pg = dv, ds, 1, NEG_INF
            if has_slot[m, b]:
                rv, rs, rn, rg = Qv[m, b], Qs[m, b], Qn[m, b], Qg[m, b]
            else:
                rv, rs, rn, rg = dv, ds, 1, NEG_INF
            n, g = _cn_k(pv, ps, pn, pg, rv, rs, rn, rg, maps[a], maps[b], outmaps[k], add,
                         Nm, Q, eta, 2 * Nm, seen, hv, hq, h1, h2, Rv[m, k], Rs[m, k])
            Rn[m, k] = n
            Rg[m, k] = g
    # ---- decisions
    for i in range(Ns):
        m = info_edges[i, 0]
        _copy_msg(Rv[m, 0], Rs[m, 0], Rn[m, 0], av, as_)
        na = Rn[m, 0]
        ga = Rg[m, 0]
        for o in range(1, q):
            m = info_edges[i, o]
            na, ga = _vn_k(av, as_, na, ga, Rv[m, 0], Rs[m, 0], Rn[m, 0], Rg[m, 0],
                           Nm, Q, eta, best, pos, cand_v, cand_s, bv, bs)
            _copy_msg(bv, bs, na, av, as_)
        if qam:
            n, g = _hidden_k(av, as_, na, ga, Nm, Q, L2, eta, present, cand_v, cand_s, bv, bs)
            dec_s[i] = bs[0]
        else:
            dec_s[i] = as_[0]
    for j in range(M):
        na, ga = _vn_k(Fv[j], Fs[j], Fn[j], Fg[j], Rv[j, 1], Rs[j, 1], Rn[j, 1], Rg[j, 1],
                       Nm, Q, eta, best, pos, cand_v, cand_s, av, as_)
        if j + 1 < M:
            na, ga = _vn_k(av, as_, na, ga, Rv[j + 1, 2], Rs[j + 1, 2], Rn[j + 1, 2],
                           Rg[j + 1, 2], Nm, Q, eta, best, pos, cand_v, cand_s, bv, bs)
            dec_x[j] = bs[0]
        else:
            dec_x[j] = as_[0]


# ---------------------------------------------------------------------------
# single-message API


def _buf(Q):
    return np.empty(Q), np.empty(Q, dtype=np.int64)


def _msg(v, s, n, g) -> TruncMsg:
    return TruncMsg(v[:n].copy(), s[:n].copy(), float(g))


def truncate(v, cfg: EmsConfig, p: RingParams) -> TruncMsg:
    """Keep the ``Nm`` largest LLRs (normalised to a maximum of 0)."""
    cfg.check(p)
    v = np.asarray(v, dtype=float)
    if v.shape != (p.Q,):
        raise ParameterError(f"expected a dense LLR vector of length {p.Q}")
    ov, os_ = _buf(p.Q)
    n, g = _truncate_k(v, cfg.Nm, cfg.eta, ov, os_)
    return _msg(ov, os_, n, g)


def _scratch(p: RingParams, Nm: int):
    cap = 2 * Nm + p.Q
    return (np.full(p.Q, NEG_INF), np.full(p.Q, -1, dtype=np.int64),
            np.empty(cap), np.empty(cap, dtype=np.int64))


def _arr(t: TruncMsg, Q: int):
    v = np.zeros(max(Q, 1))
    s = np.zeros(max(Q, 1), dtype=np.int64)
    v[:len(t)] = t.values
    s[:len(t)] = t.symbols
    return v, s, len(t), float(t.gamma)


def vn_elementary(r1: TruncMsg, r2: TruncMsg, cfg: EmsConfig, p: RingParams) -> TruncMsg:
    """Combine two truncated messages through the 2*Nm candidate vector."""
    cfg.check(p)
    best, pos, cv, cs = _scratch(p, cfg.Nm)
    ov, os_ = _buf(p.Q)
    n, g = _vn_k(*_arr(r1, p.Q), *_arr(r2, p.Q), cfg.Nm, p.Q, cfg.eta, best, pos, cv, cs, ov, os_)
    return _msg(ov, os_, n, g)


def vn_hidden_ems(t: TruncMsg, cfg: EmsConfig, p: RingParams,
                  constraint=InputConstraint.QAM) -> TruncMsg:
    if InputConstraint.parse(constraint) is not InputConstraint.QAM:
        return TruncMsg(t.values.copy(), t.symbols.copy(), t.gamma)
    _, _, cv, cs = _scratch(p, cfg.Nm)
    present = np.zeros(p.Q, dtype=np.bool_)
    ov, os_ = _buf(p.Q)
    n, g = _hidden_k(*_arr(t, p.Q), cfg.Nm, p.Q, p.L * p.L, cfg.eta, present, cv, cs, ov, os_)
    return _msg(ov, os_, n, g)


def cn_elementary(q1: TruncMsg, q2: TruncMsg, cfg: EmsConfig, p: RingParams,
                  weights=(1, 1), out_weight: int = 1, max_extractions: int | None = None
                  ) -> TruncMsg:
    """Check-node step: belief of ``v`` with ``w1 b1 + w2 b2 + w0 v = 0``.

    ``max_extractions`` defaults to ``2 * Nm``; pass ``len(q1) * len(q2)`` for
    an exhaustive search.
    """
    cfg.check(p)
    max_ext = 2 * cfg.Nm if max_extractions is None else int(max_extractions)
    map1, map2 = (ring.mul_permutation(w, p) for w in weights)
    outmap = _outmap(out_weight, p)
    cap = 2 * cfg.Nm + p.Q
    heap = (np.empty(cap), np.empty(cap, dtype=np.int64),
            np.empty(cap, dtype=np.int64), np.empty(cap, dtype=np.int64))
    seen = np.zeros(p.Q, dtype=np.bool_)
    ov, os_ = _buf(p.Q)
    n, g = _cn_k(*_arr(q1, p.Q), *_arr(q2, p.Q), np.asarray(map1), np.asarray(map2), outmap,
                 np.asarray(ring.add_table(p)), cfg.Nm, p.Q, cfg.eta, max_ext, seen, *heap, ov, os_)
    return _msg(ov, os_, n, g)


def _outmap(w: int, p: RingParams) -> np.ndarray:
    # symbol v with w v = -S
    perm = ring.mul_permutation(w, p)
    return ring.inverse_permutation(perm)[ring.neg_table(p)]


# ---------------------------------------------------------------------------
# decoder


class EMSDecoder(GraphDecoder):
    def __init__(self, graph: ParityGraph, cfg: EmsConfig, constraint=InputConstraint.QAM):
        super().__init__(graph, constraint)
        cfg.check(self.p)
        self.cfg = cfg
        p = self.p
        self._maps = np.stack([np.asarray(ring.mul_permutation(w, p)) for w in self.weights])
        self._outmaps = np.stack([_outmap(w, p) for w in self.weights])
        self._addt = np.ascontiguousarray(ring.add_table(p))

    def decode(self, y_llrs, max_iter: int = 100, early_stop: bool = True):
        g, p, Nm = self.graph, self.p, self.cfg.Nm
        _, f_par = self.split_llrs(y_llrs)
        M, Q = g.M, p.Q
        Fv = np.zeros((M, Nm))
        Fs = np.zeros((M, Nm), dtype=np.int64)
        Fn = np.zeros(M, dtype=np.int64)
        Fg = np.zeros(M)
        for j in range(M):
            Fn[j], Fg[j] = _truncate_k(np.ascontiguousarray(f_par[j]), Nm, self.cfg.eta,
                                       Fv[j], Fs[j])
        Qv = np.zeros((M, 3, Q))
        Qs = np.zeros((M, 3, Q), dtype=np.int64)
        Qn = np.zeros((M, 3), dtype=np.int64)
        Qg = np.zeros((M, 3))
        Rv, Rs = np.zeros_like(Qv), np.zeros_like(Qs)
        Rn = np.zeros((M, 3), dtype=np.int64)   # n = 0, gamma = 0: uninformative
        Rg = np.zeros((M, 3))
        s_hat = np.full(g.Ns, -1, dtype=np.int64)
        x_hat = np.zeros(M, dtype=np.int64)
        diag = DecodeDiagnostics()
        qam = self.mask is not None
        for it in range(1, max_iter + 1):
            new = np.empty(g.Ns, dtype=np.int64)
            _iterate(Fv, Fs, Fn, Fg, Qv, Qs, Qn, Qg, Rv, Rs, Rn, Rg,
                     self.has_slot, self.info_edges, self._maps, self._outmaps, self._addt,
                     qam, Nm, Q, p.L * p.L, float(self.cfg.eta), new, x_hat)
            diag.changes.append(int(np.count_nonzero(new != s_hat)))
            s_hat = new
            diag.iterations = it
            diag.parity_satisfied = self.syndrome_ok(s_hat, x_hat)
            if early_stop and diag.parity_satisfied:
                break
        diag.parity_decisions = x_hat.copy()
        return s_hat, diag


def ems_decode(y_llrs, graph: ParityGraph, cfg: EmsConfig, max_iter: int = 100,
               constraint=InputConstraint.QAM, early_stop: bool = True):
    return EMSDecoder(graph, cfg, constraint).decode(y_llrs, max_iter, early_stop)
