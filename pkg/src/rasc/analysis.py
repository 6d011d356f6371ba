"""Monte Carlo density evolution (MC-DE), threshold search and filter ranking.

Pools hold ``N_sam`` LLR vectors under the all-zero codeword; channel samples
use a random coset, so the zero symbol is always the truth.  Parity edges are
split by their check weight, which gives six pools:

* ``QI``/``RI``   info node <-> check (weight 1)
* ``QP1``/``RP1`` parity node <-> its own check (weight 1)
* ``QPg``/``RPg`` parity node <-> the next check (weight ``g``)
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import IO

import numpy as np

from . import channel, ring
from .code import CodeConfig, InputConstraint, rate
from .decode_bp import cn_update, from_spectrum, spectrum
from .errors import FilterError, ParameterError
from .ring import RingParams


@dataclass(frozen=True)
class McdeConfig:
    N_sam: int = 5000
    l_max: int = 100
    P_th: float = 1e-4
    eps_sigma: float = 1e-5
    R_max: int = 10
    sigma_lo: float | None = None
    sigma_hi: float | None = None
    seed: int = 0
    method: str | None = None

    def __post_init__(self):
        if self.N_sam < 2 or self.l_max < 1 or self.R_max < 1:
            raise ParameterError("N_sam >= 2, l_max >= 1 and R_max >= 1 are required")
        if not (0 < self.P_th < 1) or not self.eps_sigma > 0:
            raise ParameterError("P_th must lie in (0, 1) and eps_sigma must be positive")
        if (self.sigma_lo is None) != (self.sigma_hi is None):
            raise ParameterError("give both ends of the sigma bracket or neither")
        if self.sigma_lo is not None and not 0 < self.sigma_lo < self.sigma_hi:
            raise ParameterError("sigma bracket must satisfy 0 < lo < hi")


@dataclass
class ThresholdResult:
    sigma_runs: list
    sigma_mean: float
    snr_db: float
    snr_db_runs: list
    gap_db: float
    shannon_db: float
    rate: float
    trace: list = field(default_factory=list, repr=False)

    @property
    def snr_db_std(self) -> float:
        return float(np.std(self.snr_db_runs))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snr_db_std"] = self.snr_db_std
        return d


def ensemble(p: RingParams, q: int, fb: int, constraint=InputConstraint.QAM) -> CodeConfig:
    """Code parameters for the infinite-length ensemble (``Ns`` is irrelevant)."""
    return CodeConfig(p, q, 1, fb, constraint)


def _fresh_channel(n: int, sigma2: float, p: RingParams, rng) -> np.ndarray:
    c = rng.integers(p.Q, size=n)
    ch = channel.ChannelParams(sigma2)
    y = channel.transmit(c, ch, p, rng)
    return channel.coset_delabel(channel.channel_llrs(y, ch, p), c, p)


def _ref0(llr: np.ndarray) -> np.ndarray:
    return llr - llr[:, :1]


def _symbol_error(post: np.ndarray) -> float:
    """Expected error rate of argmax decisions with uniformly random tie-breaking."""
    top = post.max(axis=1, keepdims=True)
    ties = np.count_nonzero(post == top, axis=1)
    hit = post[:, 0] == top[:, 0]
    return float(np.mean(1.0 - hit / ties))


def mcde_converges(code: CodeConfig, sigma: float, cfg: McdeConfig,
                   rng: np.random.Generator | None = None, return_trace: bool = False):
    """Run MC-DE at noise level ``sigma``; returns ``(converged, error_estimate)``.

    With ``return_trace`` the per-iteration error estimates are appended.
    """
    p, q, g = code.ring, code.q, code.fb
    if not ring.is_bijective(g, p):
        raise FilterError(f"filter FB={g} is not bijective")
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    method = cfg.method or "fft"
    n, Q = cfg.N_sam, p.Q
    sigma2 = sigma * sigma
    mask = ring.qam_mask(p) if code.input_constraint is InputConstraint.QAM else None

    def restrict(x):
        return x if mask is None else np.where(mask, x, -np.inf)

    # iteration 0: check messages are uninformative
    QI = _ref0(restrict(np.zeros((n, Q))))
    QP1 = _fresh_channel(n, sigma2, p, rng)
    QPg = _fresh_channel(n, sigma2, p, rng)
    trace = []
    pe = 1.0
    converged = False
    for _ in range(cfg.l_max):
        def pick(pool):
            return pool[rng.integers(n, size=n)]
        if method == "fft":
            # transforms act per sample, so each pool is transformed once
            SI, SP1, SPg = spectrum(QI, 1, p), spectrum(QP1, 1, p), spectrum(QPg, g, p)
            RI = _ref0(from_spectrum(pick(SP1) * pick(SPg), 1, p))
            RP1 = _ref0(from_spectrum(pick(SI) * pick(SPg), 1, p))
            RPg = _ref0(from_spectrum(pick(SI) * pick(SP1), g, p))
        else:
            RI = _ref0(cn_update([(pick(QP1), 1), (pick(QPg), g)], p, 1, method))
            RP1 = _ref0(cn_update([(pick(QI), 1), (pick(QPg), g)], p, 1, method))
            RPg = _ref0(cn_update([(pick(QI), 1), (pick(QP1), 1)], p, g, method))
        post = restrict(sum(pick(RI) for _ in range(q)))
        pe = _symbol_error(post)
        trace.append(pe)
        if pe < cfg.P_th:
            converged = True
            break
        QI = _ref0(restrict(sum(pick(RI) for _ in range(q - 1))))
        QP1 = _ref0(_fresh_channel(n, sigma2, p, rng) + pick(RPg))
        QPg = _ref0(_fresh_channel(n, sigma2, p, rng) + pick(RP1))
    if return_trace:
        return converged, pe, trace
    return converged, pe


def _sigma(snr_db: float, p: RingParams) -> float:
    return math.sqrt(channel.sigma2_from_snr_db(snr_db, p))


def threshold_search(code: CodeConfig, cfg: McdeConfig, max_expand: int = 8) -> ThresholdResult:
    """Bisection on ``sigma`` repeated over ``R_max`` independent runs."""
    p = code.ring
    r = rate(code)
    shannon = channel.shannon_limit_db(r)
    lo0 = cfg.sigma_lo if cfg.sigma_lo is not None else _sigma(shannon + 6.0, p)
    hi0 = cfg.sigma_hi if cfg.sigma_hi is not None else _sigma(shannon, p)
    sigmas, trace = [], []
    for run in range(cfg.R_max):
        step = 0

        def test(sig):
            nonlocal step
            rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, run, step]))
            step += 1
            ok, pe = mcde_converges(code, sig, cfg, rng)
            trace.append({"run": run, "sigma": sig, "converged": ok, "pe": pe})
            return ok

        lo, hi = lo0, hi0
        for _ in range(max_expand):
            if test(lo):
                break
            lo /= 2
        else:
            raise ParameterError("MC-DE fails even at the lowest noise level tried")
        for _ in range(max_expand):
            if not test(hi):
                break
            lo, hi = hi, hi * 1.5
        else:
            raise ParameterError("MC-DE converges even at the highest noise level tried")
        while hi - lo >= cfg.eps_sigma:
            mid = 0.5 * (lo + hi)
            if test(mid):
                lo = mid
            else:
                hi = mid
        sigmas.append(0.5 * (lo + hi))
    snrs = [channel.snr_db_from_sigma2(s * s, p) for s in sigmas]
    snr = float(np.mean(snrs))
    return ThresholdResult(
        sigma_runs=[float(s) for s in sigmas], sigma_mean=float(np.mean(sigmas)), snr_db=snr,
        snr_db_runs=[float(s) for s in snrs], gap_db=snr - shannon, shannon_db=shannon, rate=r,
        trace=trace)


# ---------------------------------------------------------------------------
# filters


def affine_orbit(g: int, p: RingParams) -> list:
    """Orbit of ``g`` under multiplication by powers of ``j`` and conjugation."""
    if not ring.is_bijective(g, p):
        raise FilterError(f"filter FB={g} is not bijective")
    j = ring.unit_j(p)
    out = set()
    for h in (int(g), int(ring.conj_idx(g, p))):
        for _ in range(4):
            out.add(h)
            h = int(ring.mul_idx(j, h, p))
    return sorted(out)


def affine_class(g: int, p: RingParams) -> int:
    """Canonical (smallest-index) member of the affine class of ``g``."""
    return affine_orbit(g, p)[0]


@dataclass
class FilterRank:
    fb: int
    taps: str
    threshold_db: float
    gap_db: float
    representative: int
    result: ThresholdResult = field(repr=False)

    def to_dict(self) -> dict:
        return {"fb": self.fb, "taps": self.taps, "threshold_db": self.threshold_db,
                "gap_db": self.gap_db, "representative": self.representative,
                "result": self.result.to_dict()}


def filter_search(L: int, Nbv: int, q: int, cfg: McdeConfig, collapse: bool = False,
                  constraint=InputConstraint.QAM, filters=None, progress=None) -> list:
    """Rank bijective filters by MC-DE threshold (ascending).

    With ``collapse`` only one member per affine class is evaluated and its
    threshold is reported for the whole class.
    """
    p = RingParams(L, Nbv)
    if p.Q > 256:
        raise ParameterError("exhaustive filter search is limited to Q <= 256")
    fbs = list(ring.bijective_filters(p)) if filters is None else [int(f) for f in filters]
    for fb in fbs:
        if not ring.is_bijective(fb, p):
            raise FilterError(f"filter FB={fb} is not bijective")
    reps = {fb: (affine_class(fb, p) if collapse else fb) for fb in fbs}
    results = {}
    for rep in sorted(set(reps.values())):
        results[rep] = threshold_search(ensemble(p, q, rep, constraint), cfg)
        if progress is not None:
            progress(rep, results[rep])
    ranks = [FilterRank(fb, ring.format_taps(fb, p), results[reps[fb]].snr_db,
                        results[reps[fb]].gap_db, reps[fb], results[reps[fb]]) for fb in fbs]
    ranks.sort(key=lambda r: (r.threshold_db, r.fb))
    return ranks


def write_ranking_csv(fh: IO[str], ranks) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["fb", "taps", "threshold_db", "gap_db"])
    for r in ranks:
        w.writerow([r.fb, r.taps, f"{r.threshold_db:.9g}", f"{r.gap_db:.9g}"])


def write_ranking_json(fh: IO[str], ranks) -> None:
    json.dump([r.to_dict() for r in ranks], fh, indent=2, sort_keys=True)
    fh.write("\n")
