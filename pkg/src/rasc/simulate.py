"""Monte Carlo SER/FER simulation of a RASC over the complex AWGN channel."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO

import numpy as np

from . import channel, code
from .code import CodeConfig
from .decode_bp import BPDecoder
from .decode_ems import EMSDecoder, EmsConfig
from .errors import ParameterError

DECODERS = ("fullbp", "fftbp", "ems")


@dataclass(frozen=True)
class SimConfig:
    code: CodeConfig
    decoder: str = "fftbp"
    max_iter: int = 100
    Nm: int | None = None
    eta: float | None = None
    frames: int | None = None        # fixed frame budget
    target_errors: int = 100         # otherwise stop at this many symbol errors
    max_frames: int = 100000
    seed: int = 0

    def __post_init__(self):
        if self.decoder not in DECODERS:
            raise ParameterError(f"decoder must be one of {DECODERS}")
        if self.decoder == "ems" and self.Nm is None:
            raise ParameterError("the ems decoder needs Nm")
        if self.frames is not None and self.frames < 1:
            raise ParameterError("frames must be >= 1")
        if self.target_errors < 1 or self.max_frames < 1 or self.max_iter < 1:
            raise ParameterError("target_errors, max_frames and max_iter must be >= 1")


@dataclass
class SimPoint:
    snr_db: float
    frames: int
    symbol_errors: int
    symbols: int
    frame_errors: int
    iterations: int

    @property
    def ser(self) -> float:
        return self.symbol_errors / self.symbols if self.symbols else float("nan")

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    @property
    def avg_iters(self) -> float:
        return self.iterations / self.frames if self.frames else float("nan")


def make_decoder(cfg: SimConfig):
    graph = code.build_graph(cfg.code)
    if cfg.decoder == "ems":
        return EMSDecoder(graph, EmsConfig(cfg.Nm, cfg.eta), cfg.code.input_constraint)
    method = "full" if cfg.decoder == "fullbp" else "fft"
    return BPDecoder(graph, cfg.code.input_constraint, method)


def frame_rng(seed: int, point: int, frame: int) -> np.random.Generator:
    """Independent stream per (seed, SNR point, frame)."""
    return np.random.default_rng(np.random.SeedSequence([seed, point, frame]))


def simulate_point(cfg: SimConfig, snr_db: float, point: int = 0, decoder=None) -> SimPoint:
    c = cfg.code
    dec = make_decoder(cfg) if decoder is None else decoder
    ch = channel.ChannelParams.from_snr_db(snr_db, c.ring)
    budget = cfg.frames if cfg.frames is not None else cfg.max_frames
    res = SimPoint(float(snr_db), 0, 0, 0, 0, 0)
    for f in range(budget):
        rng = frame_rng(cfg.seed, point, f)
        s = c.random_input(rng)
        x = code.encode(s, c)
        y = channel.transmit(x, ch, c.ring, rng)
        s_hat, diag = dec.decode(channel.channel_llrs(y, ch, c.ring), cfg.max_iter)
        errs = int(np.count_nonzero(s_hat != s))
        res.frames += 1
        res.symbols += s.size
        res.symbol_errors += errs
        res.frame_errors += int(errs > 0)
        res.iterations += diag.iterations
        if cfg.frames is None and res.symbol_errors >= cfg.target_errors:
            break
    return res


def sweep(cfg: SimConfig, snr_db_list, progress=None) -> list:
    dec = make_decoder(cfg)
    out = []
    for k, snr in enumerate(snr_db_list):
        out.append(simulate_point(cfg, snr, k, dec))
        if progress is not None:
            progress(out[-1])
    return out


def write_sweep_csv(fh: IO[str], points) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["snr_db", "frames", "symbol_errors", "ser", "fer", "avg_iters"])
    for r in points:
        w.writerow([f"{r.snr_db:.9g}", r.frames, r.symbol_errors, f"{r.ser:.9g}",
                    f"{r.fer:.9g}", f"{r.avg_iters:.9g}"])
