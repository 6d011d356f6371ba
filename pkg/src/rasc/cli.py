"""Command-line front end: ``rasc {constellation,filters,simulate,threshold}``.

Every option can also come from a ``--config`` file of ``key = value`` lines
(keys use the long option name, with or without dashes); command-line flags
win.  Outputs written to a file get a ``<out>.manifest.json`` sidecar holding
the full parameter set, the seed, the tool version and the wall-clock time, so
the data files themselves stay byte-identical across re-runs.
"""
from __future__ import annotations

import argparse
import contextlib
import datetime as _dt
import json
import logging
import sys
import time

from . import __version__, analysis, ring
from .code import CodeConfig, InputConstraint
from .errors import FilterError, InputError, ParameterError
from .ring import RingParams
from .simulate import DECODERS, SimConfig, sweep, write_sweep_csv

log = logging.getLogger("rasc")

EXIT_OK, EXIT_PARAM, EXIT_FILTER, EXIT_IO = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# helpers


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise ParameterError(f"missing required option(s): {flags}")


def _ring(args) -> RingParams:
    _need(args, "L", "Nbv")
    return RingParams(args.L, args.Nbv)


def _write_manifest(args, outputs, started: float) -> None:
    paths = [p for p in outputs if p not in (None, "-")]
    if not paths:
        return
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    manifest = {
        "subcommand": args.command,
        "parameters": params,
        "seed": getattr(args, "seed", None),
        "tool_version": __version__,
        "started": _dt.datetime.fromtimestamp(started, _dt.timezone.utc).isoformat(),
        "wall_clock_s": round(time.time() - started, 3),
        "outputs": paths,
    }
    with open(paths[0] + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _mcde_config(args) -> analysis.McdeConfig:
    return analysis.McdeConfig(
        N_sam=args.N_sam, l_max=args.l_max, P_th=args.P_th, eps_sigma=args.eps_sigma,
        R_max=args.R_max, sigma_lo=args.sigma_lo, sigma_hi=args.sigma_hi, seed=args.seed)


# ---------------------------------------------------------------------------
# subcommands


def cmd_constellation(args) -> int:
    p = _ring(args)
    with _open_out(args.out) as fh:
        ring.write_constellation_csv(fh, p, args.fb)
    return EXIT_OK


def cmd_filters(args) -> int:
    p = _ring(args)
    if not args.rank:
        with _open_out(args.out) as fh:
            fh.write("fb,taps,affine_class\n")
            for fb in ring.bijective_filters(p):
                fh.write(f"{fb},\"{ring.format_taps(fb, p)}\",{analysis.affine_class(fb, p)}\n")
        return EXIT_OK
    _need(args, "q")
    log.info("ranking filters for L=%d Nbv=%d q=%d (seed %d)", p.L, p.Nbv, args.q, args.seed)
    ranks = analysis.filter_search(
        p.L, p.Nbv, args.q, _mcde_config(args), collapse=args.collapse,
        constraint=args.constraint,
        progress=lambda fb, r: log.info("FB=%d threshold %.4f dB", fb, r.snr_db))
    with _open_out(args.out) as fh:
        analysis.write_ranking_csv(fh, ranks)
    if args.json:
        with open(args.json, "w") as fh:
            analysis.write_ranking_json(fh, ranks)
    return EXIT_OK


def cmd_simulate(args) -> int:
    p = _ring(args)
    _need(args, "q", "fb", "Ns", "snr_db_list")
    decoder = args.decoder or ("fftbp" if p.is_power_of_two else "fullbp")
    c = CodeConfig(p, args.q, args.Ns, args.fb, args.constraint,
                   args.seed if args.interleaver_seed is None else args.interleaver_seed,
                   args.terminate)
    cfg = SimConfig(c, decoder, args.max_iter, args.Nm, args.eta, args.frames,
                    args.target_errors, args.max_frames, args.seed)
    log.info("simulating with seed %d", args.seed)
    pts = sweep(cfg, args.snr_db_list,
                progress=lambda r: log.info("%.3f dB: SER %.3g over %d frames",
                                            r.snr_db, r.ser, r.frames))
    with _open_out(args.out) as fh:
        write_sweep_csv(fh, pts)
    return EXIT_OK


def cmd_threshold(args) -> int:
    p = _ring(args)
    _need(args, "q", "fb")
    cfg = _mcde_config(args)
    log.info("threshold search with seed %d", args.seed)
    res = analysis.threshold_search(analysis.ensemble(p, args.q, args.fb, args.constraint), cfg)
    doc = {"L": p.L, "Nbv": p.Nbv, "q": args.q, "fb": args.fb,
           "taps": ring.format_taps(args.fb, p),
           "constraint": InputConstraint.parse(args.constraint).value,
           "mcde": {"N_sam": cfg.N_sam, "l_max": cfg.l_max, "P_th": cfg.P_th,
                    "eps_sigma": cfg.eps_sigma, "R_max": cfg.R_max,
                    "sigma_lo": cfg.sigma_lo, "sigma_hi": cfg.sigma_hi, "seed": cfg.seed},
           "result": res.to_dict()}
    with _open_out(args.out) as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_ring(sp):
    sp.add_argument("--L", type=int, help="modulus L")
    sp.add_argument("--Nbv", type=int, help="number of basis vectors")


def _add_mcde(sp):
    d = analysis.McdeConfig()
    sp.add_argument("--N-sam", dest="N_sam", type=int, default=d.N_sam)
    sp.add_argument("--l-max", dest="l_max", type=int, default=d.l_max)
    sp.add_argument("--P-th", dest="P_th", type=float, default=d.P_th)
    sp.add_argument("--eps-sigma", dest="eps_sigma", type=float, default=d.eps_sigma)
    sp.add_argument("--R-max", dest="R_max", type=int, default=d.R_max)
    sp.add_argument("--sigma-lo", dest="sigma_lo", type=float)
    sp.add_argument("--sigma-hi", dest="sigma_hi", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rasc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="file of key = value lines")
        sp.add_argument("--out", default="-", help="output path (default stdout)")
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("constellation", help="dump constellation points as CSV")
    _add_ring(sp)
    sp.add_argument("--fb", type=int, help="show the image under multiplication by FB")
    common(sp)
    sp.set_defaults(func=cmd_constellation)

    sp = sub.add_parser("filters", help="list or rank bijective filters")
    _add_ring(sp)
    sp.add_argument("--rank", action="store_true", help="rank by MC-DE threshold")
    sp.add_argument("--q", type=int)
    sp.add_argument("--collapse", action="store_true", help="evaluate one filter per affine class")
    sp.add_argument("--constraint", default="qam", choices=[c.value for c in InputConstraint])
    sp.add_argument("--json", help="also write full diagnostics as JSON")
    sp.add_argument("--seed", type=int, default=0)
    _add_mcde(sp)
    common(sp)
    sp.set_defaults(func=cmd_filters)

    sp = sub.add_parser("simulate", help="SER/FER sweep over Es/N0")
    _add_ring(sp)
    sp.add_argument("--q", type=int)
    sp.add_argument("--fb", type=int)
    sp.add_argument("--Ns", type=int)
    sp.add_argument("--snr-db-list", dest="snr_db_list", type=float, nargs="+")
    sp.add_argument("--decoder", choices=DECODERS)
    sp.add_argument("--Nm", type=int)
    sp.add_argument("--eta", type=float)
    sp.add_argument("--max-iter", dest="max_iter", type=int, default=100)
    sp.add_argument("--frames", type=int, help="fixed number of frames per point")
    sp.add_argument("--target-errors", dest="target_errors", type=int, default=100)
    sp.add_argument("--max-frames", dest="max_frames", type=int, default=100000)
    sp.add_argument("--constraint", default="qam", choices=[c.value for c in InputConstraint])
    sp.add_argument("--terminate", action="store_true")
    sp.add_argument("--interleaver-seed", dest="interleaver_seed", type=int)
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("threshold", help="MC-DE noise threshold")
    _add_ring(sp)
    sp.add_argument("--q", type=int)
    sp.add_argument("--fb", type=int)
    sp.add_argument("--constraint", default="qam", choices=[c.value for c in InputConstraint])
    sp.add_argument("--seed", type=int, default=0)
    _add_mcde(sp)
    common(sp)
    sp.set_defaults(func=cmd_threshold)
    parser._subcommands = sub.choices
    return parser


# ---------------------------------------------------------------------------
# config files


def read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{n}: expected 'key = value'")
            key, value = (t.strip() for t in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _truthy(v: str) -> bool:
    v = v.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ParameterError(f"not a boolean: {v!r}")


def apply_config(sp: argparse.ArgumentParser, values: dict) -> None:
    actions = {a.dest: a for a in sp._actions}
    lowered = {k.lower(): k for k in actions}
    defaults = {}
    for key, raw in values.items():
        dest = key if key in actions else lowered.get(key.lower())
        if dest is None or dest in ("help", "config"):
            raise ParameterError(f"unknown config key {key!r}")
        act = actions[dest]
        try:
            if isinstance(act, argparse._StoreTrueAction):
                val = _truthy(raw)
            elif act.nargs in ("+", "*"):
                items = raw.replace(",", " ").split()
                val = [act.type(x) if act.type else x for x in items]
            else:
                val = act.type(raw) if act.type else raw
        except ValueError as exc:
            raise ParameterError(f"bad value for {key!r}: {raw!r}") from exc
        if act.choices is not None:
            for v in val if isinstance(val, list) else [val]:
                if v not in act.choices:
                    raise ParameterError(f"{key} must be one of {list(act.choices)}")
        defaults[dest] = val
    sp.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre.add_argument("command", nargs="?")
    started = time.time()
    try:
        known, _ = pre.parse_known_args(argv)
        if known.config and known.command in parser._subcommands:
            apply_config(parser._subcommands[known.command], read_config(known.config))
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(message)s", stream=sys.stderr)
        if args.command in ("simulate", "threshold") or getattr(args, "rank", False):
            log.warning("seed = %d", args.seed)
        code = args.func(args)
        _write_manifest(args, [args.out, getattr(args, "json", None)], started)
        return code
    except FilterError as exc:
        print(f"rasc: filter error: {exc}", file=sys.stderr)
        return EXIT_FILTER
    except (ParameterError, InputError) as exc:
        print(f"rasc: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"rasc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
