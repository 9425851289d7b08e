"""Command-line front end: ``bicm4d <subcommand> ...``.

Every file is first written as ``<path>.partial`` and renamed once the
computation has finished, so a complete-looking file is always complete.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from bicm4d import constellation as cons
from bicm4d import labeling, ldpc, rates, simulation
from bicm4d._backend import BACKEND

log = logging.getLogger("bicm4d")


class UsageError(Exception):
    pass


def parse_grid(text):
    """``start:stop:step`` (stop included) or a comma-separated list, in dB."""
    text = (text or "").strip()
    if not text:
        raise UsageError("empty SNR grid")
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
                raise UsageError(f"bad grid {text!r}; expected start:stop:step with step > 0")
            n = int(np.floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1
            vals = np.round(parts[0] + parts[2] * np.arange(n), 10)
        else:
            vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}") from None
    if len(vals) == 0:
        raise UsageError("empty SNR grid")
    return [float(v) for v in vals]


def _constellation(args, name=None):
    f = getattr(args, "constellation_file", None)
    if f and name is None:
        return cons.load_constellation(f)
    try:
        return cons.builtin(name or args.constellation)
    except KeyError as e:
        raise UsageError(e.args[0]) from None


def _names(args):
    if getattr(args, "constellations", None):
        return [s.strip() for s in args.constellations.split(",") if s.strip()]
    return [None]


def write_atomic(path, text):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".partial")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _emit(args, text):
    if args.output:
        write_atomic(args.output, text)
        log.info("wrote %s", args.output)
    else:
        sys.stdout.write(text)


def _log_config(args):
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    cfg["backend"] = BACKEND
    log.info("config %s", json.dumps(cfg, sort_keys=True, default=str))


# --- subcommands -----------------------------------------------------------------

def cmd_info(args):
    out = {}
    if args.code:
        h = ldpc.resolve_code(args.code)
        out["code"] = {"name": h.name, "n": h.n, "k": h.k, "checks": h.checks, "rank": h.rank,
                       "rate": h.rate, "col_degrees": sorted(set(h.col_degrees.tolist())),
                       "row_degrees": sorted(set(h.row_degrees.tolist())), "edges": int(len(h.edge_var))}
    if args.constellation or args.constellation_file:
        c = _constellation(args)
        d = {"name": c.name, "M": c.M, "m": c.m, "dims": c.dims, "energy": c.energy,
             "min_squared_distance": cons.min_squared_distance(c),
             "gray_cartesian": c.pam is not None}
        if c.dims == 4 and c.m in (4, 8):
            ref = cons.builtin("pm-qpsk" if c.m == 4 else "pm-16qam")
            d["asymptotic_gain_db_vs_" + ref.name] = cons.asymptotic_gain_db(c, ref)
        if args.labels:
            d["labels"] = c.label_strings()
        out["constellation"] = d
    if not out:
        out = {"backend": BACKEND, "constellations": list(cons.SHIPPED), "codes": list(ldpc.SHIPPED_CODES)}
    _emit(args, json.dumps(out, indent=2) + "\n")


def cmd_rates(args):
    grid = parse_grid(args.es_n0)
    curves = []
    for name in _names(args):
        c = _constellation(args, name)
        log.info("rates for %s (%s)", c.name, args.method)
        curves.append(rates.rate_curve(c, grid, args.method, args.order, int(args.samples), args.seed))
    if args.format == "json":
        text = json.dumps([{"name": cv.name, "m": cv.m, "csv": cv.to_csv()} for cv in curves], indent=2) + "\n"
    elif len(curves) == 1:
        text = curves[0].to_csv()
    else:
        text = "".join(f"# {cv.name}\n{cv.to_csv()}" for cv in curves)
    _emit(args, text)


def cmd_capacity(args):
    grid = parse_grid(args.es_n0)
    cap = rates.shannon_capacity(np.array(grid), args.dims)
    rows = ["es_n0_db,eb_n0_db,capacity"]
    rows += [f"{s!r},{float(rates.shannon_eb_n0_db(r, args.dims))!r},{float(r)!r}" for s, r in zip(grid, cap)]
    _emit(args, "\n".join(rows) + "\n")


def cmd_ber(args):
    if not args.code:
        raise UsageError("--code is required (alist path or shipped code name)")
    try:
        code = ldpc.resolve_code(args.code)
    except (FileNotFoundError, KeyError) as e:
        raise UsageError(f"--code: {e}") from None
    grid = parse_grid(args.es_n0)
    names = _names(args)
    if len(names) > 1 and not args.output:
        raise UsageError("--output (a directory) is required with --constellations")
    for name in names:
        c = _constellation(args, name)
        cfg = simulation.SimConfig(c, code, tuple(grid), args.demapper, args.max_blocks, args.min_errors,
                                   args.iterations, args.seed, args.threads)
        log.info("ber %s", json.dumps(cfg.echo(), default=str))
        res = simulation.run_ber(cfg, progress=lambda p: log.info(
            "Es/N0 %.2f dB: %d blocks, %d errors, BER %.3e", p.es_n0_db, p.blocks, p.bit_errors, p.ber))
        # every constellation uses the same master seed (common random numbers)
        res.config["seed_derivation"] = "all constellations share the master seed"
        text = res.to_json() + "\n" if args.format == "json" else res.to_csv()
        if len(names) > 1:
            out = Path(args.output) / f"{c.name}.{args.format}"
            write_atomic(out, text)
            if args.format == "csv":
                write_atomic(out.with_suffix(".json"), res.to_json() + "\n")
            log.info("wrote %s", out)
        else:
            _emit(args, text)
            if args.output and args.format == "csv":
                write_atomic(str(args.output) + ".json", res.to_json() + "\n")


def cmd_label_opt(args):
    if args.restarts < 1:
        raise UsageError("--restarts must be >= 1")
    c = _constellation(args)
    targets = parse_grid(args.targets)
    cfg = labeling.LabelingSearchConfig(tuple(targets), args.search_order, args.final_order,
                                        args.restarts, args.max_passes, args.epsilon, args.seed)
    res = labeling.optimize_labeling(c, cfg, name=c.name, workers=args.threads)
    report = {
        "constellation": c.name, "config": {**vars(cfg), "targets_db": list(cfg.targets_db)},
        "objective": res.objective,
        "restarts": [{"index": r.index, "objective": r.objective, "swaps": len(r.history) - 1}
                     for r in res.restarts],
        "labels": res.constellation.label_strings(),
    }
    if args.output:
        tmp = Path(args.output)
        part = tmp.with_name(tmp.name + ".partial")
        cons.save_constellation(res.constellation, part)
        os.replace(part, tmp)
        write_atomic(args.report or str(tmp) + ".json", json.dumps(report, indent=2) + "\n")
        log.info("wrote %s", tmp)
    else:
        sys.stdout.write(json.dumps(report, indent=2) + "\n")


def cmd_crossing(args):
    names = _names(args)
    if len(names) != 2:
        raise UsageError("--constellations needs exactly two names")
    grid = parse_grid(args.es_n0)
    a, b = (rates.rate_curve(cons.builtin(n), grid, order=args.order) for n in names)
    r = rates.find_crossing(a, b, args.which)
    out = {"a": names[0], "b": names[1], "which": args.which, "crossing_rate": r}
    if r is not None:
        es = rates.es_n0_at_rate(a, r, args.which)
        out["es_n0_db"] = es
        out["eb_n0_db"] = None if es is None else float(rates.eb_n0_db(es, r))
    _emit(args, json.dumps(out, indent=2) + "\n")


# --- parser ----------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="bicm4d", description="MI/GMI and coded BER tools for 4-D BICM")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    default_grid = f"{rates.DEFAULT_GRID[0]}:{rates.DEFAULT_GRID[-1]}:0.25"

    def common(sp, constellation=True, multi=False):
        sp.add_argument("--output", "-o", help="output path (stdout if omitted)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=simulation.default_workers())
        if constellation:
            sp.add_argument("--constellation", default="pm-qpsk")
            sp.add_argument("--constellation-file")
        if multi:
            sp.add_argument("--constellations", help="comma-separated built-in names")

    sp = sub.add_parser("info", help="describe a constellation or code")
    common(sp)
    sp.set_defaults(constellation=None)
    sp.add_argument("--code")
    sp.add_argument("--labels", action="store_true")
    sp.set_defaults(func=cmd_info)

    sp = sub.add_parser("rates", help="MI/GMI curve")
    common(sp, multi=True)
    sp.add_argument("--es-n0", default=default_grid)
    sp.add_argument("--method", choices=("quadrature", "montecarlo"), default="quadrature")
    sp.add_argument("--order", type=int, default=rates.DEFAULT_ORDER)
    sp.add_argument("--samples", type=float, default=1e6)
    sp.set_defaults(func=cmd_rates)

    sp = sub.add_parser("capacity", help="Shannon capacity of the N-dim AWGN channel")
    common(sp, constellation=False)
    sp.add_argument("--es-n0", default=default_grid)
    sp.add_argument("--dims", type=int, default=4)
    sp.set_defaults(func=cmd_capacity)

    sp = sub.add_parser("ber", help="coded BER simulation")
    common(sp, multi=True)
    sp.add_argument("--code", help="alist path or shipped code name")
    sp.add_argument("--es-n0", default="0:6:0.5")
    sp.add_argument("--demapper", choices=("exact", "maxlog", "factorized"), default="exact")
    sp.add_argument("--max-blocks", type=int, default=1000)
    sp.add_argument("--min-errors", type=int, default=100)
    sp.add_argument("--iterations", type=int, default=ldpc.DEFAULT_ITERATIONS)
    sp.set_defaults(func=cmd_ber)

    sp = sub.add_parser("label-opt", help="GMI-driven labeling search")
    common(sp)
    sp.add_argument("--targets", default="2,4,6,8,10", help="target Es/N0 values (dB)")
    sp.add_argument("--restarts", type=int, default=3)
    sp.add_argument("--max-passes", type=int, default=1000)
    sp.add_argument("--epsilon", type=float, default=1e-5)
    sp.add_argument("--search-order", type=int, default=6)
    sp.add_argument("--final-order", type=int, default=rates.DEFAULT_ORDER)
    sp.add_argument("--report", help="JSON report path (default: <output>.json)")
    sp.set_defaults(func=cmd_label_opt)

    sp = sub.add_parser("crossing", help="rate at which two MI or GMI curves cross")
    common(sp, constellation=False, multi=True)
    sp.set_defaults(constellations="c4_16,so-pm-qpsk")
    sp.add_argument("--which", choices=("gmi", "mi"), default="gmi")
    sp.add_argument("--es-n0", default=default_grid)
    sp.add_argument("--order", type=int, default=rates.DEFAULT_ORDER)
    sp.set_defaults(func=cmd_crossing)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    _log_config(args)
    try:
        args.func(args)
    except UsageError as e:
        parser.error(str(e))
    except (cons.ConstellationError, ldpc.AlistError, FileNotFoundError, ValueError) as e:
        print(f"bicm4d: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
