"""Command-line interface.

Subcommands: window-check, frame-check, simulate, ustat, bound, experiment,
rates.  ``experiment`` reads a flat key=value config file (see
harness.load_config) with --config/--seed/--workers/--out overrides and
writes a CSV (one row per grid configuration) plus a JSON summary; both are
byte-identical across reruns with the same config and seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from . import __version__, bounds, frame, harness, harmonics, pointprocess, ustat


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_density_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=int, default=1, help="torus dimension")
    p.add_argument("--scale", "-B", dest="B", type=float, default=2.0, help="scale parameter B")
    p.add_argument("--alpha", type=float, default=2.0, help="coefficient decay exponent")
    p.add_argument("--condition", choices=("cond1", "cond2"), default="cond1")
    p.add_argument("--c", type=float, default=None, help="coefficient scale (default: positivity rule)")
    p.add_argument("--bandlimit", type=int, default=None, help="per-coordinate frequency cutoff")


def _density_from_args(args, j_max: int) -> harmonics.HarmonicDensity:
    bl = args.bandlimit or harness.required_bandlimit(args.B, j_max)
    return harmonics.make_density(
        args.q, args.alpha, bl, condition=args.condition, c=args.c
    )


def cmd_window_check(args) -> int:
    w = frame.build_window(args.B, resolution=args.resolution)
    xs = np.concatenate(
        [np.linspace(1e-6, 1.0 / args.B - 1e-12, 5000), np.linspace(args.B + 1e-12, 4 * args.B, 5000)]
    )
    cs = np.exp(np.linspace(np.log(1 + 1e-6), np.log(args.B**args.jmax), 512))
    report = {
        "B": args.B,
        "resolution": args.resolution,
        "support_max_outside": float(np.max(np.abs(w.b(xs)))),
        "partition_of_unity_max_abs_error": frame.partition_residual(w, cs, j_max=args.jmax + 8),
        "b_at_1": float(w.b(1.0)),
    }
    _emit(report, args.out)
    return 0


def cmd_frame_check(args) -> int:
    w = frame.build_window(args.B)
    report = frame.frame_check(args.q, args.B, args.j, window=w)
    _emit(report, args.out)
    return 0


def cmd_simulate(args) -> int:
    f = _density_from_args(args, args.j)
    s1, s2 = pointprocess.sample_pair(f, f, args.budget, args.seed, replica=args.replica)
    pointprocess.save_points([s1, s2], args.out)
    sys.stderr.write(f"wrote {s1.count + s2.count} points to {args.out}\n")
    return 0


def cmd_ustat(args) -> int:
    f = _density_from_args(args, args.j)
    fr = frame.build_frame(args.q, args.B, args.j, frame.build_window(args.B))
    samples = pointprocess.load_points(args.samples, budget=args.budget)
    if len(samples) != 2:
        raise SystemExit(f"expected labels 1 and 2 in {args.samples}")
    res = ustat.ustat_summary(fr, f, args.budget, samples[0], samples[1])
    _emit(res.as_dict(), args.out)
    return 0


def cmd_bound(args) -> int:
    report = bounds.make_bound_report(
        args.q, args.B, args.j, args.budget, args.alpha,
        condition=args.condition, c=args.c, method=args.method,
    )
    _emit(report.as_dict(), args.out)
    return 0


def cmd_experiment(args) -> int:
    if args.config:
        cfg = harness.load_config(args.config)
    else:
        cfg = harness.ExperimentConfig(
            q=args.q, B=args.B, alpha=args.alpha, condition=args.condition, c=args.c,
            j_values=args.j, budgets=args.budget, replicas=args.replicas,
            bandlimit=args.bandlimit, alpha2=args.alpha2, c2=args.c2,
        )
    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.out is not None:
        overrides["out"] = args.out
    if args.plots:
        overrides["plots"] = True
    if overrides:
        cfg = replace(cfg, **overrides)

    report = harness.run_experiment(cfg)
    prefix = cfg.out or "experiment"
    harness.write_csv(report, f"{prefix}.csv")
    harness.write_json(report, f"{prefix}.json")
    written = [f"{prefix}.csv", f"{prefix}.json"]
    if cfg.plots:
        written += harness.make_plots(report, prefix)
    sys.stderr.write("wrote " + " ".join(written) + "\n")
    return 0


def cmd_rates(args) -> int:
    rows = []
    with open(args.csv, "r", encoding="utf-8") as fh:
        import csv as _csv

        for row in _csv.DictReader(fh):
            rows.append({k: float(v) for k, v in row.items()})
    sweep_key = "j" if args.axis == "j" else "budget"
    fixed_key = "budget" if args.axis == "j" else "j"
    out = {"axis": args.axis, "quantity": args.quantity, "fits": []}
    for fixed in sorted({row[fixed_key] for row in rows}):
        sel = [row for row in rows if row[fixed_key] == fixed]
        if len(sel) < 3:
            continue
        sweep = np.array([row[sweep_key] for row in sel])
        ys = np.array([row[args.quantity] for row in sel])
        xs = sweep * np.log(sel[0]["B"]) if args.axis == "j" else np.log(sweep)
        fit = harness.rate_regression(xs, ys)
        fit[fixed_key] = fixed
        out["fits"].append(fit)
    if not out["fits"]:
        raise SystemExit("need at least 3 configurations along the swept axis")
    _emit(out, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="needletest",
        description="Needlet frames on tori and two-sample Poisson testing",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("window-check", help="window function invariant report")
    p.add_argument("-B", dest="B", type=float, default=2.0)
    p.add_argument("--resolution", type=int, default=4096)
    p.add_argument("--jmax", type=int, default=8)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_window_check)

    p = sub.add_parser("frame-check", help="frame invariant report (JSON)")
    p.add_argument("--q", type=int, default=1)
    p.add_argument("-B", dest="B", type=float, default=2.0)
    p.add_argument("-j", type=_parse_int_list, default=(2, 3, 4), help="comma-separated levels")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_frame_check)

    p = sub.add_parser("simulate", help="draw one labeled sample pair to a text file")
    _add_density_args(p)
    p.add_argument("-j", type=int, default=3, help="level used to size the bandlimit")
    p.add_argument("--budget", type=float, required=True, help="expected points per copy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replica", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ustat", help="statistic for a sample file (JSON)")
    _add_density_args(p)
    p.add_argument("-j", type=int, required=True)
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--samples", required=True, help="file written by simulate")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ustat)

    p = sub.add_parser("bound", help="contraction norms and bound report (JSON)")
    _add_density_args(p)
    p.add_argument("-j", type=int, required=True)
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--method", choices=("auto", "brute", "convolution"), default="auto")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("experiment", help="Monte Carlo sweep; writes CSV + JSON")
    _add_density_args(p)
    p.add_argument("-j", type=_parse_int_list, default=(3,), help="comma-separated levels")
    p.add_argument("--budget", type=_parse_float_list, default=(2000.0,), help="comma-separated budgets")
    p.add_argument("--replicas", type=int, default=2000)
    p.add_argument("--alpha2", type=float, default=None, help="alternative decay for power runs")
    p.add_argument("--c2", type=float, default=None)
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None, help="output path prefix")
    p.add_argument("--plots", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("rates", help="slope fits over an experiment CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--axis", choices=("j", "budget"), required=True)
    p.add_argument("--quantity", default="prop_bound", help="CSV column to regress")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rates)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
