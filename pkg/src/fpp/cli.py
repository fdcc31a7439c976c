"""Command-line entry point: ``fpp <command> ...``."""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import harness
from .brw_cox import (
    DEFAULT_DEPTH,
    extinction_probability,
    limit_min_law,
    sample_cox,
    sample_w_pairs,
    simulate_W,
)
from .chen_stein import soundness_sweep
from .constants import ModelConstants
from .distributions import parse_distribution
from .errors import ConfigError, FPPError, InvalidParameter
from .renewal import IntensityMeasure, Window, estimate_V, intensity_mass, ratio_check

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3


def _model(args):
    dist = parse_distribution(args.dist)
    return dist, ModelConstants.from_distribution(dist, args.lam)


def _add_model(p):
    p.add_argument("--dist", default="gaussian(2,1)", help="weight law, e.g. exponential(1)")
    p.add_argument("--lam", "--lambda", dest="lam", type=float, default=2.0, help="mean degree")


def _add_window(p):
    p.add_argument("--x-hi", type=float, default=0.0)
    p.add_argument("--x-lo", type=float, default=-math.inf)
    p.add_argument("--h-lo", type=float, default=-math.inf)
    p.add_argument("--h-hi", type=float, default=math.inf)


def _window(args) -> Window:
    return Window(x_hi=args.x_hi, x_lo=args.x_lo, h_lo=args.h_lo, h_hi=args.h_hi)


def cmd_simulate(args) -> int:
    try:
        cfg = harness.ExperimentConfig.load(args.config)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.output:
        cfg.output = args.output
    records = harness.run_trials(cfg, workers=args.workers)
    out = cfg.output or f"records.{cfg.format}"
    paths = harness.emit_outputs(records, out, cfg.format, cfg.plot_spec)
    rate = harness.budget_failure_rate(records)
    counts = harness.gated_counts(records, "drop")
    print(f"trials: {len(records)}  written: {', '.join(paths)}")
    print(f"mean gated count: {counts.mean() if counts.size else float('nan'):.6g}  budget failures: {rate:.2%}")
    return EXIT_BUDGET if rate > 0.01 else EXIT_OK


def cmd_constants(args) -> int:
    dist, k = _model(args)
    d = k.as_dict()
    if args.format == "json":
        print(json.dumps(d, indent=1, sort_keys=True))
    else:
        for key, v in d.items():
            print(f"{key:>12} = {v!r}")
    return EXIT_OK


def cmd_renewal(args) -> int:
    dist, k = _model(args)
    rng = np.random.default_rng(args.seed)
    if args.ln_n is not None:
        r = ratio_check(k, dist, args.ln_n, args.x, args.h, args.reps, rng)
        print(f"ratio(ln n={args.ln_n}, x={args.x}, h={args.h}) = {r:.6f}")
        return EXIT_OK
    est = estimate_V(k, dist, args.x, args.reps, rng)
    print(f"V({args.x}) = {est.value:.8g} +- {est.stderr:.3g}")
    print(f"V(x) e^(-alpha x) = {est.scaled_value:.8g} +- {est.scaled_stderr:.3g}  (gamma = {k.gamma:.8g})")
    if est.truncation_flag:
        print("warning: some trajectories were truncated", file=sys.stderr)
    return EXIT_OK


def cmd_brw(args) -> int:
    dist, k = _model(args)
    rng = np.random.default_rng(args.seed)
    if args.pairs:
        pairs = sample_w_pairs(args.lam, dist, k.alpha, args.reps, rng, args.depth)
        if args.out:
            harness.write_wpairs(pairs, args.out)
        else:
            for a, b in pairs:
                print(f"{a:.17g} {b:.17g}")
        return EXIT_OK
    vals = np.array([simulate_W(args.lam, dist, k.alpha, args.depth, rng).value for _ in range(args.reps)])
    se = vals.std(ddof=1) / math.sqrt(vals.size) if vals.size > 1 else 0.0
    print(f"depth {args.depth}: mean W = {vals.mean():.6f} +- {se:.6f}; P(W = 0) = {(vals == 0).mean():.4f}")
    if args.lam > 1:
        print(f"extinction probability = {extinction_probability(args.lam):.12f}")
    return EXIT_OK


def cmd_cox(args) -> int:
    dist, k = _model(args)
    rng = np.random.default_rng(args.seed)
    im = IntensityMeasure(k)
    window = _window(args)
    if args.wpairs:
        pairs = harness.read_wpairs(args.wpairs)
    else:
        pairs = sample_w_pairs(args.lam, dist, k.alpha, args.draws, rng)
    print(f"Lambda(window) = {intensity_mass(im, window):.8g}")
    for pair in pairs[: args.draws]:
        s = sample_cox(im, pair, window, rng)
        pts = " ".join(f"({x:.4f},{h:.4f})" for x, h in s.points)
        print(f"W={pair[0]:.6g} Wt={pair[1]:.6g} count={s.count} {pts}")
    lm = limit_min_law(im, pairs, rng)
    if not lm.empty:
        print(f"limit minimum: mean X* = {lm.x_star.mean():.6f} over {lm.x_star.size} connected pairs")
    return EXIT_OK


def cmd_stein_demo(args) -> int:
    rng = np.random.default_rng(args.seed)
    res = soundness_sweep(rng, args.families, args.max_m)
    print(f"families: {res.families}  violations: {res.violations}  smallest slack: {res.worst_slack:.6g}")
    return EXIT_OK if res.violations == 0 else 1


def cmd_compare(args) -> int:
    dist, k = _model(args)
    window = _window(args)
    records = harness.load_records(args.records)
    if args.wpairs == "graph":
        pairs = harness.graph_w_pairs(records)
    else:
        pairs = harness.read_wpairs(args.wpairs)
    rows = []
    for mode in ("drop", "holds"):
        counts = harness.gated_counts(records, mode)
        K = int(counts.max()) + 5 if counts.size else 5
        pmf = harness.reference_pmf(k, window, pairs, K)
        rows.append((mode, counts.size, harness.tv_counts(counts, pmf, K)))
    for mode, size, tv in rows:
        label = "unverified dropped" if mode == "drop" else "unverified as holds"
        print(f"TV ({label}, {size} trials) = {tv:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fpp", description="First-passage percolation on sparse random graphs")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a seeded batch of graph trials")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--workers", type=int)
    p.add_argument("--output", help="override the output path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("constants", help="print alpha, gamma, beta, s* and friends")
    _add_model(p)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("renewal", help="estimate the renewal function")
    _add_model(p)
    p.add_argument("--x", type=float, default=8.0)
    p.add_argument("--reps", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ln-n", type=float, help="report the hop-restricted ratio instead")
    p.add_argument("--h", type=float, default=math.inf)
    p.set_defaults(func=cmd_renewal)

    p = sub.add_parser("brw", help="simulate the branching random walk martingale")
    _add_model(p)
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pairs", action="store_true", help="emit independent (W, W~) pairs")
    p.add_argument("--out", help="file for --pairs output")
    p.set_defaults(func=cmd_brw)

    p = sub.add_parser("cox", help="sample the limiting Cox process in a window")
    _add_model(p)
    _add_window(p)
    p.add_argument("--wpairs", help="file of 'W Wt' lines; sampled from trees if absent")
    p.add_argument("--draws", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_cox)

    p = sub.add_parser("stein-demo", help="check the Chen-Stein bound on random exact families")
    p.add_argument("--families", type=int, default=1000)
    p.add_argument("--max-m", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_stein_demo)

    p = sub.add_parser("compare", help="TV distance of recorded counts to the mixed-Poisson law")
    _add_model(p)
    _add_window(p)
    p.add_argument("--records", required=True)
    p.add_argument("--wpairs", required=True, help="file of 'W Wt' lines, or 'graph' for measured pairs")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidParameter) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FPPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
