"""Command-line front end: parse a scenario config, run an experiment, emit
CSV/JSON artifacts.

Exit codes: 0 success, 2 usage or config problem, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, detectors, harness, model, theory, throughput
from .model import ConfigError
from .numerics import NumericalError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _default_seed():
    env = os.environ.get("COVERTSIM_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"COVERTSIM_SEED must be an integer, got {env!r}") from exc
    return 0


def _load(config_path):
    try:
        scenario = model.load_scenario(config_path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
    with open(config_path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    return scenario, digest


def _manifest(out_dir, command, scenario, seed, digest, outputs, extra=None):
    data = {
        "command": command,
        "scenario": scenario.to_dict(),
        "seed": seed,
        "tool_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config_sha256": digest,
        "outputs": sorted(os.path.basename(p) for p in outputs),
    }
    if extra:
        data.update(extra)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2)
    return path


def _parse_n_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad n list {text!r}: {exc}") from exc
    if not values:
        raise ConfigError("n list is empty")
    return sorted(values)


def _add_common(p):
    p.add_argument("config", help="scenario config (JSON)")
    p.add_argument("--seed", type=int, default=None,
                   help="run seed (default: COVERTSIM_SEED env or 0)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel trial workers (does not change results)")


def cmd_covertness(args):
    scenario, digest = _load(args.config)
    n_list = _parse_n_list(args.n_list) if args.n_list else [scenario.slots.n]
    curve = harness.covertness_curve(
        scenario, args.eps, n_list, args.trials, args.seed, workers=args.workers
    )
    out_csv = os.path.join(args.out, "curve.csv")
    harness.write_curve_csv(out_csv, curve)
    _manifest(args.out, "covertness", scenario, args.seed, digest, [out_csv],
              extra={"epsilon": args.eps, "trials": args.trials, "P_f": curve.scenario["P_f"]})
    for row in curve.rows:
        print(f"n={row.n}: min(P_FA+P_MD)={row.min_sum:.4f} "
              f"[{row.ci_lo:.4f}, {row.ci_hi:.4f}] at threshold {row.threshold:.6g}")
    return EXIT_OK


def cmd_roc(args):
    scenario, digest = _load(args.config)
    cfg = detectors.config_for_scenario(scenario)
    ss = harness.collect_statistics(scenario, cfg, args.trials, args.seed,
                                    workers=args.workers)
    pooled = np.unique(np.concatenate([ss.stats_h0, ss.stats_h1]))
    if len(pooled) > args.grid_points:
        idx = np.linspace(0, len(pooled) - 1, args.grid_points).astype(int)
        grid = pooled[idx]
    else:
        grid = pooled
    rates = harness.sweep_thresholds(
        scenario, cfg, grid, args.trials, args.seed, workers=args.workers
    )
    out_csv = os.path.join(args.out, "roc.csv")
    harness.write_roc_csv(out_csv, rates)
    _manifest(args.out, "roc", scenario, args.seed, digest, [out_csv],
              extra={"trials": args.trials, "statistic": ss.kind})
    print(f"wrote {len(rates)} operating points to {out_csv}")
    return EXIT_OK


def _check_report(scenario, grid_points):
    cfg = detectors.config_for_scenario(scenario)
    sa = float(np.asarray(cfg.sigma_a2))
    if sa <= 0:
        raise ConfigError("structural checks need a positive signal power (set P_f > 0)")
    zeta, sw2 = cfg.zeta, cfg.sigma_w2
    results = {}

    grid_theta = np.linspace(1e-6 * zeta, sa + zeta * 1.5, 1501)
    results["lr_order_uniform_window"] = theory.check_lr_order(
        theory.uniform_logdensity(0.0, zeta),
        theory.uniform_logdensity(sa, sa + zeta),
        grid_theta,
    )
    grid_exp = np.linspace(1e-6 * zeta, 10.0 * zeta + sa, 1501)
    results["lr_order_shifted_exponential"] = theory.check_lr_order(
        theory.shifted_exponential_logdensity(0.0, zeta),
        theory.shifted_exponential_logdensity(sa, zeta),
        grid_exp,
    )
    grid_z = np.linspace(1e-3, 40.0, 1501)
    results["lr_order_gamma_scales"] = theory.check_lr_order(
        theory.gamma_logdensity(4.0, sw2),
        theory.gamma_logdensity(4.0, sw2 + sa + 0.5 * zeta),
        grid_z,
    )
    control = theory.check_lr_order(
        theory.gaussian_logdensity(0.0, 1.0),
        theory.gaussian_logdensity(0.0, 4.0),
        np.linspace(-6.0, 6.0, 1201),
    )
    results["lr_order_gaussian_control_fails"] = theory.LrOrderReport(
        passed=not control.passed,
        worst_violation=control.worst_violation,
        worst_at=control.worst_at,
        points_checked=control.points_checked,
        tol=control.tol,
    )

    grid = theory.GridSpec(points=grid_points)
    for rep in theory.check_lrt_monotone(cfg, grid):
        results[f"lrt_monotone_axis{rep.axis}"] = rep
    return cfg, results


def cmd_check(args):
    scenario, digest = _load(args.config)
    cfg, results = _check_report(scenario, args.grid_points)
    report = {}
    all_pass = True
    for name, rep in results.items():
        passed = bool(rep.passed)
        all_pass &= passed
        report[name] = {
            "passed": passed,
            "worst_violation": None if rep.worst_violation is None
            else float(rep.worst_violation),
            "worst_at": None if rep.worst_at is None else float(rep.worst_at),
        }
        print(f"{name}: {'PASS' if passed else 'FAIL'}"
              f" (worst {rep.worst_violation:.3e})")
    out_json = os.path.join(args.out, "check.json")
    with open(out_json, "w", encoding="utf-8") as fh:
        json.dump({"variant": cfg.variant, "checks": report}, fh, indent=2)
    _manifest(args.out, "check", scenario, args.seed, digest, [out_json])
    if not all_pass:
        raise NumericalError("one or more structural checks failed")
    return EXIT_OK


def cmd_boundary(args):
    scenario, digest = _load(args.config)
    cfg = detectors.config_for_scenario(scenario)
    if cfg.variant != detectors.MBLOCK_PRODUCT:
        raise ConfigError("boundary mass needs a multi-block fading config (M > 1)")
    delta = args.delta
    if delta is None:
        delta = theory.delta_for_boundary_mass(args.eps, cfg.M, cfg.zeta)
    region = theory.estimate_boundary_mass(
        cfg, delta, cfg.log_gamma, args.draws, args.seed, keep_draws=True
    )
    out_csv = os.path.join(args.out, "boundary.csv")
    header = ["draw"] + [f"x{m + 1}" for m in range(cfg.M)] + ["in_region"]
    rows = [
        (i, *[float(v) for v in region.draw_x[i]], int(region.draw_in_region[i]))
        for i in range(len(region.draw_x))
    ]
    harness.write_csv(out_csv, header, rows)
    out_json = os.path.join(args.out, "boundary.json")
    with open(out_json, "w", encoding="utf-8") as fh:
        json.dump({
            "M": region.M, "n": region.n, "delta": region.delta,
            "log_gamma": region.log_gamma, "draws": region.draws,
            "failures": region.failures, "mass": region.mass,
            "ci": list(region.ci), "analytic_bound": region.analytic_bound,
            "spot_checks": region.spot_checks,
            "spot_mismatches": region.spot_mismatches,
        }, fh, indent=2)
    _manifest(args.out, "boundary", scenario, args.seed, digest,
              [out_csv, out_json], extra={"delta": delta, "draws": args.draws})
    print(f"boundary mass {region.mass:.4f} "
          f"[{region.ci[0]:.4f}, {region.ci[1]:.4f}], bound {region.analytic_bound:.4f}")
    return EXIT_OK


def cmd_capacity(args):
    scenario, digest = _load(args.config)
    if args.pf_list:
        try:
            pf_values = [float(v) for v in args.pf_list.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad P_f list {args.pf_list!r}") from exc
    else:
        pf_values = [scenario.P_f]
    n = args.n if args.n else scenario.slots.n
    rows = []
    for pf in pf_values:
        sc = model.with_updates(scenario, P_f=pf)
        rate = throughput.outage_capacity(sc, args.outage, args.samples, args.seed)
        rows.append((pf, sc.jammer.power, args.outage, rate,
                     throughput.covert_bits(n, rate)))
    out_csv = os.path.join(args.out, "capacity.csv")
    harness.write_csv(out_csv, ["P_f", "P_j", "outage_prob", "R", "bits"], rows)
    _manifest(args.out, "capacity", scenario, args.seed, digest, [out_csv],
              extra={"samples": args.samples, "n": n})
    for pf, pj, q, rate, bits in rows:
        print(f"P_f={pf:g}: R={rate:.6g} bits/symbol, {bits} bits in n={n}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="covertsim",
        description="Covert communication simulations with an uninformed jammer",
    )
    parser.add_argument("--version", action="version", version=f"covertsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("covertness", help="best-detector error sums across slot lengths")
    _add_common(p)
    p.add_argument("--eps", type=float, default=0.1, help="covertness target")
    p.add_argument("--n-list", default=None, help="comma-separated slot lengths")
    p.add_argument("--trials", type=int, default=harness.DEFAULT_TRIALS,
                   help="Monte Carlo trials per hypothesis")
    p.set_defaults(fn=cmd_covertness)

    p = sub.add_parser("roc", help="threshold sweep on a shared sample set")
    _add_common(p)
    p.add_argument("--trials", type=int, default=harness.DEFAULT_TRIALS)
    p.add_argument("--grid-points", type=int, default=101,
                   help="operating points (quantiles of the pooled statistics)")
    p.set_defaults(fn=cmd_roc)

    p = sub.add_parser("check", help="likelihood-ratio order and monotonicity checks")
    _add_common(p)
    p.add_argument("--grid-points", type=int, default=400,
                   help="grid resolution for the monotonicity scan")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("boundary", help="decision-boundary neighborhood mass (M > 1)")
    _add_common(p)
    p.add_argument("--eps", type=float, default=0.1,
                   help="target mass; sets delta = eps*zeta/(2M) unless --delta")
    p.add_argument("--delta", type=float, default=None, help="explicit half-width")
    p.add_argument("--draws", type=int, default=10_000)
    p.set_defaults(fn=cmd_boundary)

    p = sub.add_parser("capacity", help="outage capacity and covert bit counts")
    _add_common(p)
    p.add_argument("--outage", type=float, default=0.05)
    p.add_argument("--samples", type=int, default=100_000, help="fading draws")
    p.add_argument("--pf-list", default=None, help="comma-separated transmit powers")
    p.add_argument("--n", type=int, default=None, help="slot length for the bit count")
    p.set_defaults(fn=cmd_capacity)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        os.makedirs(args.out, exist_ok=True)
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
