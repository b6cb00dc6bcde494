"""Command-line entry points.

Subcommands: simulate, verify-kernel, verify-bounds, bounds-lab, scan,
report.  Configuration is a single JSON document (see
experiments.DEFAULT_CONFIG for every key and its default); each run echoes
its resolved config into meta.json, and `report` regenerates plots and
verdict JSON from a persisted run directory without re-simulating.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, experiments, plots
from .solver import load_meta, load_norm_series


def _cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    outdir = Path(args.output or cfg.output_dir)
    traj = experiments.run_experiment(cfg, outdir=outdir)
    meta = traj.meta
    print(f"run complete: termination={meta['termination']}, "
          f"steps={meta['steps_taken']}, elapsed={meta['elapsed_seconds']:.1f}s")
    print(f"wrote {outdir}/norms.csv, {outdir}/meta.json, "
          f"{len(traj.snapshots)} snapshots")
    if meta["guards"]["boundary_shell_warning"]:
        print("warning: boundary-contamination guard tripped at "
              f"t={meta['guards']['boundary_shell_first_violation']}")
    return 0


def _cmd_verify_kernel(args) -> int:
    times = np.geomspace(args.t_min, args.t_max, args.num_times)
    cases = []
    for spec in args.case:
        order_s, p_s = spec.split(":")
        cases.append((int(order_s), p_s if p_s == "inf" else float(p_s)))
    rows = experiments.kernel_scaling_suite(
        args.dimension, args.points, args.box_length, cases, times
    )
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    for row in rows:
        name = f"kernel_d{row['d']}_n{row['n']}_p{row['p']}"
        with open(outdir / f"{name}.json", "w") as fh:
            json.dump(row, fh, indent=2)
        slope, intercept = np.polyfit(np.log(row["times"]), np.log(row["norms"]), 1)
        plots.render_loglog_fit(row["times"], row["norms"], slope, intercept,
                                name, outdir / f"{name}.svg")
        print(f"{name}: fitted {row['fitted_slope']:+.4f} "
              f"theory {row['theoretical_slope']:+.4f} "
              f"mass[0]={row['masses'][0]:.12f}")
    return 0


def _cmd_verify_bounds(args) -> int:
    report = experiments.verify_bounds_on_dir(args.rundir, theta=args.theta)
    outpath = Path(args.rundir) / "bounds_report.json"
    with open(outpath, "w") as fh:
        json.dump(report, fh, indent=2, default=float)
    g = report["gradient_bounds"]
    print(f"gradient bounds: {g['verdict']} "
          f"(compensated ratio {g['compensated_ratio']:.3f} <= {g['thresholds']['compensated_ratio']}, "
          f"lp ratio {g['lp_ratio']:.3f})")
    print(f"interpolated decay: {report['interpolated_decay']['verdict']} "
          f"(slope {report['interpolated_decay']['slope']:+.3f})")
    for name, fit in report["growth"].items():
        print(f"growth {name}: {fit['verdict']} (slope {fit['slope']:+.3f} "
              f"bound {fit['theoretical_slope']:+.3f}+0.05)")
    coars = report["coarseness"]
    if "skipped" in coars:
        print(f"coarseness: {coars['skipped']}")
    else:
        print(f"coarseness: {coars['fit']['verdict']} "
              f"(slope {coars['fit']['slope']:+.3f} bound {coars['bound_slope']:+.3f}+0.05)")
        print(coars["chain_text"])
    print(f"wrote {outpath}")
    return 0


def _cmd_bounds_lab(args) -> int:
    report = experiments.bounds_lab_suite(trials=args.trials, seed=args.seed)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    outpath = outdir / "bounds_lab.json"
    with open(outpath, "w") as fh:
        json.dump(report, fh, indent=2, default=float)
    beta = report["beta"]
    print(f"beta: C(1/2,1/2) = {beta['C_half_half']:.12f} "
          f"(pi error {beta['pi_error']:.2e}); worst collapse error "
          f"{max(r['max_collapse_error'] for r in beta['collapse']):.2e}")
    cb = report["comparison_bound"]
    print(f"comparison bound: gronwall max violation {cb['gronwall']['max_violation']:.2e}, "
          f"quadratic blow-up time {cb['quadratic']['blowup_time']:.9f}")
    bb = report["bootstrap_bound"]
    print(f"bootstrap bound: {bb['condition_holds']}/{bb['cases']} cases in-condition, "
          f"{bb['violations']} violations")
    print(f"wrote {outpath}")
    return 0


def _cmd_scan(args) -> int:
    cfg = _config_from_args(args)
    amplitudes = [float(a) for a in args.amplitudes.split(",")]
    scan = experiments.amplitude_scan(cfg, amplitudes, workers=args.workers)
    outdir = Path(args.output or cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "scan.json", "w") as fh:
        json.dump(scan, fh, indent=2, default=float)
    plots.render_scan_plot(scan, outdir / "scan.svg")
    for row in scan["rows"]:
        print(f"A={row['amplitude']:<10g} ||grad u0||_p={row['grad_lp_initial']:.4e} "
              f"-> {row['outcome']}")
    print(f"largest PASS amplitude: {scan['largest_pass_amplitude']}")
    print(f"smallest non-PASS amplitude: {scan['smallest_fail_amplitude']}")
    print(f"threshold bracket in ||grad u0||_p: {scan['threshold_bracket_grad_lp']}")
    return 0


def _cmd_report(args) -> int:
    rundir = Path(args.rundir)
    series = load_norm_series(rundir)
    meta = load_meta(rundir)
    window = tuple(meta.get("fit_window") or
                   analysis.default_fit_window(meta["solver"]["step"],
                                               float(series.times[-1])))
    fits = {}
    for track in series.columns:
        shifted = track.startswith("u_") or track.startswith("coarseness")
        try:
            fit = analysis.fit_exponent(series, track, window,
                                        against_one_plus_t=shifted)
            fits[track] = fit.to_dict()
        except ValueError:
            continue  # non-positive or too-short tracks are drawn without a fit
    outdir = rundir / "plots"
    written = plots.render_series_plots(series, outdir, fits)
    with open(rundir / "fits.json", "w") as fh:
        json.dump(fits, fh, indent=2, default=float)
    print(f"wrote {len(written)} figures under {outdir} and fits.json")
    return 0


def _config_from_args(args) -> experiments.ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    else:
        doc = {}
    return experiments.resolve_config(doc)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mbesim",
        description="Pseudo-spectral thin-film growth simulator and "
        "bound-verification harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one experiment config")
    p_sim.add_argument("--config", help="JSON config file (defaults applied)")
    p_sim.add_argument("--output", help="output directory override")
    p_sim.set_defaults(func=_cmd_simulate)

    p_ker = sub.add_parser("verify-kernel", help="kernel-norm scaling study")
    p_ker.add_argument("--dimension", type=int, default=1)
    p_ker.add_argument("--points", type=int, default=256)
    p_ker.add_argument("--box-length", type=float, default=16.0)
    p_ker.add_argument("--t-min", type=float, default=1e-4)
    p_ker.add_argument("--t-max", type=float, default=1e-3)
    p_ker.add_argument("--num-times", type=int, default=6)
    p_ker.add_argument(
        "--case", action="append", default=None, metavar="ORDER:P",
        help="derivative order and exponent, e.g. 0:inf or 1:1 (repeatable)",
    )
    p_ker.add_argument("--output", default="kernel_reports")
    p_ker.set_defaults(func=_cmd_verify_kernel)

    p_ver = sub.add_parser("verify-bounds",
                           help="re-run decay/growth verdicts on a run directory")
    p_ver.add_argument("rundir")
    p_ver.add_argument("--theta", type=float, default=None)
    p_ver.set_defaults(func=_cmd_verify_bounds)

    p_lab = sub.add_parser("bounds-lab", help="inequality verification suites")
    p_lab.add_argument("--trials", type=int, default=100)
    p_lab.add_argument("--seed", type=int, default=12345)
    p_lab.add_argument("--output", default="bounds_lab")
    p_lab.set_defaults(func=_cmd_bounds_lab)

    p_scan = sub.add_parser("scan", help="amplitude scan bracketing the "
                                         "empirical smallness threshold")
    p_scan.add_argument("--config", help="JSON config file")
    p_scan.add_argument("--amplitudes", required=True,
                        help="comma-separated increasing amplitudes")
    p_scan.add_argument("--workers", type=int, default=1)
    p_scan.add_argument("--output", help="output directory override")
    p_scan.set_defaults(func=_cmd_scan)

    p_rep = sub.add_parser("report",
                           help="regenerate plots and fits from a run directory")
    p_rep.add_argument("rundir")
    p_rep.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    if args.command == "verify-kernel" and args.case is None:
        args.case = ["0:inf", "1:1"]
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
