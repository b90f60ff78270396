"""Command-line experiment runner.

    capjet simulate   --config run.json   [--out DIR] [--seed N]
    capjet dispersion [--R 1] [--kappa 1] [--xi-min 0] [--xi-max 2] [--points 201] [--out DIR]
    capjet verify     [SUITE ...] [--out DIR]
    capjet sweep      --config sweep.json [--out DIR] [--threads K] [--seed N]

Exit status: 0 success, 1 failed verification checks, 2 invalid input or
solver failure (error JSON on stderr), 3 simulation stopped by pinch-off.
"""
import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import linstab, verify
from .config import SimConfig, SweepSpec, config_hash
from .dynamics import run, save_snapshot
from .errors import CapjetError, WindowTooShort
from .output import write_csv, write_svg

EXIT_OK, EXIT_CHECKS, EXIT_ERROR, EXIT_PINCH = 0, 1, 2, 3


def _error(exc):
    json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
    sys.stderr.write("\n")
    return EXIT_ERROR


# simulate -----------------------------------------------------------------

def trajectory_columns(traj):
    return list(traj.records[0].keys()) if traj.records else ["t"]


def write_run(traj, cfg, outdir):
    os.makedirs(outdir, exist_ok=True)
    formats = set(cfg["output"]["formats"])
    if "csv" in formats:
        write_csv(os.path.join(outdir, "trajectory.csv"), trajectory_columns(traj),
                  traj.records, cfg.hash)
    if "cjsnap" in formats:
        for i, s in enumerate(traj.states):
            save_snapshot(os.path.join(outdir, f"snap_{i:04d}.cjsnap"), s)
    if "svg" in formats and traj.states:
        z = traj.states[0].grid.z
        step = max(1, len(traj.states) // 8)
        series = [(z, s.eta, f"t={s.t:.3g}") for s in traj.states[::step]]
        write_svg(os.path.join(outdir, "eta.svg"), series, title="radius profiles",
                  xlabel="z", ylabel="eta")
        t = traj.column("t")
        diag = [(t, traj.column("min_eta"), "min eta")]
        write_svg(os.path.join(outdir, "min_eta.svg"), diag, title="minimum radius",
                  xlabel="t", ylabel="min eta")
        write_svg(os.path.join(outdir, "energy.svg"), [(t, traj.column("E"), "E")],
                  title="energy", xlabel="t", ylabel="E")


def cmd_simulate(args):
    if not args.config:
        return _error(ValueError("simulate needs --config"))
    try:
        cfg = SimConfig.load(args.config, args.seed)
        traj = run(cfg)
    except (CapjetError, OSError, ValueError) as exc:
        return _error(exc)
    outdir = args.out or cfg["output"]["directory"]
    write_run(traj, cfg, outdir)
    summary = {"outcome": traj.outcome, "stop_time": traj.stop_time, "snapshots": len(traj.states),
               "config_hash": cfg.hash}
    print(json.dumps(summary))
    return EXIT_PINCH if traj.outcome == "pinch-off" else EXIT_OK


# dispersion ---------------------------------------------------------------

def dispersion_rows(R, kappa, xi_min, xi_max, points):
    xs = list(np.linspace(xi_min, xi_max, points))
    if xi_min <= 1.0 / R <= xi_max:
        xs.append(1.0 / R)
    xs = sorted(set(float(x) for x in xs))
    rows = []
    for x in xs:
        s = linstab.growth_rate(R, kappa, x)
        rows.append([x, s.sigma2, s.sigma.real, s.sigma.imag])
    return rows


def cmd_dispersion(args):
    try:
        rows = dispersion_rows(args.R, args.kappa, args.xi_min, args.xi_max, args.points)
        comments = []
        if args.kappa > 0:
            xi_s, sig_s = linstab.most_unstable(args.R, args.kappa)
            comments = [f"xi_star={xi_s!r}", f"sigma_star={sig_s!r}", f"x_star={xi_s * args.R!r}"]
        else:
            xi_s, sig_s = float("nan"), 0.0
    except (CapjetError, ValueError) as exc:
        return _error(exc)
    h = config_hash({"R": args.R, "kappa": args.kappa, "xi_min": args.xi_min,
                     "xi_max": args.xi_max, "points": args.points})
    cols = ["xi", "sigma2", "sigma_re", "sigma_im"]
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_csv(os.path.join(args.out, "dispersion.csv"), cols, rows, h, comments)
        print(json.dumps({"xi_star": xi_s, "sigma_star": sig_s}))
    else:
        from .output import csv_text
        sys.stdout.write(csv_text(cols, rows, h, comments))
    return EXIT_OK


# verify -------------------------------------------------------------------

def cmd_verify(args):
    names = args.suites or ["all"]
    try:
        checks = verify.run_suites(names)
    except ValueError as exc:
        return _error(exc)
    text = verify.report_text(checks)
    sys.stdout.write(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        rows = [[c.suite, c.name, c.measured, c.relation, c.tolerance, c.passed] for c in checks]
        write_csv(os.path.join(args.out, "verify.csv"),
                  ["suite", "check", "measured", "relation", "tolerance", "passed"], rows,
                  config_hash({"suites": names}))
        with open(os.path.join(args.out, "verify.txt"), "w") as fh:
            fh.write(text)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECKS


# sweep --------------------------------------------------------------------

def _sweep_worker(job):
    index, params, cfg_dict, seed, outdir = job
    row = {"index": index, "final_time": None, "outcome": None,
           "growth_rate": None, "sigma_linear": None}
    row.update({f"param:{k}": v for k, v in params.items()})
    try:
        cfg = SimConfig.from_dict(cfg_dict, seed)
        traj = run(cfg)
        write_run(traj, cfg, os.path.join(outdir, f"run_{index:03d}"))
        row["final_time"] = traj.stop_time
        row["outcome"] = traj.outcome
        modes = cfg.modes
        if modes:
            grid = cfg.grid()
            k = modes[0]
            xi = np.pi * k / grid.L
            s = linstab.growth_rate(cfg["physics"]["R"], cfg["physics"]["kappa"], xi)
            row["sigma_linear"] = s.sigma.real
            if s.sigma2 > 0:
                try:
                    row["growth_rate"] = linstab.measure_growth(traj, k)
                except WindowTooShort:
                    pass
    except Exception as exc:   # recorded per row; the harness keeps going
        row["outcome"] = f"error: {type(exc).__name__}: {exc}"
    return row


def cmd_sweep(args):
    if not args.config:
        return _error(ValueError("sweep needs --config"))
    try:
        spec = SweepSpec.load(args.config)
    except (CapjetError, OSError, ValueError) as exc:
        return _error(exc)
    outdir = args.out or spec.base.get("output", {}).get("directory", "sweep_out")
    os.makedirs(outdir, exist_ok=True)
    threads = args.threads or spec.threads
    jobs = [(i, params, cfg, args.seed, outdir) for i, (params, cfg) in enumerate(spec.expand())]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_sweep_worker, jobs))
    else:
        rows = [_sweep_worker(j) for j in jobs]
    param_cols = [f"param:{k}" for k in spec.axes]
    cols = ["index"] + param_cols + ["final_time", "outcome", "growth_rate", "sigma_linear"]
    h = config_hash({"base": spec.base, "axes": spec.axes, "seed": args.seed})
    write_csv(os.path.join(outdir, "summary.csv"), cols, rows, h)
    print(json.dumps({"runs": len(rows), "summary": os.path.join(outdir, "summary.csv")}))
    return EXIT_OK


# entry point --------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, default=None, help="worker processes for sweeps")
    common.add_argument("--seed", type=int, default=0, help="seed for random-phase initial data")

    parser = argparse.ArgumentParser(prog="capjet", description="Axisymmetric capillary jet experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="integrate one configuration")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dispersion", parents=[common], help="tabulate the linear growth rate")
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--xi-min", type=float, default=0.0)
    p.add_argument("--xi-max", type=float, default=2.0)
    p.add_argument("--points", type=int, default=201)
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("verify", parents=[common], help="run self-check suites")
    p.add_argument("suites", nargs="*", choices=sorted(verify.SUITES) + ["all"], metavar="SUITE",
                   help="one or more of: " + ", ".join(sorted(verify.SUITES) + ["all"]))
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", parents=[common], help="run a parameter sweep")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
