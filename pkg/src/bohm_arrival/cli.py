"""Command-line front end.

Subcommands:
  simulate    Monte Carlo arrival-time ensemble -> records.csv + summary.json
  analytic    closed-form spin-up density grid + moments -> density.csv + summary.json
  limitdist   stiff-limit arrival law -> density.csv + summary.json
  validate    self-check suite -> validate.txt, exit 0 iff all pass
  trajectory  one trajectory's (t, x, y, z, xi, H) path -> records.csv

Configuration precedence is flags > config file > defaults. The config file
is flat "key = value" text ('#' starts a comment); keys are the long flag
names without the leading dashes, e.g.

    spin = updown
    omega = 500
    L = 50

Every command is a pure function of its configuration: re-running writes
byte-identical files, and --threads (or BOHM_ARRIVAL_THREADS) only changes
how many workers integrate trajectories, never the output. All numeric
output is written with repr(), i.e. 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from .arrival_stats import (
    histogram,
    moments_up,
    pi_up_density,
    run_ensemble,
    write_records_csv,
    write_summary_json,
)
from .errors import BohmArrivalError, DomainError
from .limiting import (
    limiting_distribution,
    write_density_csv,
    write_limit_json,
)
from .model import ModelParams, SpinCase
from .trajectories import spin_up_position, updown_path
from .validation import format_report, run_validation

__all__ = ["main"]

_DEFAULTS = {
    "spin": "updown",
    "omega": 500.0,
    "L": 50.0,
    "n": 1000,
    "seed": 0,
    "bins": "fd",
    "out": ".",
    "tol_ode": 1e-12,
    "tol_quad": 1e-10,
    "r0": "0.3,0.1,0.5",
    "t_max": 20.0,
    "points": 2001,
    "grid_points": 4001,
    "mu": None,
    "threads": None,
}

_CONFIG_TYPES = {
    "spin": str, "omega": float, "L": float, "n": int, "seed": int,
    "bins": str, "out": str, "tol_ode": float, "tol_quad": float,
    "r0": str, "t_max": float, "points": int, "grid_points": int,
    "mu": int, "threads": int,
}


def _read_config(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in _CONFIG_TYPES:
                raise DomainError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _CONFIG_TYPES[key](val.strip())
    return values


def _merge(args: argparse.Namespace) -> dict:
    """flags > config file > defaults"""
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(_read_config(args.config))
    for key in _DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    return cfg


def _params(cfg: dict) -> ModelParams:
    return ModelParams(
        omega=float(cfg["omega"]),
        detector_L=float(cfg["L"]),
        ode_rtol=float(cfg["tol_ode"]),
        ode_atol=min(1e-14, 0.01 * float(cfg["tol_ode"])),
        quad_tol=float(cfg["tol_quad"]),
    )


def _set_threads(cfg: dict) -> None:
    threads = cfg.get("threads")
    if threads is None:
        env = os.environ.get("BOHM_ARRIVAL_THREADS")
        threads = int(env) if env else 1
    import numba

    numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))


def _bins_policy(cfg: dict):
    raw = str(cfg["bins"])
    if raw == "fd":
        return "fd"
    try:
        n = int(raw)
    except ValueError:
        raise DomainError(f"--bins must be 'fd' or a positive integer, got {raw!r}")
    if n <= 0:
        raise DomainError("--bins must be positive")
    return n


def _out_path(cfg: dict, name: str) -> str:
    out = str(cfg["out"])
    os.makedirs(out, exist_ok=True)
    return os.path.join(out, name)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: dict, parser: argparse.ArgumentParser) -> int:
    n = int(cfg["n"])
    if n <= 0:
        parser.error("--n must be a positive integer")
    _set_threads(cfg)
    p = _params(cfg)
    spin = SpinCase(cfg["spin"])
    ens, summary = run_ensemble(spin, n, int(cfg["seed"]), p, bins=_bins_policy(cfg))
    write_records_csv(ens, _out_path(cfg, "records.csv"))
    write_summary_json(summary, _out_path(cfg, "summary.json"))
    print(f"wrote records.csv and summary.json to {cfg['out']}")
    return 0


def cmd_analytic(cfg: dict, parser: argparse.ArgumentParser) -> int:
    p = _params(cfg)
    if cfg["mu"] is not None:
        # explicit moment request: surfaces the divergent-order error path
        value = moments_up(p, int(cfg["mu"]))
        print(repr(value))
        return 0
    m1 = moments_up(p, 1)
    m2 = moments_up(p, 2)
    # L-scaled tangent grid: resolves the peak near tau ~ L and still covers
    # the tau^-4 tail out to ~L/delta, so trapezoids capture all the mass
    n_grid = int(cfg["grid_points"])
    theta = np.linspace(0.0, math.pi / 2.0 - 1e-4, n_grid)
    taus = p.detector_L * np.tan(theta)
    dens = pi_up_density(taus, p)
    with open(_out_path(cfg, "density.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "pi_up"])
        for t, d in zip(taus, dens):
            w.writerow([repr(float(t)), repr(float(d))])
    doc = {
        "schema": 1,
        "spin": "up",
        "omega": p.omega,
        "L": p.detector_L,
        "mean": m1,
        "second_moment": m2,
        "std": math.sqrt(m2 - m1 * m1),
    }
    with open(_out_path(cfg, "summary.json"), "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"wrote density.csv and summary.json to {cfg['out']}")
    return 0


def cmd_limitdist(cfg: dict, parser: argparse.ArgumentParser) -> int:
    p = _params(cfg)
    dist = limiting_distribution(p)
    # extend slightly past the support edge so the zero foot is visible
    taus = np.linspace(0.0, 1.02 * dist.tau_max, int(cfg["grid_points"]))
    write_density_csv(dist, taus, _out_path(cfg, "density.csv"))
    write_limit_json(dist, p, _out_path(cfg, "summary.json"))
    print(f"wrote density.csv and summary.json to {cfg['out']}")
    return 0


def cmd_validate(cfg: dict, parser: argparse.ArgumentParser) -> int:
    _set_threads(cfg)
    p = _params(cfg)
    results = run_validation(p, ode_rtol=cfg.get("inject_ode_tol"))
    report = format_report(results)
    with open(_out_path(cfg, "validate.txt"), "w") as fh:
        fh.write(report)
    print(report, end="")
    return 0 if all(r.passed for r in results) else 1


def cmd_trajectory(cfg: dict, parser: argparse.ArgumentParser) -> int:
    try:
        r0 = tuple(float(c) for c in str(cfg["r0"]).split(","))
        if len(r0) != 3:
            raise ValueError
    except ValueError:
        parser.error("--r0 must be three comma-separated numbers x,y,z")
    if float(cfg["t_max"]) <= 0.0 or int(cfg["points"]) < 2:
        parser.error("--t-max must be positive and --points at least 2")
    p = _params(cfg)
    t = np.linspace(0.0, float(cfg["t_max"]), int(cfg["points"]))
    spin = SpinCase(cfg["spin"])
    if spin is SpinCase.UP:
        pos = spin_up_position(r0, t, p)
        x, y, z = pos[:, 0], pos[:, 1], pos[:, 2]
        xi = z / np.sqrt(1.0 + t * t)
    else:
        path = updown_path(r0, p, t)
        x, y, z, xi = path.x, path.y, path.z, path.xi
    h = np.log(xi * xi) - xi * xi - p.omega * y * y
    with open(_out_path(cfg, "records.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "z", "xi", "H"])
        for row in zip(t, x, y, z, xi, h):
            w.writerow([repr(float(c)) for c in row])
    print(f"wrote records.csv to {cfg['out']}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bohm-arrival",
        description="Bohmian arrival-time statistics in a harmonic waveguide",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spin", choices=["up", "updown"])
    common.add_argument("--omega", type=float)
    common.add_argument("--L", type=float)
    common.add_argument("--n", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--out", help="output directory (default: .)")
    common.add_argument("--bins", help="histogram policy: fd or a bin count")
    common.add_argument("--tol-ode", dest="tol_ode", type=float)
    common.add_argument("--tol-quad", dest="tol_quad", type=float)
    common.add_argument("--config", help="flat key = value configuration file")

    sub.add_parser("simulate", parents=[common],
                   help="Monte Carlo arrival-time ensemble")

    pa = sub.add_parser("analytic", parents=[common],
                        help="closed-form spin-up density and moments")
    pa.add_argument("--mu", type=int, help="print a single moment instead")
    pa.add_argument("--grid-points", dest="grid_points", type=int)

    pl = sub.add_parser("limitdist", parents=[common],
                        help="stiff-limit arrival law")
    pl.add_argument("--grid-points", dest="grid_points", type=int)

    pv = sub.add_parser("validate", parents=[common],
                        help="run the self-check suite")
    pv.add_argument("--inject-ode-tol", dest="inject_ode_tol", type=float,
                    help=argparse.SUPPRESS)

    pt = sub.add_parser("trajectory", parents=[common],
                        help="dump one trajectory path")
    pt.add_argument("--r0", help="initial position x,y,z")
    pt.add_argument("--t-max", dest="t_max", type=float)
    pt.add_argument("--points", type=int)

    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "analytic": cmd_analytic,
    "limitdist": cmd_limitdist,
    "validate": cmd_validate,
    "trajectory": cmd_trajectory,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge(args)
        if args.command == "validate":
            cfg["inject_ode_tol"] = getattr(args, "inject_ode_tol", None)
        return _COMMANDS[args.command](cfg, parser)
    except BohmArrivalError as exc:
        json.dump(
            {"schema": 1, "error": {"type": type(exc).__name__, "message": str(exc)}},
            sys.stderr,
        )
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
