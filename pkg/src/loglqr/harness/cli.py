"""Command-line entry point: ``loglqr {dare,simulate,run,lower-bound,fit,calibrate}``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
import yaml

from ..control import dare_residual, optimal_controller, solve_dare
from ..errors import ConfigError, LqrError
from ..learners import calibrate
from ..simulation import write_trajectory_csv
from .config import _parse_system, load_config
from .experiment import build_policy, read_curves_csv, run_experiment, streams, summarize

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _emit(obj, out_dir=None, filename=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out_dir and filename:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, filename), "w") as fh:
            fh.write(text + "\n")
    print(text)


def _load_system(path):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot load {path}: {exc}") from None
    if isinstance(raw, dict) and "system" in raw:
        raw = raw["system"]
    sys_, family, _ = _parse_system(raw)
    if sys_ is None:
        raise ConfigError(f"{path} describes a system family, not a single system")
    return sys_


def cmd_dare(args):
    system = _load_system(args.config)
    sol = solve_dare(system)
    K = optimal_controller(system, sol)
    _emit({"P": sol.P.tolist(), "K": K.tolist(), "J": float(system.sigma**2 * np.trace(sol.P)),
           "residual": dare_residual(system, sol.P), "iterations": sol.iterations},
          args.out, "dare.json")


def cmd_simulate(args):
    cfg = load_config(args.config).with_overrides(seed=args.seed, mode=args.mode)
    if cfg.system is None:
        raise ConfigError("simulate needs an explicit or named system")
    name, spec = next(iter(cfg.learners.items()))
    T = cfg.T_grid[0]
    w_rng, a_rng, _ = streams(cfg.base_seed, T, 0)
    from ..simulation import rollout

    traj = rollout(cfg.system, build_policy(spec, cfg.system, T), T, w_rng, action_rng=a_rng,
                   record=True, on_overflow="raise")
    if args.dump_trajectory:
        out = args.out or "."
        os.makedirs(out, exist_ok=True)
        write_trajectory_csv(traj, os.path.join(out, f"trajectory_{name}_T{T}.csv"))
    _emit({"learner": name, "T": T, "base_seed": cfg.base_seed, "cum_cost": float(traj.costs.sum()),
           "aborted_at": traj.aborted_at, "abort_reason": traj.abort_reason,
           "x_final": traj.x_final.tolist()}, args.out, "simulate.json")


def _run(args, want_family=None):
    cfg = load_config(args.config).with_overrides(seed=args.seed, mode=args.mode, out=args.out,
                                                 dump=args.dump_trajectory or None)
    if want_family and cfg.family != want_family:
        raise ConfigError(f"this command needs system.family = {want_family}")
    return cfg, run_experiment(cfg, workers=args.workers)


def cmd_run(args):
    cfg, result = _run(args)
    _emit(result.summary["learners"])


def cmd_lower_bound(args):
    cfg, result = _run(args, want_family="lowerbound")
    report = {}
    for name, entry in result.summary["learners"].items():
        report[name] = {"rows": [{k: r[k] for k in ("T", "n_seeds", "mean_regret", "stderr")}
                                 for r in entry["rows"]]}
        if "beta" in entry:
            report[name]["beta"] = entry["beta"]
            report[name]["beta_ci"] = entry["beta_ci"]
    _emit(report, cfg.output_dir, "lower_bound.json")


def cmd_fit(args):
    curves = read_curves_csv(args.curves)
    learners = sorted({c.learner for c in curves})
    T_grid = sorted({c.T for c in curves})
    _emit(summarize(curves, T_grid, learners), args.out, "fits.json")


def cmd_calibrate(args):
    system = _load_system(args.config)
    seed = 0 if args.seed is None else args.seed
    _emit(calibrate(system, seed=seed).to_dict(), args.out, "calibration.json")


def build_parser():
    p = _Parser(prog="loglqr", description="Regret experiments for LQR learners.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="YAML file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="base seed (u64)")

    sp = sub.add_parser("dare", help="solve the Riccati equation for a system file")
    common(sp)
    sp.set_defaults(func=cmd_dare)

    for name, func, helptext in (("simulate", cmd_simulate, "single rollout of the first learner"),
                                 ("run", cmd_run, "run an experiment"),
                                 ("lower-bound", cmd_lower_bound, "regret scaling on the degenerate family")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sp.add_argument("--mode", choices=("theoretical", "practical"))
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--dump-trajectory", action="store_true")
        sp.set_defaults(func=func)

    sp = sub.add_parser("fit", help="exponent and log^2 / sqrt fits from a curves CSV")
    sp.add_argument("curves", help="curves.csv written by run")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("calibrate", help="estimate C0 and eps0 for a system file")
    common(sp)
    sp.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LqrError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
