"""Monte Carlo regret experiments.

Each trial is a pure function of its :class:`TrialSpec`: the system noise and action
noise streams are keyed by ``(base_seed, T, seed, purpose)`` and do not depend on the
learner, so every learner in an experiment faces the same ``w_t`` sequence.  Trials are
mapped in a fixed order, which makes the output independent of the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..control import LqrSystem, cost_bounds, expected_regret_fixed_gain, lqr, optimal_cost
from ..errors import ConfigError, LqrError
from ..learners import (
    AlgorithmAPolicy,
    AlgorithmBPolicy,
    CeEpsGreedyPolicy,
    FixedGainPolicy,
    LearnerConfig,
    OraclePolicy,
    derive_params_alg_a,
    derive_params_alg_b,
)
from ..lowerbound import make_instance
from ..rng import Purpose, RngStream, derive_stream_id
from ..simulation import LinearPolicy, rollout, write_trajectory_csv

CSV_HEADER = ["learner", "T", "seed", "checkpoint", "cum_cost", "cum_regret", "aborted"]
CONFIG_KEYS = {"alpha0", "alpha1", "vartheta", "nu", "nu0", "C0", "eps0", "mode",
               "practical_scale", "tau0_scale", "xb_scale", "lambda_scale"}


@dataclass
class RegretCurve:
    learner: str
    T: int
    seed: int
    checkpoints: np.ndarray
    cum_cost: np.ndarray
    cum_regret: np.ndarray
    aborted: bool
    failed: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def final_regret(self) -> float:
        return float(self.cum_regret[-1])

    def regret_at(self, t: int) -> float:
        if t == 0:
            return 0.0
        idx = np.searchsorted(self.checkpoints, t)
        if idx >= len(self.checkpoints) or self.checkpoints[idx] != t:
            raise KeyError(f"{t} is not a checkpoint")
        return float(self.cum_regret[idx])


@dataclass(frozen=True)
class LearnerView:
    """What a lower-bound learner factory is allowed to see."""

    a: float
    sigma: float
    T: int
    seed: int


@dataclass
class TrialSpec:
    learner_name: str
    learner: object  # spec mapping, or a callable building a policy
    T: int
    seed: int
    base_seed: int
    system: Optional[LqrSystem] = None
    family: str = "fixed"  # "fixed" or "lowerbound"
    sigma: float = 1.0
    checkpoints: tuple = ()
    paired: bool = False
    dump_path: Optional[str] = None


def streams(base_seed: int, T: int, seed: int):
    """``(system_noise, action_noise, instance)`` streams for one trial."""
    return tuple(RngStream(base_seed, derive_stream_id(T, seed, p))
                 for p in (Purpose.SYSTEM_NOISE, Purpose.ACTION_NOISE, Purpose.INSTANCE))


def _matrix(value, shape, name):
    if value is None:
        return np.zeros(shape)
    M = np.array(value, dtype=float, ndmin=2)
    if M.shape != shape:
        raise ConfigError(f"{name} has shape {M.shape}, expected {shape}")
    return M


def learner_config(spec: dict, sys: LqrSystem, T: int) -> LearnerConfig:
    raw = dict(spec.get("config") or {})
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown learner config keys: {sorted(unknown)}")
    alpha0, alpha1 = cost_bounds(sys)
    raw.setdefault("alpha0", alpha0)
    raw.setdefault("alpha1", alpha1)
    missing = {"vartheta", "nu", "nu0", "C0", "eps0"} - set(raw)
    if missing:
        raise ConfigError(f"learner config is missing {sorted(missing)}")
    nominal_sigma = 1.0 if sys.deterministic else sys.sigma
    try:
        return LearnerConfig(sigma=nominal_sigma, T=int(T), **raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def build_policy(spec, sys: LqrSystem, T: int, seed: int = 0):
    """Instantiate the learner described by ``spec`` for one run on ``sys``.

    The unknown-A learner is handed ``B*`` only, the unknown-B learner ``A*`` only,
    ce_eps_greedy neither; only ``oracle`` sees the full system.
    """
    if callable(spec):
        return spec(LearnerView(a=float(sys.A[0, 0]), sigma=sys.sigma, T=int(T), seed=int(seed)))
    kind = spec.get("kind")
    d, k = sys.d, sys.k
    K0 = _matrix(spec.get("K0"), (k, d), "K0")
    if kind == "oracle":
        return OraclePolicy(sys)
    if kind == "fixed_k":
        return FixedGainPolicy(_matrix(spec.get("K"), (k, d), "K"))
    if kind == "ce_eps_greedy":
        kw = {key: spec[key] for key in ("explore", "first_epoch", "lam", "gain_cap") if key in spec}
        return CeEpsGreedyPolicy(K0, sys.Q, sys.R, **kw)
    if kind in ("algorithm_a", "algorithm_b"):
        cfg = learner_config(spec, sys, T)
        if kind == "algorithm_a":
            return AlgorithmAPolicy(cfg, derive_params_alg_a(cfg, d), K0, sys.B, sys.Q, sys.R)
        return AlgorithmBPolicy(cfg, derive_params_alg_b(cfg, d, k), K0, sys.A, sys.Q, sys.R)
    raise ConfigError(f"unknown learner kind {kind!r}")


def _trial_system(spec: TrialSpec, instance_rng: RngStream):
    if spec.family == "lowerbound":
        chi = instance_rng.rademacher()
        inst = make_instance(spec.T, spec.sigma, chi, strict=spec.T >= 12000)
        return inst.system(), {"chi": chi, "b": inst.b}
    if spec.system is None:
        raise ConfigError("trial has no system")
    return spec.system, {}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def run_trial(spec: TrialSpec) -> RegretCurve:
    T = int(spec.T)
    w_rng, a_rng, i_rng = streams(spec.base_seed, T, spec.seed)
    sys, extra = _trial_system(spec, i_rng)
    checkpoints = np.array(sorted({0, T} | {int(c) for c in spec.checkpoints if 0 < c <= T}), dtype=np.int64)
    P_star, K_star = lqr(sys)
    J_star = float((0.0 if sys.deterministic else sys.sigma**2) * np.trace(P_star))
    meta = {"J_star": J_star, **extra}
    policy = build_policy(spec.learner, sys, T, spec.seed)
    record = spec.dump_path is not None
    try:
        traj = rollout(sys, policy, T, w_rng, action_rng=a_rng, record=record, on_overflow="record")
    except LqrError as exc:
        nan = np.full(checkpoints.shape, np.nan)
        meta["error"] = f"{type(exc).__name__}: {exc}"
        return RegretCurve(spec.learner_name, T, spec.seed, checkpoints, nan, nan.copy(),
                           aborted=False, failed=True, meta=meta)
    meta.update(_jsonable(traj.meta))
    if record:
        write_trajectory_csv(traj, spec.dump_path)
    failed = traj.overflowed_at is not None
    cum = np.concatenate([[0.0], np.cumsum(traj.costs)])
    if failed:
        meta["overflowed_at"] = traj.overflowed_at
        cum = np.concatenate([cum, np.full(T + 1 - cum.size, np.nan)])
    cum_cost = cum[checkpoints]
    regret = cum_cost - checkpoints * J_star
    if spec.paired and not failed:
        # control variate: the optimal gain on the same noise, with its exact mean regret
        o_rng = RngStream(spec.base_seed, derive_stream_id(T, spec.seed, Purpose.SYSTEM_NOISE))
        otraj = rollout(sys, LinearPolicy(K_star), T, o_rng, record=False)
        ocum = np.concatenate([[0.0], np.cumsum(otraj.costs)])[checkpoints]
        expected = np.array([expected_regret_fixed_gain(sys, K_star, int(t)) if t else 0.0
                             for t in checkpoints])
        regret = cum_cost - ocum + expected
        meta["estimator"] = "paired"
    aborted = traj.aborted_at is not None
    return RegretCurve(spec.learner_name, T, spec.seed, checkpoints, cum_cost, regret,
                       aborted=aborted, failed=failed, meta=meta)


def run_trials(specs, workers: int = 1):
    """Run trials in order; with ``workers > 1`` they are spread over processes but the
    returned list keeps the input order."""
    specs = list(specs)
    if workers <= 1 or len(specs) <= 1:
        return [run_trial(s) for s in specs]
    chunk = max(1, len(specs) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_trial, specs, chunksize=chunk))


def curves_to_csv(curves) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for c in curves:
        for t, cc, cr in zip(c.checkpoints, c.cum_cost, c.cum_regret):
            writer.writerow([c.learner, c.T, c.seed, int(t), repr(float(cc)), repr(float(cr)),
                             int(bool(c.aborted))])
    return buf.getvalue()


def read_curves_csv(path):
    """Parse a curves CSV back into :class:`RegretCurve` objects."""
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ConfigError(f"{path} does not have the curve CSV header")
        for r in reader:
            key = (r["learner"], int(r["T"]), int(r["seed"]))
            rows.setdefault(key, []).append(r)
    curves = []
    for (learner, T, seed), rs in rows.items():
        cps = np.array([int(r["checkpoint"]) for r in rs], dtype=np.int64)
        cost = np.array([float(r["cum_cost"]) for r in rs])
        reg = np.array([float(r["cum_regret"]) for r in rs])
        curves.append(RegretCurve(learner, T, seed, cps, cost, reg, aborted=rs[-1]["aborted"] == "1",
                                  failed=bool(np.isnan(reg[-1]))))
    return curves


def summarize(curves, T_grid, learners) -> dict:
    from .fitting import fit_exponent, fit_log_squared, fit_sqrt

    out = {}
    for name in learners:
        mine = [c for c in curves if c.learner == name]
        rows, groups = [], {}
        for T in T_grid:
            ok = [c for c in mine if c.T == T and not c.failed]
            vals = np.array([c.final_regret for c in ok])
            groups[int(T)] = vals
            rows.append({
                "T": int(T), "n_seeds": int(vals.size),
                "n_failed": sum(1 for c in mine if c.T == T and c.failed),
                "n_aborted": sum(1 for c in ok if c.aborted),
                "mean_regret": float(vals.mean()) if vals.size else None,
                "stderr": float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else None,
            })
        entry = {"rows": rows}
        if len(T_grid) >= 3 and all(g.size for g in groups.values()):
            fit = fit_exponent(groups, list(groups))
            entry["beta"], entry["beta_ci"] = fit.beta, list(fit.ci)
            entry["log2_fit"] = dict(zip(("c", "r2"), fit_log_squared(groups, list(groups))))
            entry["sqrt_fit"] = dict(zip(("c", "r2"), fit_sqrt(groups, list(groups))))
        out[name] = entry
    return out


@dataclass
class ExperimentResult:
    curves: list
    summary: dict

    def csv(self) -> str:
        return curves_to_csv(self.curves)


def trial_specs(cfg) -> list:
    specs = []
    for name, learner in cfg.learners.items():
        for T in cfg.T_grid:
            for s in range(cfg.n_seeds):
                dump = None
                if cfg.dump_trajectory and cfg.output_dir:
                    dump = os.path.join(cfg.output_dir, "trajectories", f"{name}_T{T}_seed{s}.csv")
                specs.append(TrialSpec(
                    learner_name=name, learner=learner, T=int(T), seed=s, base_seed=cfg.base_seed,
                    system=cfg.system, family=cfg.family, sigma=cfg.sigma,
                    checkpoints=tuple(cfg.checkpoints), paired=cfg.paired, dump_path=dump,
                ))
    return specs


def run_experiment(cfg, workers: int = 1) -> ExperimentResult:
    """Run every (learner, T, seed) trial of ``cfg``; write outputs if it names a directory."""
    if cfg.output_dir and cfg.dump_trajectory:
        os.makedirs(os.path.join(cfg.output_dir, "trajectories"), exist_ok=True)
    curves = run_trials(trial_specs(cfg), workers=workers)
    summary = {
        "name": cfg.name,
        "base_seed": cfg.base_seed,
        "n_seeds": cfg.n_seeds,
        "T_grid": list(cfg.T_grid),
        "paired": cfg.paired,
        "family": cfg.family,
        "learners": summarize(curves, cfg.T_grid, list(cfg.learners)),
        "runs": [
            {"learner": c.learner, "T": c.T, "seed": c.seed, "failed": c.failed,
             "aborted": c.aborted, **{k: c.meta[k] for k in
                                       ("aborted_at", "abort_reason", "n_s", "mode", "chi", "error")
                                       if k in c.meta}}
            for c in curves
        ],
        "params": _params_by_learner(curves),
    }
    if cfg.system is not None:
        summary["J_star"] = optimal_cost(cfg.system) if not cfg.system.deterministic else 0.0
        summary["system"] = cfg.system.to_dict()
    result = ExperimentResult(curves=curves, summary=_jsonable(summary))
    if cfg.output_dir:
        os.makedirs(cfg.output_dir, exist_ok=True)
        with open(os.path.join(cfg.output_dir, "curves.csv"), "w", newline="") as fh:
            fh.write(result.csv())
        with open(os.path.join(cfg.output_dir, "summary.json"), "w") as fh:
            json.dump(result.summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return result


def _params_by_learner(curves):
    out = {}
    for c in curves:
        if "params" in c.meta:
            out.setdefault(c.learner, {}).setdefault(str(c.T), c.meta["params"])
    return out


__all__ = [
    "CSV_HEADER", "ExperimentResult", "LearnerView", "RegretCurve", "TrialSpec",
    "build_policy", "curves_to_csv", "read_curves_csv", "run_experiment", "run_trial",
    "run_trials", "streams", "summarize",
]
