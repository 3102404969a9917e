"""Experiment configuration files (YAML).

Schema (all numbers are plain decimals; times are in steps, sigma in state units)::

    name: benchmark                 # label used in outputs
    system:                         # one of:
      name: benchmark2x2            #   a named system (benchmark2x2, scalar_b, random(d,k,seed))
      # A: [[...]]  B: [[...]]  Q: [[...]]  R: [[...]]   explicit matrices
      # family: lowerbound          #   the randomized scalar family (chi drawn per seed)
      sigma: 1.0                    # noise standard deviation
    learners:                       # name -> learner spec
      alg_a:
        kind: algorithm_a           # algorithm_a | algorithm_b | ce_eps_greedy | fixed_k | oracle
        K0: [[0, 0], [0, 0]]        # initial stabilizing gain (default zeros)
        config: {vartheta: 1.2, nu: 2.8, nu0: 4.7, C0: 2.5, eps0: 0.4,
                 mode: practical, tau0_scale: 1.0e-8, xb_scale: 1.0e-3, lambda_scale: 1.0e-6}
      ce:
        kind: ce_eps_greedy
        explore: 1.0                # exploration scale c in c * t^(-1/4)
        first_epoch: 128            # steps in the initial K0 epoch
    T_grid: [4096, 16384]           # strictly increasing horizons
    n_seeds: 100
    base_seed: 1
    checkpoints: [1024, 4096]       # times at which cumulative regret is recorded (T always is)
    paired: false                   # subtract the optimal gain's cost on the same noise
    output: {dir: results/benchmark, dump_trajectory: false}
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from ..control import LqrSystem
from ..errors import ConfigError, LqrError
from .systems import named_system

LEARNER_KINDS = ("algorithm_a", "algorithm_b", "ce_eps_greedy", "fixed_k", "oracle")
TOP_KEYS = {"name", "system", "learners", "T_grid", "n_seeds", "base_seed", "checkpoints",
            "paired", "output", "mode"}


@dataclass
class ExperimentConfig:
    name: str
    learners: dict
    T_grid: list
    n_seeds: int
    base_seed: int = 0
    system: Optional[LqrSystem] = None
    family: str = "fixed"
    sigma: float = 1.0
    checkpoints: list = field(default_factory=list)
    paired: bool = False
    output_dir: Optional[str] = None
    dump_trajectory: bool = False

    def with_overrides(self, seed=None, mode=None, out=None, dump=None) -> "ExperimentConfig":
        cfg = copy.deepcopy(self)
        if seed is not None:
            cfg.base_seed = int(seed)
        if out is not None:
            cfg.output_dir = out
        if dump is not None:
            cfg.dump_trajectory = bool(dump)
        if mode is not None:
            _apply_mode(cfg.learners, mode)
        return cfg


def _apply_mode(learners, mode):
    if mode not in ("theoretical", "practical"):
        raise ConfigError(f"mode must be theoretical or practical, got {mode!r}")
    for spec in learners.values():
        if spec.get("kind") in ("algorithm_a", "algorithm_b"):
            spec.setdefault("config", {})["mode"] = mode


def _parse_system(raw):
    if not isinstance(raw, dict):
        raise ConfigError("system must be a mapping")
    sigma = float(raw.get("sigma", 1.0))
    if not sigma > 0:
        raise ConfigError("system sigma must be positive")
    if raw.get("family") == "lowerbound":
        return None, "lowerbound", sigma
    if "family" in raw:
        raise ConfigError(f"unknown system family {raw['family']!r}")
    try:
        if "name" in raw:
            return named_system(str(raw["name"]), sigma), "fixed", sigma
        missing = {"A", "B", "Q", "R"} - set(raw)
        if missing:
            raise ConfigError(f"system is missing {sorted(missing)}")
        mats = {k: np.array(raw[k], dtype=float, ndmin=2) for k in ("A", "B", "Q", "R")}
        return LqrSystem(sigma=sigma, **mats), "fixed", sigma
    except (ValueError, LqrError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid system: {exc}") from None


def _shape_check(learners, sys: Optional[LqrSystem]):
    d, k = (1, 1) if sys is None else (sys.d, sys.k)
    for name, spec in learners.items():
        if not isinstance(spec, dict) or spec.get("kind") not in LEARNER_KINDS:
            raise ConfigError(f"learner {name!r} needs kind in {LEARNER_KINDS}")
        for key in ("K0", "K"):
            if key in spec:
                M = np.array(spec[key], dtype=float, ndmin=2)
                if M.shape != (k, d):
                    raise ConfigError(f"learner {name!r}: {key} has shape {M.shape}, expected {(k, d)}")
        if spec["kind"] == "fixed_k" and "K" not in spec:
            raise ConfigError(f"learner {name!r}: fixed_k needs K")


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("system", "learners", "T_grid", "n_seeds"):
        if key not in raw:
            raise ConfigError(f"config is missing {key!r}")
    system, family, sigma = _parse_system(raw["system"])
    learners = copy.deepcopy(raw["learners"])
    if not isinstance(learners, dict) or not learners:
        raise ConfigError("learners must be a non-empty mapping")
    _shape_check(learners, system)
    if "mode" in raw:
        _apply_mode(learners, raw["mode"])
    try:
        T_grid = [int(T) for T in raw["T_grid"]]
        n_seeds = int(raw["n_seeds"])
        base_seed = int(raw.get("base_seed", 0))
        checkpoints = [int(c) for c in raw.get("checkpoints", [])]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad numeric field: {exc}") from None
    if not T_grid or any(T < 1 for T in T_grid) or any(b <= a for a, b in zip(T_grid, T_grid[1:])):
        raise ConfigError("T_grid must be a strictly increasing list of positive integers")
    if n_seeds < 1:
        raise ConfigError("n_seeds must be positive")
    if base_seed < 0:
        raise ConfigError("base_seed must be non-negative")
    if any(c < 0 or c > T_grid[-1] for c in checkpoints):
        raise ConfigError("checkpoints must lie in [0, max T]")
    out = raw.get("output") or {}
    return ExperimentConfig(
        name=str(raw.get("name", "experiment")), learners=learners, T_grid=T_grid,
        n_seeds=n_seeds, base_seed=base_seed, system=system, family=family, sigma=sigma,
        checkpoints=checkpoints, paired=bool(raw.get("paired", False)),
        output_dir=out.get("dir"), dump_trajectory=bool(out.get("dump_trajectory", False)),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return parse_config(raw)
