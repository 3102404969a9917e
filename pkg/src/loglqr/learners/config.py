"""Learner configuration and the derived schedule/threshold parameters."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..control import LqrSystem
from ..errors import ConfigError, HorizonTooShort

MODES = ("theoretical", "practical")


@dataclass(frozen=True)
class LearnerConfig:
    """Known constants handed to a learner.

    ``alpha0, alpha1`` bound the cost matrices (``alpha0 I <= Q, R <= alpha1 I``),
    ``vartheta`` bounds ``||A*||`` and ``||B*||``, ``nu`` bounds ``J*`` and ``nu0``
    bounds ``J(K0)``.  ``C0`` and ``eps0`` are the certainty-equivalence perturbation
    constants (see :mod:`loglqr.learners.calibrate`).

    In practical mode the warm-up length, the state threshold and the ridge parameter
    are each multiplied by a shrink factor.  ``tau0_scale``, ``xb_scale`` and
    ``lambda_scale`` default to ``practical_scale``; they are separate knobs because
    the warm-up length scales like ``lambda / eps0^2`` while the threshold must stay
    well above the stationary state norm.
    """

    alpha0: float
    alpha1: float
    vartheta: float
    nu: float
    nu0: float
    C0: float
    eps0: float
    sigma: float
    T: int
    mode: str = "theoretical"
    practical_scale: float = 1e-3
    tau0_scale: Optional[float] = None
    xb_scale: Optional[float] = None
    lambda_scale: Optional[float] = None

    def __post_init__(self):
        for name in ("alpha0", "alpha1", "vartheta", "nu", "nu0", "sigma", "practical_scale"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {v!r}")
        for name in ("C0", "eps0"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be non-negative, got {v!r}")
        for name in ("tau0_scale", "xb_scale", "lambda_scale"):
            v = getattr(self, name)
            if v is not None and not (np.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        if self.alpha0 > self.alpha1:
            raise ConfigError("alpha0 must not exceed alpha1")
        if int(self.T) != self.T or self.T < 1:
            raise ConfigError(f"T must be a positive integer, got {self.T!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.nu0 < self.nu:
            warnings.warn("nu0 < nu: K0 is claimed to beat the optimal cost bound", stacklevel=3)

    @property
    def scales(self):
        """``(tau0, x_b, lambda)`` multipliers actually applied (all 1 in theoretical mode)."""
        if self.mode == "theoretical":
            return 1.0, 1.0, 1.0
        s = self.practical_scale
        pick = lambda v: s if v is None else v
        return pick(self.tau0_scale), pick(self.xb_scale), pick(self.lambda_scale)

    def check_against(self, sys: LqrSystem, tol: float = 1e-9) -> None:
        """Verify the cost and parameter bounds against a concrete system."""
        for name, M in (("Q", sys.Q), ("R", sys.R)):
            ev = np.linalg.eigvalsh(M)
            if ev[-1] > self.alpha1 * (1 + tol):
                raise ConfigError(f"||{name}|| = {ev[-1]:.6g} exceeds alpha1 = {self.alpha1:.6g}")
            if ev[0] < self.alpha0 * (1 - tol):
                raise ConfigError(f"||{name}^-1|| = {1 / ev[0]:.6g} exceeds 1/alpha0 = {1 / self.alpha0:.6g}")
        for name, M in (("A", sys.A), ("B", sys.B)):
            n = np.linalg.norm(M, 2)
            if n > self.vartheta * (1 + tol):
                raise ConfigError(f"||{name}|| = {n:.6g} exceeds vartheta = {self.vartheta:.6g}")
        if abs(self.sigma - sys.sigma) > tol * sys.sigma:
            raise ConfigError(f"config sigma {self.sigma} differs from system sigma {sys.sigma}")

    def replace(self, **changes) -> "LearnerConfig":
        d = asdict(self)
        d.update(changes)
        return LearnerConfig(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DerivedParams:
    kappa0: float
    kappa: float
    gamma: float
    tau0: int
    x_b: float
    lam: float
    n_T: int
    phase_starts: tuple
    mu0: Optional[float] = None
    mode: str = "theoretical"
    scales: tuple = (1.0, 1.0, 1.0)
    meta: dict = field(default_factory=dict)

    def mu(self, i: int) -> float:
        if self.mu0 is None:
            raise ValueError("mu_i is only defined for the unknown-B algorithm")
        return self.mu0 * 2.0 ** (-i)

    def phase_of(self, t: int) -> int:
        """Phase index ``i`` with ``tau_i <= t < tau_{i+1}``; ``-1`` during warm-up."""
        if t < self.phase_starts[0]:
            return -1
        for i in range(self.n_T, -1, -1):
            if t >= self.phase_starts[i]:
                return i
        return -1

    def to_dict(self) -> dict:
        out = asdict(self)
        out["phase_starts"] = list(self.phase_starts)
        out["scales"] = list(self.scales)
        return out


def phase_schedule(tau0: int, T: int):
    """``(n_T, starts)`` with ``starts = [tau0 4^i for i <= n_T] + [T + 1]``."""
    tau0, T = int(tau0), int(T)
    if tau0 < 1:
        raise ValueError("tau0 must be at least 1")
    if tau0 > T:
        raise HorizonTooShort(f"tau0 = {tau0} exceeds the horizon T = {T}")
    n_T = 0
    while tau0 * 4 ** (n_T + 1) <= T:
        n_T += 1
    starts = tuple(tau0 * 4**i for i in range(n_T + 1)) + (T + 1,)
    return n_T, starts


def kappas(cfg: LearnerConfig):
    floor = cfg.alpha0 * cfg.sigma**2
    if floor == 0.0:
        raise ConfigError("alpha0 * sigma^2 underflows; derive parameters at a nominal sigma")
    kappa0 = math.sqrt(cfg.nu0 / floor)
    kappa = math.sqrt((cfg.nu + cfg.eps0**2 * cfg.C0) / floor)
    if kappa < 1.0 or kappa0 < 1.0:
        raise ConfigError(
            f"nu/nu0 below alpha0*sigma^2 give kappa={kappa:.4g}, kappa0={kappa0:.4g} < 1;"
            " they cannot bound any stabilizing controller's cost"
        )
    return kappa0, kappa


def _tau0(dim, lam, cfg, scale):
    if cfg.eps0 <= 0:
        raise ConfigError("eps0 must be positive to size the warm-up")
    raw = 80.0 * dim * lam * (1.0 + cfg.vartheta**2) / (cfg.sigma**2 * cfg.eps0**2)
    return max(1, int(math.ceil(scale * raw)))


def _finish(cfg, kappa0, kappa, tau0, x_b, lam, mu0, scales):
    if tau0 >= cfg.T:
        raise HorizonTooShort(
            f"warm-up length tau0 = {tau0} does not fit in T = {cfg.T} ({cfg.mode} mode)"
        )
    n_T, starts = phase_schedule(tau0, cfg.T)
    return DerivedParams(
        kappa0=kappa0, kappa=kappa, gamma=1.0 / (2.0 * kappa**2), tau0=tau0, x_b=x_b,
        lam=lam, n_T=n_T, phase_starts=starts, mu0=mu0, mode=cfg.mode, scales=tuple(scales),
    )


def derive_params_alg_a(cfg: LearnerConfig, d: int) -> DerivedParams:
    """Parameters of the unknown-A algorithm for state dimension ``d``."""
    kappa0, kappa = kappas(cfg)
    s_tau, s_x, s_lam = cfg.scales
    base = 135.0 * d * kappa**2 * cfg.sigma**2 * max(kappa0**6, 4.0 * kappa**6) * math.log(3.0 * cfg.T)
    tau0 = _tau0(d, base, cfg, s_tau)
    return _finish(cfg, kappa0, kappa, tau0, s_x * base, s_lam * base, None, (s_tau, s_x, s_lam))


def derive_params_alg_b(cfg: LearnerConfig, d: int, k: int) -> DerivedParams:
    """Parameters of the unknown-B algorithm for state/action dimensions ``d, k``."""
    kappa0, kappa = kappas(cfg)
    s_tau, s_x, s_lam = cfg.scales
    x_b = (135.0 * d * kappa**2 * cfg.sigma**2
           * max((1.0 + cfg.vartheta) ** 2 * kappa0**6, 4.0 * kappa**6) * math.log(4.0 * cfg.T))
    lam = kappa**2 * x_b
    tau0 = _tau0(k, lam, cfg, s_tau)
    mu0 = 4.0 * kappa * cfg.C0 * cfg.eps0
    return _finish(cfg, kappa0, kappa, tau0, s_x * x_b, s_lam * lam, mu0, (s_tau, s_x, s_lam))
