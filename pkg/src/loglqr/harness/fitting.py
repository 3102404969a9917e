"""Regret-scaling fits: log-log exponent with a bootstrap interval, and the
``c log^2 T + c0`` versus ``c sqrt(T) + c0`` model comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientData

N_BOOT = 1000
BOOT_SEED = 20240601


@dataclass
class ExponentFit:
    beta: float
    ci: tuple
    intercept: float
    shift: float
    means: list

    def to_dict(self) -> dict:
        return {"beta": self.beta, "beta_ci": list(self.ci), "intercept": self.intercept,
                "shift": self.shift, "means": self.means}


def _grouped(curves_or_samples, T_grid):
    """Accept ``{T: array}``, a list of per-T arrays, or RegretCurve-like objects with
    ``T`` and ``final_regret``; return a list of float arrays aligned with T_grid."""
    T_grid = [int(T) for T in T_grid]
    if isinstance(curves_or_samples, dict):
        groups = [np.asarray(curves_or_samples[T], dtype=float) for T in T_grid]
    else:
        items = list(curves_or_samples)
        if items and hasattr(items[0], "final_regret"):
            by_T = {T: [] for T in T_grid}
            for c in items:
                if getattr(c, "failed", False):
                    continue
                if int(c.T) in by_T:
                    by_T[int(c.T)].append(c.final_regret)
            groups = [np.asarray(by_T[T], dtype=float) for T in T_grid]
        else:
            groups = [np.asarray(g, dtype=float) for g in items]
    if len(groups) != len(T_grid):
        raise InsufficientData("need one sample group per grid point")
    for T, g in zip(T_grid, groups):
        if g.size == 0:
            raise InsufficientData(f"no regret samples for T={T}")
    return T_grid, groups


def _check_grid(T_grid):
    if len(T_grid) < 3:
        raise InsufficientData(f"need at least 3 grid points, got {len(T_grid)}")
    if any(b <= a for a, b in zip(T_grid, T_grid[1:])):
        raise InsufficientData("T_grid must be strictly increasing")


def _shift_for(means) -> float:
    """0 when all means are positive; otherwise +1, or more if +1 is not enough."""
    lo = float(np.min(means))
    if lo > 0:
        return 0.0
    return 1.0 if lo + 1.0 > 0 else 1.0 - lo


def _loglog_slope(logT, means):
    shift = _shift_for(means)
    y = np.log(np.asarray(means) + shift)
    slope, intercept = np.polyfit(logT, y, 1)
    return float(slope), float(intercept), shift


def fit_exponent(curves, T_grid, n_boot: int = N_BOOT, seed: int = BOOT_SEED, level: float = 0.95) -> ExponentFit:
    """Least-squares slope of ``log(mean regret)`` against ``log T``.

    The interval is a percentile bootstrap: seeds are resampled with replacement within
    each grid point, ``n_boot`` times, and the slope is refitted.
    """
    T_grid, groups = _grouped(curves, T_grid)
    _check_grid(T_grid)
    logT = np.log(np.asarray(T_grid, dtype=float))
    means = np.array([g.mean() for g in groups])
    beta, intercept, shift = _loglog_slope(logT, means)
    rng = np.random.default_rng(seed)
    boots = np.empty(n_boot)
    for b in range(n_boot):
        bm = np.array([g[rng.integers(0, g.size, g.size)].mean() for g in groups])
        boots[b] = _loglog_slope(logT, bm)[0]
    alpha = (1.0 - level) / 2.0
    ci = (float(np.quantile(boots, alpha)), float(np.quantile(boots, 1.0 - alpha)))
    return ExponentFit(beta=beta, ci=ci, intercept=intercept, shift=shift, means=means.tolist())


def _linear_model_fit(x, y):
    X = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return float(coef[0]), float(coef[1]), r2


def _mean_curve(curves, T_grid):
    T_grid, groups = _grouped(curves, T_grid)
    _check_grid(T_grid)
    return np.asarray(T_grid, dtype=float), np.array([g.mean() for g in groups])


def fit_log_squared(curves, T_grid):
    """Fit ``R(T) = c log^2 T + c0`` to mean regrets; returns ``(c, r2)``."""
    T, means = _mean_curve(curves, T_grid)
    c, _, r2 = _linear_model_fit(np.log(T) ** 2, means)
    return c, r2


def fit_sqrt(curves, T_grid):
    """Fit ``R(T) = c sqrt(T) + c0`` to mean regrets; returns ``(c, r2)``."""
    T, means = _mean_curve(curves, T_grid)
    c, _, r2 = _linear_model_fit(np.sqrt(T), means)
    return c, r2
