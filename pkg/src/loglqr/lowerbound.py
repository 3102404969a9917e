"""The degenerate scalar family ``x' = a x + b u + w`` with ``a = 1/sqrt(5)`` and
``b = chi sqrt(eps)``, ``eps = T^{-1/2} / 4``, on which every learner pays order
``sqrt(T)`` regret.

The optimal gain has magnitude about ``sqrt(eps / 5)`` and its sign is set by the
unknown ``chi``, so a learner must spend exploration to find out which way to push.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .control import LqrSystem
from .errors import DimensionMismatch, InvariantViolation, NoPositiveRoot
from .simulation import Trajectory

A_LB = 1.0 / math.sqrt(5.0)
MIN_T = 12000


def scalar_riccati(a: float, b: float):
    """``(p*, k*)`` for ``x' = a x + b u + w`` with unit state and action costs.

    ``p*`` is the positive root of ``b^2 p^2 + (1 - a^2 - b^2) p - 1 = 0``, evaluated in
    a cancellation-free form, and ``k* = -a b p* / (1 + b^2 p*)``.
    """
    a, b = float(a), float(b)
    c = 1.0 - a * a - b * b
    if b == 0.0:
        if abs(a) >= 1.0:
            raise NoPositiveRoot(f"|a| = {abs(a)} >= 1 with b = 0 has no stabilizing solution")
        p = 1.0 / c
    else:
        s = math.sqrt(c * c + 4.0 * b * b)
        p = 2.0 / (c + s) if c >= 0 else (s - c) / (2.0 * b * b)
    k = -a * b * p / (1.0 + b * b * p)
    return p, k


@dataclass(frozen=True)
class LowerBoundInstance:
    a: float
    epsilon: float
    chi: int
    sigma: float
    T: int
    b: float
    p_star: float
    k_star: float

    @property
    def J_star(self) -> float:
        return self.sigma**2 * self.p_star

    @property
    def closed_loop(self) -> float:
        return self.a + self.b * self.k_star

    def system(self) -> LqrSystem:
        return LqrSystem(A=[[self.a]], B=[[self.b]], Q=[[1.0]], R=[[1.0]], sigma=self.sigma)

    def check_invariants(self) -> None:
        eps = self.epsilon
        problems = []
        if eps > 1.0 / 400.0:
            problems.append(f"epsilon {eps} > 1/400")
        if not 1.0 <= self.p_star <= 1.25:
            problems.append(f"p* = {self.p_star} outside [1, 5/4]")
        lo, hi = 0.99 * math.sqrt(eps / 5.0), math.sqrt(eps / 3.0)
        if not lo <= abs(self.k_star) <= hi:
            problems.append(f"|k*| = {abs(self.k_star)} outside [{lo}, {hi}]")
        if self.k_star != 0 and np.sign(self.k_star) != -self.chi:
            problems.append("sign(k*) != -chi")
        if self.p_star > 2.0:
            problems.append("J(k*) exceeds 2 sigma^2")
        if abs(self.closed_loop) > abs(self.a) + 1e-15:
            problems.append("|a + b k*| exceeds |a|")
        if problems:
            raise InvariantViolation("; ".join(problems))


def make_instance(T: int, sigma: float, chi: int, strict: bool = True) -> LowerBoundInstance:
    """Build the family member for horizon ``T`` and sign ``chi``.

    Horizons below 12000 are allowed with a warning; they can push ``eps`` above 1/400
    and then the invariant check fails.
    """
    if chi not in (1, -1):
        raise ValueError("chi must be +1 or -1")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if T < MIN_T:
        warnings.warn(f"T = {T} is below {MIN_T}; the instance brackets may not hold", stacklevel=2)
    eps = 0.25 / math.sqrt(T)
    b = chi * math.sqrt(eps)
    p, k = scalar_riccati(A_LB, b)
    inst = LowerBoundInstance(a=A_LB, epsilon=eps, chi=chi, sigma=float(sigma), T=int(T), b=b,
                              p_star=p, k_star=k)
    if strict:
        inst.check_invariants()
    return inst


def _scalar_path(traj: Trajectory):
    if traj.states is None or traj.actions is None:
        raise ValueError("identity check needs recorded states and actions")
    if traj.states.ndim != 2 or traj.states.shape[1] != 1 or traj.actions.shape[1] != 1:
        raise DimensionMismatch("the regret identity applies to scalar trajectories")
    return traj.states[:, 0], traj.actions[:, 0]


def regret_identity_check(traj: Trajectory, inst: LowerBoundInstance):
    """Both sides of the pathwise regret decomposition.

    ``lhs = sum_t (x_t^2 + u_t^2 - sigma^2 p*)`` and
    ``rhs = sum_t (1 + b^2 p*) (u_t - k* x_t)^2 + p* x_1^2 - p* x_{T+1}^2``.
    Their difference is the zero-mean term returned by :func:`identity_residual`.
    """
    x, u = _scalar_path(traj)
    p, k, b = inst.p_star, inst.k_star, inst.b
    sig2 = 0.0 if inst.sigma <= 1e-150 else inst.sigma**2
    T = u.shape[0]
    lhs = float(np.sum(x[:T] ** 2 + u**2) - T * sig2 * p)
    rhs = float(np.sum((1.0 + b * b * p) * (u - k * x[:T]) ** 2) + p * x[0] ** 2 - p * x[T] ** 2)
    return lhs, rhs


def identity_residual(traj: Trajectory, inst: LowerBoundInstance) -> float:
    """``sum_t p* (w_t^2 - sigma^2) + 2 sum_t p* w_t (a x_t + b u_t)``, which equals
    ``lhs - rhs`` exactly and has mean zero."""
    x, u = _scalar_path(traj)
    T = u.shape[0]
    drift = inst.a * x[:T] + inst.b * u
    w = x[1:] - drift
    p = inst.p_star
    sig2 = 0.0 if inst.sigma <= 1e-150 else inst.sigma**2
    return float(p * np.sum(w**2 - sig2) + 2.0 * p * np.sum(w * drift))


def lower_bound_experiment(learner_factory, T_grid, n_seeds: int, sigma: float = 1.0,
                           base_seed: int = 0, paired: bool = True, workers: int = 1,
                           name: str = "learner") -> dict:
    """Regret scaling on randomized instances (``chi = +-1`` per seed).

    ``learner_factory`` is a learner spec mapping (see ``loglqr.harness.experiment``)
    or a callable ``f(view) -> policy`` that receives only ``a``, ``sigma``, ``T`` and
    the seed index.  Returns ``{"rows": [...], "beta": ..., "beta_ci": [...]}`` with
    failed runs excluded and counted.
    """
    from .harness.experiment import TrialSpec, run_trials
    from .harness.fitting import fit_exponent

    specs = [
        TrialSpec(learner_name=name, learner=learner_factory, T=int(T), seed=s, base_seed=base_seed,
                  family="lowerbound", sigma=sigma, checkpoints=(int(T),), paired=paired)
        for T in T_grid for s in range(n_seeds)
    ]
    curves = run_trials(specs, workers=workers)
    rows, groups = [], {}
    for T in T_grid:
        ok = [c for c in curves if c.T == T and not c.failed]
        vals = np.array([c.final_regret for c in ok])
        groups[int(T)] = vals
        rows.append({
            "T": int(T), "n_seeds": int(vals.size),
            "n_failed": int(sum(1 for c in curves if c.T == T and c.failed)),
            "mean_regret": float(vals.mean()) if vals.size else float("nan"),
            "stderr": float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else float("nan"),
        })
    report = {"learner": name, "sigma": sigma, "paired": paired, "rows": rows}
    if len(T_grid) >= 3 and all(g.size for g in groups.values()):
        fit = fit_exponent(groups, list(groups))
        report["beta"] = fit.beta
        report["beta_ci"] = list(fit.ci)
    return report
