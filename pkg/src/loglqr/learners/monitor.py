"""Ground-truth diagnostics: did a run land in the high-probability "good" events?

The events are evaluated on a recorded trajectory with access to the true system.
The learners never consult this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..control import LqrSystem
from ..simulation import Trajectory
from .config import DerivedParams


@dataclass(frozen=True)
class GroundTruth:
    sys: LqrSystem
    K0: np.ndarray
    vartheta: float
    eta: Optional[np.ndarray] = None  # realised exploration noise added to K0 x_t (unknown-B only)


@dataclass
class MonitorReport:
    events: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(self.events.values())


def _min_eig(M) -> float:
    if M.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


def _prefix_grams(Z, stops):
    """``sum_{t < s} z_t z_t^T`` (1-based t) for each ``s`` in ``stops`` (non-decreasing)."""
    out = []
    acc = np.zeros((Z.shape[1], Z.shape[1]))
    done = 0
    for s in stops:
        hi = min(s - 1, Z.shape[0])
        if hi > done:
            block = Z[done:hi]
            acc = acc + block.T @ block
            done = hi
        out.append(acc.copy())
    return out


def _ols_slack(Z, Y, theta, lam, stops, sigma, d, log_const, T, frob_term):
    """Worst ``bound - tr(Delta V Delta^T)`` over the estimation times in ``stops``."""
    m = Z.shape[1]
    grams = _prefix_grams(Z, stops)
    worst = np.inf
    for s, G in zip(stops, grams):
        hi = min(s - 1, Z.shape[0])
        V = lam * np.eye(m) + G
        S = Y[:hi].T @ Z[:hi]
        est = np.linalg.solve(V, S.T).T
        delta = est - theta
        value = float(np.trace(delta @ V @ delta.T))
        _, logdet = np.linalg.slogdet(V)
        ratio = logdet - m * np.log(lam)
        bound = 4 * sigma**2 * d * (np.log(log_const * float(T) ** 3) + ratio) + 2 * lam * frob_term
        worst = min(worst, bound - value)
    return worst


def good_event_monitor(traj: Trajectory, params: DerivedParams, truth: GroundTruth) -> MonitorReport:
    """Evaluate the estimation, exploration and noise-size events on one run.

    The unknown-A events are used when ``params.mu0`` is None, otherwise the unknown-B
    events (which add the virtual-action exploration and action-noise size events).
    The estimation event is checked at every phase start and at the horizon.
    """
    if traj.states is None or traj.actions is None:
        raise ValueError("the monitor needs a trajectory with recorded states and actions")
    sys = truth.sys
    d, k = sys.d, sys.k
    T = traj.T
    sigma = 0.0 if sys.deterministic else sys.sigma
    X = traj.states[:-1]
    U = traj.actions
    Xn = traj.states[1:]
    W = traj.noise(sys)
    starts = [s for s in params.phase_starts[:-1] if s <= T + 1]
    stops = starts + [T + 1]
    alg_b = params.mu0 is not None
    c = 4.0 if alg_b else 3.0
    report = MonitorReport()

    # noise size
    w_bound = sigma * np.sqrt(15 * d * np.log(c * T)) if T > 0 else 0.0
    w_max = float(np.max(np.linalg.norm(W, axis=1))) if T > 0 else 0.0
    report.margins["w"] = w_bound - w_max
    report.events["w"] = w_max <= w_bound

    # state exploration
    if not alg_b:
        grams = _prefix_grams(X, starts)
        slack = min(_min_eig(G) - (s - 1) * sigma**2 / 40 for s, G in zip(starts, grams))
    else:
        slack = np.inf
        for i in range(1, len(starts)):
            lo, hi = starts[i - 1], starts[i]
            block = X[lo - 1 : hi - 1]
            slack = min(slack, _min_eig(block.T @ block) - (hi - lo) * sigma**2 / 40)
    report.margins["x"] = float(slack)
    report.events["x"] = slack >= 0

    # estimation
    if not alg_b:
        Y = Xn - U @ sys.B.T
        slack = _ols_slack(X, Y, sys.A, params.lam, stops, sigma, d, 3.0, T,
                           d * truth.vartheta**2)
    else:
        Y = Xn - X @ sys.A.T
        slack = _ols_slack(U, Y, sys.B, params.lam, stops, sigma, d, 4.0, T,
                           k * truth.vartheta**2)
    report.margins["ols"] = float(slack)
    report.events["ols"] = slack >= 0

    if alg_b:
        if truth.eta is None:
            raise ValueError("unknown-B diagnostics need the realised exploration noise")
        eta = np.asarray(truth.eta, dtype=float).reshape(-1, k)[:T]
        U_virtual = X @ np.asarray(truth.K0, dtype=float).reshape(k, d).T + eta
        grams = _prefix_grams(U_virtual, starts)
        slack = min(_min_eig(G) - (s - 1) * sigma**2 / 40 for s, G in zip(starts, grams))
        report.margins["u"] = float(slack)
        report.events["u"] = slack >= 0
        eta_bound = sigma * np.sqrt(15 * d * np.log(4.0 * T)) if T > 0 else 0.0
        eta_max = float(np.max(np.linalg.norm(eta, axis=1))) if T > 0 else 0.0
        report.margins["eta"] = eta_bound - eta_max
        report.events["eta"] = eta_max <= eta_bound
    return report
