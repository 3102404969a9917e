"""Seeded rollouts of LQR systems.

Noise is indexed by time: ``w_t`` is ``sigma`` times normals ``(t-1)*d .. t*d-1`` of the
system-noise stream (offset by the stream's cursor at the start of the rollout), and
action-exploration noise ``eta_t`` is read the same way from a separate stream.  Two
learners rolled out with the same streams therefore see identical ``w_t``.

Policies come in two flavours:

* per-step: ``policy.act(t, x) -> u`` (or a plain callable ``policy(t, x)``), with an
  optional ``policy.observe(t, x, u, x_next)``;
* segment policies, which play a fixed linear gain over a stretch of time and are run
  through the compiled kernel: ``policy.plan(t, x) -> Segment`` and
  ``policy.finish(result: SegmentResult)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _core
from .control import LqrSystem
from .errors import DimensionMismatch, NumericOverflow
from .rng import RngStream

OVERFLOW_NORM = 1e150
CHUNK = 1 << 16


def step(sys: LqrSystem, x, u, rng: RngStream) -> np.ndarray:
    """``A x + B u + w`` with ``w ~ N(0, sigma^2 I)``; always consumes exactly d draws."""
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if x.shape[0] != sys.d or u.shape[0] != sys.k:
        raise DimensionMismatch(f"state/action sizes {x.shape[0]}/{u.shape[0]} vs system {sys.d}/{sys.k}")
    z = rng.normal(sys.d)
    w = np.zeros(sys.d) if sys.deterministic else sys.sigma * z
    return sys.A @ x + sys.B @ u + w


def instantaneous_cost(sys: LqrSystem, x, u) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if x.shape[0] != sys.d or u.shape[0] != sys.k:
        raise DimensionMismatch(f"state/action sizes {x.shape[0]}/{u.shape[0]} vs system {sys.d}/{sys.k}")
    return float(x @ sys.Q @ x + u @ sys.R @ u)


@dataclass
class Segment:
    """Play ``u_t = K x_t (+ noise_scale_t * eta_t)`` for ``t`` in ``[start, stop)``.

    ``x_limit`` stops the segment before any step whose state has ``||x_t||^2 > x_limit``.
    ``feed`` asks the engine to accumulate ``sum z z^T`` and ``sum x_{t+1} z^T`` with
    ``z = [x_t; u_t]``.
    """

    K: np.ndarray
    stop: int
    x_limit: float = np.inf
    noise_scale: Optional[object] = None  # scalar, array from segment start, or f(t)
    feed: bool = True


@dataclass
class SegmentResult:
    start: int
    end: int
    status: str  # "done" | "limit" | "overflow"
    gram: np.ndarray
    cross: np.ndarray
    x: np.ndarray

    @property
    def count(self) -> int:
        return self.end - self.start


@dataclass
class Trajectory:
    costs: np.ndarray
    states: Optional[np.ndarray] = None
    actions: Optional[np.ndarray] = None
    x_final: Optional[np.ndarray] = None
    aborted_at: Optional[int] = None
    abort_reason: Optional[str] = None
    overflowed_at: Optional[int] = None
    meta: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return int(self.costs.shape[0])

    def cumulative_cost(self) -> np.ndarray:
        return np.cumsum(self.costs)

    def noise(self, sys: LqrSystem) -> np.ndarray:
        """Realised ``w_t = x_{t+1} - A x_t - B u_t`` (needs recorded states and actions)."""
        if self.states is None or self.actions is None:
            raise ValueError("trajectory was rolled out without recording states/actions")
        X = self.states
        return X[1:] - X[:-1] @ sys.A.T - self.actions @ sys.B.T


def write_trajectory_csv(traj: Trajectory, path) -> None:
    if traj.states is None or traj.actions is None:
        raise ValueError("trajectory export needs recorded states and actions")
    d = traj.states.shape[1]
    k = traj.actions.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x{i}" for i in range(d)] + [f"u{i}" for i in range(k)] + ["cost"])
        for t in range(traj.T):
            row = [t + 1] + [repr(float(v)) for v in traj.states[t]]
            row += [repr(float(v)) for v in traj.actions[t]] + [repr(float(traj.costs[t]))]
            writer.writerow(row)
        writer.writerow([traj.T + 1] + [repr(float(v)) for v in traj.states[traj.T]] + [""] * (k + 1))


def _is_segment_policy(policy) -> bool:
    return hasattr(policy, "plan") and hasattr(policy, "finish")


def rollout(
    sys: LqrSystem,
    policy,
    T: int,
    rng: RngStream,
    x1=None,
    *,
    action_rng: Optional[RngStream] = None,
    record: bool = True,
    on_overflow: str = "raise",
    noise_hook=None,
    backend: Optional[str] = None,
) -> Trajectory:
    """Run ``T`` steps of ``policy`` on ``sys`` starting from ``x1`` (default 0).

    ``noise_hook(t0, W) -> W`` may rewrite each block of system noise (rows are
    ``w_{t0}, w_{t0+1}, ...``); it exists for diagnostics tests.
    """
    T = int(T)
    if T < 0:
        raise ValueError("T must be non-negative")
    if on_overflow not in ("raise", "record"):
        raise ValueError("on_overflow must be 'raise' or 'record'")
    x = np.zeros(sys.d) if x1 is None else np.array(x1, dtype=float).reshape(-1)
    if x.shape[0] != sys.d:
        raise DimensionMismatch(f"x1 has size {x.shape[0]}, system has d={sys.d}")
    if _is_segment_policy(policy):
        traj = _rollout_segments(sys, policy, T, rng, x, action_rng, record, noise_hook, backend)
    else:
        traj = _rollout_steps(sys, policy, T, rng, x, record, noise_hook)
    if hasattr(policy, "metadata"):
        traj.meta.update(policy.metadata())
    if traj.aborted_at is None:
        traj.aborted_at = getattr(policy, "aborted_at", None)
        traj.abort_reason = getattr(policy, "abort_reason", None)
    if traj.overflowed_at is not None and on_overflow == "raise":
        raise NumericOverflow(f"state norm exceeded {OVERFLOW_NORM:g} at t={traj.overflowed_at}",
                              t=traj.overflowed_at)
    return traj


def _system_noise(sys, rng, offset, t, n, noise_hook):
    d = sys.d
    if sys.deterministic:
        W = np.zeros((n, d))
    else:
        W = sys.sigma * rng.normals_at(offset + (t - 1) * d, n * d).reshape(n, d)
    if noise_hook is not None:
        W = np.ascontiguousarray(noise_hook(t, W), dtype=float)
    return W


def _rollout_steps(sys, policy, T, rng, x, record, noise_hook):
    d, k = sys.d, sys.k
    act = policy.act if hasattr(policy, "act") else policy
    observe = getattr(policy, "observe", None)
    costs = np.empty(T)
    states = np.empty((T + 1, d)) if record else None
    actions = np.empty((T, k)) if record else None
    offset = rng.position
    overflowed = None
    for t in range(1, T + 1):
        if record:
            states[t - 1] = x
        u = np.asarray(act(t, x), dtype=float).reshape(-1)
        if u.shape[0] != k:
            raise DimensionMismatch(f"policy returned an action of size {u.shape[0]}, expected {k}")
        costs[t - 1] = instantaneous_cost(sys, x, u)
        if record:
            actions[t - 1] = u
        W = _system_noise(sys, rng, offset, t, 1, noise_hook)
        x_next = sys.A @ x + sys.B @ u + W[0]
        if observe is not None:
            observe(t, x, u, x_next)
        x = x_next
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > OVERFLOW_NORM:
            overflowed = t
            costs = costs[:t]
            if record:
                states = states[: t + 1]
                actions = actions[:t]
            break
    rng.position = offset + len(costs) * d
    if record:
        states[len(costs)] = x
    return Trajectory(costs=costs, states=states, actions=actions, x_final=x.copy(),
                      overflowed_at=overflowed)


def _rollout_segments(sys, policy, T, rng, x, action_rng, record, noise_hook, backend):
    _, kernel = _core.get_backend(backend)
    d, k = sys.d, sys.k
    m = d + k
    A = np.ascontiguousarray(sys.A)
    B = np.ascontiguousarray(sys.B)
    Q = np.ascontiguousarray(sys.Q)
    R = np.ascontiguousarray(sys.R)
    costs = np.empty(T)
    states = np.empty((T + 1, d)) if record else None
    actions = np.empty((T, k)) if record else None
    no_states = np.empty((0, d))
    no_actions = np.empty((0, k))
    w_offset = rng.position
    a_offset = action_rng.position if action_rng is not None else 0
    x = np.ascontiguousarray(x, dtype=float).copy()
    overflowed = None
    t = 1
    while t <= T:
        seg = policy.plan(t, x.copy())
        stop = min(int(seg.stop), T + 1)
        if stop <= t:
            raise ValueError(f"policy planned an empty segment at t={t}")
        K = np.ascontiguousarray(np.asarray(seg.K, dtype=float).reshape(k, d))
        G = np.zeros((m, m))
        C = np.zeros((d, m))
        start = t
        status = "done"
        while t < stop:
            n = min(CHUNK, stop - t)
            W = _system_noise(sys, rng, w_offset, t, n, noise_hook)
            if seg.noise_scale is not None:
                if action_rng is None:
                    raise ValueError("segment requests action noise but no action_rng was given")
                E = action_rng.normals_at(a_offset + (t - 1) * k, n * k).reshape(n, k)
                escale = np.broadcast_to(
                    np.asarray(_scale_slice(seg.noise_scale, t, start, n), dtype=float), (n,)
                ).copy()
            else:
                E = no_actions
                escale = np.empty(0)
            st = states[t - 1 : t - 1 + n] if record else no_states
            ac = actions[t - 1 : t - 1 + n] if record else no_actions
            done, code = kernel(A, B, Q, R, K, x, W, E, escale, float(seg.x_limit),
                                costs[t - 1 : t - 1 + n], st, ac, G, C, bool(seg.feed))
            t += done
            if code == 1:
                status = "limit"
                break
            if code == 2:
                status = "overflow"
                overflowed = t - 1
                break
        policy.finish(SegmentResult(start=start, end=t, status=status, gram=G, cross=C, x=x.copy()))
        if overflowed is not None:
            break
    n_done = t - 1
    if overflowed is not None:
        costs = costs[:n_done]
        if record:
            states = states[: n_done + 1]
            actions = actions[:n_done]
    if record:
        states[n_done] = x
    rng.position = w_offset + n_done * d
    if action_rng is not None:
        action_rng.position = a_offset + n_done * k
    return Trajectory(costs=costs, states=states, actions=actions, x_final=x.copy(),
                      overflowed_at=overflowed)


def _scale_slice(scale, t, start, n):
    """Per-step exploration scales for steps ``t .. t+n-1`` of a segment begun at ``start``.

    ``scale`` is a constant, an array indexed from the segment start, or a callable of
    the absolute time indices.
    """
    if callable(scale):
        return scale(np.arange(t, t + n, dtype=float))
    if np.isscalar(scale):
        return float(scale)
    arr = np.asarray(scale, dtype=float)
    if arr.ndim == 0:
        return float(arr)
    return arr[t - start : t - start + n]


class LinearPolicy:
    """Fixed gain ``u = K x`` as a segment policy (kernel-driven)."""

    def __init__(self, K):
        self.K = np.array(K, dtype=float, ndmin=2)

    def plan(self, t, x):
        return Segment(K=self.K, stop=np.iinfo(np.int64).max, feed=False)

    def finish(self, result):
        pass

    def act(self, t, x):
        return self.K @ x
