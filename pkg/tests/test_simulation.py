import csv

import numpy as np
import pytest

from loglqr import (
    LinearPolicy,
    LqrSystem,
    NumericOverflow,
    RngStream,
    Segment,
    certificate_from_cost,
    cost_bounds,
    infinite_horizon_cost,
    lqr,
    rollout,
    step,
)
from loglqr.harness.systems import benchmark2x2
from loglqr.simulation import instantaneous_cost, write_trajectory_csv


def test_step_deterministic():
    sys = LqrSystem(A=np.eye(2), B=np.eye(2), Q=np.eye(2), R=np.eye(2), sigma=1e-300)
    rng = RngStream(0, 0)
    assert np.array_equal(step(sys, [0, 0], [0, 0], rng), [0, 0])
    assert np.array_equal(step(sys, [1, 1], [1, 0], rng), [2, 1])
    assert rng.position == 4


def test_step_noise_covariance():
    sys = LqrSystem(A=np.eye(2), B=np.eye(2), Q=np.eye(2), R=np.eye(2), sigma=1.7)
    rng = RngStream(3, 1)
    samples = np.array([step(sys, [0, 0], [0, 0], rng) for _ in range(100_000)])
    cov = np.cov(samples.T)
    assert np.allclose(cov, sys.sigma**2 * np.eye(2), atol=0.03 * sys.sigma**2)


def test_instantaneous_cost():
    sys = benchmark2x2()
    assert instantaneous_cost(sys, [0, 0], [0, 0]) == 0.0
    assert instantaneous_cost(sys, [3, 4], [0, 0]) == 25.0
    lb = LqrSystem(A=[[0.4]], B=[[0.05]], Q=[[1.0]], R=[[1.0]])
    assert instantaneous_cost(lb, [2.0], [-3.0]) == 13.0


def test_zero_horizon():
    traj = rollout(benchmark2x2(), LinearPolicy(np.zeros((2, 2))), 0, RngStream(0, 0))
    assert traj.T == 0
    assert traj.states.shape == (1, 2) and traj.actions.shape == (0, 2)


def test_deterministic_stays_at_zero():
    sys = benchmark2x2(sigma=1e-300)
    traj = rollout(sys, LinearPolicy(np.zeros((2, 2))), 500, RngStream(0, 0))
    assert not traj.costs.any() and not traj.states.any()


def test_reproducible_bitwise():
    sys = benchmark2x2()
    _, K = lqr(sys)
    a = rollout(sys, LinearPolicy(K), 3000, RngStream(9, 4))
    b = rollout(sys, LinearPolicy(K), 3000, RngStream(9, 4))
    assert np.array_equal(a.costs, b.costs) and np.array_equal(a.states, b.states)


@pytest.mark.parametrize("backend", ["python", "cython"])
def test_segment_and_step_engines_agree(backend):
    if backend == "cython":
        pytest.importorskip("loglqr._kernels")
    sys = benchmark2x2(sigma=0.8)
    _, K = lqr(sys)
    seg = rollout(sys, LinearPolicy(K), 2000, RngStream(1, 2), backend=backend)
    per_step = rollout(sys, lambda t, x: K @ x, 2000, RngStream(1, 2))
    assert np.allclose(seg.states, per_step.states, rtol=1e-10, atol=1e-12)
    assert np.allclose(seg.costs, per_step.costs, rtol=1e-10, atol=1e-12)


def test_noise_is_time_indexed():
    sys = benchmark2x2(sigma=0.5)
    traj = rollout(sys, LinearPolicy(np.zeros((2, 2))), 100, RngStream(4, 4))
    w = traj.noise(sys)
    assert np.allclose(w, 0.5 * RngStream(4, 4).normals_at(0, 200).reshape(100, 2), atol=1e-12)


def test_noise_hook():
    sys = benchmark2x2()
    hook = lambda t, W: 0.0 * W
    traj = rollout(sys, LinearPolicy(np.zeros((2, 2))), 50, RngStream(0, 0), noise_hook=hook)
    assert not traj.states.any()


def test_initial_state():
    sys = benchmark2x2(sigma=1e-300)
    traj = rollout(sys, LinearPolicy(np.zeros((2, 2))), 3, RngStream(0, 0), x1=[1.0, 0.0])
    assert np.allclose(traj.states[1], sys.A @ [1.0, 0.0])


class _Explorer:
    """Segment policy adding scaled action noise."""

    def __init__(self, K, scale):
        self.K, self.scale = K, scale

    def plan(self, t, x):
        return Segment(K=self.K, stop=10**9, noise_scale=self.scale, feed=False)

    def finish(self, result):
        pass


@pytest.mark.parametrize("scale", [0.7, lambda t: t ** -0.25])
def test_action_noise(scale):
    sys = benchmark2x2()
    K = -0.1 * np.eye(2)
    traj = rollout(sys, _Explorer(K, scale), 300, RngStream(0, 1), action_rng=RngStream(0, 2))
    eta = RngStream(0, 2).normals_at(0, 600).reshape(300, 2)
    s = np.asarray(scale(np.arange(1, 301, dtype=float)) if callable(scale) else np.full(300, scale))
    assert np.allclose(traj.actions - traj.states[:-1] @ K.T, s[:, None] * eta, atol=1e-12)


def test_overflow_raises_and_records():
    sys = LqrSystem(A=[[3.0]], B=[[1.0]], Q=[[1.0]], R=[[1.0]])
    with pytest.raises(NumericOverflow) as info:
        rollout(sys, LinearPolicy([[0.0]]), 10_000, RngStream(0, 0))
    assert info.value.t is not None and info.value.t < 400
    traj = rollout(sys, LinearPolicy([[0.0]]), 10_000, RngStream(0, 0), on_overflow="record")
    assert traj.overflowed_at == info.value.t
    assert traj.T == traj.overflowed_at


def test_trajectory_csv(tmp_path):
    sys = benchmark2x2()
    traj = rollout(sys, LinearPolicy(np.zeros((2, 2))), 5, RngStream(0, 0))
    path = tmp_path / "traj.csv"
    write_trajectory_csv(traj, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "x0", "x1", "u0", "u1", "cost"]
    assert len(rows) == 1 + 5 + 1
    assert float(rows[3][5]) == traj.costs[2]
    assert np.allclose([float(v) for v in rows[-1][1:3]], traj.x_final)


def test_steady_state_cost():
    sys = benchmark2x2()
    K = np.array([[-0.3, -0.1], [0.0, -0.2]])
    traj = rollout(sys, LinearPolicy(K), 1_000_000, RngStream(21, 0), record=False)
    assert traj.costs.mean() == pytest.approx(infinite_horizon_cost(sys, K), rel=0.02)


def test_noise_bound_frequency():
    d, T, delta, sigma = 2, 10_000, 0.05, 1.3
    bound = sigma * np.sqrt(5 * d * np.log(T / delta))
    held = 0
    for s in range(500):
        w = sigma * RngStream(s, 77).normals_at(0, T * d).reshape(T, d)
        held += np.max(np.linalg.norm(w, axis=1)) <= bound
    assert held >= (1 - delta) * 500


def test_state_bound_under_certified_gain():
    sys = benchmark2x2(sigma=0.9)
    _, K = lqr(sys)
    alpha0, _ = cost_bounds(sys)
    cert = certificate_from_cost(infinite_horizon_cost(sys, K), alpha0, sys.sigma)
    traj = rollout(sys, LinearPolicy(K), 20_000, RngStream(2, 2))
    w_max = np.max(np.linalg.norm(traj.noise(sys), axis=1))
    assert np.max(np.linalg.norm(traj.states, axis=1)) <= cert.kappa / cert.gamma * w_max
