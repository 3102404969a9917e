import math

import numpy as np
import pytest

from loglqr import DimensionMismatch, InvariantViolation, LinearPolicy, NoPositiveRoot, RngStream, rollout, solve_dare
from loglqr.lowerbound import (
    A_LB,
    identity_residual,
    lower_bound_experiment,
    make_instance,
    regret_identity_check,
    scalar_riccati,
)
from loglqr.simulation import Trajectory


class TestInstance:
    def test_epsilon_examples(self):
        inst = make_instance(12000, 1.0, 1)
        assert inst.epsilon == pytest.approx(1 / (4 * math.sqrt(12000)), rel=1e-15)
        assert inst.epsilon == pytest.approx(2.2822e-3, abs=5e-8)
        assert abs(inst.b) == pytest.approx(4.777e-2, abs=5e-6)
        assert make_instance(160000, 1.0, -1).epsilon == 6.25e-4

    def test_sign_of_gain(self):
        assert make_instance(20000, 1.0, 1).k_star < 0
        assert make_instance(20000, 1.0, -1).k_star > 0

    def test_invariants_over_horizons(self):
        for T in np.geomspace(12000, 1e9, 40).astype(int):
            for chi in (1, -1):
                inst = make_instance(int(T), 2.5, chi)
                assert 1 <= inst.p_star <= 1.25
                assert inst.J_star <= 2 * inst.sigma**2
                assert abs(inst.closed_loop) <= A_LB
                lo, hi = 0.99 * math.sqrt(inst.epsilon / 5), math.sqrt(inst.epsilon / 3)
                assert lo <= abs(inst.k_star) <= hi

    def test_short_horizon_warns(self):
        with pytest.warns(UserWarning):
            inst = make_instance(10000, 1.0, 1)
        assert inst.epsilon == 1 / 400
        with pytest.warns(UserWarning), pytest.raises(InvariantViolation):
            make_instance(100, 1.0, 1)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            make_instance(20000, 1.0, 0)
        with pytest.raises(ValueError):
            make_instance(20000, -1.0, 1)


class TestScalarRiccati:
    def test_examples(self):
        assert scalar_riccati(A_LB, 0.0) == (pytest.approx(1.25, abs=1e-15), 0.0)
        assert scalar_riccati(0.0, 0.7) == (pytest.approx(1.0, abs=1e-15), 0.0)
        p, k = scalar_riccati(A_LB, 0.05)
        assert p == pytest.approx(1.2490, abs=5e-5)
        assert k == pytest.approx(-0.02784, abs=5e-6)

    def test_no_positive_root(self):
        with pytest.raises(NoPositiveRoot):
            scalar_riccati(1.0, 0.0)
        with pytest.raises(NoPositiveRoot):
            scalar_riccati(-2.0, 0.0)

    def test_root_satisfies_quadratic(self):
        for a, b in [(0.3, 1e-4), (1.5, 0.2), (-0.9, 3.0), (2.0, 1e-3)]:
            p, _ = scalar_riccati(a, b)
            assert b * b * p * p + (1 - a * a - b * b) * p - 1 == pytest.approx(0, abs=1e-9 * max(1, p * p * b * b))

    def test_grid_against_dare(self):
        from loglqr import LqrSystem

        for a in np.linspace(-1.5, 1.5, 20):
            for b in np.linspace(0.05, 2.0, 20) * np.where(np.arange(20) % 2, 1, -1):
                p, k = scalar_riccati(a, b)
                sol = solve_dare(LqrSystem(A=[[a]], B=[[b]], Q=[[1.0]], R=[[1.0]]))
                P = sol.P[0, 0]
                K = -(b * P * a) / (1 + b * b * P)
                assert abs(p - P) <= 1e-10 * max(1.0, P)
                assert abs(k - K) <= 1e-10 * max(1.0, abs(K))


def _run(inst, policy, T, seed=0, x1=None):
    return rollout(inst.system(), policy, T, RngStream(seed, 0), x1=x1)


class TestIdentity:
    def test_deterministic_optimal(self):
        inst = make_instance(20000, 1.0, 1)
        quiet = make_instance(20000, 1e-300, 1)
        traj = _run(quiet, LinearPolicy([[quiet.k_star]]), 500)
        assert not traj.states.any()
        # sigma enters lhs through J*; use the nominal sigma for the comparison
        lhs, rhs = regret_identity_check(traj, inst)
        assert lhs == pytest.approx(-500 * inst.p_star, rel=1e-15)
        assert rhs == 0.0
        assert lhs - rhs == pytest.approx(-500 * inst.p_star)

    def test_one_step_expansion(self):
        inst = make_instance(20000, 1e-300, -1)
        a, b, p, k = inst.a, inst.b, inst.p_star, inst.k_star
        traj = Trajectory(states=np.array([[0.0], [b]]), actions=np.array([[1.0]]),
                          costs=np.array([1.0]), x_final=np.array([b]))
        lhs, rhs = regret_identity_check(traj, inst)
        assert lhs == 1.0
        assert rhs == pytest.approx((1 + b * b * p) - b * b * p, abs=1e-15)
        assert identity_residual(traj, inst) == 0.0

    def test_residual_is_difference(self):
        inst = make_instance(40000, 1.3, 1)
        for policy, x1 in ((LinearPolicy([[0.2]]), [3.0]), (LinearPolicy([[inst.k_star]]), None)):
            traj = _run(inst, policy, 3000, seed=5, x1=x1)
            lhs, rhs = regret_identity_check(traj, inst)
            assert lhs - rhs == pytest.approx(identity_residual(traj, inst), rel=1e-9, abs=1e-8)

    def test_rejects_vector_paths(self):
        inst = make_instance(20000, 1.0, 1)
        traj = Trajectory(states=np.zeros((3, 2)), actions=np.zeros((2, 1)), costs=np.zeros(2),
                          x_final=np.zeros(2))
        with pytest.raises(DimensionMismatch):
            regret_identity_check(traj, inst)
        traj = Trajectory(states=None, actions=None, costs=np.zeros(2), x_final=np.zeros(1))
        with pytest.raises(ValueError):
            identity_residual(traj, inst)


def test_known_sign_oracle_has_flat_regret():
    rep = lower_bound_experiment({"kind": "oracle"}, [16384, 65536, 262144], n_seeds=8, name="oracle")
    assert [r["n_seeds"] for r in rep["rows"]] == [8, 8, 8]
    assert all(abs(r["mean_regret"]) < 5 for r in rep["rows"])
    assert rep["beta_ci"][0] <= 0.1


def test_experiment_sees_only_a():
    seen = []

    def factory(view):
        seen.append(view)
        return LinearPolicy([[0.0]])

    rep = lower_bound_experiment(factory, [12000], n_seeds=3, paired=False)
    assert "beta" not in rep
    assert {v.a for v in seen} == {A_LB} and [v.seed for v in seen] == [0, 1, 2]
    assert not hasattr(seen[0], "b")
