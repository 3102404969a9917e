import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_stabilizable
from loglqr import (
    DimensionMismatch,
    InvalidBound,
    LqrSystem,
    NonConvergence,
    UnstableController,
    certificate_from_cost,
    closed_loop,
    cost_bounds,
    dare_residual,
    expected_regret_fixed_gain,
    infinite_horizon_cost,
    lqr,
    lyapunov_value_matrix,
    optimal_controller,
    optimal_cost,
    solve_dare,
    spectral_radius,
    state_covariance,
)
from loglqr.control import decay_ratios

A_LB = 1 / math.sqrt(5)


def scalar(a, b, sigma=1.0):
    return LqrSystem(A=[[a]], B=[[b]], Q=[[1.0]], R=[[1.0]], sigma=sigma)


def quadratic_root(a, b):
    # positive root of b^2 p^2 + (1 - a^2 - b^2) p - 1 = 0, plain textbook form
    if b == 0:
        return 1 / (1 - a * a)
    c = 1 - a * a - b * b
    return (-c + math.sqrt(c * c + 4 * b * b)) / (2 * b * b)


class TestSolveDare:
    def test_scalar_b_zero(self):
        sol = solve_dare(scalar(A_LB, 0.0))
        assert sol.P[0, 0] == pytest.approx(1.25, abs=1e-10)

    def test_zero_A_gives_Q(self, rng):
        Q = np.diag([2.0, 3.0, 0.5])
        sys = LqrSystem(A=np.zeros((3, 3)), B=rng.standard_normal((3, 2)), Q=Q, R=np.eye(2))
        assert np.allclose(solve_dare(sys).P, Q, atol=1e-12)

    def test_scalar_quadratic_oracle(self):
        sol = solve_dare(scalar(A_LB, 0.05))
        p = quadratic_root(A_LB, 0.05)
        assert sol.P[0, 0] == pytest.approx(p, abs=1e-10)
        assert p == pytest.approx(1.2490, abs=5e-5)

    def test_matches_scipy(self, rng):
        for _ in range(20):
            d, k = rng.integers(1, 6, size=2)
            sys = random_stabilizable(rng, d, k)
            ref = sla.solve_discrete_are(sys.A, sys.B, sys.Q, sys.R)
            P = solve_dare(sys).P
            assert np.allclose(P, ref, rtol=1e-7, atol=1e-8)
            assert dare_residual(sys, P) <= 1e-9

    def test_unstabilizable_does_not_converge(self):
        sys = LqrSystem(A=[[1.5]], B=[[0.0]], Q=[[1.0]], R=[[1.0]])
        with pytest.raises(NonConvergence):
            solve_dare(sys, max_iter=2000)

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            solve_dare(scalar(0.5, 1.0), tol=0)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 4), k=st.integers(1, 3))
    def test_residual_property(self, seed, d, k):
        sys = random_stabilizable(np.random.default_rng(seed), d, k)
        sol = solve_dare(sys)
        assert dare_residual(sys, sol.P) <= 1e-9
        assert np.allclose(sol.P, sol.P.T)
        assert np.linalg.eigvalsh(sol.P)[0] > 0
        K = optimal_controller(sys, sol)
        assert spectral_radius(closed_loop(sys, K)) < 1


class TestController:
    def test_zero_B(self):
        sys = LqrSystem(A=[[0.5, 0.1], [0.0, 0.3]], B=np.zeros((2, 1)), Q=np.eye(2), R=[[1.0]])
        _, K = lqr(sys)
        assert np.array_equal(K, np.zeros((1, 2)))

    def test_lower_bound_sign(self):
        _, K = lqr(scalar(A_LB, 0.03))
        assert K[0, 0] < 0
        _, K = lqr(scalar(A_LB, -0.03))
        assert K[0, 0] > 0

    def test_scalar_gain_value_and_bracket(self):
        b = 0.05
        p = quadratic_root(A_LB, b)
        _, K = lqr(scalar(A_LB, b))
        k = -A_LB * b * p / (1 + b * b * p)
        assert K[0, 0] == pytest.approx(k, abs=1e-10)
        assert K[0, 0] == pytest.approx(-0.02784, abs=5e-6)
        eps = b * b
        assert 0.99 * math.sqrt(eps / 5) <= abs(K[0, 0]) <= math.sqrt(eps / 3)

    def test_shape(self, rng):
        sys = random_stabilizable(rng, 4, 2)
        _, K = lqr(sys)
        assert K.shape == (2, 4)


class TestCosts:
    def test_scalar_zero_gain(self):
        for sigma in (0.5, 1.0, 3.0):
            J = infinite_horizon_cost(scalar(A_LB, 0.0, sigma), [[0.0]])
            assert J == pytest.approx(1.25 * sigma**2, rel=1e-12)

    def test_lower_bound_optimal_cost(self):
        for b in (0.001, 0.02, 0.05):
            sys = scalar(A_LB, b, sigma=2.0)
            _, K = lqr(sys)
            J = infinite_horizon_cost(sys, K)
            assert J <= 2 * sys.sigma**2
            assert J == pytest.approx(optimal_cost(sys), rel=1e-9)

    def test_unstable_gain(self):
        with pytest.raises(UnstableController):
            infinite_horizon_cost(scalar(0.9, 0.5), [[0.5]])

    def test_lyapunov_matches_scipy(self, rng):
        for _ in range(10):
            sys = random_stabilizable(rng, 3, 2)
            _, K = lqr(sys)
            M = closed_loop(sys, K)
            ref = sla.solve_discrete_lyapunov(M.T, sys.Q + K.T @ sys.R @ K)
            assert np.allclose(lyapunov_value_matrix(sys, K), ref, rtol=1e-9, atol=1e-10)

    def test_slow_closed_loop(self):
        # spectral radius 0.9999: plain fixed-point iteration would need ~10^5 steps
        sys = scalar(0.9999, 1.0)
        assert infinite_horizon_cost(sys, [[0.0]]) == pytest.approx(1 / (1 - 0.9999**2), rel=1e-9)

    def test_noise_covariance(self):
        sys = LqrSystem(A=[[0.5, 0], [0, 0.2]], B=np.eye(2), Q=np.eye(2), R=np.eye(2))
        W = np.diag([2.0, 0.5])
        P = lyapunov_value_matrix(sys, np.zeros((2, 2)))
        assert infinite_horizon_cost(sys, np.zeros((2, 2)), W) == pytest.approx(np.trace(P @ W))
        with pytest.raises(DimensionMismatch):
            infinite_horizon_cost(sys, np.zeros((2, 2)), np.eye(3))

    def test_state_covariance_brute_force(self, rng):
        sys = random_stabilizable(rng, 3, 1)
        _, K = lqr(sys)
        M = closed_loop(sys, K)
        W = sys.sigma**2 * np.eye(3)
        for n in (0, 1, 2, 7, 40):
            S = np.zeros((3, 3))
            for _ in range(n):
                S = W + M @ S @ M.T
            assert np.allclose(state_covariance(sys, K, n), S, atol=1e-12)

    def test_expected_regret_fixed_gain(self):
        sys = scalar(0.9, 0.5)
        P, K_star = lqr(sys)
        # optimal gain: regret is minus the terminal value term, which tends to -p * var(x);
        # J* carries the Riccati tolerance (1e-10) times T
        T = 5000
        p = lyapunov_value_matrix(sys, K_star)[0, 0]
        m = (0.9 + 0.5 * K_star[0, 0])
        var = 1 / (1 - m * m)
        assert expected_regret_fixed_gain(sys, K_star, T) == pytest.approx(-p * var, abs=T * 2e-10)
        # suboptimal gain, short horizon: scalar geometric sum for the terminal variance
        K = [[-0.2]]
        T = 30
        m = 0.9 - 0.5 * 0.2
        pK = lyapunov_value_matrix(sys, K)[0, 0]
        gap = infinite_horizon_cost(sys, K) - optimal_cost(sys)
        expected = T * gap - pK * (1 - m ** (2 * T)) / (1 - m * m)
        assert expected_regret_fixed_gain(sys, K, T) == pytest.approx(expected, rel=1e-9)


class TestCertificate:
    def test_examples(self):
        c = certificate_from_cost(2.0, 1.0, 1.0)
        assert c.kappa == pytest.approx(math.sqrt(2))
        assert c.gamma == pytest.approx(0.25)
        c = certificate_from_cost(0.7 * 4.0, 0.7, 2.0)
        assert (c.kappa, c.gamma) == (pytest.approx(1.0), pytest.approx(0.5))

    def test_kappa0_formula(self):
        nu0, alpha0, sigma = 4.6, 0.8, 1.3
        c = certificate_from_cost(nu0, alpha0, sigma)
        assert c.kappa == pytest.approx(math.sqrt(nu0 / (alpha0 * sigma**2)))

    def test_invalid(self):
        with pytest.raises(InvalidBound):
            certificate_from_cost(0.5, 1.0, 1.0)
        with pytest.raises(InvalidBound):
            certificate_from_cost(1.0, 0.0, 1.0)

    def test_decay_holds_for_optimal_controllers(self, rng):
        for _ in range(10):
            sys = random_stabilizable(rng, 3, 2, sigma=0.7)
            _, K = lqr(sys)
            alpha0, _ = cost_bounds(sys)
            cert = certificate_from_cost(optimal_cost(sys), alpha0, sys.sigma)
            assert np.all(decay_ratios(closed_loop(sys, K), cert) <= 1 + 1e-9)
            assert np.linalg.norm(K, 2) <= cert.kappa + 1e-9


class TestSpectralRadius:
    def test_examples(self):
        assert spectral_radius(np.eye(3)) == 1.0
        assert spectral_radius(np.zeros((2, 2))) == 0.0

    def test_lower_bound_contraction(self):
        for b in (0.01, 0.04):
            P, K = lqr(scalar(A_LB, b))
            m = A_LB + b * K[0, 0]
            assert abs(m) == pytest.approx(A_LB / (1 + b * b * P[0, 0]), rel=1e-9)
            assert abs(m) <= A_LB

    def test_non_square(self):
        with pytest.raises(DimensionMismatch):
            spectral_radius(np.zeros((2, 3)))


class TestSystem:
    def test_validation(self):
        with pytest.raises(DimensionMismatch):
            LqrSystem(A=np.eye(2), B=np.ones((3, 1)), Q=np.eye(2), R=[[1.0]])
        with pytest.raises(DimensionMismatch):
            LqrSystem(A=np.eye(2), B=np.ones((2, 1)), Q=np.eye(3), R=[[1.0]])
        with pytest.raises(ValueError):
            LqrSystem(A=np.eye(2), B=np.ones((2, 1)), Q=[[1.0, 2.0], [0.0, 1.0]], R=[[1.0]])
        with pytest.raises(ValueError):
            LqrSystem(A=np.eye(2), B=np.ones((2, 1)), Q=-np.eye(2), R=[[1.0]])
        with pytest.raises(ValueError):
            LqrSystem(A=np.eye(2), B=np.ones((2, 1)), Q=np.eye(2), R=[[1.0]], sigma=0.0)

    def test_read_only(self):
        sys = scalar(0.5, 1.0)
        with pytest.raises(ValueError):
            sys.A[0, 0] = 2.0

    def test_cost_bounds(self):
        sys = LqrSystem(A=np.eye(2), B=np.eye(2), Q=np.diag([0.5, 2.0]), R=np.diag([3.0, 1.0]))
        assert cost_bounds(sys) == (0.5, 3.0)
