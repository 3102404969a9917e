"""Riccati/Lyapunov solvers, optimal gains, average costs and strong stability."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidBound,
    LqrError,
    NonConvergence,
    SingularInnerMatrix,
    UnstableController,
)

# sigma at (or below) this value switches the simulator into noiseless mode
DETERMINISTIC_SIGMA = 1e-300

_SYM_RTOL = 1e-12
_COND_LIMIT = 1e14


def _as_matrix(name, value, shape=None):
    arr = np.array(value, dtype=float, ndmin=2)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix, got ndim={arr.ndim}")
    if shape is not None and arr.shape != shape:
        raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _check_spd(name, M):
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > _SYM_RTOL * scale:
        raise ValueError(f"{name} is not symmetric")
    if np.linalg.eigvalsh(M).min() <= 0:
        raise ValueError(f"{name} is not positive definite")


@dataclass(frozen=True, eq=False)
class LqrSystem:
    """True dynamics ``x' = A x + B u + w`` with ``w ~ N(0, sigma^2 I)`` and
    instantaneous cost ``x^T Q x + u^T R u``."""

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    sigma: float = 1.0

    def __post_init__(self):
        A = _as_matrix("A", self.A)
        d = A.shape[0]
        if A.shape != (d, d):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        B = np.array(self.B, dtype=float)
        if B.ndim == 1 and d == B.shape[0]:
            B = B.reshape(d, 1)
        B = _as_matrix("B", B)
        if B.shape[0] != d:
            raise DimensionMismatch(f"B has {B.shape[0]} rows, A is {d}x{d}")
        k = B.shape[1]
        Q = _as_matrix("Q", self.Q, (d, d))
        R = _as_matrix("R", self.R, (k, k))
        _check_spd("Q", Q)
        _check_spd("R", R)
        sigma = float(self.sigma)
        if not sigma > 0 or not np.isfinite(sigma):
            raise ValueError(f"sigma must be a positive finite number, got {self.sigma}")
        for name, value in (("A", A), ("B", B), ("Q", Q), ("R", R)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "sigma", sigma)

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @property
    def k(self) -> int:
        return self.B.shape[1]

    @property
    def deterministic(self) -> bool:
        return self.sigma <= DETERMINISTIC_SIGMA

    def replace(self, **changes) -> "LqrSystem":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "Q": self.Q.tolist(),
            "R": self.R.tolist(),
            "sigma": self.sigma,
        }


@dataclass(frozen=True)
class StabilityCertificate:
    """``(kappa, gamma)`` witnessing ``||(A+BK)^s|| <= kappa (1-gamma)^s``."""

    kappa: float
    gamma: float

    def __post_init__(self):
        if not self.kappa >= 1.0:
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")

    def decay_bound(self, s):
        return self.kappa * (1.0 - self.gamma) ** np.asarray(s, dtype=float)


@dataclass(frozen=True)
class RiccatiSolution:
    P: np.ndarray
    residual: float
    iterations: int


def riccati_map(sys: LqrSystem, P: np.ndarray) -> np.ndarray:
    """Right-hand side ``Q + A'PA - A'PB (R + B'PB)^{-1} B'PA``."""
    A, B = sys.A, sys.B
    PA = P @ A
    inner = sys.R + B.T @ P @ B
    return sys.Q + A.T @ PA - PA.T @ B @ np.linalg.solve(inner, B.T @ PA)


def dare_residual(sys: LqrSystem, P: np.ndarray) -> float:
    return float(np.linalg.norm(P - riccati_map(sys, P), 2))


def _check_inner(inner):
    ev = np.linalg.eigvalsh(0.5 * (inner + inner.T))
    if ev[0] <= 0 or ev[-1] > _COND_LIMIT * ev[0]:
        raise SingularInnerMatrix(f"R + B'PB is numerically singular (eigenvalues {ev})")


def solve_dare(sys: LqrSystem, tol: float = 1e-10, max_iter: int = 100_000) -> RiccatiSolution:
    """Solve the discrete algebraic Riccati equation by value iteration from ``P = Q``.

    Value iteration runs until one more application of the Riccati map moves ``P`` by at
    most ``tol`` in operator norm.  When the map contracts slowly that step size
    understates the distance to the fixed point, so the result is then polished with a
    few Newton (policy iteration) steps, which converge quadratically.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    A, B, Q, R = sys.A, sys.B, sys.Q, sys.R
    P = Q.copy()
    residual = np.inf
    for it in range(1, max_iter + 1):
        PA = P @ A
        inner = R + B.T @ P @ B
        _check_inner(inner)
        G = np.linalg.solve(inner, B.T @ PA)
        with np.errstate(over="ignore", invalid="ignore"):
            P_next = Q + A.T @ PA - PA.T @ B @ G
            P_next = 0.5 * (P_next + P_next.T)
        if not np.all(np.isfinite(P_next)):
            raise NonConvergence(f"Riccati iteration diverged after {it} iterations")
        residual = float(np.linalg.norm(P_next - P, 2))
        if residual <= tol:
            P, extra = _newton_polish(sys, P_next)
            return RiccatiSolution(P=P, residual=residual, iterations=it + extra)
        P = P_next
    raise NonConvergence(
        f"Riccati residual {residual:.3e} > tol {tol:.1e} after {max_iter} iterations"
    )


def _newton_polish(sys: LqrSystem, P, steps: int = 4):
    """Policy-iteration refinement of a converged value-iteration iterate."""
    for j in range(steps):
        try:
            K = optimal_controller(sys, P)
            P_new = lyapunov_value_matrix(sys, K, tol=1e-15)
        except (LqrError, np.linalg.LinAlgError):
            return P, j
        change = float(np.linalg.norm(P_new - P, 2))
        P = P_new
        if change <= 1e-14 * max(1.0, float(np.linalg.norm(P, 2))):
            return P, j + 1
    return P, steps


def optimal_controller(sys: LqrSystem, solution) -> np.ndarray:
    """Gain ``K = -(R + B'PB)^{-1} B'PA`` of shape (k, d)."""
    P = solution.P if isinstance(solution, RiccatiSolution) else np.asarray(solution, float)
    inner = sys.R + sys.B.T @ P @ sys.B
    _check_inner(inner)
    return -np.linalg.solve(inner, sys.B.T @ P @ sys.A)


def lqr(sys: LqrSystem, tol: float = 1e-10, max_iter: int = 100_000):
    """Return ``(P, K)`` for the optimal infinite-horizon controller of ``sys``."""
    sol = solve_dare(sys, tol=tol, max_iter=max_iter)
    return sol.P, optimal_controller(sys, sol)


def spectral_radius(M) -> float:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"spectral radius needs a square matrix, got {M.shape}")
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def closed_loop(sys: LqrSystem, K) -> np.ndarray:
    K = np.asarray(K, dtype=float).reshape(sys.k, sys.d)
    return sys.A + sys.B @ K


def lyapunov_value_matrix(sys: LqrSystem, K, tol: float = 1e-12, max_doublings: int = 200):
    """Solve ``P = Q + K'RK + (A+BK)' P (A+BK)``.

    Iterates the fixed-point map with squaring (the 2^j-th iterate is reached after j
    steps), so closed loops with spectral radius close to one still converge quickly.
    """
    K = np.asarray(K, dtype=float).reshape(sys.k, sys.d)
    M = sys.A + sys.B @ K
    rho = spectral_radius(M)
    if rho >= 1.0 - 1e-9:
        raise UnstableController(f"spectral radius of A+BK is {rho:.12f} >= 1")
    P = sys.Q + K.T @ sys.R @ K
    Mn = M
    for _ in range(max_doublings):
        inc = Mn.T @ P @ Mn
        P = P + inc
        P = 0.5 * (P + P.T)
        Mn = Mn @ Mn
        if not np.all(np.isfinite(P)):
            raise UnstableController("Lyapunov iteration overflowed")
        if np.linalg.norm(inc, 2) <= tol * max(1.0, np.linalg.norm(P, 2)):
            return P
    raise NonConvergence("Lyapunov iteration did not converge")


def infinite_horizon_cost(sys: LqrSystem, K, noise_cov=None) -> float:
    """Steady-state average cost ``tr(P_K W)``; ``W`` defaults to ``sigma^2 I``."""
    P = lyapunov_value_matrix(sys, K)
    if noise_cov is None:
        return float(sys.sigma**2 * np.trace(P))
    W = np.array(noise_cov, dtype=float, ndmin=2)
    if W.shape == (1, 1) and sys.d > 1:
        W = W[0, 0] * np.eye(sys.d)
    if W.shape != (sys.d, sys.d):
        raise DimensionMismatch(f"noise_cov has shape {W.shape}, expected {(sys.d, sys.d)}")
    return float(np.trace(P @ W))


def optimal_cost(sys: LqrSystem) -> float:
    """``J* = sigma^2 tr(P*)``."""
    return float(sys.sigma**2 * np.trace(solve_dare(sys).P))


def certificate_from_cost(J_bound: float, alpha0: float, sigma: float) -> StabilityCertificate:
    """Strong-stability parameters implied by an average-cost bound ``J(K) <= J_bound``:
    ``kappa = sqrt(J / (alpha0 sigma^2))`` and ``gamma = alpha0 sigma^2 / (2 J)``."""
    if not (alpha0 > 0 and sigma > 0):
        raise InvalidBound("alpha0 and sigma must be positive")
    floor = alpha0 * sigma**2
    if J_bound < floor:
        raise InvalidBound(f"J_bound={J_bound} is below alpha0*sigma^2={floor}")
    return StabilityCertificate(kappa=float(np.sqrt(J_bound / floor)), gamma=float(floor / (2 * J_bound)))


def decay_ratios(M, cert: StabilityCertificate, horizon: int = 50) -> np.ndarray:
    """``||M^s|| / (kappa (1-gamma)^s)`` for ``s = 1..horizon`` (all <= 1 when certified)."""
    M = np.asarray(M, dtype=float)
    out = np.empty(horizon)
    Ms = np.eye(M.shape[0])
    for s in range(1, horizon + 1):
        Ms = Ms @ M
        out[s - 1] = np.linalg.norm(Ms, 2) / cert.decay_bound(s)
    return out


def cost_bounds(sys: LqrSystem):
    """``(alpha0, alpha1)``: tightest constants with ``alpha0 I <= Q, R <= alpha1 I``."""
    eq = np.linalg.eigvalsh(sys.Q)
    er = np.linalg.eigvalsh(sys.R)
    return float(min(eq[0], er[0])), float(max(eq[-1], er[-1]))


def state_covariance(sys: LqrSystem, K, n: int, noise_cov=None) -> np.ndarray:
    """``E[x_{n+1} x_{n+1}^T] = sum_{s<n} M^s W M^s'`` under ``u = K x`` from ``x_1 = 0``.

    Uses binary doubling, so the cost is ``O(log n)`` matrix products.
    """
    K = np.asarray(K, dtype=float).reshape(sys.k, sys.d)
    M = sys.A + sys.B @ K
    W = sys.sigma**2 * np.eye(sys.d) if noise_cov is None else np.array(noise_cov, dtype=float, ndmin=2)
    S = np.zeros((sys.d, sys.d))  # sum over the first `m` powers
    Mm = np.eye(sys.d)  # M^m
    for bit in bin(int(n))[2:]:
        S = S + Mm @ S @ Mm.T
        Mm = Mm @ Mm
        if bit == "1":
            S = W + M @ S @ M.T
            Mm = M @ Mm
    return 0.5 * (S + S.T)


def expected_regret_fixed_gain(sys: LqrSystem, K, T: int) -> float:
    """Exact ``E[sum_{t<=T} c_t] - T J*`` for ``u = K x`` started at ``x_1 = 0``.

    Telescoping the value function ``x' P_K x`` gives
    ``E sum c_t = T sigma^2 tr(P_K) - tr(P_K Sigma_{T+1})``.
    """
    P = lyapunov_value_matrix(sys, K)
    J_K = sys.sigma**2 * float(np.trace(P))
    return float(T * (J_K - optimal_cost(sys)) - np.trace(P @ state_covariance(sys, K, T)))
