"""Online ridge regression for ``y_{t+1} = Theta z_t + w_t`` with confidence radii."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch


class RlsEstimator:
    """Regularized least squares with running Gram ``V = lam I + sum z z^T`` and
    cross-moment ``S = sum y z^T``.

    Estimates are produced by a fresh linear solve, ``Theta_hat = S V^{-1}``; nothing
    is inverted incrementally.
    """

    def __init__(self, d: int, m: int, lam: float):
        if not lam > 0:
            raise ValueError(f"lambda must be positive, got {lam}")
        self.d = int(d)
        self.m = int(m)
        self.lam = float(lam)
        self.V = self.lam * np.eye(self.m)
        self.S = np.zeros((self.d, self.m))
        self.samples = 0

    def __repr__(self):
        return f"RlsEstimator(d={self.d}, m={self.m}, lam={self.lam:g}, samples={self.samples})"

    def copy(self) -> "RlsEstimator":
        other = RlsEstimator(self.d, self.m, self.lam)
        other.V = self.V.copy()
        other.S = self.S.copy()
        other.samples = self.samples
        return other

    def update(self, z, y) -> "RlsEstimator":
        z = np.asarray(z, dtype=float).reshape(-1)
        y = np.asarray(y, dtype=float).reshape(-1)
        if z.shape[0] != self.m or y.shape[0] != self.d:
            raise DimensionMismatch(
                f"expected z in R^{self.m} and y in R^{self.d}, got {z.shape[0]} and {y.shape[0]}"
            )
        self.V += np.outer(z, z)
        self.S += np.outer(y, z)
        self.samples += 1
        return self

    def absorb(self, gram, cross, count: int) -> "RlsEstimator":
        """Add pre-summed ``sum z z^T`` and ``sum y z^T`` over ``count`` samples."""
        gram = np.asarray(gram, dtype=float)
        cross = np.asarray(cross, dtype=float)
        if gram.shape != (self.m, self.m) or cross.shape != (self.d, self.m):
            raise DimensionMismatch("gram/cross shapes do not match the estimator")
        self.V += 0.5 * (gram + gram.T)
        self.S += cross
        self.samples += int(count)
        return self

    def estimate(self) -> np.ndarray:
        return np.linalg.solve(self.V, self.S.T).T

    def log_det_ratio(self) -> float:
        """``log det(V_t) - log det(V_1)`` with ``V_1 = lam I``."""
        sign, logdet = np.linalg.slogdet(self.V)
        return float(logdet - self.m * np.log(self.lam))

    def confidence_bound(self, delta: float, sigma: float, d: int | None = None,
                         theta_frob_sq: float = 0.0) -> float:
        """Bound on ``tr(Delta^T V_t Delta)`` holding w.p. ``1 - delta`` uniformly in t:
        ``4 sigma^2 d log((d/delta) det V_t / det V_1) + 2 lam ||Theta||_F^2``."""
        if not 0 < delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        d = self.d if d is None else int(d)
        return float(
            4.0 * sigma**2 * d * (np.log(d / delta) + self.log_det_ratio())
            + 2.0 * self.lam * theta_frob_sq
        )

    def weighted_error(self, theta_true) -> float:
        """``tr(Delta^T V Delta)`` with ``Delta = theta_true - estimate`` (ground-truth diagnostic)."""
        delta = np.asarray(theta_true, dtype=float) - self.estimate()
        return float(np.trace(delta @ self.V @ delta.T))

    def gram_min_eigenvalue(self) -> float:
        """Smallest eigenvalue of the unregularized Gram ``V - lam I``."""
        return float(np.linalg.eigvalsh(self.V - self.lam * np.eye(self.m))[0])


def update(est: RlsEstimator, z, y) -> RlsEstimator:
    return est.update(z, y)


def estimate(est: RlsEstimator) -> np.ndarray:
    return est.estimate()


def confidence_bound(est: RlsEstimator, delta, sigma, d, theta_frob_sq) -> float:
    return est.confidence_bound(delta, sigma, d, theta_frob_sq)


def gram_min_eigenvalue(est: RlsEstimator) -> float:
    return est.gram_min_eigenvalue()
