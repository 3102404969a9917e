"""Phased certainty-equivalence learners with an abort fallback.

``AlgorithmAPolicy`` knows ``B*`` and estimates ``A*``; ``AlgorithmBPolicy`` knows
``A*``, estimates ``B*`` and runs an adaptive noisy warm-up until the estimated gain is
visibly non-degenerate.  Both re-estimate only at the phase starts
``tau_i = tau0 4^i`` and play one gain per phase, so they run as segment policies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..control import LqrSystem, lqr
from ..errors import DimensionMismatch, LqrError
from ..estimation import RlsEstimator
from ..simulation import Segment
from .config import DerivedParams, LearnerConfig

FOREVER = np.iinfo(np.int64).max

# abort reason codes
ABORT_STATE = "state"
ABORT_GAIN = "gain"
ABORT_DARE = "dare"


@dataclass
class PhaseRecord:
    phase: int
    tau: int
    theta: np.ndarray
    K: Optional[np.ndarray]
    gain_norm: float
    warmup: bool = False
    test_value: Optional[float] = None
    threshold: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "phase": self.phase, "tau": self.tau, "gain_norm": self.gain_norm,
            "warmup": self.warmup, "test_value": self.test_value, "threshold": self.threshold,
        }


def synthesize(A, B, Q, R) -> np.ndarray:
    """Certainty-equivalent gain ``K(A, B)`` for the given cost matrices."""
    _, K = lqr(LqrSystem(A=A, B=B, Q=Q, R=R))
    return K


class _PhasedLearner:
    algorithm = "?"

    def __init__(self, cfg: LearnerConfig, params: DerivedParams, K0, Q, R,
                 estimate_hook: Optional[Callable] = None):
        self.cfg = cfg
        self.params = params
        self.Q = np.array(Q, dtype=float, ndmin=2)
        self.R = np.array(R, dtype=float, ndmin=2)
        self.d = self.Q.shape[0]
        self.k = self.R.shape[0]
        self.K0 = np.array(K0, dtype=float, ndmin=2)
        if self.K0.shape != (self.k, self.d):
            raise DimensionMismatch(f"K0 has shape {self.K0.shape}, expected {(self.k, self.d)}")
        self.estimate_hook = estimate_hook
        self.phase = -1
        self.current_K = self.K0
        self.aborted = False
        self.aborted_at: Optional[int] = None
        self.abort_reason: Optional[str] = None
        self.history: list[PhaseRecord] = []
        self._feeding = False

    # ---- shared pieces -------------------------------------------------
    def _abort(self, t: int, reason: str) -> None:
        if not self.aborted:
            self.aborted = True
            self.aborted_at = int(t)
            self.abort_reason = reason
            self.current_K = self.K0

    def _estimate(self, i: int) -> np.ndarray:
        theta = self.estimator.estimate()
        if self.estimate_hook is not None:
            theta = np.array(self.estimate_hook(i, theta), dtype=float)
        return theta

    def _fallback(self) -> Segment:
        self._feeding = False
        return Segment(K=self.K0, stop=FOREVER, feed=False)

    def _main_segment(self, i: int) -> Segment:
        self._feeding = True
        return Segment(K=self.current_K, stop=self.params.phase_starts[i + 1],
                       x_limit=self.params.x_b, feed=True)

    def _enter_main_phase(self, t: int, i: int, K: Optional[np.ndarray]) -> Segment:
        """Install gain ``K`` for phase ``i`` (or abort) and return the segment to run."""
        self.phase = i
        if K is None:
            self._abort(t, ABORT_DARE)
            return self._fallback()
        if np.linalg.norm(K, 2) > self.params.kappa:
            self._abort(t, ABORT_GAIN)
            return self._fallback()
        self.current_K = K
        return self._main_segment(i)

    def finish(self, result) -> None:
        if self._feeding and result.count > 0:
            self._absorb(result.gram, result.cross, result.count)
        if result.status == "limit":
            self._abort(result.end, ABORT_STATE)

    def gains(self):
        """Gains installed by the main loop, in phase order."""
        return [r.K for r in self.history if not r.warmup and r.K is not None]

    def metadata(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "mode": self.params.mode,
            "params": self.params.to_dict(),
            "aborted_at": self.aborted_at,
            "abort_reason": self.abort_reason,
            "phases": [r.to_dict() for r in self.history],
        }


class AlgorithmAPolicy(_PhasedLearner):
    """Unknown ``A*``, known ``B*``.

    Warm-up plays ``K0`` for ``t < tau0``.  At each ``tau_i`` the ridge estimate of
    ``A*`` from ``(x_t, x_{t+1} - B* u_t)`` yields ``K_i = K(A_hat, B*)``, played until
    ``tau_{i+1}`` unless ``||x_t||^2 > x_b`` or ``||K_i|| > kappa``, in which case the
    learner falls back to ``K0`` for good and stops estimating.

    ``estimate_hook(i, A_hat) -> A`` can replace the estimate (used by tests).
    """

    algorithm = "A"

    def __init__(self, cfg, params, K0, B_star, Q, R, estimate_hook=None, lam=None):
        super().__init__(cfg, params, K0, Q, R, estimate_hook)
        self.B_star = np.array(B_star, dtype=float, ndmin=2)
        if self.B_star.shape != (self.d, self.k):
            raise DimensionMismatch(f"B* has shape {self.B_star.shape}, expected {(self.d, self.k)}")
        self.estimator = RlsEstimator(self.d, self.d, params.lam if lam is None else lam)

    def _absorb(self, G, C, n):
        d = self.d
        V = G[:d, :d]
        S = C[:, :d] - self.B_star @ G[d:, :d]
        self.estimator.absorb(V, S, n)

    def plan(self, t, x):
        p = self.params
        if self.aborted:
            return self._fallback()
        if t < p.tau0:
            self._feeding = True
            return Segment(K=self.K0, stop=p.tau0, feed=True)
        i = p.phase_of(t)
        if i != self.phase:
            theta = self._estimate(i)
            try:
                K = synthesize(theta, self.B_star, self.Q, self.R)
            except (LqrError, ValueError, np.linalg.LinAlgError):
                K = None
            self.history.append(PhaseRecord(
                phase=i, tau=int(t), theta=theta, K=K,
                gain_norm=float(np.linalg.norm(K, 2)) if K is not None else float("nan"),
            ))
            return self._enter_main_phase(t, i, K)
        return self._main_segment(i)


class AlgorithmBPolicy(_PhasedLearner):
    """Unknown ``B*``, known ``A*``, with an adaptive warm-up.

    Warm-up actions are ``K0 x_t + sigma eta_t`` with ``eta_t`` read from the action
    noise stream.  At each ``tau_i`` of the warm-up the gain ``K_i = K(A*, B_hat)`` is
    tested: once ``sigma_min(K_i)^2 >= 1.5 mu_i`` the warm-up ends (``n_s = i``) and
    the main loop, identical to the unknown-A learner with the roles of A and B swapped,
    starts in that same phase.
    """

    algorithm = "B"

    def __init__(self, cfg, params, K0, A_star, Q, R, estimate_hook=None, lam=None):
        super().__init__(cfg, params, K0, Q, R, estimate_hook)
        if params.mu0 is None:
            raise ValueError("AlgorithmBPolicy needs parameters from derive_params_alg_b")
        self.A_star = np.array(A_star, dtype=float, ndmin=2)
        if self.A_star.shape != (self.d, self.d):
            raise DimensionMismatch(f"A* has shape {self.A_star.shape}, expected {(self.d, self.d)}")
        self.sigma = float(cfg.sigma)
        self.estimator = RlsEstimator(self.d, self.k, params.lam if lam is None else lam)
        self.n_s: Optional[int] = None
        self.warming = True

    def _absorb(self, G, C, n):
        d = self.d
        V = G[d:, d:]
        S = C[:, d:] - self.A_star @ G[:d, d:]
        self.estimator.absorb(V, S, n)

    def _warm_segment(self, stop) -> Segment:
        self._feeding = True
        return Segment(K=self.K0, stop=stop, noise_scale=self.sigma, feed=True)

    @staticmethod
    def nondegeneracy(K) -> float:
        """Smallest squared singular value of ``K``."""
        return float(np.linalg.svd(K, compute_uv=False).min() ** 2)

    def plan(self, t, x):
        p = self.params
        if self.aborted:
            return self._fallback()
        if t < p.tau0:
            return self._warm_segment(p.tau0)
        i = p.phase_of(t)
        if i == self.phase:
            if self.warming:
                return self._warm_segment(p.phase_starts[i + 1])
            return self._main_segment(i)
        theta = self._estimate(i)
        try:
            K = synthesize(self.A_star, theta, self.Q, self.R)
        except (LqrError, ValueError, np.linalg.LinAlgError):
            K = None
        gain_norm = float(np.linalg.norm(K, 2)) if K is not None else float("nan")
        if self.warming:
            threshold = 1.5 * p.mu(i)
            value = self.nondegeneracy(K) if K is not None else float("nan")
            passed = K is not None and value >= threshold
            self.history.append(PhaseRecord(
                phase=i, tau=int(t), theta=theta, K=K, gain_norm=gain_norm,
                warmup=not passed, test_value=value, threshold=threshold,
            ))
            if not passed:
                self.phase = i
                return self._warm_segment(p.phase_starts[i + 1])
            self.warming = False
            self.n_s = i
            return self._enter_main_phase(t, i, K)
        self.history.append(PhaseRecord(phase=i, tau=int(t), theta=theta, K=K, gain_norm=gain_norm))
        return self._enter_main_phase(t, i, K)

    def metadata(self) -> dict:
        meta = super().metadata()
        meta["n_s"] = self.n_s if self.n_s is not None else self.params.n_T + 1
        return meta


def algorithm_a_policy(cfg: LearnerConfig, params: DerivedParams, K0, B_star, Q, R, **kw):
    return AlgorithmAPolicy(cfg, params, K0, B_star, Q, R, **kw)


def algorithm_b_policy(cfg: LearnerConfig, params: DerivedParams, K0, A_star, Q, R, **kw):
    return AlgorithmBPolicy(cfg, params, K0, A_star, Q, R, **kw)
