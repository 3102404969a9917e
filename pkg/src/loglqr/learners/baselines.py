"""Reference policies: a fixed gain, the optimal gain, and epsilon-greedy certainty
equivalence with joint estimation of ``[A B]``."""

from __future__ import annotations

import numpy as np

from ..control import LqrSystem, lqr
from ..errors import LqrError
from ..estimation import RlsEstimator
from ..simulation import LinearPolicy, Segment
from .algorithms import synthesize

FOREVER = np.iinfo(np.int64).max


class FixedGainPolicy(LinearPolicy):
    kind = "fixed_k"

    def metadata(self) -> dict:
        return {"algorithm": self.kind}


class OraclePolicy(FixedGainPolicy):
    kind = "oracle"

    def __init__(self, sys: LqrSystem):
        _, K = lqr(sys)
        super().__init__(K)


class CeEpsGreedyPolicy:
    """Certainty equivalence with decaying Gaussian exploration.

    Epochs double in length: ``[1, E), [E, 2E), [2E, 4E), ...``.  The first epoch plays
    ``K0``; every later epoch starts by re-fitting ``[A B]`` by ridge regression on all
    data so far and plays ``K(A_hat, B_hat)``.  A synthesis failure or a gain whose norm
    exceeds ``gain_cap`` keeps the previous gain.  Every action gets exploration
    ``xi_t = explore * t^{-1/4} * eta_t``.
    """

    kind = "ce_eps_greedy"

    def __init__(self, K0, Q, R, explore=1.0, first_epoch=256, lam=1.0, gain_cap=10.0):
        self.Q = np.array(Q, dtype=float, ndmin=2)
        self.R = np.array(R, dtype=float, ndmin=2)
        self.d = self.Q.shape[0]
        self.k = self.R.shape[0]
        self.K0 = np.array(K0, dtype=float, ndmin=2).reshape(self.k, self.d)
        if first_epoch < 2:
            raise ValueError("first_epoch must be at least 2")
        self.explore = float(explore)
        self.first_epoch = int(first_epoch)
        self.gain_cap = float(gain_cap)
        self.estimator = RlsEstimator(self.d, self.d + self.k, lam)
        self.current_K = self.K0
        self.updates = 0
        self.rejected = 0

    def _scale(self, ts):
        return self.explore * ts ** -0.25

    def _epoch_end(self, t):
        end = self.first_epoch
        while end <= t:
            end *= 2
        return end

    def _refit(self):
        theta = self.estimator.estimate()
        A_hat, B_hat = theta[:, : self.d], theta[:, self.d :]
        try:
            K = synthesize(A_hat, B_hat, self.Q, self.R)
        except (LqrError, ValueError, np.linalg.LinAlgError):
            self.rejected += 1
            return
        if not np.all(np.isfinite(K)) or np.linalg.norm(K, 2) > self.gain_cap:
            self.rejected += 1
            return
        self.current_K = K
        self.updates += 1

    def plan(self, t, x):
        if t >= self.first_epoch and self._at_epoch_start(t):
            self._refit()
        return Segment(K=self.current_K, stop=self._epoch_end(t), noise_scale=self._scale, feed=True)

    def _at_epoch_start(self, t):
        e = self.first_epoch
        while e < t:
            e *= 2
        return e == t

    def finish(self, result):
        if result.count > 0:
            self.estimator.absorb(result.gram, result.cross, result.count)

    def metadata(self) -> dict:
        return {"algorithm": self.kind, "updates": self.updates, "rejected": self.rejected}


def baseline_policy(kind: str, **kw):
    """Build ``fixed_k`` (``K=``), ``oracle`` (``sys=``) or ``ce_eps_greedy`` (``K0, Q, R``...)."""
    if kind == "fixed_k":
        return FixedGainPolicy(kw["K"])
    if kind == "oracle":
        return OraclePolicy(kw["sys"])
    if kind == "ce_eps_greedy":
        return CeEpsGreedyPolicy(**kw)
    raise ValueError(f"unknown baseline kind {kind!r}")
