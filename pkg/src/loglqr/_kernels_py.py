"""Pure-Python (numpy) implementation of the segment runner.

Used when the compiled extension is unavailable or ``LOGLQR_PURE_PYTHON=1``.
Semantics match ``_kernels.run_segment`` step for step; floating-point sums may differ
in the last bits because the Gram accumulation is vectorised here.
"""

import numpy as np

OVERFLOW_SQ = 1e300


def run_segment(A, B, Q, R, K, x, W, E, escale, xlimit, costs, states, actions, G, C, accumulate):
    """Advance ``x`` under ``u = K x + escale[t] * E[t]`` for up to ``len(W)`` steps.

    Returns ``(n_done, status)``: status 0 finished, 1 stopped because
    ``||x||^2 > xlimit`` before step ``n_done`` (that step is not executed), 2 the
    state overflowed on step ``n_done - 1``.  ``x`` is updated in place.
    """
    d, k = B.shape
    n = W.shape[0]
    noisy_action = E.shape[0] > 0
    Z = np.empty((n, d + k))
    Xn = np.empty((n, d))
    cur = np.array(x, dtype=float)
    done, status = n, 0
    for t in range(n):
        if cur @ cur > xlimit:
            done, status = t, 1
            break
        u = K @ cur
        if noisy_action:
            u = u + escale[t] * E[t]
        costs[t] = cur @ Q @ cur + u @ R @ u
        Z[t, :d] = cur
        Z[t, d:] = u
        nxt = A @ cur + B @ u + W[t]
        Xn[t] = nxt
        cur = nxt
        sq = nxt @ nxt
        if not np.isfinite(sq) or sq > OVERFLOW_SQ:
            done, status = t + 1, 2
            break
    if states.shape[0] > 0:
        states[:done] = Z[:done, :d]
    if actions.shape[0] > 0:
        actions[:done] = Z[:done, d:]
    if accumulate and done:
        G += Z[:done].T @ Z[:done]
        C += Xn[:done].T @ Z[:done]
    x[:] = cur
    return done, status
