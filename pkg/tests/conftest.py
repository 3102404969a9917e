import numpy as np
import pytest

from loglqr import LqrSystem

# (criterion number, passed, detail) lines reported at the end of the session
ACCEPTANCE_LINES = []


def random_stabilizable(rng, d, k, sigma=1.0, rho_max=1.3):
    """A generic (hence controllable) pair with spectral radius of A up to ``rho_max``."""
    A = rng.standard_normal((d, d))
    A *= rng.uniform(0.2, rho_max) / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-12)
    B = rng.standard_normal((d, k))
    M = rng.standard_normal((d, d))
    N = rng.standard_normal((k, k))
    Q = M @ M.T + 0.5 * np.eye(d)
    R = N @ N.T + 0.5 * np.eye(k)
    return LqrSystem(A=A, B=B, Q=Q, R=R, sigma=sigma)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
