"""Named benchmark systems."""

from __future__ import annotations

import re

import numpy as np

from ..control import LqrSystem, infinite_horizon_cost, optimal_cost
from ..errors import ConfigError, LqrError

# Lightly coupled stable plant: K0 = 0 stabilizes it at about 1.7 J*.
BENCHMARK_2X2 = {
    "A": [[0.7, 0.3], [0.0, 0.6]],
    "B": [[1.0, 0.0], [0.4, 1.0]],
    "Q": [[1.0, 0.0], [0.0, 1.0]],
    "R": [[1.0, 0.0], [0.0, 1.0]],
}

# Scalar plant for the unknown-B learner with a clearly non-degenerate optimal gain.
SCALAR_B = {"A": [[0.9]], "B": [[0.5]], "Q": [[1.0]], "R": [[1.0]]}


def benchmark2x2(sigma: float = 1.0) -> LqrSystem:
    return LqrSystem(sigma=sigma, **{k: np.array(v) for k, v in BENCHMARK_2X2.items()})


def scalar_b(sigma: float = 1.0) -> LqrSystem:
    return LqrSystem(sigma=sigma, **{k: np.array(v) for k, v in SCALAR_B.items()})


def random_system(d: int, k: int, seed: int, sigma: float = 1.0, max_ratio: float = 20.0,
                  max_tries: int = 1000) -> LqrSystem:
    """Random ``(A, B)`` with ``rho(A) < 1`` (so ``K0 = 0`` stabilizes) and
    ``J(0) / J* <= max_ratio``; draws are rejected until both hold."""
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        G = rng.standard_normal((d, d))
        rho = np.max(np.abs(np.linalg.eigvals(G)))
        A = G * rng.uniform(0.3, 0.95) / rho
        B = rng.standard_normal((d, k)) / np.sqrt(d)
        sys = LqrSystem(A=A, B=B, Q=np.eye(d), R=np.eye(k), sigma=sigma)
        try:
            ratio = infinite_horizon_cost(sys, np.zeros((k, d))) / optimal_cost(sys)
        except LqrError:
            continue
        if ratio <= max_ratio:
            return sys
    raise ConfigError(f"no admissible random system found for d={d}, k={k}, seed={seed}")


_RANDOM = re.compile(r"^random\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)$")


def named_system(name: str, sigma: float = 1.0) -> LqrSystem:
    """Resolve ``benchmark2x2``, ``scalar_b`` or ``random(d,k,seed)``."""
    name = name.strip()
    if name == "benchmark2x2":
        return benchmark2x2(sigma)
    if name == "scalar_b":
        return scalar_b(sigma)
    m = _RANDOM.match(name)
    if m:
        d, k, seed = (int(g) for g in m.groups())
        return random_system(d, k, seed, sigma)
    raise ConfigError(f"unknown system name {name!r}")
