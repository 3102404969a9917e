"""Empirical estimates of the certainty-equivalence constants ``(C0, eps0)``.

For a perturbation size ``eps`` we draw random ``(dA, dB)`` with ``||dA|| = ||dB|| = eps``
(operator norm), synthesize ``K = K(A + dA, B + dB)`` and measure

* ``c_J(eps) = max (J(K) - J*) / eps^2``
* ``c_K(eps) = max ||K - K*|| / eps``

``eps0`` is the largest grid value up to which every perturbed gain stabilizes the true
system and both ratios stay within ``tol`` times their value at the smallest ``eps``
(the quadratic/linear regime); ``C0`` is the largest ratio seen up to ``eps0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..control import LqrSystem, infinite_horizon_cost, lqr, optimal_cost
from ..errors import LqrError
from .algorithms import synthesize


@dataclass
class CalibrationResult:
    C0: float
    eps0: float
    table: list

    def to_dict(self) -> dict:
        return {"C0": self.C0, "eps0": self.eps0, "table": self.table}


def _unit_direction(rng, shape):
    D = rng.standard_normal(shape)
    return D / np.linalg.norm(D, 2)


def calibrate(sys: LqrSystem, eps_grid=None, n_samples: int = 32, seed: int = 0,
              perturb: str = "AB", tol: float = 1.2) -> CalibrationResult:
    if perturb not in ("A", "B", "AB"):
        raise ValueError("perturb must be 'A', 'B' or 'AB'")
    eps_grid = np.geomspace(1e-3, 1.0, 25) if eps_grid is None else np.sort(np.asarray(eps_grid, float))
    if eps_grid.size == 0 or eps_grid[0] <= 0:
        raise ValueError("eps_grid must hold positive values")
    rng = np.random.default_rng(seed)
    _, K_star = lqr(sys)
    J_star = optimal_cost(sys)
    dirs = [(_unit_direction(rng, sys.A.shape), _unit_direction(rng, sys.B.shape)) for _ in range(n_samples)]
    table = []
    for eps in eps_grid:
        cJ = cK = 0.0
        stable = True
        for DA, DB in dirs:
            A = sys.A + (eps * DA if "A" in perturb else 0.0)
            B = sys.B + (eps * DB if "B" in perturb else 0.0)
            try:
                K = synthesize(A, B, sys.Q, sys.R)
                J = infinite_horizon_cost(sys, K)
            except (LqrError, np.linalg.LinAlgError):
                stable = False
                break
            cJ = max(cJ, (J - J_star) / eps**2)
            cK = max(cK, float(np.linalg.norm(K - K_star, 2)) / eps)
        table.append({"eps": float(eps), "c_J": cJ if stable else None,
                      "c_K": cK if stable else None, "stable": stable})
    first = table[0]
    if not first["stable"]:
        raise LqrError("smallest perturbation already destabilizes; refine eps_grid")
    eps0, C0 = first["eps"], max(first["c_J"], first["c_K"])
    for row in table[1:]:
        if not row["stable"]:
            break
        if row["c_J"] > tol * first["c_J"] or row["c_K"] > tol * first["c_K"]:
            break
        eps0 = row["eps"]
        C0 = max(C0, row["c_J"], row["c_K"])
    return CalibrationResult(C0=float(C0), eps0=float(eps0), table=table)
