"""Richardson extrapolation: coefficients and the multi-resolution combination.

The order-k plan combines solutions at mesh sizes h, h/2, ..., h/2^k as
u_bar = sum_j b_j u_{h/2^j}, where the weights solve

    (b_0, ..., b_k) = (1, 0, ..., 0) V^{-1},   V[i][j] = 2^{-(i-1)(j-1)}

(1-based indices).  Equivalently sum_j b_j = 1 and sum_j b_j 2^{-j l} = 0 for
l = 1..k, so the first k terms of an error expansion in powers of h cancel
and the combination is accurate to O(h^{k+1}).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridFunction

MAX_ORDER = 3  # coefficient smoothness demands grow as 3(k+1); catalog caps at 12


@dataclass(frozen=True)
class ExtrapolationPlan:
    k: int
    b: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.b) != self.k + 1:
            raise ValueError("plan needs k+1 weights")
        residuals = self.residuals()
        if max(abs(r) for r in residuals) > 1e-12:
            raise ValueError(f"plan violates cancellation invariants: {residuals}")

    def residuals(self) -> list[float]:
        """[sum b_j - 1] + [sum b_j 2^{-j l} for l = 1..k]; all must vanish."""
        out = [sum(self.b) - 1.0]
        for l in range(1, self.k + 1):
            out.append(sum(bj * 2.0 ** (-j * l) for j, bj in enumerate(self.b)))
        return out


def vandermonde_coefficients(k: int) -> ExtrapolationPlan:
    """Solve the Vandermonde system for the order-k weights (0 <= k <= 3)."""
    if not 0 <= k <= MAX_ORDER:
        raise ValueError(f"extrapolation order must be 0..{MAX_ORDER}, got {k}")
    n = k + 1
    V = np.array([[2.0 ** (-(i * j)) for j in range(n)] for i in range(n)])
    e1 = np.zeros(n)
    e1[0] = 1.0
    # b = e1 V^{-1}  <=>  V^T b = e1; LAPACK elimination with partial pivoting
    b = np.linalg.solve(V.T, e1)
    return ExtrapolationPlan(k=k, b=tuple(float(x) for x in b))


def combine(plan: ExtrapolationPlan, solutions: list[GridFunction]) -> GridFunction:
    """sum_j b_j u_{h/2^j}, restricted exactly to the coarsest lattice.

    `solutions` must be ordered coarse to fine on nested lattices
    (N, 2N, ..., 2^k N).
    """
    if len(solutions) != plan.k + 1:
        raise ValueError(f"plan of order {plan.k} needs {plan.k + 1} solutions")
    coarse = solutions[0].lattice
    acc = np.zeros(coarse.shape)
    for j, (bj, sol) in enumerate(zip(plan.b, solutions)):
        if sol.lattice.d != coarse.d or sol.lattice.N != coarse.N * 2**j:
            raise ValueError(
                f"solution {j} is on N={sol.lattice.N}, expected nested N={coarse.N * 2**j}"
            )
        acc += bj * sol.restrict_to(coarse).values
    return GridFunction(coarse, acc)
