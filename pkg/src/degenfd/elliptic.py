"""Steady problems  L v + f = 0  for time-independent coefficients.

Two independent routes:

* `solve_elliptic_march` integrates du/dt = L u + f from u = 0 with monotone
  Euler steps until the residual sup|L u + f| falls below tolerance.  With
  chi >= 0 and c >= c0 > 0 each step is a contraction with factor
  (1 - dt*c0), so convergence is geometric and iterates stay bounded by
  sup|f| / c0.
* `solve_elliptic_direct` materializes -L as a dense matrix (small grids
  only) and solves by elimination, serving as an oracle for the march.
"""

from __future__ import annotations

import numpy as np

from .fields import FieldExpr
from .grid import GridFunction
from .operators import SampledOperator, Scheme
from .parabolic import IntegrationError, cfl_bound

DIRECT_SIZE_CAP = 4096


def _require_time_independent(scheme: Scheme, f: FieldExpr) -> None:
    if not scheme.coeffs.is_time_independent():
        raise ValueError("elliptic solve requires time-independent coefficients")
    if not f.is_time_independent():
        raise ValueError("elliptic solve requires time-independent forcing")


def default_tolerance(f_sup: float) -> float:
    return 1e-8 * (1.0 + f_sup)


def solve_elliptic_march(
    scheme: Scheme,
    f: FieldExpr,
    tol: float | None = None,
    max_steps: int = 2_000_000,
) -> GridFunction:
    """Time-march to the steady state from a zero initial guess."""
    _require_time_independent(scheme, f)
    lat = scheme.lattice
    op = SampledOperator(scheme)
    f_arr = f.sample_values(0.0, lat)
    if tol is None:
        tol = default_tolerance(float(np.max(np.abs(f_arr))))

    dt = cfl_bound(scheme)
    if not np.isfinite(dt):
        dt = 1.0
    w0, neighbors = op.euler_weights(0.0, dt)

    u = np.zeros(lat.shape)
    prev_res = np.inf
    rising = 0
    for _ in range(max_steps):
        res = float(np.max(np.abs(op.l(0.0, u) + f_arr)))
        if res <= tol:
            return GridFunction(lat, u)
        if res >= prev_res:
            rising += 1
            if rising >= 100:
                raise IntegrationError(
                    f"residual failed to contract for 100 consecutive steps "
                    f"(last {res:.3g}); check chi >= 0 and c >= c0 > 0"
                )
        else:
            rising = 0
        prev_res = res
        new = w0 * u + dt * f_arr
        for lam, w in neighbors:
            new += w * np.roll(u, shift=tuple(-c for c in lam), axis=tuple(range(lat.d)))
        u = new
        if not np.all(np.isfinite(u)):
            raise IntegrationError("non-finite iterate in elliptic march")
    raise IntegrationError(f"elliptic march did not reach tol={tol:.3g} in {max_steps} steps")


def elliptic_matrix(scheme: Scheme) -> np.ndarray:
    """Dense matrix of -L (row per node): diagonal h^{-2} sum chi + c,
    off-diagonal -h^{-2} chi_lam at the wrapped neighbor node."""
    lat = scheme.lattice
    n = lat.size
    shape = lat.shape
    inv_h2 = 1.0 / (scheme.h * scheme.h)
    A = np.zeros((n, n))
    c = scheme.coeffs.c.sample_values(0.0, lat).reshape(-1)
    A[np.arange(n), np.arange(n)] = c
    idx = np.arange(n).reshape(shape)
    for lam in scheme.stencil.vectors:
        chi = scheme.chi_values(lam, 0.0).reshape(-1) * inv_h2
        neighbor = np.roll(idx, shift=tuple(-c_ for c_ in lam), axis=tuple(range(lat.d))).reshape(-1)
        A[np.arange(n), np.arange(n)] += chi
        np.add.at(A, (np.arange(n), neighbor), -chi)
    return A


def solve_elliptic_direct(
    scheme: Scheme, f: FieldExpr, size_cap: int = DIRECT_SIZE_CAP
) -> GridFunction:
    """Dense elimination oracle on small grids."""
    _require_time_independent(scheme, f)
    lat = scheme.lattice
    if lat.size > size_cap:
        raise ValueError(f"grid size {lat.size} exceeds direct-solve cap {size_cap}")
    A = elliptic_matrix(scheme)
    rhs = f.sample_values(0.0, lat).reshape(-1)
    try:
        v = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "elliptic system is singular; the floor c >= c0 > 0 is likely violated"
        ) from exc
    scale = 1.0 + float(np.max(np.abs(rhs)))
    residual = float(np.max(np.abs(A @ v - rhs)))
    if residual > 1e-10 * scale:
        raise ValueError(f"direct solve residual {residual:.3g} out of tolerance")
    return GridFunction(lat, v.reshape(lat.shape))
