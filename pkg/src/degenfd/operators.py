"""The discrete operators and their continuum counterpart.

For a stencil set Lambda_1 with coefficients q_lam, p_lam, c the scheme
operator on grid functions is

    L0 phi = (1/h) sum_lam q_lam * delta_lam phi + sum_lam p_lam * delta_lam phi
    L phi  = L0 phi - c * phi

which, with the combined weight chi_lam = q_lam + h * p_lam, is the monotone
form  L0 phi(x) = h^{-2} sum_lam chi_lam(x) * (phi(x + h*lam) - phi(x)).

`q_form` is the energy form  Q(phi) = sum_lam chi_lam * (delta_lam phi)^2,
the dissipation produced by the exact discrete product rule

    L0(phi^2) = 2 * phi * L0(phi) + Q(phi),

which holds in real arithmetic because
delta(phi^2) = (2 phi + h delta phi) * delta phi.

`continuum_L` assembles the differential operator the scheme approximates,

    Lc u = 1/2 sum_lam q_lam (lam . D)^2 u + sum_lam p_lam (lam . D) u - c u,

on catalog expressions; `manufacture_rhs` uses it to build forcing data for a
chosen exact solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import CoefficientSet, DataSet, FieldExpr, make_sampler
from .grid import GridFunction, Lattice, roll_by
from .stencil import StencilSet, Vec


@dataclass
class Scheme:
    """Stencil + coefficients + lattice: everything needed to apply L."""

    stencil: StencilSet
    coeffs: CoefficientSet
    lattice: Lattice
    h0: float = 1.0

    def __post_init__(self) -> None:
        if self.stencil.d != self.lattice.d:
            raise ValueError("stencil dimension does not match lattice")
        if self.coeffs.directions != set(self.stencil.vectors):
            raise ValueError("coefficient directions must equal the stencil set")
        if self.lattice.h > self.h0 * (1 + 1e-12):
            raise ValueError(
                f"mesh size h={self.lattice.h:.6g} exceeds validity ceiling h0={self.h0}"
            )
        bound = self.lattice.N // 4
        for v in self.stencil.vectors:
            if max(abs(c) for c in v) > bound:
                raise ValueError(f"stencil vector {v} too large for N={self.lattice.N}")

    @property
    def h(self) -> float:
        return self.lattice.h

    def chi_expr(self, lam: Vec) -> FieldExpr:
        """chi_lam = q_lam + h * p_lam as a catalog expression."""
        return self.coeffs.q[lam] + self.h * self.coeffs.p[lam]

    def chi_values(self, lam: Vec, t: float) -> np.ndarray:
        return self.chi_expr(lam).sample_values(t, self.lattice)


class SampledOperator:
    """L with coefficient samplers bound to the scheme's lattice.

    Coefficients are sampled at nodes (collocation).  Time-independent fields
    are sampled once and reused, which makes repeated application inside time
    integrators cheap.
    """

    def __init__(self, scheme: Scheme):
        self.scheme = scheme
        self.h = scheme.h
        self.inv_h2 = 1.0 / (self.h * self.h)
        self.chi = [
            (lam, make_sampler(scheme.chi_expr(lam), scheme.lattice))
            for lam in scheme.stencil.vectors
        ]
        self.c = make_sampler(scheme.coeffs.c, scheme.lattice)

    def l0(self, t: float, values: np.ndarray) -> np.ndarray:
        out = np.zeros_like(values)
        for lam, chi in self.chi:
            out += chi(t) * (roll_by(values, lam) - values)
        return out * self.inv_h2

    def l(self, t: float, values: np.ndarray) -> np.ndarray:
        return self.l0(t, values) - self.c(t) * values

    def q_form(self, t: float, values: np.ndarray) -> np.ndarray:
        out = np.zeros_like(values)
        for lam, chi in self.chi:
            d = (roll_by(values, lam) - values) / self.h
            out += chi(t) * d * d
        return out

    def euler_weights(self, t: float, dt: float):
        """(w0, [(lam, w_lam)], penalty) for the monotone Euler update

            u' = w0 * u + sum_lam w_lam * u(. + h lam) + dt * f(t)

        All weights are nonnegative iff chi >= 0 and dt is within the CFL
        bound; evaluating in this form keeps nonnegative data nonnegative in
        floating point as well.
        """
        neighbor = [(lam, dt * self.inv_h2 * chi(t)) for lam, chi in self.chi]
        w0 = 1.0 - dt * self.c(t)
        for _, w in neighbor:
            w0 = w0 - w
        return w0, neighbor


def apply_L0(scheme: Scheme, t: float, phi: GridFunction) -> GridFunction:
    """(1/h) sum q_lam delta_lam phi + sum p_lam delta_lam phi."""
    _check(scheme, phi)
    return GridFunction(scheme.lattice, SampledOperator(scheme).l0(t, phi.values))


def apply_L(scheme: Scheme, t: float, phi: GridFunction) -> GridFunction:
    """apply_L0 minus c * phi."""
    _check(scheme, phi)
    return GridFunction(scheme.lattice, SampledOperator(scheme).l(t, phi.values))


def q_form(scheme: Scheme, t: float, phi: GridFunction) -> GridFunction:
    """sum_lam chi_lam * (delta_lam phi)^2, nodewise."""
    _check(scheme, phi)
    return GridFunction(scheme.lattice, SampledOperator(scheme).q_form(t, phi.values))


def _check(scheme: Scheme, phi: GridFunction) -> None:
    if phi.lattice != scheme.lattice:
        raise ValueError("grid function is not defined on the scheme's lattice")


def continuum_L(
    coeffs: CoefficientSet,
    stencil: StencilSet,
    u: FieldExpr,
    t: float | None = None,
) -> FieldExpr:
    """The differential operator approximated by the scheme, applied to u.

    Returns a full space-time expression; pass `t` to freeze the time
    variable of the result.
    """
    if u.dim != stencil.d:
        raise ValueError("expression dimension does not match stencil")
    out = FieldExpr.zero(u.dim)
    for lam in stencil.vectors:
        directional = FieldExpr.zero(u.dim)
        for i, ci in enumerate(lam):
            if ci != 0:
                directional = directional + ci * u.dx(i)
        second = FieldExpr.zero(u.dim)
        for i, ci in enumerate(lam):
            if ci == 0:
                continue
            di = u.dx(i)
            for j, cj in enumerate(lam):
                if cj != 0:
                    second = second + (ci * cj) * di.dx(j)
        out = out + 0.5 * coeffs.q[lam] * second + coeffs.p[lam] * directional
    out = out - coeffs.c * u
    return out if t is None else out.at_time(t)


def manufacture_rhs(
    coeffs: CoefficientSet, stencil: StencilSet, u0: FieldExpr
) -> DataSet:
    """Forcing and initial data that make u0 the exact continuum solution:

        f = du0/dt - Lc u0,   g = u0(0, .).
    """
    f = u0.dt() - continuum_L(coeffs, stencil, u0)
    return DataSet(f=f, g=u0.at_time(0.0))
