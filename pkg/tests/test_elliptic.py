import numpy as np
import pytest

from degenfd.elliptic import (
    elliptic_matrix,
    solve_elliptic_direct,
    solve_elliptic_march,
)
from degenfd.fields import CoefficientSet, FieldExpr
from degenfd.grid import Lattice
from degenfd.operators import Scheme, apply_L
from degenfd.parabolic import IntegrationError
from degenfd.stencil import StencilSet

from conftest import axis_stencil, constant_coeffs, expr1, expr2


def reaction_scheme(N=16):
    st = axis_stencil(1)
    return Scheme(st, constant_coeffs(st, 0.0, 0.0, 1.0), Lattice(1, N))


def heat_reaction_scheme(N=64, d=1):
    st = axis_stencil(d)
    return Scheme(st, constant_coeffs(st, 0.5, 0.0, 1.0), Lattice(d, N))


class TestMarch:
    def test_pure_reaction_inverts_c(self):
        v = solve_elliptic_march(reaction_scheme(), expr1("1"))
        assert np.allclose(v.values, 1.0, atol=1e-7)

    def test_fourier_fixture(self):
        scheme = heat_reaction_scheme(64)
        h = scheme.h
        v = solve_elliptic_march(scheme, expr1("1.5*sin(x1)"), tol=1e-8)
        x = np.arange(64) * h
        expected = 1.5 * np.sin(x) / (1 + (1 - np.cos(h)) / h**2)
        assert np.max(np.abs(v.values - expected)) <= 1e-8

    def test_zero_forcing_gives_zero(self):
        v = solve_elliptic_march(heat_reaction_scheme(32), FieldExpr.zero(1))
        assert np.max(np.abs(v.values)) == 0.0

    def test_residual_contract(self):
        scheme = heat_reaction_scheme(32)
        f = expr1("sin(2*x1)+0.5")
        tol = 1e-8
        v = solve_elliptic_march(scheme, f, tol=tol)
        resid = apply_L(scheme, 0.0, v).values + f.sample_values(0.0, scheme.lattice)
        assert np.max(np.abs(resid)) <= tol

    def test_sup_bound_by_forcing(self):
        scheme = heat_reaction_scheme(32)
        f = expr1("sin(3*x1)")
        v = solve_elliptic_march(scheme, f)
        assert v.sup_abs() <= 1.0 / 1.0 + 1e-8  # sup|f| / c0

    def test_inverse_positivity(self):
        scheme = heat_reaction_scheme(32)
        v = solve_elliptic_march(scheme, expr1("1+sin(x1)"))
        assert float(np.min(v.values)) >= -1e-12

    def test_non_contraction_aborts(self):
        st = axis_stencil(1)
        coeffs = constant_coeffs(st, 0.5, 0.0, -0.5)  # growth, no steady state
        scheme = Scheme(st, coeffs, Lattice(1, 16))
        with pytest.raises(IntegrationError):
            solve_elliptic_march(scheme, expr1("sin(x1)"), tol=1e-12)

    def test_rejects_time_dependent_input(self):
        scheme = heat_reaction_scheme(16)
        with pytest.raises(ValueError):
            solve_elliptic_march(scheme, expr1("t*sin(x1)"))
        st = axis_stencil(1)
        coeffs = CoefficientSet(
            q={v: expr1("0.5+0.1*t") for v in st.vectors},
            p={v: expr1("0") for v in st.vectors},
            c=expr1("1"),
            c0=1.0,
        )
        with pytest.raises(ValueError):
            solve_elliptic_march(Scheme(st, coeffs, Lattice(1, 16)), expr1("1"))


class TestDirect:
    def test_identity_matrix_case(self):
        scheme = reaction_scheme()
        f = expr1("2+sin(x1)")
        v = solve_elliptic_direct(scheme, f)
        assert np.allclose(v.values, f.sample_values(0.0, scheme.lattice), atol=1e-12)

    def test_row_sums_recover_c(self):
        scheme = heat_reaction_scheme(16)
        A = elliptic_matrix(scheme)
        c = scheme.coeffs.c.sample_values(0.0, scheme.lattice).reshape(-1)
        assert np.allclose(A.sum(axis=1), c, atol=1e-10)

    def test_size_cap(self):
        scheme = heat_reaction_scheme(64)
        with pytest.raises(ValueError):
            solve_elliptic_direct(scheme, expr1("1"), size_cap=32)

    @pytest.mark.parametrize("d,N", [(1, 64), (2, 16)])
    def test_march_agrees_with_direct(self, d, N):
        st = axis_stencil(d)
        q = {
            v: 0.5 + 0.25 * FieldExpr.trig(d, "cos", v)
            for v in st.vectors
        }
        coeffs = CoefficientSet(
            q=q,
            p={v: FieldExpr.const(d, 0.25) for v in st.vectors},
            c=FieldExpr.const(d, 1.0),
            c0=1.0,
        )
        scheme = Scheme(st, coeffs, Lattice(d, N))
        f = expr1("1.5*sin(x1)") if d == 1 else expr2("sin(x1)*cos(x2)")
        vm = solve_elliptic_march(scheme, f, tol=1e-9)
        vd = solve_elliptic_direct(scheme, f)
        assert np.max(np.abs(vm.values - vd.values)) <= 1e-7
