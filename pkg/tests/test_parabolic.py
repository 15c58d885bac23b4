import numpy as np
import pytest

from degenfd.fields import CoefficientSet, DataSet, FieldExpr
from degenfd.grid import GridFunction, Lattice
from degenfd.operators import Scheme
from degenfd.parabolic import (
    IntegrationError,
    TimeGrid,
    cfl_bound,
    solve_parabolic,
    verify_max_principle,
)
from degenfd.stencil import StencilSet

from conftest import axis_stencil, constant_coeffs, expr1, heat_scheme, rel_err


def data_of(f_text, g_text):
    return DataSet(f=expr1(f_text), g=expr1(g_text))


class TestTimeGrid:
    def test_exact_product(self):
        tg = TimeGrid(1.0, 416)
        assert tg.dt * tg.steps == pytest.approx(1.0, abs=1e-16)

    def test_dt_cap_rounds_up(self):
        tg = TimeGrid.with_dt_cap(1.0, 0.3)
        assert tg.steps == 4 and tg.dt <= 0.3

    def test_infinite_cap(self):
        assert TimeGrid.with_dt_cap(2.0, float("inf")).steps == 1

    def test_invalid(self):
        with pytest.raises(ValueError):
            TimeGrid(0.0, 4)
        with pytest.raises(ValueError):
            TimeGrid(1.0, 0)


class TestCflBound:
    def test_heat_with_reaction(self):
        scheme = heat_scheme(64, c=1.0)
        h = scheme.h
        assert cfl_bound(scheme) == pytest.approx(1.0 / (1.0 / h**2 + 1.0), rel=1e-12)

    def test_all_zero_coefficients(self):
        st = axis_stencil(1)
        scheme = Scheme(st, constant_coeffs(st, 0.0, 0.0, 0.0), Lattice(1, 16))
        assert cfl_bound(scheme) == float("inf")

    def test_quarters_under_refinement(self):
        b1 = cfl_bound(heat_scheme(64))
        b2 = cfl_bound(heat_scheme(128))
        assert b2 == pytest.approx(b1 / 4.0, rel=1e-3)


class TestSolve:
    def test_scalar_decay(self):
        st = axis_stencil(1)
        scheme = Scheme(st, constant_coeffs(st, 0.0, 0.0, 1.0), Lattice(1, 16))
        tg = TimeGrid(1.0, 256)
        run = solve_parabolic(scheme, data_of("0", "1"), tg, integrator="rk4")
        assert np.allclose(run.final.values, np.exp(-1.0), atol=1e-9)

    def test_heat_semidiscrete_oracle(self):
        scheme = heat_scheme(32)
        h = scheme.h
        tg = TimeGrid.with_dt_cap(1.0, h * h / 4)
        run = solve_parabolic(scheme, data_of("0", "sin(x1)"), tg, integrator="rk4")
        x = np.arange(32) * h
        exact = np.exp((np.cos(h) - 1) / h**2) * np.sin(x)
        assert np.max(np.abs(run.final.values - exact)) < 1e-8

    def test_stationary_balance(self):
        st = axis_stencil(1)
        scheme = Scheme(st, constant_coeffs(st, 0.5, 0.0, 2.0), Lattice(1, 32))
        run = solve_parabolic(
            scheme, data_of("6", "3"), TimeGrid(1.0, 128), integrator="rk4"
        )
        # f = c*k with g = k: u stays constant at k
        assert np.allclose(run.final.values, 3.0, atol=1e-12)

    def test_euler_requires_cfl(self):
        scheme = heat_scheme(64, c=1.0)
        bad = TimeGrid.with_dt_cap(1.0, 10 * cfl_bound(scheme))
        with pytest.raises(IntegrationError):
            solve_parabolic(scheme, data_of("0", "sin(x1)"), bad, integrator="euler")

    def test_nan_abort_has_diagnostic(self):
        scheme = heat_scheme(64)
        wild = TimeGrid(1.0, 4)  # dt far beyond stability for rk4
        with pytest.raises(IntegrationError, match="unstable|non-finite"):
            solve_parabolic(scheme, data_of("0", "sin(x1)"), wild, integrator="rk4")

    def test_snapshots_at_step_times(self):
        scheme = heat_scheme(16, c=1.0)
        tg = TimeGrid.with_dt_cap(1.0, cfl_bound(scheme))
        run = solve_parabolic(
            scheme, data_of("0", "sin(x1)"), tg, integrator="euler",
            snapshot_times=[0.25, 0.5, 1.0],
        )
        assert len(run.snapshots) == 3
        for t, gf in run.snapshots:
            assert abs(round(t / tg.dt) - t / tg.dt) < 1e-9
            assert gf.values.shape == (16,)

    def test_unknown_integrator(self):
        scheme = heat_scheme(16)
        with pytest.raises(ValueError):
            solve_parabolic(scheme, data_of("0", "0"), TimeGrid(1.0, 4), integrator="ab2")


class TestStructuralProperties:
    def test_monotone_in_data(self, rng):
        st = axis_stencil(1)
        scheme = Scheme(st, constant_coeffs(st, 0.5, 0.25, 1.0), Lattice(1, 32))
        tg = TimeGrid.with_dt_cap(0.5, 0.9 * cfl_bound(scheme))
        base = solve_parabolic(
            scheme, DataSet(f=expr1("1"), g=expr1("1+sin(x1)")), tg, integrator="euler"
        )
        richer = solve_parabolic(
            scheme,
            DataSet(f=expr1("1.5"), g=expr1("1.25+sin(x1)")),
            tg,
            integrator="euler",
        )
        assert np.all(richer.final.values >= base.final.values - 1e-12)

    def test_solution_map_is_affine(self):
        scheme = heat_scheme(32, c=1.0)
        tg = TimeGrid.with_dt_cap(0.5, scheme.h**2 / 4)

        def solve(f_text, g_text):
            return solve_parabolic(scheme, data_of(f_text, g_text), tg).final.values

        u1 = solve("1", "sin(x1)")
        u2 = solve("sin(2*x1)", "cos(x1)")
        mixed = solve("1+sin(2*x1)", "sin(x1)+cos(x1)")
        assert rel_err(mixed, u1 + u2) < 1e-10

    def test_rk4_refinement_gain(self):
        scheme = heat_scheme(16)
        data = data_of("0", "sin(x1)")
        finals = []
        for steps in (8, 16, 32):
            run = solve_parabolic(scheme, data, TimeGrid(1.0, steps), integrator="rk4")
            finals.append(run.final.values)
        change1 = np.max(np.abs(finals[1] - finals[0]))
        change2 = np.max(np.abs(finals[2] - finals[1]))
        assert change2 <= change1 / 8.0


class TestMaxPrinciple:
    def run_euler(self, scheme, data, T=1.0):
        tg = TimeGrid.with_dt_cap(T, 0.9 * cfl_bound(scheme))
        snaps = [T * k / 8 for k in range(1, 9)]
        return solve_parabolic(scheme, data, tg, integrator="euler", snapshot_times=snaps)

    def test_nonnegative_data_stays_nonnegative(self):
        st = axis_stencil(1)
        scheme = Scheme(st, constant_coeffs(st, 0.5, 0.0, 1.0), Lattice(1, 32))
        data = data_of("1+sin(x1)", "1+cos(x1)")
        run = self.run_euler(scheme, data)
        assert float(np.min(run.final.values)) >= 0.0
        report = verify_max_principle(run, scheme, data, c0=1.0)
        assert report.passed

    def test_unit_bound_without_forcing(self):
        st = axis_stencil(1)
        scheme = Scheme(st, constant_coeffs(st, 0.5, 0.0, 1.0), Lattice(1, 32))
        data = data_of("0", "1")
        run = self.run_euler(scheme, data)
        assert float(np.max(run.final.values)) <= 1.0 + 1e-12
        assert verify_max_principle(run, scheme, data, c0=1.0).passed

    def test_forcing_saturates_f_over_c(self):
        st = axis_stencil(1)
        scheme = Scheme(st, constant_coeffs(st, 0.5, 0.0, 1.0), Lattice(1, 16))
        data = data_of("1", "0")
        run = self.run_euler(scheme, data, T=20.0)
        sup = float(np.max(run.final.values))
        assert sup <= 1.0 + 1e-12
        assert sup > 0.99  # approaches sup f / c0 = 1 as t grows
        assert verify_max_principle(run, scheme, data, c0=1.0).passed
