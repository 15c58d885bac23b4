import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degenfd.grid import GridFunction, Lattice
from degenfd.stencil import (
    StencilSet,
    delta,
    leibniz_expand,
    mixed_difference,
    second_difference,
    shift,
    shift_multi,
)

from conftest import axis_stencil, random_grid, rel_err


def sampled(lat, fn):
    x = np.arange(lat.N) * lat.h
    return GridFunction(lat, fn(x))


class TestShift:
    def test_shift_of_sin(self):
        lat = Lattice(1, 64)
        phi = sampled(lat, np.sin)
        assert shift(phi, (1,)).values[0] == pytest.approx(np.sin(lat.h), abs=1e-15)

    def test_empty_composite_is_identity(self):
        lat = Lattice(1, 16)
        phi = sampled(lat, np.cos)
        out = shift_multi(phi, ())
        assert np.array_equal(out.values, phi.values)

    def test_indicator_moves_backwards(self):
        lat = Lattice(1, 16)
        vals = np.zeros(16)
        vals[5] = 1.0
        out = shift(GridFunction(lat, vals), (2,))
        # result(x) = phi(x + 2h): the spike lands at node 5 - 2 (mod N)
        assert out.values[3] == 1.0 and np.sum(out.values) == 1.0

    def test_rejects_oversized_vector(self):
        lat = Lattice(1, 16)
        with pytest.raises(ValueError):
            shift(sampled(lat, np.sin), (5,))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=-4, max_value=4).filter(lambda k: k != 0))
    def test_shift_is_a_bijection(self, k):
        lat = Lattice(1, 32)
        rng = np.random.default_rng(99)
        phi = random_grid(lat, rng)
        back = shift(shift(phi, (k,)), (-k,))
        assert np.array_equal(back.values, phi.values)


class TestDelta:
    def test_linear_slope_on_unwrapped_patch(self):
        lat = Lattice(1, 64)
        phi = sampled(lat, lambda x: x)
        out = delta(phi, (1,))
        assert np.allclose(out.values[:-1], 1.0, atol=1e-12)

    def test_quadratic_identity(self):
        lat = Lattice(1, 64)
        phi = sampled(lat, lambda x: x * x)
        out = delta(phi, (1,))
        x = np.arange(lat.N) * lat.h
        # ((x+h)^2 - x^2)/h = 2x + h away from the wrap seam
        assert np.allclose(out.values[:-1], (2 * x + lat.h)[:-1], atol=1e-11)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(min_value=-10, max_value=10, allow_nan=False))
    def test_annihilates_constants(self, const):
        lat = Lattice(1, 16)
        phi = GridFunction(lat, np.full(16, const))
        assert np.max(np.abs(delta(phi, (1,)).values)) == 0.0


class TestSecondDifference:
    def test_quadratic_gives_two(self):
        lat = Lattice(1, 64)
        phi = sampled(lat, lambda x: x * x)
        out = second_difference(phi, (1,))
        assert np.allclose(out.values[1:-1], 2.0, atol=1e-10)

    def test_sin_eigenvalue(self):
        lat = Lattice(1, 64)
        phi = sampled(lat, np.sin)
        out = second_difference(phi, (1,))
        # direct evaluation: (sin(x+h) - 2 sin x + sin(x-h))/h^2 = 2(cos h - 1)/h^2 sin x
        factor = 2 * (np.cos(lat.h) - 1) / lat.h**2
        assert rel_err(out.values, factor * phi.values) < 1e-12

    def test_equals_minus_delta_delta(self, rng):
        for d in (1, 2):
            lat = Lattice(d, 32)
            phi = random_grid(lat, rng)
            lam = (1,) if d == 1 else (1, -1)
            neg = tuple(-c for c in lam)
            direct = second_difference(phi, lam)
            composed = delta(delta(phi, lam), neg)
            scale = np.max(np.abs(direct.values)) + 1
            assert np.max(np.abs(direct.values + composed.values)) <= 1e-12 * scale


class TestMixedDifference:
    def test_single_factor_is_weighted_delta(self, rng):
        lat = Lattice(1, 32)
        st_ = StencilSet(((1,), (-1,)), {(1,): 0.7, (-1,): 1.0}, 0.5)
        phi = random_grid(lat, rng)
        out = mixed_difference(phi, ((1,),), st_)
        assert rel_err(out.values, 0.7 * delta(phi, (1,)).values) < 1e-15

    def test_orderings_commute(self, rng):
        lat = Lattice(2, 16)
        st_ = axis_stencil(2)
        phi = random_grid(lat, rng)
        mu = ((1, 0), (0, 1), (-1, 0))
        for perm in itertools.permutations(mu):
            a = mixed_difference(phi, mu, st_)
            b = mixed_difference(phi, perm, st_)
            assert rel_err(a.values, b.values) < 1e-12

    def test_zero_weight_kills_composition(self, rng):
        lat = Lattice(1, 16)
        st_ = StencilSet(((1,), (-1,)), {(1,): 0.0, (-1,): 1.0}, 0.5)
        phi = random_grid(lat, rng)
        out = mixed_difference(phi, ((1,), (-1,)), st_)
        assert np.max(np.abs(out.values)) == 0.0

    def test_rejects_foreign_direction(self, rng):
        lat = Lattice(1, 16)
        st_ = StencilSet(((1,),), {(1,): 1.0}, 0.5)
        with pytest.raises(ValueError):
            mixed_difference(random_grid(lat, rng), ((2,),), st_)


class TestLeibniz:
    @pytest.mark.parametrize("n,tol", [(1, 1e-12), (2, 1e-11), (3, 1e-11)])
    def test_matches_direct_product_difference(self, rng, n, tol):
        lat = Lattice(1, 32)
        st_ = StencilSet(((1,), (-1,)), {(1,): 1.0, (-1,): 0.8}, 0.5)
        psi = random_grid(lat, rng)
        phi = random_grid(lat, rng)
        mu = tuple(((1,), (-1,))[i % 2] for i in range(n))
        prod = GridFunction(lat, psi.values * phi.values)
        lhs = mixed_difference(prod, mu, st_)
        rhs = leibniz_expand(psi, phi, mu, st_)
        assert rel_err(rhs.values, lhs.values) < tol

    def test_constant_left_factor_collapses(self, rng):
        lat = Lattice(1, 32)
        st_ = axis_stencil(1)
        psi = GridFunction(lat, np.ones(32))
        phi = random_grid(lat, rng)
        mu = ((1,), (-1,))
        out = leibniz_expand(psi, phi, mu, st_)
        expected = mixed_difference(phi, mu, st_)
        assert rel_err(out.values, expected.values) < 1e-12

    def test_order_cap(self, rng):
        lat = Lattice(1, 32)
        st_ = axis_stencil(1)
        phi = random_grid(lat, rng)
        with pytest.raises(ValueError):
            leibniz_expand(phi, phi, ((1,),) * 4, st_)


class TestStencilSet:
    def test_norms(self):
        st_ = StencilSet(((1, 0), (0, -2)), {(1, 0): 1.0, (0, -2): 0.5}, 1.0)
        assert st_.moment_sq() == pytest.approx(1 + 4)
        assert st_.weighted_moment_sq() == pytest.approx(1 + 0.25 * 4)

    def test_symmetry_flag(self):
        assert axis_stencil(2).is_symmetric()
        assert not StencilSet(((1,),), {(1,): 1.0}, 1.0).is_symmetric()

    @pytest.mark.parametrize(
        "vectors,weights,tau0",
        [
            (((0,),), {(0,): 1.0}, 1.0),          # zero vector
            (((1,), (1,)), {(1,): 1.0}, 1.0),     # duplicate
            (((1,),), {(1,): -1.0}, 1.0),         # negative weight
            (((1,),), {(1,): 1.0}, 0.0),          # tau0 not positive
            (((1,),), {(2,): 1.0}, 1.0),          # weight key mismatch
        ],
    )
    def test_invalid_sets_rejected(self, vectors, weights, tau0):
        with pytest.raises(ValueError):
            StencilSet(vectors, weights, tau0)
