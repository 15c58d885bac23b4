import numpy as np
import pytest

from degenfd.fields import CoefficientSet, FieldExpr, parse_expr
from degenfd.grid import GridFunction, Lattice
from degenfd.operators import Scheme
from degenfd.stencil import StencilSet

SCENARIO_DIR = "src/degenfd/scenarios"


def expr1(text: str) -> FieldExpr:
    return parse_expr(text, 1)


def expr2(text: str) -> FieldExpr:
    return parse_expr(text, 2)


def axis_stencil(d: int, tau0: float = 0.5) -> StencilSet:
    """Centered unit-direction stencil {+-e_i} with unit weights."""
    vectors = []
    for i in range(d):
        for s in (1, -1):
            v = [0] * d
            v[i] = s
            vectors.append(tuple(v))
    return StencilSet(tuple(vectors), {v: 1.0 for v in vectors}, tau0)


def constant_coeffs(stencil: StencilSet, q: float, p: float, c: float, c0: float = 1.0) -> CoefficientSet:
    d = stencil.d
    return CoefficientSet(
        q={v: FieldExpr.const(d, q) for v in stencil.vectors},
        p={v: FieldExpr.const(d, p) for v in stencil.vectors},
        c=FieldExpr.const(d, c),
        c0=c0,
    )


def heat_scheme(N: int = 64, d: int = 1, c: float = 0.0, c0: float = 1.0) -> Scheme:
    """q = 1/2 along +-e_i, no drift: the centered second-difference scheme."""
    st = axis_stencil(d)
    return Scheme(st, constant_coeffs(st, 0.5, 0.0, c, c0), Lattice(d, N))


def random_grid(lattice: Lattice, rng: np.random.Generator) -> GridFunction:
    return GridFunction(lattice, rng.standard_normal(lattice.shape))


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(b))))
    return float(np.max(np.abs(a - b))) / scale


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
