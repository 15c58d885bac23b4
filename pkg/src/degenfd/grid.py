"""Periodic lattices and grid functions.

The spatial domain is the torus [0, 2*pi)^d sampled at N equidistant nodes
per axis, so the mesh size is h = 2*pi/N.  All discrete operators wrap
around periodically; with 2*pi-periodic coefficients and data this makes the
whole-space scheme exact on the torus, with no boundary truncation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PERIOD = 2.0 * np.pi


@dataclass(frozen=True)
class Lattice:
    """Uniform periodic lattice: `N` nodes per axis on [0, 2*pi)^d.

    `N` must be a power of two (>= 4) so that grids nest under dyadic
    refinement: the nodes of the N-lattice are a subset of the 2N-lattice.
    """

    d: int
    N: int

    def __post_init__(self) -> None:
        if not 1 <= self.d <= 3:
            raise ValueError(f"dimension must be 1..3, got {self.d}")
        if self.N < 4 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 4, got {self.N}")

    @property
    def h(self) -> float:
        return PERIOD / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def size(self) -> int:
        return self.N**self.d

    def refine(self, factor: int) -> "Lattice":
        return Lattice(self.d, self.N * factor)

    def is_refinement_of(self, coarse: "Lattice") -> bool:
        return self.d == coarse.d and self.N % coarse.N == 0

    def node_coordinates(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays (one per axis) broadcastable to `shape`."""
        return _coords(self)


@lru_cache(maxsize=64)
def _coords(lattice: Lattice) -> tuple[np.ndarray, ...]:
    axis = np.arange(lattice.N) * lattice.h
    out = []
    for a in range(lattice.d):
        shape = [1] * lattice.d
        shape[a] = lattice.N
        out.append(axis.reshape(shape))
    return tuple(out)


@dataclass
class GridFunction:
    """Real values on a periodic lattice, one per node."""

    lattice: Lattice
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.lattice.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"lattice shape {self.lattice.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function contains non-finite values")

    def copy(self) -> "GridFunction":
        return GridFunction(self.lattice, self.values.copy())

    def sup_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def restrict_to(self, coarse: Lattice) -> "GridFunction":
        """Exact restriction to a nested coarser lattice (node subsampling)."""
        if not self.lattice.is_refinement_of(coarse):
            raise ValueError(
                f"lattice N={self.lattice.N} is not a refinement of N={coarse.N}"
            )
        step = self.lattice.N // coarse.N
        sl = (slice(None, None, step),) * self.lattice.d
        return GridFunction(coarse, self.values[sl].copy())


def roll_by(values: np.ndarray, vec: tuple[int, ...]) -> np.ndarray:
    """values(x + h*vec) with periodic wrap-around (a permutation of entries)."""
    if all(v == 0 for v in vec):
        return values.copy()
    return np.roll(values, shift=tuple(-v for v in vec), axis=tuple(range(len(vec))))
