"""Lattice stencil directions and the shift/difference operator algebra.

A stencil direction is an integer vector `lam`; the associated operators on a
grid function phi with mesh size h are

    shift:             (T phi)(x)  = phi(x + h*lam)
    delta:             (d phi)(x)  = (phi(x + h*lam) - phi(x)) / h
    second_difference: (D2 phi)(x) = (phi(x+h*lam) - 2 phi(x) + phi(x-h*lam)) / h^2

with periodic wrap-around.  `second_difference` satisfies the exact identity
D2 = -delta_{-lam} delta_{lam}.

A `StencilSet` is a finite set of distinct nonzero directions together with
nonnegative weights tau_lam and a positive parameter tau0 (the weight carried
by true directional derivatives when coefficients are differentiated exactly;
see the validation probes).  Weighted differences tau_lam * delta_lam commute,
and their compositions over a tuple of directions ("multi-vector") obey a
discrete Leibniz rule implemented in `leibniz_expand`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction, roll_by

Vec = tuple[int, ...]
MultiVec = tuple[Vec, ...]

# Combinatorial cap for the Leibniz expansion (2^n terms).
LEIBNIZ_MAX_ORDER = 3


def as_vec(components) -> Vec:
    vec = tuple(int(c) for c in components)
    if not all(float(c) == int(c) for c in components):
        raise ValueError(f"stencil vector must have integer components: {components}")
    return vec


def _check_vec(phi: GridFunction, lam: Vec) -> None:
    if len(lam) != phi.lattice.d:
        raise ValueError(f"vector {lam} has wrong dimension for d={phi.lattice.d}")
    if max(abs(c) for c in lam) > phi.lattice.N // 4:
        raise ValueError(
            f"lattice with N={phi.lattice.N} too small for stencil vector {lam}"
        )


@dataclass
class StencilSet:
    """Directions Lambda_1 with weights tau_lam >= 0 and parameter tau0 > 0."""

    vectors: tuple[Vec, ...]
    weights: dict[Vec, float]
    tau0: float = 1.0

    def __post_init__(self) -> None:
        self.vectors = tuple(as_vec(v) for v in self.vectors)
        if not self.vectors:
            raise ValueError("stencil set must be non-empty")
        dims = {len(v) for v in self.vectors}
        if len(dims) != 1:
            raise ValueError("stencil vectors have mixed dimensions")
        if len(set(self.vectors)) != len(self.vectors):
            raise ValueError("stencil vectors must be pairwise distinct")
        if any(all(c == 0 for c in v) for v in self.vectors):
            raise ValueError("the zero vector is not a valid stencil direction")
        self.weights = {as_vec(k): float(w) for k, w in self.weights.items()}
        if set(self.weights) != set(self.vectors):
            raise ValueError("weights must be given for exactly the stencil vectors")
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("weights tau_lam must be nonnegative")
        if not self.tau0 > 0:
            raise ValueError("tau0 must be positive")

    @property
    def d(self) -> int:
        return len(self.vectors[0])

    def tau(self, lam: Vec) -> float:
        return self.weights[lam]

    def moment_sq(self) -> float:
        """sum over lam of |lam|^2."""
        return float(sum(sum(c * c for c in v) for v in self.vectors))

    def weighted_moment_sq(self) -> float:
        """sum over lam of |tau_lam * lam|^2."""
        return float(
            sum(self.weights[v] ** 2 * sum(c * c for c in v) for v in self.vectors)
        )

    def is_symmetric(self) -> bool:
        """Whether the direction set is closed under negation."""
        vecs = set(self.vectors)
        return all(tuple(-c for c in v) in vecs for v in vecs)

    def multi_vectors(self, n: int) -> list[MultiVec]:
        """All length-n tuples of stencil directions."""
        return [tuple(p) for p in itertools.product(self.vectors, repeat=n)]


def shift(phi: GridFunction, lam: Vec) -> GridFunction:
    """phi(x + h*lam), exact (a permutation of the stored values)."""
    lam = as_vec(lam)
    _check_vec(phi, lam)
    return GridFunction(phi.lattice, roll_by(phi.values, lam))


def shift_multi(phi: GridFunction, mu: MultiVec) -> GridFunction:
    """Composition of shifts; the empty tuple is the unit operator."""
    total = tuple(sum(c) for c in zip(*mu)) if mu else (0,) * phi.lattice.d
    if not mu:
        return phi.copy()
    _check_vec(phi, total)
    return GridFunction(phi.lattice, roll_by(phi.values, total))


def delta(phi: GridFunction, lam: Vec) -> GridFunction:
    """(phi(x + h*lam) - phi(x)) / h."""
    lam = as_vec(lam)
    _check_vec(phi, lam)
    h = phi.lattice.h
    return GridFunction(phi.lattice, (roll_by(phi.values, lam) - phi.values) / h)


def second_difference(phi: GridFunction, lam: Vec) -> GridFunction:
    """(phi(x+h*lam) - 2 phi(x) + phi(x-h*lam)) / h^2."""
    lam = as_vec(lam)
    _check_vec(phi, lam)
    neg = tuple(-c for c in lam)
    h = phi.lattice.h
    vals = (roll_by(phi.values, lam) - 2.0 * phi.values + roll_by(phi.values, neg)) / (
        h * h
    )
    return GridFunction(phi.lattice, vals)


def _mixed_values(
    values: np.ndarray, h: float, mu: MultiVec, stencil: StencilSet
) -> np.ndarray:
    out = values
    scale = 1.0
    for lam in mu:
        if lam not in stencil.weights:
            raise ValueError(f"direction {lam} is not in the stencil set")
        scale *= stencil.weights[lam]
        out = (roll_by(out, lam) - out) / h
    return scale * out


def mixed_difference(phi: GridFunction, mu: MultiVec, stencil: StencilSet) -> GridFunction:
    """Composition of the weighted differences tau_lam * delta_lam over `mu`.

    The factors commute, so the result is independent of the ordering of `mu`
    up to roundoff.
    """
    mu = tuple(as_vec(v) for v in mu)
    for lam in mu:
        _check_vec(phi, lam)
    return GridFunction(
        phi.lattice, _mixed_values(phi.values, phi.lattice.h, mu, stencil)
    )


def leibniz_expand(
    psi: GridFunction, phi: GridFunction, mu: MultiVec, stencil: StencilSet
) -> GridFunction:
    """Discrete product rule for the weighted mixed difference of psi*phi.

    Expands over all subsets S of the positions of `mu`:

        sum_S (Dbar_{mu(S)} psi) * Dbar_{mu(~S)} T_{mu(S)} phi

    where Dbar is the weighted difference over the selected positions, ~S the
    complement, and T the shift by the selected directions.  The result equals
    mixed_difference(psi*phi, mu) exactly in real arithmetic.
    """
    mu = tuple(as_vec(v) for v in mu)
    n = len(mu)
    if n < 1:
        raise ValueError("multi-vector must have at least one entry")
    if n > LEIBNIZ_MAX_ORDER:
        raise ValueError(f"expansion order {n} exceeds cap {LEIBNIZ_MAX_ORDER}")
    for lam in mu:
        _check_vec(phi, lam)
        if lam not in stencil.weights:
            raise ValueError(f"direction {lam} is not in the stencil set")

    h = phi.lattice.h
    acc = np.zeros(phi.lattice.shape)
    for r in range(n + 1):
        for positions in itertools.combinations(range(n), r):
            sel = tuple(mu[i] for i in positions)
            rest = tuple(mu[i] for i in range(n) if i not in positions)
            left = _mixed_values(psi.values, h, sel, stencil)
            shift_total = tuple(sum(c) for c in zip(*sel)) if sel else None
            right = phi.values if shift_total is None else roll_by(phi.values, shift_total)
            right = _mixed_values(right, h, rest, stencil)
            acc += left * right
    return GridFunction(phi.lattice, acc)
