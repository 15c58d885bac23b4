"""Closed-form coefficient and data fields with exact derivatives.

A `FieldExpr` is a trigonometric polynomial in x with polynomial-in-t
coefficients:

    expr(t, x) = sum_j  P_j(t) * w_j(x),
    w_j in {1} union {sin(k.x), cos(k.x) : k integer wave vector}.

This class is closed under +, *, d/dt and all spatial derivatives, each of
which is computed exactly (products reduce via the product-to-sum identities,
D_i sin(k.x) = k_i cos(k.x), etc.).  Every expression is 2*pi-periodic per
axis by construction, so sampling on a `Lattice` is exact.

Scenario files carry expressions in a small grammar:

    expr   := term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := NUMBER | 't' ['^' INT] | ('sin'|'cos') '(' wave ')' | '(' expr ')'
    wave   := ['-'] waveterm (('+'|'-') waveterm)*
    waveterm := [INT '*'] ('x' | 'x1' | 'x2' | 'x3')

e.g. "0.5", "sin(x1)+t*sin(x1)", "2+sin(2*x1-x2)".  `parse_expr` and
`FieldExpr.serialize` round-trip losslessly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from .grid import GridFunction, Lattice

Wave = tuple[int, ...]
TPoly = tuple[float, ...]

# Declared availability caps for exact derivatives (trig polynomials are
# smooth; the caps bound what callers may request).
M_AVAIL = 12
T_ORDER_AVAIL = 2
T_DEGREE_MAX = 4


def _trim(poly: tuple[float, ...]) -> TPoly:
    coeffs = list(poly)
    while coeffs and coeffs[-1] == 0.0:
        coeffs.pop()
    return tuple(coeffs)


def _poly_add(a: TPoly, b: TPoly) -> TPoly:
    n = max(len(a), len(b))
    return _trim(
        tuple((a[i] if i < len(a) else 0.0) + (b[i] if i < len(b) else 0.0) for i in range(n))
    )


def _poly_mul(a: TPoly, b: TPoly) -> TPoly:
    if not a or not b:
        return ()
    out = [0.0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return _trim(tuple(out))


def _poly_scale(a: TPoly, s: float) -> TPoly:
    return _trim(tuple(s * c for c in a))


def _poly_eval(a: TPoly, t: float) -> float:
    acc = 0.0
    for c in reversed(a):
        acc = acc * t + c
    return acc


def _poly_ddt(a: TPoly) -> TPoly:
    return _trim(tuple(i * a[i] for i in range(1, len(a))))


def _canonical(kind: str, wave: Wave, poly: TPoly) -> tuple[str, Wave, TPoly] | None:
    """Normalize a basis term; returns None if it is identically zero."""
    if all(k == 0 for k in wave):
        if kind == "sin":
            return None
        return ("cos", wave, poly)
    first = next(k for k in wave if k != 0)
    if first < 0:
        wave = tuple(-k for k in wave)
        if kind == "sin":
            poly = _poly_scale(poly, -1.0)
    return (kind, wave, poly)


class FieldExpr:
    """Immutable trig polynomial in x with polynomial-in-t coefficients."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: dict[tuple[str, Wave], TPoly]):
        self.dim = dim
        clean: dict[tuple[str, Wave], TPoly] = {}
        for (kind, wave), poly in terms.items():
            canon = _canonical(kind, wave, _trim(poly))
            if canon is None:
                continue
            kind, wave, poly = canon
            if not poly:
                continue
            key = (kind, wave)
            merged = _poly_add(clean.get(key, ()), poly)
            if merged:
                clean[key] = merged
            elif key in clean:
                del clean[key]
        self.terms = clean

    # ---- constructors -------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "FieldExpr":
        return cls(dim, {})

    @classmethod
    def const(cls, dim: int, value: float) -> "FieldExpr":
        return cls(dim, {("cos", (0,) * dim): (float(value),)})

    @classmethod
    def t_power(cls, dim: int, n: int) -> "FieldExpr":
        return cls(dim, {("cos", (0,) * dim): (0.0,) * n + (1.0,)})

    @classmethod
    def trig(cls, dim: int, kind: str, wave) -> "FieldExpr":
        wave = tuple(int(k) for k in wave)
        if len(wave) != dim:
            raise ValueError(f"wave vector {wave} has wrong dimension for d={dim}")
        return cls(dim, {(kind, wave): (1.0,)})

    # ---- algebra -------------------------------------------------------

    def _binary(self, other) -> "FieldExpr":
        if isinstance(other, (int, float)):
            return FieldExpr.const(self.dim, float(other))
        if not isinstance(other, FieldExpr):
            raise TypeError(f"cannot combine FieldExpr with {type(other)!r}")
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return other

    def __add__(self, other) -> "FieldExpr":
        other = self._binary(other)
        terms = dict(self.terms)
        for key, poly in other.terms.items():
            terms[key] = _poly_add(terms.get(key, ()), poly)
        return FieldExpr(self.dim, terms)

    __radd__ = __add__

    def __neg__(self) -> "FieldExpr":
        return FieldExpr(
            self.dim, {key: _poly_scale(poly, -1.0) for key, poly in self.terms.items()}
        )

    def __sub__(self, other) -> "FieldExpr":
        return self + (-self._binary(other))

    def __rsub__(self, other) -> "FieldExpr":
        return self._binary(other) + (-self)

    def __mul__(self, other) -> "FieldExpr":
        if isinstance(other, (int, float)):
            return FieldExpr(
                self.dim,
                {key: _poly_scale(poly, float(other)) for key, poly in self.terms.items()},
            )
        other = self._binary(other)
        out: dict[tuple[str, Wave], TPoly] = {}

        def accumulate(kind: str, wave: Wave, poly: TPoly) -> None:
            canon = _canonical(kind, wave, poly)
            if canon is None:
                return
            kind, wave, poly = canon
            if not poly:
                return
            out[(kind, wave)] = _poly_add(out.get((kind, wave), ()), poly)

        for (k1, u), p1 in self.terms.items():
            for (k2, v), p2 in other.terms.items():
                poly = _poly_scale(_poly_mul(p1, p2), 0.5)
                diff = tuple(a - b for a, b in zip(u, v))
                summ = tuple(a + b for a, b in zip(u, v))
                if k1 == "cos" and k2 == "cos":
                    accumulate("cos", diff, poly)
                    accumulate("cos", summ, poly)
                elif k1 == "sin" and k2 == "sin":
                    accumulate("cos", diff, poly)
                    accumulate("cos", summ, _poly_scale(poly, -1.0))
                elif k1 == "sin" and k2 == "cos":
                    accumulate("sin", summ, poly)
                    accumulate("sin", diff, poly)
                else:  # cos * sin
                    accumulate("sin", summ, poly)
                    accumulate("sin", tuple(-c for c in diff), poly)
        return FieldExpr(self.dim, out)

    __rmul__ = __mul__

    # ---- calculus ------------------------------------------------------

    def dx(self, axis: int) -> "FieldExpr":
        """Exact spatial derivative along one axis."""
        out: dict[tuple[str, Wave], TPoly] = {}
        for (kind, wave), poly in self.terms.items():
            k = wave[axis]
            if k == 0:
                continue
            new_kind = "cos" if kind == "sin" else "sin"
            sign = 1.0 if kind == "sin" else -1.0
            canon = _canonical(new_kind, wave, _poly_scale(poly, sign * k))
            if canon is None:
                continue
            nk, nw, np_ = canon
            out[(nk, nw)] = _poly_add(out.get((nk, nw), ()), np_)
        return FieldExpr(self.dim, out)

    def dt(self) -> "FieldExpr":
        return FieldExpr(self.dim, {key: _poly_ddt(poly) for key, poly in self.terms.items()})

    def at_time(self, t: float) -> "FieldExpr":
        """Freeze t, leaving a pure function of x."""
        return FieldExpr(
            self.dim, {key: (_poly_eval(poly, t),) for key, poly in self.terms.items()}
        )

    def time_degree(self) -> int:
        return max((len(poly) - 1 for poly in self.terms.values()), default=0)

    def is_time_independent(self) -> bool:
        return self.time_degree() == 0

    # ---- evaluation ----------------------------------------------------

    def __call__(self, t: float, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        acc = 0.0
        for (kind, wave), poly in self.terms.items():
            phase = float(np.dot(wave, x))
            basis = math.sin(phase) if kind == "sin" else math.cos(phase)
            acc += _poly_eval(poly, t) * basis
        return acc

    def sample_values(self, t: float, lattice: Lattice) -> np.ndarray:
        if lattice.d != self.dim:
            raise ValueError("lattice dimension does not match expression")
        out = np.zeros(lattice.shape)
        for (kind, wave), poly in self.terms.items():
            out += _poly_eval(poly, t) * _basis(lattice, kind, wave)
        return out

    def serialize(self) -> str:
        """Render in the scenario grammar; parse_expr inverts this exactly."""
        pieces: list[str] = []
        for (kind, wave), poly in sorted(self.terms.items()):
            trig = None if all(k == 0 for k in wave) else f"{kind}({_wave_str(wave)})"
            for power, coeff in enumerate(poly):
                if coeff == 0.0:
                    continue
                factors = [repr(coeff)]
                if power == 1:
                    factors.append("t")
                elif power > 1:
                    factors.append(f"t^{power}")
                if trig is not None:
                    factors.append(trig)
                pieces.append("*".join(factors))
        if not pieces:
            return "0.0"
        text = pieces[0]
        for p in pieces[1:]:
            text += " - " + p[1:] if p.startswith("-") else " + " + p
        return text

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"FieldExpr({self.serialize()!r})"


def _wave_str(wave: Wave) -> str:
    parts = []
    for axis, k in enumerate(wave):
        if k == 0:
            continue
        mag = f"{abs(k)}*x{axis + 1}" if abs(k) != 1 else f"x{axis + 1}"
        parts.append(("-" if k < 0 else "+") + mag)
    text = "".join(parts)
    return text[1:] if text.startswith("+") else text


@lru_cache(maxsize=512)
def _basis(lattice: Lattice, kind: str, wave: Wave) -> np.ndarray:
    coords = lattice.node_coordinates()
    phase = np.zeros(lattice.shape)
    for axis, k in enumerate(wave):
        if k != 0:
            phase = phase + k * coords[axis]
    return np.sin(phase) if kind == "sin" else np.cos(phase)


# ---- expression grammar ------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<sym>[-+*^()]))"
)


class ExprParseError(ValueError):
    pass


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprParseError(f"unexpected character at {text[pos:]!r}")
        pos = m.end()
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num")))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident")))
        else:
            tokens.append(("sym", m.group("sym")))
    tokens.append(("end", ""))
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.dim = dim

    def peek(self) -> tuple[str, str]:
        return self.tokens[self.pos]

    def take(self) -> tuple[str, str]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str) -> None:
        kind, text = self.take()
        if text != value:
            raise ExprParseError(f"expected {value!r}, found {text!r}")

    def parse(self) -> FieldExpr:
        expr = self.expr()
        if self.peek()[0] != "end":
            raise ExprParseError(f"trailing input near {self.peek()[1]!r}")
        return expr

    def expr(self) -> FieldExpr:
        out = self.term()
        while self.peek() == ("sym", "+") or self.peek() == ("sym", "-"):
            op = self.take()[1]
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> FieldExpr:
        out = self.unary()
        while self.peek() == ("sym", "*"):
            self.take()
            out = out * self.unary()
        return out

    def unary(self) -> FieldExpr:
        if self.peek() == ("sym", "-"):
            self.take()
            return -self.unary()
        return self.factor()

    def factor(self) -> FieldExpr:
        kind, text = self.take()
        if kind == "num":
            return FieldExpr.const(self.dim, float(text))
        if kind == "sym" and text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        if kind == "ident" and text == "t":
            power = 1
            if self.peek() == ("sym", "^"):
                self.take()
                pk, pt = self.take()
                if pk != "num" or "." in pt or "e" in pt.lower():
                    raise ExprParseError(f"exponent must be an integer, found {pt!r}")
                power = int(pt)
                if power < 0 or power > T_DEGREE_MAX:
                    raise ExprParseError(
                        f"time power {power} outside 0..{T_DEGREE_MAX}"
                    )
            return FieldExpr.t_power(self.dim, power)
        if kind == "ident" and text in ("sin", "cos"):
            self.expect("(")
            wave = self.wave()
            self.expect(")")
            return FieldExpr.trig(self.dim, text, wave)
        raise ExprParseError(f"unexpected token {text!r}")

    def wave(self) -> Wave:
        wave = [0] * self.dim
        sign = 1
        if self.peek() == ("sym", "-"):
            self.take()
            sign = -1
        while True:
            coeff = 1
            kind, text = self.take()
            if kind == "num":
                if "." in text or "e" in text.lower():
                    raise ExprParseError(f"wave coefficient must be an integer: {text!r}")
                coeff = int(text)
                self.expect("*")
                kind, text = self.take()
            if kind != "ident" or not re.fullmatch(r"x[1-3]?", text):
                raise ExprParseError(f"expected coordinate x1..x{self.dim}, found {text!r}")
            axis = 0 if text == "x" else int(text[1:]) - 1
            if axis >= self.dim:
                raise ExprParseError(f"coordinate {text!r} exceeds dimension {self.dim}")
            wave[axis] += sign * coeff
            if self.peek() == ("sym", "+"):
                self.take()
                sign = 1
            elif self.peek() == ("sym", "-"):
                self.take()
                sign = -1
            else:
                return tuple(wave)


def parse_expr(text: str, dim: int) -> FieldExpr:
    """Parse an expression in the scenario grammar."""
    if not isinstance(text, str) or not text.strip():
        raise ExprParseError("empty expression")
    return _Parser(text, dim).parse()


# ---- sampling and norms --------------------------------------------------


def sample(expr: FieldExpr, t: float, lattice: Lattice) -> GridFunction:
    """Evaluate expr(t, .) at every lattice node."""
    return GridFunction(lattice, expr.sample_values(t, lattice))


def make_sampler(expr: FieldExpr, lattice: Lattice):
    """Return a fast t -> values callable with cached trig bases.

    Time-independent expressions evaluate once and return the cached array;
    callers must treat returned arrays as read-only.
    """
    parts = [
        (poly, _basis(lattice, kind, wave)) for (kind, wave), poly in expr.terms.items()
    ]
    if expr.is_time_independent():
        frozen = np.zeros(lattice.shape)
        for poly, basis in parts:
            frozen += (poly[0] if poly else 0.0) * basis
        return lambda t: frozen
    zeros = np.zeros(lattice.shape)

    def sample_at(t: float) -> np.ndarray:
        out = zeros.copy()
        for poly, basis in parts:
            out += _poly_eval(poly, t) * basis
        return out

    return sample_at


def multi_indices(dim: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices alpha with |alpha| = order (each listed once)."""
    out = []
    for combo in combinations_with_replacement(range(dim), order):
        alpha = [0] * dim
        for axis in combo:
            alpha[axis] += 1
        out.append(tuple(alpha))
    return out


def exact_derivative(expr: FieldExpr, alpha: tuple[int, ...], t_order: int = 0) -> FieldExpr:
    """D^alpha (d/dt)^t_order expr, computed in closed form."""
    if len(alpha) != expr.dim:
        raise ValueError(f"multi-index {alpha} has wrong length for d={expr.dim}")
    if any(a < 0 for a in alpha):
        raise ValueError("multi-index entries must be nonnegative")
    if sum(alpha) > M_AVAIL:
        raise ValueError(f"derivative order {sum(alpha)} exceeds availability {M_AVAIL}")
    if t_order < 0 or t_order > T_ORDER_AVAIL:
        raise ValueError(f"time order {t_order} exceeds availability {T_ORDER_AVAIL}")
    out = expr
    for _ in range(t_order):
        out = out.dt()
    for axis, reps in enumerate(alpha):
        for _ in range(reps):
            out = out.dx(axis)
    return out


EVAL_REFINEMENT = 4


def _deriv_magnitude_sq(expr: FieldExpr, k: int, t: float, lattice: Lattice) -> np.ndarray:
    total = np.zeros(lattice.shape)
    for alpha in multi_indices(expr.dim, k):
        vals = exact_derivative(expr, alpha).sample_values(t, lattice)
        total += vals * vals
    return total


def seminorm_k(expr: FieldExpr, k: int, t: float, lattice: Lattice) -> float:
    """sup |D^k expr(t, .)| over a refined sampling lattice.

    |D^k .| is the Euclidean norm over all multi-indices of order k.  The sup
    is taken over EVAL_REFINEMENT x the working lattice, which controls the
    sampling error for the band-limited catalog.
    """
    if k > M_AVAIL:
        raise ValueError(f"order {k} exceeds availability {M_AVAIL}")
    dense = lattice.refine(EVAL_REFINEMENT)
    return float(np.sqrt(np.max(_deriv_magnitude_sq(expr, k, t, dense))))


TIME_SAMPLES = 33


def time_samples(T: float, count: int = TIME_SAMPLES) -> np.ndarray:
    return np.linspace(0.0, T, count)


@dataclass
class CoefficientSet:
    """Diffusion weights q_lam, drift weights p_lam, zeroth-order c.

    `c0` is the declared positive floor for c (checked, not enforced here).
    """

    q: dict[tuple[int, ...], FieldExpr]
    p: dict[tuple[int, ...], FieldExpr]
    c: FieldExpr
    c0: float = 1.0

    def __post_init__(self) -> None:
        if set(self.q) != set(self.p):
            raise ValueError("q and p must be given for the same directions")
        if not self.c0 > 0:
            raise ValueError("declared floor c0 must be positive")

    @property
    def directions(self) -> set[tuple[int, ...]]:
        return set(self.q)

    def is_time_independent(self) -> bool:
        return (
            all(e.is_time_independent() for e in self.q.values())
            and all(e.is_time_independent() for e in self.p.values())
            and self.c.is_time_independent()
        )


@dataclass
class DataSet:
    """Forcing f(t, x) and initial data g(x)."""

    f: FieldExpr
    g: FieldExpr


def data_norms(data: DataSet, n: int, T: float, lattice: Lattice) -> tuple[float, float]:
    """(F_n, G_n): summed sups of derivative magnitudes of f and g up to order n.

    F_n sums, for k = 0..n, the sup of |D^k f| over TIME_SAMPLES uniform times
    in [0, T] and the refined lattice; G_n does the same for g at fixed time.
    """
    if n > M_AVAIL:
        raise ValueError(f"order {n} exceeds availability {M_AVAIL}")
    dense = lattice.refine(EVAL_REFINEMENT)
    ts = time_samples(T)
    F = 0.0
    for k in range(n + 1):
        best = 0.0
        for t in ts:
            best = max(best, float(np.max(_deriv_magnitude_sq(data.f, k, t, dense))))
        F += math.sqrt(best)
    G = sum(
        float(np.sqrt(np.max(_deriv_magnitude_sq(data.g, k, 0.0, dense))))
        for k in range(n + 1)
    )
    return F, G
