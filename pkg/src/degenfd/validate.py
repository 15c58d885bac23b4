"""Executable checkers for the scheme hypotheses and structural probes.

Plain checkers (monotonicity, the floor on c, the drift-balance of the
diffusion weights, symmetry, the kappa floor, the pointwise increment bounds)
scan every lattice node at sampled times and report the worst margin together
with a concrete witness.

The two coercivity probes evaluate the structural energy inequalities that
drive the h-uniform derivative estimates: they compare the coupling form

    A1(phi) = 2 sum_{lam in Lambda} (Dbar_lam phi) * L0_lam T_lam phi,
    L0_lam  = (1/h) sum_mu (Dbar_lam q_mu) delta_mu + sum_mu (Dbar_lam p_mu) delta_mu

against the dissipation produced by the energy form.  Here Lambda joins the
stencil directions (where Dbar_lam = tau_lam * delta_lam and T_lam shifts)
with one formal direction per axis carrying the exact derivative tau0 * D_i
(with trivial shift).  The probes are falsification tests on a finite bank of
catalog test functions: a violation disproves the inequality for the identity
averaging operator; absence of violations is evidence, not proof.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .fields import (
    CoefficientSet,
    FieldExpr,
    M_AVAIL,
    make_sampler,
    multi_indices,
    exact_derivative,
    EVAL_REFINEMENT,
)
from .grid import Lattice, roll_by
from .operators import SampledOperator, Scheme
from .stencil import StencilSet, Vec

ROUNDOFF = 1e-12
SAMPLED_SUP_TOL = 1e-10
TAU0_SWEEP = (1.0, 0.5, 0.25, 0.125)


@dataclass
class ValidationReport:
    """Outcome of one checker: pass/fail, worst margin, and its location."""

    name: str
    passed: bool
    margin: float
    witness: dict | None
    tolerance: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "margin": self.margin,
            "witness": self.witness,
            "tolerance": self.tolerance,
            "details": self.details,
        }


def _node_witness(lattice: Lattice, flat_index: int) -> dict:
    idx = np.unravel_index(flat_index, lattice.shape)
    return {
        "index": [int(i) for i in idx],
        "x": [float(i * lattice.h) for i in idx],
    }


def check_monotonicity(scheme: Scheme, t_samples=(0.0,)) -> ValidationReport:
    """chi_lam = q_lam + h p_lam >= 0 at every node, time, direction."""
    worst = np.inf
    witness = None
    for t in t_samples:
        for lam in scheme.stencil.vectors:
            chi = scheme.chi_values(lam, t)
            k = int(np.argmin(chi))
            if chi.flat[k] < worst:
                worst = float(chi.flat[k])
                witness = {"t": float(t), "lambda": list(lam)}
                witness.update(_node_witness(scheme.lattice, k))
    return ValidationReport(
        name="monotonicity",
        passed=worst >= -ROUNDOFF,
        margin=worst,
        witness=witness,
        tolerance=ROUNDOFF,
    )


def check_c_floor(scheme: Scheme, c0: float | None = None, t_samples=(0.0,)) -> ValidationReport:
    """c >= c0 at every node and sampled time."""
    c0 = scheme.coeffs.c0 if c0 is None else float(c0)
    worst = np.inf
    witness = None
    for t in t_samples:
        c = scheme.coeffs.c.sample_values(t, scheme.lattice)
        k = int(np.argmin(c))
        if c.flat[k] - c0 < worst:
            worst = float(c.flat[k]) - c0
            witness = {"t": float(t)}
            witness.update(_node_witness(scheme.lattice, k))
    return ValidationReport(
        name="c_floor",
        passed=worst >= -ROUNDOFF,
        margin=worst,
        witness=witness,
        tolerance=ROUNDOFF,
        details={"c0": c0},
    )


def check_q_drift(scheme: Scheme, t_samples=(0.0,)) -> ValidationReport:
    """sum_lam lam * q_lam(t, x) must not depend on x (componentwise)."""
    d = scheme.lattice.d
    worst_spread = 0.0
    sup_s = 0.0
    witness = None
    for t in t_samples:
        comps = [np.zeros(scheme.lattice.shape) for _ in range(d)]
        for lam in scheme.stencil.vectors:
            q = scheme.coeffs.q[lam].sample_values(t, scheme.lattice)
            for i, ci in enumerate(lam):
                if ci != 0:
                    comps[i] += ci * q
        for i, s in enumerate(comps):
            sup_s = max(sup_s, float(np.max(np.abs(s))))
            spread = float(np.max(s) - np.min(s))
            if spread > worst_spread:
                worst_spread = spread
                witness = {"t": float(t), "component": i}
                witness.update(_node_witness(scheme.lattice, int(np.argmax(s))))
    tol = SAMPLED_SUP_TOL * (1.0 + sup_s)
    return ValidationReport(
        name="q_drift",
        passed=worst_spread <= tol,
        margin=tol - worst_spread,
        witness=witness,
        tolerance=tol,
        details={"max_spread": worst_spread},
    )


def check_symmetry(scheme: Scheme, t_samples=(0.0,)) -> ValidationReport:
    """Direction set closed under negation and q_lam = q_{-lam} everywhere."""
    vecs = set(scheme.stencil.vectors)
    for v in vecs:
        neg = tuple(-c for c in v)
        if neg not in vecs:
            return ValidationReport(
                name="symmetry",
                passed=False,
                margin=-1.0,
                witness={"lambda": list(v), "missing": list(neg)},
                tolerance=ROUNDOFF,
                details={"reason": "direction set is not closed under negation"},
            )
    worst = 0.0
    witness = None
    for t in t_samples:
        for v in vecs:
            neg = tuple(-c for c in v)
            gap = np.abs(
                scheme.coeffs.q[v].sample_values(t, scheme.lattice)
                - scheme.coeffs.q[neg].sample_values(t, scheme.lattice)
            )
            k = int(np.argmax(gap))
            if gap.flat[k] > worst:
                worst = float(gap.flat[k])
                witness = {"t": float(t), "lambda": list(v)}
                witness.update(_node_witness(scheme.lattice, k))
    return ValidationReport(
        name="symmetry",
        passed=worst <= ROUNDOFF,
        margin=ROUNDOFF - worst,
        witness=witness,
        tolerance=ROUNDOFF,
    )


def check_kappa_floor(scheme: Scheme, kappa: float, t_samples=(0.0,)) -> ValidationReport:
    """q_lam >= kappa > 0 everywhere (sufficient-condition route)."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    worst = np.inf
    witness = None
    for t in t_samples:
        for lam in scheme.stencil.vectors:
            q = scheme.coeffs.q[lam].sample_values(t, scheme.lattice)
            k = int(np.argmin(q))
            if q.flat[k] - kappa < worst:
                worst = float(q.flat[k]) - kappa
                witness = {"t": float(t), "lambda": list(lam)}
                witness.update(_node_witness(scheme.lattice, k))
    return ValidationReport(
        name="kappa_floor",
        passed=worst >= -ROUNDOFF,
        margin=worst,
        witness=witness,
        tolerance=ROUNDOFF,
        details={"kappa": kappa},
    )


def estimate_Mk(
    coeffs: CoefficientSet, m: int, t_samples, lattice: Lattice
) -> list[float]:
    """Smoothness envelopes M_k, k = 0..m:

        M_k = sup sqrt( sum_lam (|D^k q_lam|^2 + |D^k p_lam|^2) + |D^k c|^2 )

    with exact catalog derivatives, sups over a refined lattice and the
    sampled times.
    """
    if m > M_AVAIL:
        raise ValueError(f"order {m} exceeds derivative availability {M_AVAIL}")
    dense = lattice.refine(EVAL_REFINEMENT)
    out = []
    exprs = list(coeffs.q.values()) + list(coeffs.p.values()) + [coeffs.c]
    for k in range(m + 1):
        best = 0.0
        for t in t_samples:
            total = np.zeros(dense.shape)
            for expr in exprs:
                for alpha in multi_indices(expr.dim, k):
                    vals = exact_derivative(expr, alpha).sample_values(t, dense)
                    total += vals * vals
            best = max(best, float(np.max(total)))
        out.append(float(np.sqrt(best)))
    return out


def check_increment_bounds(
    scheme: Scheme, m: int, delta: float, t_samples=(0.0,)
) -> ValidationReport:
    """Pointwise sufficient conditions tying coefficient increments to chi.

    With r_lam = sqrt(q_lam) formed pointwise on the lattice, requires at
    every node, time, and direction pair (lam, mu):

        m(m-1) h^2 (delta_lam r_mu)^2  <=  delta   * (chi_lam + chi_mu)
        h^2 |delta_lam p_mu|           <=  delta^2 * (chi_lam + chi_mu)

    Applicable only under symmetry and p >= 0, with delta in (0, 1/4].
    """
    name = "increment_bounds"
    if not 0 < delta <= 0.25:
        raise ValueError("delta must lie in (0, 1/4]")
    if m < 2:
        raise ValueError("m must be at least 2")
    sym = check_symmetry(scheme, t_samples)
    if not sym.passed:
        return ValidationReport(
            name=name,
            passed=False,
            margin=-1.0,
            witness=sym.witness,
            tolerance=ROUNDOFF,
            details={"inapplicable": "symmetry condition fails"},
        )
    h = scheme.h
    lat = scheme.lattice
    worst = np.inf
    witness = None
    max_ratio = 0.0
    scale = 0.0
    for t in t_samples:
        q = {lam: scheme.coeffs.q[lam].sample_values(t, lat) for lam in scheme.stencil.vectors}
        p = {lam: scheme.coeffs.p[lam].sample_values(t, lat) for lam in scheme.stencil.vectors}
        chi = {lam: q[lam] + h * p[lam] for lam in scheme.stencil.vectors}
        for arr in p.values():
            if float(np.min(arr)) < -ROUNDOFF:
                return ValidationReport(
                    name=name,
                    passed=False,
                    margin=float(np.min(arr)),
                    witness={"t": float(t)},
                    tolerance=ROUNDOFF,
                    details={"inapplicable": "p has negative values"},
                )
        r = {lam: np.sqrt(np.maximum(q[lam], 0.0)) for lam in scheme.stencil.vectors}
        for lam in scheme.stencil.vectors:
            for mu in scheme.stencil.vectors:
                dr = (roll_by(r[mu], lam) - r[mu]) / h
                dp = (roll_by(p[mu], lam) - p[mu]) / h
                cap = chi[lam] + chi[mu]
                lhs_r = m * (m - 1) * h * h * dr * dr
                lhs_p = h * h * np.abs(dp)
                for lhs, rhs, tag in (
                    (lhs_r, delta * cap, "sqrt_diffusion"),
                    (lhs_p, delta * delta * cap, "drift"),
                ):
                    gap = rhs - lhs
                    k = int(np.argmin(gap))
                    scale = max(scale, float(np.max(lhs)), float(np.max(np.abs(rhs))))
                    if gap.flat[k] < worst:
                        worst = float(gap.flat[k])
                        witness = {
                            "t": float(t),
                            "lambda": list(lam),
                            "mu": list(mu),
                            "inequality": tag,
                        }
                        witness.update(_node_witness(lat, k))
                    with np.errstate(divide="ignore", invalid="ignore"):
                        ratio = np.where(lhs > 0, lhs / np.where(rhs > 0, rhs, np.nan), 0.0)
                    ratio = np.where(np.isnan(ratio), np.inf, ratio)
                    max_ratio = max(max_ratio, float(np.max(ratio)))
    tol = ROUNDOFF * (1.0 + scale)
    details: dict = {"max_ratio": max_ratio}
    if 0.0 < max_ratio < np.inf:
        # first-order estimate of the mesh size at which the bounds saturate
        details["critical_h"] = h / float(np.sqrt(max_ratio))
    elif max_ratio == 0.0:
        details["critical_h"] = None
    else:
        details["critical_h"] = 0.0
    return ValidationReport(
        name=name,
        passed=worst >= -tol,
        margin=worst,
        witness=witness,
        tolerance=tol,
        details=details,
    )


# ---- coercivity probes ---------------------------------------------------
#
# Elements of the joined direction family Lambda are tagged tuples:
# ("lat", vec) for stencil directions, ("ax", i) for the formal per-axis
# directions whose weighted difference is the exact derivative tau0 * D_i.

Elem = tuple[str, object]


def _lambda_elems(stencil: StencilSet) -> list[Elem]:
    return [("lat", v) for v in stencil.vectors] + [
        ("ax", i) for i in range(stencil.d)
    ]


@dataclass(frozen=True)
class _Mixed:
    """A catalog field with pending exact derivatives, shifts and differences.

    Exact derivatives (from axis elements) are folded into `expr`; stencil
    differences are kept symbolic in `rolls` and applied to the sampled
    values.  All the operators involved commute, so this evaluation order is
    exact.
    """

    expr: FieldExpr
    rolls: tuple[Vec, ...]
    shift: Vec
    scale: float

    @classmethod
    def of(cls, expr: FieldExpr) -> "_Mixed":
        return cls(expr, (), (0,) * expr.dim, 1.0)

    def bar(self, elem: Elem, stencil: StencilSet) -> "_Mixed":
        kind, payload = elem
        if kind == "lat":
            return _Mixed(
                self.expr,
                self.rolls + (payload,),
                self.shift,
                self.scale * stencil.weights[payload],
            )
        return _Mixed(
            self.expr.dx(payload), self.rolls, self.shift, self.scale * stencil.tau0
        )

    def shifted(self, elem: Elem) -> "_Mixed":
        kind, payload = elem
        if kind == "ax":
            return self
        new_shift = tuple(a + b for a, b in zip(self.shift, payload))
        return _Mixed(self.expr, self.rolls, new_shift, self.scale)

    def sample(self, t: float, lattice: Lattice) -> np.ndarray:
        arr = self.expr.sample_values(t, lattice)
        if any(self.shift):
            arr = roll_by(arr, self.shift)
        h = lattice.h
        for v in self.rolls:
            arr = (roll_by(arr, v) - arr) / h
        return self.scale * arr


def build_test_bank(dim: int, seed: int, n_random: int = 8) -> list[tuple[str, FieldExpr]]:
    """12 fixed low-wavenumber test functions plus seeded random ones."""

    def wave(*ks: int) -> tuple[int, ...]:
        return tuple(list(ks) + [0] * (dim - len(ks)))[:dim]

    sin = lambda *k: FieldExpr.trig(dim, "sin", wave(*k))
    cos = lambda *k: FieldExpr.trig(dim, "cos", wave(*k))
    if dim == 1:
        fixed = [
            sin(1), cos(1), sin(2), cos(2), sin(3), cos(3),
            1.0 + sin(1), sin(1) + cos(2), sin(1) * cos(1),
            2.0 + cos(3), sin(1) - cos(1), sin(2) + 0.5 * cos(1),
        ]
    else:
        fixed = [
            sin(1), cos(0, 1), sin(1, 1), cos(1, -1), sin(2), cos(0, 2),
            sin(1) * cos(0, 1), 1.0 + sin(1, 1), sin(2, 1), cos(1, 1),
            sin(1) + cos(0, 1), sin(3) - cos(0, 3),
        ]
    bank = [(f"fixed_{i}", e) for i, e in enumerate(fixed)]

    rng = np.random.default_rng(seed)
    waves = [
        w
        for w in itertools.product(range(-3, 4), repeat=dim)
        if any(w) and next(c for c in w if c != 0) > 0
    ]
    for j in range(n_random):
        expr = FieldExpr.const(dim, float(rng.uniform(-1, 1)))
        picks = rng.choice(len(waves), size=min(4, len(waves)), replace=False)
        for idx in picks:
            kind = "sin" if rng.uniform() < 0.5 else "cos"
            expr = expr + float(rng.uniform(-1, 1)) * FieldExpr.trig(dim, kind, waves[int(idx)])
        bank.append((f"random_{j}", expr))
    return bank


class _ProbeContext:
    """Shared per-(tau0, t) arrays for the coercivity probes."""

    def __init__(self, scheme: Scheme, tau0: float):
        self.scheme = scheme
        self.lattice = scheme.lattice
        self.h = scheme.h
        self.stencil = StencilSet(
            scheme.stencil.vectors, dict(scheme.stencil.weights), tau0
        )
        self.elems = _lambda_elems(self.stencil)
        self.op = SampledOperator(scheme)
        self._coeff_cache: dict = {}

    def delta_mu(self, arr: np.ndarray, mu: Vec) -> np.ndarray:
        return (roll_by(arr, mu) - arr) / self.h

    def coeff(self, key: tuple, t: float) -> np.ndarray:
        """sample of (1/h) Dbar q_mu + Dbar p_mu for a chain of bar ops."""
        chain, mu = key
        cached = self._coeff_cache.get((chain, mu, t))
        if cached is not None:
            return cached
        qm = _Mixed.of(self.scheme.coeffs.q[mu])
        pm = _Mixed.of(self.scheme.coeffs.p[mu])
        for elem in chain:
            qm = qm.bar(elem, self.stencil)
            pm = pm.bar(elem, self.stencil)
        arr = qm.sample(t, self.lattice) / self.h + pm.sample(t, self.lattice)
        self._coeff_cache[(chain, mu, t)] = arr
        return arr

    def l0_chain(self, chain: tuple[Elem, ...], rho: _Mixed, t: float) -> np.ndarray:
        """L0_chain rho = sum_mu [(1/h) Dbar_chain q_mu + Dbar_chain p_mu] delta_mu rho."""
        rho_arr = rho.sample(t, self.lattice)
        out = np.zeros_like(rho_arr)
        for mu in self.scheme.stencil.vectors:
            out += self.coeff((chain, mu), t) * self.delta_mu(rho_arr, mu)
        return out

    def a1(self, psi: _Mixed, t: float) -> np.ndarray:
        """A1(psi) = 2 sum_lam (Dbar_lam psi) L0_lam T_lam psi."""
        out = np.zeros(self.lattice.shape)
        for elem in self.elems:
            bar = psi.bar(elem, self.stencil).sample(t, self.lattice)
            out += bar * self.l0_chain((elem,), psi.shifted(elem), t)
        return 2.0 * out


def _probe(
    scheme: Scheme,
    name: str,
    m: int,
    delta: float,
    K1: float,
    test_bank,
    t_samples,
    margin_fn,
    tau0_sweep=TAU0_SWEEP,
) -> ValidationReport:
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if K1 < 0:
        raise ValueError("K1 must be nonnegative")
    if any(w == 0 for w in scheme.stencil.weights.values()):
        raise ValueError("probe requires strictly positive tau weights")

    def run(tau0: float):
        ctx = _ProbeContext(scheme, tau0)
        worst = np.inf
        witness = None
        scale = 0.0
        for label, phi in test_bank:
            for t in t_samples:
                lhs, rhs = margin_fn(ctx, phi, float(t))
                gap = rhs - lhs
                k = int(np.argmin(gap))
                scale = max(scale, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
                if gap.flat[k] < worst:
                    worst = float(gap.flat[k])
                    witness = {"phi": label, "t": float(t)}
                    witness.update(_node_witness(scheme.lattice, k))
        return worst, witness, scale

    worst, witness, scale = run(scheme.stencil.tau0)
    tol = SAMPLED_SUP_TOL * (1.0 + scale)
    sweep = {}
    for tau0 in tau0_sweep:
        if tau0 == scheme.stencil.tau0:
            sweep[repr(tau0)] = worst
        else:
            sweep[repr(tau0)] = run(tau0)[0]
    return ValidationReport(
        name=name,
        passed=worst >= -tol,
        margin=worst,
        witness=witness,
        tolerance=tol,
        details={
            "tau0": scheme.stencil.tau0,
            "tau0_margin_sweep": sweep,
            "bank_size": len(test_bank),
            "falsification_only": True,
        },
    )


def probe_coercivity_first(
    scheme: Scheme,
    m: int,
    delta: float,
    K1: float,
    test_bank=None,
    t_samples=(0.0,),
    seed: int = 0,
) -> ValidationReport:
    """Falsification probe for the first-order energy inequality

        m A1(phi) <= (1-delta) sum_lam Q(Dbar_lam phi) + K1 Q(phi)
                     + 2 (1-delta) c sum_lam |Dbar_lam phi|^2

    with the identity averaging operator on the right-hand side.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if test_bank is None:
        test_bank = build_test_bank(scheme.lattice.d, seed)

    def margin_fn(ctx: _ProbeContext, phi: FieldExpr, t: float):
        base = _Mixed.of(phi)
        lhs = m * ctx.a1(base, t)
        phi_arr = base.sample(t, ctx.lattice)
        diss = np.zeros_like(phi_arr)
        weight = np.zeros_like(phi_arr)
        for elem in ctx.elems:
            bar = base.bar(elem, ctx.stencil).sample(t, ctx.lattice)
            diss += ctx.op.q_form(t, bar)
            weight += bar * bar
        rhs = (1 - delta) * diss + K1 * ctx.op.q_form(t, phi_arr)
        rhs += 2 * (1 - delta) * ctx.op.c(t) * weight
        return lhs, rhs

    return _probe(
        scheme, "coercivity_first", m, delta, K1, test_bank, t_samples, margin_fn
    )


def probe_coercivity_second(
    scheme: Scheme,
    m: int,
    delta: float,
    K1: float,
    test_bank=None,
    t_samples=(0.0,),
    seed: int = 0,
) -> ValidationReport:
    """Falsification probe for the higher-order energy inequality, n = 1..m:

        n sum_nu A1(Dbar_nu phi) + n(n-1) sum_{lam in Lambda^2} (Dbar_lam phi) Q_lam T_lam phi
          <= (1-delta) sum_{Lambda^2} Q(Dbar_lam phi) + K1 sum_Lambda Q(Dbar_lam phi)
             + 2 (1-delta) c sum_{Lambda^2} |Dbar_lam phi|^2 + K1 sum_Lambda |Dbar_lam phi|^2

    again with the identity averaging operator.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    if test_bank is None:
        test_bank = build_test_bank(scheme.lattice.d, seed)

    def margin_fn(ctx: _ProbeContext, phi: FieldExpr, t: float):
        base = _Mixed.of(phi)
        pairs = list(itertools.product(ctx.elems, repeat=2))

        sum_a1 = np.zeros(ctx.lattice.shape)
        for nu in ctx.elems:
            sum_a1 += ctx.a1(base.bar(nu, ctx.stencil), t)

        coupling = np.zeros(ctx.lattice.shape)
        for e1, e2 in pairs:
            bar2 = base.bar(e1, ctx.stencil).bar(e2, ctx.stencil).sample(t, ctx.lattice)
            rho = base.shifted(e1).shifted(e2)
            rho_arr = rho.sample(t, ctx.lattice)
            qterm = np.zeros_like(rho_arr)
            for mu in ctx.scheme.stencil.vectors:
                qm = _Mixed.of(ctx.scheme.coeffs.q[mu]).bar(e1, ctx.stencil).bar(e2, ctx.stencil)
                qterm += qm.sample(t, ctx.lattice) / ctx.h * ctx.delta_mu(rho_arr, mu)
            coupling += bar2 * qterm

        diss1 = np.zeros(ctx.lattice.shape)
        weight1 = np.zeros(ctx.lattice.shape)
        for elem in ctx.elems:
            bar = base.bar(elem, ctx.stencil).sample(t, ctx.lattice)
            diss1 += ctx.op.q_form(t, bar)
            weight1 += bar * bar
        diss2 = np.zeros(ctx.lattice.shape)
        weight2 = np.zeros(ctx.lattice.shape)
        for e1, e2 in pairs:
            bar = base.bar(e1, ctx.stencil).bar(e2, ctx.stencil).sample(t, ctx.lattice)
            diss2 += ctx.op.q_form(t, bar)
            weight2 += bar * bar

        c_arr = ctx.op.c(t)
        rhs_base = (
            (1 - delta) * diss2
            + K1 * diss1
            + 2 * (1 - delta) * c_arr * weight2
            + K1 * weight1
        )
        worst_lhs = None
        worst_gap = None
        for n in range(1, m + 1):
            lhs = n * sum_a1 + n * (n - 1) * coupling
            gap = rhs_base - lhs
            if worst_gap is None or float(np.min(gap)) < float(np.min(worst_gap)):
                worst_gap = gap
                worst_lhs = lhs
        return worst_lhs, rhs_base

    return _probe(
        scheme, "coercivity_second", m, delta, K1, test_bank, t_samples, margin_fn
    )
