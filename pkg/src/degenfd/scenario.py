"""Scenario files: one JSON document describing a complete experiment.

A scenario fixes the lattice, the stencil (directions, tau weights, tau0),
coefficient and data expressions in the catalog grammar, the horizon T, the
integrator, study parameters and a seed.  Loading is strict: unknown keys,
directions without stencil membership, or malformed expressions are rejected
with a diagnostic.

Example:

    {
      "name": "heat1d",
      "lattice": {"d": 1, "N": 64},
      "stencil": {"vectors": [[1], [-1]], "tau": [1.0, 1.0], "tau0": 0.5},
      "coefficients": {"q": {"1": "0.5", "-1": "0.5"}, "p": {}, "c": "1"},
      "data": {"f": "0", "g": "sin(x1)"},
      "T": 1.0,
      "integrator": "rk4",
      "params": {"m": 3, "k": 1, "delta": 0.25, "kappa": 0.25, "c0": 1.0},
      "checks": ["monotonicity", "c_floor", "q_drift"],
      "seed": 20240801
    }

Coefficient keys are comma-joined integer components ("1,-1" in 2-d).  A
direction omitted from q or p gets the zero field.  Either "data" (f, g) or
"manufactured_u0" must be present; with a manufactured solution the data are
derived so that u0 solves the continuum problem exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .fields import CoefficientSet, DataSet, FieldExpr, parse_expr, ExprParseError
from .grid import Lattice
from .operators import Scheme, manufacture_rhs
from .stencil import StencilSet


class ScenarioError(ValueError):
    """Malformed scenario file (maps to CLI exit code 2)."""


KNOWN_CHECKS = (
    "monotonicity",
    "c_floor",
    "q_drift",
    "symmetry",
    "kappa_floor",
    "increment_bounds",
    "coercivity_first",
    "coercivity_second",
)

DEFAULT_CHECKS = ("monotonicity", "c_floor", "q_drift")

_TOP_KEYS = {
    "name", "lattice", "stencil", "coefficients", "data", "manufactured_u0",
    "T", "integrator", "params", "N_list", "checks", "snapshots", "seed",
}


@dataclass
class StudyParams:
    m: int = 3
    k: int = 1
    delta: float = 0.25
    kappa: float | None = None
    c0: float = 1.0
    K1: float = 1.0


@dataclass
class Scenario:
    name: str
    d: int
    N: int
    vectors: tuple[tuple[int, ...], ...]
    tau: tuple[float, ...]
    tau0: float
    q: dict[tuple[int, ...], FieldExpr]
    p: dict[tuple[int, ...], FieldExpr]
    c: FieldExpr
    T: float
    integrator: str
    params: StudyParams
    data: DataSet | None = None
    u0: FieldExpr | None = None
    N_list: tuple[int, ...] = ()
    checks: tuple[str, ...] = DEFAULT_CHECKS
    snapshots: int = 4
    seed: int = 0
    extras: dict = field(default_factory=dict)

    def stencil_set(self) -> StencilSet:
        weights = {v: t for v, t in zip(self.vectors, self.tau)}
        return StencilSet(self.vectors, weights, self.tau0)

    def coefficient_set(self) -> CoefficientSet:
        return CoefficientSet(q=dict(self.q), p=dict(self.p), c=self.c, c0=self.params.c0)

    def data_set(self) -> DataSet:
        if self.data is not None:
            return self.data
        return manufacture_rhs(self.coefficient_set(), self.stencil_set(), self.u0)

    def scheme(self, N: int | None = None) -> Scheme:
        lattice = Lattice(self.d, self.N if N is None else N)
        return Scheme(self.stencil_set(), self.coefficient_set(), lattice)

    def snapshot_times(self) -> list[float]:
        n = max(1, self.snapshots)
        return [self.T * (i + 1) / n for i in range(n)]


def _fail(msg: str) -> "ScenarioError":
    return ScenarioError(msg)


def _parse_direction(key: str, d: int) -> tuple[int, ...]:
    try:
        vec = tuple(int(part) for part in key.split(","))
    except ValueError:
        raise _fail(f"coefficient key {key!r} is not a comma-joined integer vector")
    if len(vec) != d:
        raise _fail(f"coefficient key {key!r} has wrong dimension for d={d}")
    return vec


def direction_key(vec: tuple[int, ...]) -> str:
    return ",".join(str(c) for c in vec)


def _expr(raw, d: int, where: str) -> FieldExpr:
    if isinstance(raw, (int, float)):
        return FieldExpr.const(d, float(raw))
    if not isinstance(raw, str):
        raise _fail(f"{where}: expected an expression string, got {type(raw).__name__}")
    try:
        return parse_expr(raw, d)
    except ExprParseError as exc:
        raise _fail(f"{where}: {exc}") from exc


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise _fail("scenario document must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise _fail(f"unknown scenario keys: {sorted(unknown)}")
    try:
        name = str(doc["name"])
        lat = doc["lattice"]
        d = int(lat["d"])
        N = int(lat["N"])
        st = doc["stencil"]
        vectors = tuple(tuple(int(c) for c in v) for v in st["vectors"])
        tau_raw = st.get("tau", [1.0] * len(vectors))
        tau = tuple(float(x) for x in tau_raw)
        tau0 = float(st.get("tau0", 1.0))
        coeffs = doc["coefficients"]
        T = float(doc.get("T", 1.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise _fail(f"missing or malformed scenario field: {exc}") from exc
    if len(tau) != len(vectors):
        raise _fail("stencil tau list must align with vectors")

    vec_set = set(vectors)
    q: dict[tuple[int, ...], FieldExpr] = {}
    p: dict[tuple[int, ...], FieldExpr] = {}
    for target, section in ((q, "q"), (p, "p")):
        raw = coeffs.get(section, {})
        if not isinstance(raw, dict):
            raise _fail(f"coefficients.{section} must be an object")
        for key, val in raw.items():
            vec = _parse_direction(key, d)
            if vec not in vec_set:
                raise _fail(f"coefficients.{section} references {key!r}, not a stencil direction")
            target[vec] = _expr(val, d, f"coefficients.{section}[{key}]")
        for vec in vectors:
            target.setdefault(vec, FieldExpr.zero(d))
    if "c" not in coeffs:
        raise _fail("coefficients.c is required")
    c = _expr(coeffs["c"], d, "coefficients.c")

    params_raw = doc.get("params", {})
    if not isinstance(params_raw, dict):
        raise _fail("params must be an object")
    known_params = {"m", "k", "delta", "kappa", "c0", "K1"}
    bad = set(params_raw) - known_params
    if bad:
        raise _fail(f"unknown params keys: {sorted(bad)}")
    params = StudyParams(
        m=int(params_raw.get("m", 3)),
        k=int(params_raw.get("k", 1)),
        delta=float(params_raw.get("delta", 0.25)),
        kappa=(None if params_raw.get("kappa") is None else float(params_raw["kappa"])),
        c0=float(params_raw.get("c0", 1.0)),
        K1=float(params_raw.get("K1", 1.0)),
    )

    data = None
    u0 = None
    if "manufactured_u0" in doc and doc["manufactured_u0"] is not None:
        u0 = _expr(doc["manufactured_u0"], d, "manufactured_u0")
    if "data" in doc and doc["data"] is not None:
        raw = doc["data"]
        if not isinstance(raw, dict) or set(raw) - {"f", "g"}:
            raise _fail("data must be an object with keys f and g")
        data = DataSet(
            f=_expr(raw.get("f", "0"), d, "data.f"),
            g=_expr(raw.get("g", "0"), d, "data.g"),
        )
    if data is None and u0 is None:
        raise _fail("scenario needs either data {f, g} or manufactured_u0")

    checks = tuple(doc.get("checks", DEFAULT_CHECKS))
    for chk in checks:
        if chk not in KNOWN_CHECKS:
            raise _fail(f"unknown check {chk!r}; known: {list(KNOWN_CHECKS)}")

    integrator = str(doc.get("integrator", "rk4"))
    if integrator not in ("euler", "rk4"):
        raise _fail(f"integrator must be euler or rk4, got {integrator!r}")

    scenario = Scenario(
        name=name,
        d=d,
        N=N,
        vectors=vectors,
        tau=tau,
        tau0=tau0,
        q=q,
        p=p,
        c=c,
        T=T,
        integrator=integrator,
        params=params,
        data=data,
        u0=u0,
        N_list=tuple(int(n) for n in doc.get("N_list", [])),
        checks=checks,
        snapshots=int(doc.get("snapshots", 4)),
        seed=int(doc.get("seed", 0)),
    )
    try:
        scenario.stencil_set()
        Lattice(d, N)
    except ValueError as exc:
        raise _fail(str(exc)) from exc
    return scenario


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise _fail(f"cannot read scenario file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _fail(f"scenario file is not valid JSON: {exc}") from exc
    return scenario_from_dict(doc)
