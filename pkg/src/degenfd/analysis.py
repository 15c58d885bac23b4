"""Convergence-order studies and mixed-difference boundedness evidence.

`convergence_study` drives the full acceleration pipeline: for each coarse
resolution it solves the scheme at meshes h, h/2, ..., h/2^k, combines them
with the order-k extrapolation plan, and measures the sup-norm error against
the manufactured exact solution at the coarse nodes, reporting observed
orders log2(e_h / e_{h/2}) between consecutive rows.

`derivative_bound_study` solves one scenario across dyadic mesh levels and
records, at the final and 8 interior times, the weighted mixed-difference
functionals

    V_n = sup_x sum_{lam in Lambda_1^n} |Dbar_lam u|^2     (V_0 = sup u^2)

whose boundedness uniformly in h is the estimate under test, plus macroscopic
central-difference proxies at the fixed physical spacing 2*pi/16.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fields import CoefficientSet, DataSet, FieldExpr, multi_indices, time_samples
from .grid import GridFunction, Lattice, roll_by
from .operators import Scheme, manufacture_rhs
from .parabolic import ParabolicSolution, TimeGrid, default_dt_cap, solve_parabolic
from .richardson import vandermonde_coefficients, combine
from .stencil import StencilSet

ROUNDOFF_FLOOR = 1e-11
MACRO_SPACING_NODES = 16  # proxy differences at physical spacing 2*pi/16


def thread_count() -> int:
    raw = os.environ.get("DEGENFD_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Order-preserving map, threaded when DEGENFD_THREADS > 1."""
    items = list(items)
    workers = min(thread_count(), len(items)) if items else 1
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class StudyResult:
    columns: list[str]
    rows: list[list]
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(
                ",".join("" if v is None else (repr(v) if isinstance(v, float) else str(v)) for v in row)
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {"columns": self.columns, "rows": self.rows, "metadata": self.metadata},
            sort_keys=True,
            indent=2,
        )

    def write(self, directory: str, stem: str) -> list[str]:
        os.makedirs(directory, exist_ok=True)
        csv_path = os.path.join(directory, f"{stem}.csv")
        json_path = os.path.join(directory, f"{stem}.json")
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv())
        with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())
        return [csv_path, json_path]


def mixed_diff_sup(u: GridFunction, stencil: StencilSet, n: int) -> float:
    """sup_x sum over all length-n direction tuples of |Dbar u|^2."""
    if n < 0 or n > 4:
        raise ValueError("mixed-difference order must be 0..4")
    if n == 0:
        return float(np.max(u.values * u.values))
    h = u.lattice.h
    total = np.zeros(u.lattice.shape)
    # build compositions incrementally: level r holds Dbar over each r-tuple
    level = {(): u.values}
    for _ in range(n):
        nxt = {}
        for key, arr in level.items():
            for lam in stencil.vectors:
                nxt[key + (lam,)] = stencil.weights[lam] * (roll_by(arr, lam) - arr) / h
        level = nxt
    for arr in level.values():
        total += arr * arr
    return float(np.max(total))


def _macro_proxy(u: GridFunction, n: int) -> float:
    """sup of the order-n central-difference magnitude at fixed spacing.

    Differences use stride N/16 nodes (physical 2*pi/16) so the proxy probes
    macroscopic variation independently of h.
    """
    lat = u.lattice
    if n == 0:
        return u.sup_abs()
    stride = lat.N // MACRO_SPACING_NODES
    if stride < 1:
        return float("nan")
    H = stride * lat.h

    def central(arr: np.ndarray, axis: int) -> np.ndarray:
        fwd = np.roll(arr, -stride, axis=axis)
        bwd = np.roll(arr, stride, axis=axis)
        return (fwd - bwd) / (2.0 * H)

    total = np.zeros(lat.shape)
    for alpha in multi_indices(lat.d, n):
        arr = u.values
        for axis, reps in enumerate(alpha):
            for _ in range(reps):
                arr = central(arr, axis)
        total += arr * arr
    return float(np.sqrt(np.max(total)))


def _solve_for_study(
    stencil: StencilSet,
    coeffs: CoefficientSet,
    data: DataSet,
    N: int,
    T: float,
    integrator: str,
    snapshot_times=(),
    h0: float = 1.0,
) -> tuple[Scheme, ParabolicSolution]:
    lattice = Lattice(stencil.d, N)
    scheme = Scheme(stencil, coeffs, lattice, h0=h0)
    cap = default_dt_cap(scheme, time_samples(T))
    tg = TimeGrid.with_dt_cap(T, cap)
    run = solve_parabolic(scheme, data, tg, integrator=integrator, snapshot_times=snapshot_times)
    return scheme, run


def convergence_study(
    stencil: StencilSet,
    coeffs: CoefficientSet,
    u0: FieldExpr,
    k: int,
    N_list: list[int],
    T: float,
    integrator: str = "rk4",
    solution_cache: dict | None = None,
    name: str = "",
) -> StudyResult:
    """Acceleration study against the manufactured solution u0.

    Errors are sup-norm over the coarse nodes at t = T; rows are sorted by
    increasing N.  Pairs whose error sits at the roundoff floor are flagged
    and excluded from order estimation.
    """
    plan = vandermonde_coefficients(k)
    data = manufacture_rhs(coeffs, stencil, u0)
    cache: dict = {} if solution_cache is None else solution_cache

    needed = sorted({N * 2**j for N in N_list for j in range(k + 1)})

    def solve_one(N: int) -> tuple[int, GridFunction]:
        _, run = _solve_for_study(stencil, coeffs, data, N, T, integrator)
        return N, run.final

    missing = [N for N in needed if N not in cache]
    for N, final in parallel_map(solve_one, missing):
        cache[N] = final

    rows = []
    errors = []
    for N in sorted(N_list):
        solutions = [cache[N * 2**j] for j in range(k + 1)]
        combined = combine(plan, solutions)
        exact = u0.at_time(T).sample_values(0.0, combined.lattice)
        err = float(np.max(np.abs(combined.values - exact)))
        errors.append(err)
        rows.append([combined.lattice.h, N, err, None])

    flagged = []
    for i in range(1, len(rows)):
        e_prev, e_here = errors[i - 1], errors[i]
        if e_here < ROUNDOFF_FLOOR or e_prev < ROUNDOFF_FLOOR:
            flagged.append(int(rows[i][1]))
            continue
        rows[i][3] = float(np.log2(e_prev / e_here))

    meta = {
        "study": "convergence",
        "name": name,
        "k": k,
        "weights": list(plan.b),
        "T": T,
        "integrator": integrator,
        "roundoff_flagged_N": flagged,
    }
    return StudyResult(columns=["h", "N", "error_sup", "observed_order"], rows=rows, metadata=meta)


def derivative_bound_study(
    stencil: StencilSet,
    coeffs: CoefficientSet,
    data: DataSet,
    m: int,
    N_list: list[int],
    T: float,
    integrator: str = "rk4",
    name: str = "",
) -> StudyResult:
    """sqrt(V_n) per mesh level, n = 0..m, with max/min ratios across levels.

    Each level's value is the max over the final time and 8 interior times.
    Macroscopic proxies at fixed spacing are reported alongside (metadata and
    columns), since the estimate bounds true derivatives while a single grid
    exposes only difference quotients.
    """
    interior = list(np.linspace(0.0, T, 10)[1:])  # 8 interior times + T

    def run_level(N: int):
        _, run = _solve_for_study(stencil, coeffs, data, N, T, integrator, snapshot_times=interior)
        states = [gf for _, gf in run.snapshots]
        if not any(abs(t - T) < 1e-12 for t, _ in run.snapshots):
            states.append(run.final)
        v_vals = []
        proxies = []
        for n in range(m + 1):
            v_vals.append(max(np.sqrt(mixed_diff_sup(gf, stencil, n)) for gf in states))
            proxies.append(max(_macro_proxy(gf, n) for gf in states))
        return N, v_vals, proxies

    results = parallel_map(run_level, sorted(N_list))

    columns = ["h", "N"]
    columns += [f"sqrt_V{n}" for n in range(m + 1)]
    columns += [f"proxy_D{n}" for n in range(m + 1)]
    rows = []
    for N, v_vals, proxies in results:
        rows.append([Lattice(stencil.d, N).h, N] + [float(v) for v in v_vals] + [float(p) for p in proxies])

    ratios = {}
    for n in range(m + 1):
        col = [row[2 + n] for row in rows]
        lo, hi = min(col), max(col)
        ratios[str(n)] = float("inf") if lo == 0 and hi > 0 else (1.0 if hi == 0 else hi / lo)
    meta = {
        "study": "derivatives",
        "name": name,
        "m": m,
        "T": T,
        "integrator": integrator,
        "sqrtV_max_over_min": ratios,
        "macro_spacing": 2 * np.pi / MACRO_SPACING_NODES,
    }
    return StudyResult(columns=columns, rows=rows, metadata=meta)
