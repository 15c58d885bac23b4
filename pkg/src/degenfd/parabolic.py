"""Method-of-lines integration of  du/dt = L u + f,  u(0) = g.

The semidiscrete problem is an ODE system over the lattice nodes.  Two
integrators are provided:

* `euler` - explicit Euler in the monotone update form
  u' = w0 u + sum_lam w_lam u(.+h lam) + dt f with nonnegative weights; valid
  only within the CFL bound, where it inherits the discrete comparison
  principle (order-preserving, positivity-preserving in exact and floating
  point arithmetic alike).
* `rk4` - classical fourth-order Runge-Kutta with coefficient and forcing
  samples at the stage times, so temporal error stays O(dt^4) for
  time-dependent coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import DataSet, make_sampler, time_samples
from .grid import GridFunction
from .operators import SampledOperator, Scheme
from .validate import ROUNDOFF, ValidationReport


@dataclass(frozen=True)
class TimeGrid:
    """Uniform steps on [0, T]; dt * steps reproduces T exactly."""

    T: float
    steps: int

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError("final time must be positive")
        if self.steps < 1:
            raise ValueError("need at least one step")

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @classmethod
    def with_dt_cap(cls, T: float, dt_cap: float) -> "TimeGrid":
        """Smallest uniform grid whose step does not exceed dt_cap."""
        if not dt_cap > 0:
            raise ValueError("dt cap must be positive")
        if not math.isfinite(dt_cap):
            return cls(T, 1)
        return cls(T, max(1, math.ceil(T / dt_cap - 1e-12)))


@dataclass
class ParabolicSolution:
    final: GridFunction
    snapshots: list[tuple[float, GridFunction]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def cfl_bound(scheme: Scheme, t_samples=(0.0,)) -> float:
    """Step-size ceiling 1 / (h^{-2} sum_lam sup chi_lam + sup c).

    Euler steps within this bound have nonnegative stencil weights.  Returns
    +inf when all coefficients vanish.
    """
    sup_chi = 0.0
    sup_c = 0.0
    for t in t_samples:
        total = 0.0
        for lam in scheme.stencil.vectors:
            total += float(np.max(scheme.chi_values(lam, t)))
        sup_chi = max(sup_chi, total)
        sup_c = max(sup_c, float(np.max(scheme.coeffs.c.sample_values(t, scheme.lattice))))
    denom = sup_chi / (scheme.h * scheme.h) + sup_c
    return float("inf") if denom <= 0 else 1.0 / denom


def default_dt_cap(scheme: Scheme, t_samples=(0.0,)) -> float:
    """dt ceiling min(cfl_bound, h^2/4) used by the study drivers.

    The h^2/4 term keeps rk4 temporal error at O(h^8), far below the spatial
    effects under study.
    """
    return min(cfl_bound(scheme, t_samples), scheme.h * scheme.h / 4.0)


class IntegrationError(RuntimeError):
    pass


def solve_parabolic(
    scheme: Scheme,
    data: DataSet,
    tg: TimeGrid,
    integrator: str = "rk4",
    snapshot_times=(),
) -> ParabolicSolution:
    """March u(0) = g to u(T); snapshots are taken at the nearest step times."""
    if integrator not in ("euler", "rk4"):
        raise ValueError(f"unknown integrator {integrator!r}")
    lat = scheme.lattice
    op = SampledOperator(scheme)
    f_at = make_sampler(data.f, lat)
    u = data.g.sample_values(0.0, lat)
    dt = tg.dt

    if integrator == "euler":
        bound = cfl_bound(scheme, time_samples(tg.T))
        if dt > bound * (1 + 1e-12):
            raise IntegrationError(
                f"euler step dt={dt:.6g} exceeds the CFL bound {bound:.6g}"
            )

    want = sorted({min(tg.steps, max(0, round(t / dt))) for t in snapshot_times})
    snaps: list[tuple[float, GridFunction]] = []
    if 0 in want:
        snaps.append((0.0, GridFunction(lat, u.copy())))

    for step in range(tg.steps):
        t = step * dt
        if integrator == "euler":
            w0, neighbors = op.euler_weights(t, dt)
            new = w0 * u + dt * f_at(t)
            for lam, w in neighbors:
                new += w * np.roll(u, shift=tuple(-c for c in lam), axis=tuple(range(lat.d)))
            u = new
        else:
            k1 = op.l(t, u) + f_at(t)
            k2 = op.l(t + dt / 2, u + (dt / 2) * k1) + f_at(t + dt / 2)
            k3 = op.l(t + dt / 2, u + (dt / 2) * k2) + f_at(t + dt / 2)
            k4 = op.l(t + dt, u + dt * k3) + f_at(t + dt)
            u = u + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(u)):
            raise IntegrationError(
                f"non-finite values after step {step + 1} (t={t + dt:.6g}); "
                "the time step is likely unstable for this scheme"
            )
        if step + 1 in want:
            snaps.append(((step + 1) * dt, GridFunction(lat, u.copy())))

    final = GridFunction(lat, u)
    meta = {"integrator": integrator, "dt": dt, "steps": tg.steps, "T": tg.T}
    return ParabolicSolution(final=final, snapshots=snaps, meta=meta)


def verify_max_principle(
    run: ParabolicSolution, scheme: Scheme, data: DataSet, c0: float
) -> ValidationReport:
    """Check  sup_x u(t,.) <= sup_x g_+ + (1/c0) sup_{[0,t]} sup_x f_+
    at every stored snapshot (and the final state).

    Valid for monotone schemes with c >= c0 > 0 marched by Euler within the
    CFL bound; the forcing sup is sampled at uniform times.
    """
    if not c0 > 0:
        raise ValueError("c0 must be positive")
    lat = scheme.lattice
    g_plus = float(max(0.0, np.max(data.g.sample_values(0.0, lat))))
    T = run.meta.get("T", max((t for t, _ in run.snapshots), default=0.0))
    ts = time_samples(T if T > 0 else 1.0)
    f_sups = np.array(
        [max(0.0, float(np.max(data.f.sample_values(t, lat)))) for t in ts]
    )
    f_running = np.maximum.accumulate(f_sups)

    states = list(run.snapshots)
    final_t = run.meta.get("T")
    if final_t is not None and not any(abs(t - final_t) < 1e-12 for t, _ in states):
        states.append((final_t, run.final))

    worst = np.inf
    witness = None
    scale = g_plus
    for t, gf in states:
        idx = int(np.searchsorted(ts, t + 1e-12)) - 1
        sup_f = float(f_running[max(0, idx)])
        bound = g_plus + sup_f / c0
        scale = max(scale, bound, gf.sup_abs())
        k = int(np.argmax(gf.values))
        margin = bound - float(gf.values.flat[k])
        if margin < worst:
            worst = margin
            witness = {"t": float(t), "bound": bound}
            idxs = np.unravel_index(k, lat.shape)
            witness["index"] = [int(i) for i in idxs]
            witness["x"] = [float(i * lat.h) for i in idxs]
    tol = ROUNDOFF * (1.0 + scale)
    return ValidationReport(
        name="max_principle",
        passed=worst >= -tol,
        margin=worst,
        witness=witness,
        tolerance=tol,
        details={"g_plus": g_plus, "c0": c0},
    )
