"""Command-line front end.

    degenfd validate SCENARIO [--json OUT]
    degenfd run      SCENARIO --mode {parabolic,elliptic} --out DIR [--force]
    degenfd study    SCENARIO --study {convergence,acceleration,derivatives}
                              --out DIR [--k K] [--force]

Exit codes: 0 success, 1 validation or assertion failure, 2 usage/parse
error.  Every command validates the scenario's declared checks first and
refuses to run on failure unless --force is given.  Outputs are plain CSV
and JSON, deterministic for a fixed scenario and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, elliptic, parabolic, validate
from .fields import time_samples
from .grid import GridFunction
from .scenario import Scenario, ScenarioError, load_scenario


def _run_checks(scenario: Scenario) -> list[validate.ValidationReport]:
    scheme = scenario.scheme()
    ts = time_samples(scenario.T)
    p = scenario.params
    bank = None
    reports = []
    for name in scenario.checks:
        if name == "monotonicity":
            reports.append(validate.check_monotonicity(scheme, ts))
        elif name == "c_floor":
            reports.append(validate.check_c_floor(scheme, p.c0, ts))
        elif name == "q_drift":
            reports.append(validate.check_q_drift(scheme, ts))
        elif name == "symmetry":
            reports.append(validate.check_symmetry(scheme, ts))
        elif name == "kappa_floor":
            kappa = p.kappa if p.kappa is not None else 0.0
            reports.append(validate.check_kappa_floor(scheme, kappa, ts))
        elif name == "increment_bounds":
            reports.append(validate.check_increment_bounds(scheme, p.m, p.delta, ts))
        else:
            if bank is None:
                bank = validate.build_test_bank(scenario.d, scenario.seed)
            probe_ts = (
                (0.0,)
                if scenario.coefficient_set().is_time_independent()
                else tuple(ts)
            )
            fn = (
                validate.probe_coercivity_first
                if name == "coercivity_first"
                else validate.probe_coercivity_second
            )
            reports.append(fn(scheme, p.m, p.delta, p.K1, bank, probe_ts))
    return reports


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _grid_csv(gf: GridFunction) -> str:
    d = gf.lattice.d
    header = ",".join(f"i{a + 1}" for a in range(d)) + ",value"
    lines = [header]
    for idx in np.ndindex(gf.lattice.shape):
        lines.append(
            ",".join(str(i) for i in idx) + "," + repr(float(gf.values[idx]))
        )
    return "\n".join(lines) + "\n"


def _write_grid(path: str, gf: GridFunction) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_grid_csv(gf))


def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    reports = _run_checks(scenario)
    payload = [r.to_dict() for r in reports]
    text = json.dumps(payload, sort_keys=True, indent=2)
    print(text)
    if args.json:
        _write_json(args.json, payload)
    return 0 if all(r.passed for r in reports) else 1


def _validate_or_refuse(scenario: Scenario, force: bool) -> tuple[int, list[dict]]:
    reports = _run_checks(scenario)
    payload = [r.to_dict() for r in reports]
    if not all(r.passed for r in reports) and not force:
        failed = [r.name for r in reports if not r.passed]
        print(f"validation failed ({', '.join(failed)}); use --force to run anyway", file=sys.stderr)
        return 1, payload
    return 0, payload


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    code, reports = _validate_or_refuse(scenario, args.force)
    if code != 0:
        return code
    os.makedirs(args.out, exist_ok=True)
    scheme = scenario.scheme()
    data = scenario.data_set()
    meta = {
        "scenario": scenario.name,
        "mode": args.mode,
        "d": scenario.d,
        "N": scenario.N,
        "h": scheme.h,
        "seed": scenario.seed,
        "validation": reports,
    }

    if args.mode == "parabolic":
        cap = parabolic.default_dt_cap(scheme, time_samples(scenario.T))
        if scenario.integrator == "euler":
            cap = min(cap, parabolic.cfl_bound(scheme, time_samples(scenario.T)))
        tg = parabolic.TimeGrid.with_dt_cap(scenario.T, cap)
        run = parabolic.solve_parabolic(
            scheme, data, tg,
            integrator=scenario.integrator,
            snapshot_times=scenario.snapshot_times(),
        )
        snap_index = []
        for i, (t, gf) in enumerate(run.snapshots):
            fname = f"snapshot_{i:03d}.csv"
            _write_grid(os.path.join(args.out, fname), gf)
            snap_index.append({"file": fname, "t": t})
        _write_grid(os.path.join(args.out, "final.csv"), run.final)
        meta.update(run.meta)
        meta["snapshots"] = snap_index
        if scenario.integrator == "euler":
            mono = validate.check_monotonicity(scheme, time_samples(scenario.T))
            floor = validate.check_c_floor(scheme, scenario.params.c0, time_samples(scenario.T))
            if mono.passed and floor.passed:
                report = parabolic.verify_max_principle(run, scheme, data, scenario.params.c0)
                _write_json(os.path.join(args.out, "max_principle.json"), report.to_dict())
                meta["max_principle_pass"] = report.passed
    else:
        v = elliptic.solve_elliptic_march(scheme, data.f)
        _write_grid(os.path.join(args.out, "solution.csv"), v)
        op_residual = float(np.max(np.abs(
            parabolic.SampledOperator(scheme).l(0.0, v.values)
            + data.f.sample_values(0.0, scheme.lattice)
        )))
        meta["residual_sup"] = op_residual

    _write_json(os.path.join(args.out, "run.json"), meta)
    return 0


def cmd_study(args) -> int:
    scenario = load_scenario(args.scenario)
    code, _reports = _validate_or_refuse(scenario, args.force)
    if code != 0:
        return code
    N_list = list(scenario.N_list) if scenario.N_list else [scenario.N]
    stencil = scenario.stencil_set()
    coeffs = scenario.coefficient_set()

    if args.study in ("convergence", "acceleration"):
        if scenario.u0 is None:
            print("convergence studies need manufactured_u0", file=sys.stderr)
            return 2
        k = 0 if args.study == "convergence" else (args.k if args.k is not None else scenario.params.k)
        result = analysis.convergence_study(
            stencil, coeffs, scenario.u0, k, N_list, scenario.T,
            integrator=scenario.integrator, name=scenario.name,
        )
    else:
        result = analysis.derivative_bound_study(
            stencil, coeffs, scenario.data_set(), scenario.params.m,
            N_list, scenario.T, integrator=scenario.integrator, name=scenario.name,
        )
    result.metadata["seed"] = scenario.seed
    paths = result.write(args.out, f"study_{args.study}")
    for p in paths:
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="degenfd",
        description="Monotone finite-difference schemes with checkers and acceleration studies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="run the scenario's checkers")
    p_val.add_argument("scenario")
    p_val.add_argument("--json", help="also write the JSON report to this path")
    p_val.set_defaults(fn=cmd_validate)

    p_run = sub.add_parser("run", help="solve one scenario and dump CSV output")
    p_run.add_argument("scenario")
    p_run.add_argument("--mode", choices=("parabolic", "elliptic"), default="parabolic")
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--force", action="store_true", help="run despite validation failures")
    p_run.set_defaults(fn=cmd_run)

    p_study = sub.add_parser("study", help="convergence / acceleration / derivative studies")
    p_study.add_argument("scenario")
    p_study.add_argument(
        "--study", choices=("convergence", "acceleration", "derivatives"), required=True
    )
    p_study.add_argument("--out", required=True)
    p_study.add_argument("--k", type=int, default=None, help="override the extrapolation order")
    p_study.add_argument("--force", action="store_true")
    p_study.set_defaults(fn=cmd_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, parabolic.IntegrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:  # console-script wrapper
    sys.exit(main())


if __name__ == "__main__":
    entry()
