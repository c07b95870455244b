"""Command-line interface: scenario ingestion, command dispatch, and
deterministic CSV/JSON emission.

    mk <command> --scenario <path> [--preset <name>] [--out <dir>]
                 [--epsilon <v>] [--grid <n>]

Commands: sweep | roots | cycles | simulate | verify | classify.
Exit status: 0 on success, 2 on scenario validation failure, 3 on an
analysis error; failures leave a machine-readable error.json in the
output directory and print the same report to stdout.  Outputs contain
no wall-clock data or randomness, so re-running a command on the same
scenario produces byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bifurcation, melnikov, simulator
from .errors import AnalysisError, ScenarioError
from .scenario import Scenario, load_scenario

COMMANDS = ("sweep", "roots", "cycles", "simulate", "verify", "classify")


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _grid(scn: Scenario):
    return int(scn.sweep.get("grid", scn.tolerances.grid_default))


def _window(scn: Scenario, section):
    w = section.get("window")
    if w is not None:
        return (float(w[0]), float(w[1]))
    return (scn.system.annulus.r_min, scn.system.annulus.r_max)


def cmd_sweep(scn: Scenario, out: Path):
    system, tol = scn.system, scn.tolerances
    grid = _grid(scn)
    lo, hi = _window(scn, scn.sweep)
    rs = np.linspace(lo, hi, grid)
    path = out / "sweep.csv"
    if system.boundary is not None:
        with open(path, "w") as fh:
            fh.write("r,M1,M2\n")
            for r in rs:
                m1v = melnikov.boundary_m1(system, float(r), tol).value
                try:
                    m2v = repr(melnikov.boundary_m2(system, float(r), tol).value)
                except AnalysisError:
                    m2v = ""
                fh.write(f"{float(r)!r},{m1v!r},{m2v}\n")
    else:
        order = int(scn.sweep.get("order", 2))
        samples = melnikov.sweep(system, grid=rs, order=order, tol=tol)
        with open(path, "w") as fh:
            melnikov.write_sweep_csv(samples, fh)
    return {"written": [str(path)]}


def _root_function(scn: Scenario):
    """(fn, window, function_order) for the roots command."""
    system, tol = scn.system, scn.tolerances
    poly = scn.roots.get("polynomial")
    if poly is not None:
        coeffs = [float(c) for c in poly]

        def fn(v):
            return sum(c * v ** k for k, c in enumerate(coeffs))
        window = _window(scn, scn.roots)
        return fn, window, int(scn.roots.get("function_order", 2))
    if system.boundary is not None:
        def fn(r):
            return melnikov.boundary_m1(system, float(r), tol).value
    else:
        def fn(r):
            return melnikov.m1(system, float(r), tol).m1
    return fn, _window(scn, scn.roots), 1


def cmd_roots(scn: Scenario, out: Path):
    fn, window, order = _root_function(scn)
    records = bifurcation.isolate_roots(fn, window, _grid(scn),
                                        scn.tolerances, function_order=order)
    payload = [{"r_star": rec.r_star,
                "function_order": rec.function_order,
                "multiplicity": rec.multiplicity_estimate,
                "bracket": list(rec.bracket),
                "residual": rec.residual} for rec in records]
    path = out / "roots.json"
    _write_json(path, payload)
    return {"written": [str(path)], "count": len(records)}


def _cycles(scn: Scenario, verifier, epsilon):
    return bifurcation.count_cycles(
        scn.system, window=_window(scn, scn.sweep), grid_size=_grid(scn),
        tol=scn.tolerances, verifier=verifier, epsilon=epsilon)


def cmd_cycles(scn: Scenario, out: Path):
    reports = _cycles(scn, verifier=None, epsilon=None)
    path = out / "cycles.json"
    _write_json(path, [bifurcation.report_record(rep) for rep in reports])
    return {"written": [str(path)], "count": len(reports)}


def cmd_verify(scn: Scenario, out: Path):
    epsilon = scn.verify.get("epsilon")
    if epsilon is None and scn.system.boundary is not None:
        epsilon = scn.system.boundary.epsilon

    def verifier(system, r_star, eps):
        return simulator.cycle_verifier(system, r_star, eps, scn.tolerances)

    reports = _cycles(scn, verifier=verifier, epsilon=epsilon)
    payload = []
    for rep in reports:
        rec = bifurcation.report_record(rep)
        v = rep.verification
        rec["return_map_derivative"] = v.derivative
        rec["simulated_stable"] = v.stable
        payload.append(rec)
    path = out / "verify.json"
    _write_json(path, payload)
    verified = sum(1 for rec in payload if rec["verified"])
    return {"written": [str(path)], "count": len(payload),
            "verified": verified}


def cmd_simulate(scn: Scenario, out: Path):
    system, tol = scn.system, scn.tolerances
    r = scn.simulate.get("r")
    if r is None:
        r = 0.5 * (system.annulus.r_min + system.annulus.r_max)
    r = float(r)
    ladder = scn.simulate.get("epsilon_ladder", simulator.DEFAULT_LADDER)
    analytic_m1 = None
    if system.boundary is not None:
        analytic_m1 = melnikov.boundary_m1(system, r, tol).value
    nm = simulator.numeric_melnikov(system, r, ladder, analytic_m1, tol)

    eps0 = float(ladder[0])
    f = system.boundary.f if system.boundary is not None else None
    p = system.section_point(r, tol).x
    y0 = eps0 * f(p) if f is not None else 0.0
    traj = simulator.flow_to_section(system, (p, y0), eps0,
                                     target="return", tol=tol)
    csv_path = out / "trajectory.csv"
    with open(csv_path, "w") as fh:
        traj.write_csv(fh)
    ev_path = out / "events.json"
    with open(ev_path, "w") as fh:
        traj.write_events_json(fh)

    payload = {
        "r": r,
        "m1_hat": nm.m1_hat,
        "m2_hat": nm.m2_hat,
        "analytic_m1": analytic_m1,
        "slopes": nm.slopes,
        "excluded": list(nm.excluded),
        "records": [{"epsilon": rec.epsilon, "value": rec.value,
                     "l_parts": list(rec.l_parts), "q": rec.q}
                    for rec in nm.records],
    }
    path = out / "simulate.json"
    _write_json(path, payload)
    return {"written": [str(path), str(csv_path), str(ev_path)]}


def cmd_classify(scn: Scenario, out: Path):
    system, tol = scn.system, scn.tolerances
    xs = scn.classify.get("x")
    if xs is None:
        raise ScenarioError("classify command requires [classify] x")
    if isinstance(xs, (int, float)):
        xs = [xs]
    epsilon = scn.classify.get("epsilon")
    if epsilon is None:
        epsilon = (system.boundary.epsilon
                   if system.boundary is not None else 0.0)
    payload = []
    for x in xs:
        sp = simulator.classify_boundary_point(system, float(x),
                                               float(epsilon), tol)
        payload.append({"x": sp.x, "y": sp.y,
                        "classification": sp.classification,
                        "s_plus": sp.s_plus, "s_minus": sp.s_minus,
                        "contact_orders": (list(sp.contact_orders)
                                           if sp.contact_orders else None)})
    path = out / "classify.json"
    _write_json(path, payload)
    return {"written": [str(path)]}


DISPATCH = {
    "sweep": cmd_sweep,
    "roots": cmd_roots,
    "cycles": cmd_cycles,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "classify": cmd_classify,
}


def _error_report(out: Path, command, exc):
    report = {"error": type(exc).__name__, "message": str(exc),
              "context": {"command": command}}
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "error.json", report)
    except OSError:
        pass
    print(json.dumps(report, sort_keys=True))
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mk",
        description="Melnikov-function limit-cycle analysis of planar "
                    "piecewise-smooth Hamiltonian systems")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--scenario", help="path to a TOML scenario file")
    parser.add_argument("--preset", help="built-in system preset name")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--epsilon", type=float, default=None,
                        help="override the boundary perturbation size")
    parser.add_argument("--grid", type=int, default=None,
                        help="override the sweep/root grid size")
    args = parser.parse_args(argv)

    out = Path(args.out)
    try:
        if args.scenario is None and args.preset is None:
            raise ScenarioError("provide --scenario and/or --preset")
        scn = load_scenario(args.scenario, args.preset,
                            {"epsilon": args.epsilon, "grid": args.grid})
    except ScenarioError as exc:
        _error_report(out, args.command, exc)
        return 2

    try:
        out.mkdir(parents=True, exist_ok=True)
        summary = DISPATCH[args.command](scn, out)
    except ScenarioError as exc:
        _error_report(out, args.command, exc)
        return 2
    except AnalysisError as exc:
        _error_report(out, args.command, exc)
        return 3
    print(json.dumps({"command": args.command, **summary}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
