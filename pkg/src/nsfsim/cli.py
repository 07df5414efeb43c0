"""Command-line surface.

Subcommands: check-eos, audit-boundary, run, audit, converge, weak-strong.
Exit code 0 means every verdict passed.  Set NSF_SEED to pin any randomized
sampling used by demonstration scripts and tests.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import boundary as bd
from .budgets import audit as run_audit
from .mms import manufactured_case
from .scenario import (ScenarioValidationError, export_budget_csv,
                       export_timeseries, load_eos_document, load_scenario)
from .studies import convergence_study, weak_strong_study
from .thermo import check_eos_invariants


def _cmd_check_eos(args) -> int:
    eos, ts, issues = load_eos_document(args.file)
    ok = True
    if eos is not None:
        for name, (passed, detail) in check_eos_invariants(eos).items():
            print(f"{'PASS' if passed else 'FAIL'}  {name}  ({detail})")
            ok &= passed
    for issue in issues:
        print(f"FAIL  {issue}")
        ok = False
    if ts is not None and not issues:
        msgs = ts.envelope_violations()
        for m in msgs:
            print(f"FAIL  transport: {m}")
            ok = False
        if not msgs:
            print("PASS  transport envelopes")
    return 0 if ok else 1


def _load(path):
    try:
        return load_scenario(path)
    except ScenarioValidationError as err:
        for issue in err.issues:
            print(f"FAIL  {issue}")
        return None


def _cmd_audit_boundary(args) -> int:
    scn = _load(args.scenario)
    if scn is None:
        return 1
    report = bd.admissibility_check(scn.eos, scn.boundary)
    for f in scn.boundary.faces:
        line = f"x={f.pos:g}: {f.kind.value:>4}  u_b={f.u_b:g}"
        if f.kind is bd.FaceKind.IN:
            line += (f"  rho_b={f.rho_b:g}  F_ib={f.F_ib:g}"
                     f"  margin={report.margins[f.pos]:+.6g}")
        print(line)
    print("PASS" if report.passed else "FAIL", "inflow admissibility")
    for m in report.messages:
        print("  ", m)
    return 0 if report.passed else 1


def _cmd_run(args) -> int:
    scn = _load(args.scenario)
    if scn is None:
        return 1
    for w in scn.warnings:
        print("note:", w)
    traj = scn.run()
    paths = export_timeseries(traj, args.out)
    print(f"wrote {len(paths)} files to {args.out} "
          f"({traj.n_steps} steps, {traj.n_rejects} rejected)")
    return 0


def _cmd_audit(args) -> int:
    scn = _load(args.scenario)
    if scn is None:
        return 1
    traj = scn.run()
    report = run_audit(traj)
    doc = {
        "scenario": scn.name,
        "window": list(report.window),
        "mass_residual": report.mass_residual,
        "energy_residual": report.energy_residual,
        "entropy_production": report.entropy_production,
        "boundary_terms": report.boundary_terms,
        "apriori": report.apriori,
        "verdicts": report.verdicts,
        "steps": traj.n_steps,
        "notes": ["raw entropy-weighted values (entropy terms, energy_sup, "
                  "outflow_ballistic) depend on the additive entropy gauge "
                  "entropy_const; residuals and production are gauge-invariant"],
    }
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
    if args.csv:
        windows = list(zip(traj.times[:-1], traj.times[1:]))
        rows = [run_audit(traj, window=w) for w in windows]
        export_budget_csv(rows, args.csv)
    for name, v in report.verdicts.items():
        print(f"{'PASS' if v['passed'] else 'FAIL'}  {name}: "
              f"value={v['value']:.6g} tol={v['tol']:.3g}")
    return 0 if report.passed else 1


def _cmd_converge(args) -> int:
    case = manufactured_case(args.case)
    probe = case.residual_probe()
    print("manufactured residual probe:",
          {k: f"{v:.3g}" for k, v in probe.items()})
    ns = [int(n) for n in args.resolutions.split(",")]
    study = convergence_study(case, ns, t_end=args.t_end)
    ok = max(probe.values()) < 1e-6
    for f in ("rho", "u", "theta"):
        errs = "  ".join(f"{e:.4e}" for e in study.errors[f])
        print(f"{f:>6}: errors {errs}  order {study.orders[f]:.2f}")
        ok &= args.order_lo <= study.orders[f] <= args.order_hi
    if study.flagged:
        print("FLAG: non-monotone error sequence", study.monotone)
        ok = False
    print("PASS" if ok else "FAIL",
          f"observed orders within [{args.order_lo}, {args.order_hi}]")
    return 0 if ok else 1


def _cmd_weak_strong(args) -> int:
    try:
        with open(args.scenario) as fh:
            doc = json.load(fh)
        results = weak_strong_study(doc, [int(n) for n in args.resolutions.split(",")],
                                    ratio=args.ratio, name=Path(args.scenario).stem)
    except ScenarioValidationError as err:
        for issue in err.issues:
            print(f"FAIL  {issue}")
        return 1
    finals = []
    for n, trace, (eta, rate) in results:
        finals.append(trace.integrals[-1])
        print(f"n={n:>4}: E(t_end)={trace.integrals[-1]:.6e}  "
              f"envelope eta={eta:.3e} rate={rate:.3f}")
        if args.out:
            outdir = Path(args.out)
            outdir.mkdir(parents=True, exist_ok=True)
            trace.to_csv(outdir / f"relenergy_n{n}.csv")
    ok = all(b < a for a, b in zip(finals, finals[1:]))
    print("PASS" if ok else "FAIL", "relative energy decreases under refinement")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsfsim", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-eos", help="validate an eos.json document")
    p.add_argument("file")
    p.set_defaults(func=_cmd_check_eos)

    p = sub.add_parser("audit-boundary", help="face classification and admissibility")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_audit_boundary)

    p = sub.add_parser("run", help="integrate a scenario and export time series")
    p.add_argument("scenario")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("audit", help="run and audit the budget identities")
    p.add_argument("scenario")
    p.add_argument("--out", default=None, help="budget report JSON path")
    p.add_argument("--csv", default=None, help="windowed budget CSV path")
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("converge", help="manufactured-solution convergence study")
    p.add_argument("--case", default="thermal_relaxation",
                   choices=["thermal_relaxation", "acoustic_smooth", "throughflow"])
    p.add_argument("--resolutions", default="32,64,128")
    p.add_argument("--t-end", type=float, default=0.15, dest="t_end")
    p.add_argument("--order-lo", type=float, default=0.8)
    p.add_argument("--order-hi", type=float, default=1.5)
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("weak-strong", help="coarse-vs-fine relative energy study")
    p.add_argument("scenario")
    p.add_argument("--resolutions", default="32,64,128")
    p.add_argument("--ratio", type=int, default=4)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_weak_strong)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
