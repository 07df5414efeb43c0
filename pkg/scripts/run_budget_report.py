#!/usr/bin/env python3
"""Audit every shipped scenario and tabulate the budget residuals."""

import json
import sys
from pathlib import Path

from nsfsim import audit, load_scenario
from nsfsim.scenario import export_budget_csv

OUT = Path("out")


def main() -> int:
    OUT.mkdir(exist_ok=True)
    scenario_dir = Path(__file__).resolve().parents[1] / "scenarios"
    all_pass = True
    for path in sorted(scenario_dir.glob("*.json")):
        if path.name.startswith("eos_"):
            continue
        scn = load_scenario(path)
        traj = scn.run()
        report = audit(traj)
        rows = [audit(traj, window=w) for w in zip(traj.times[:-1], traj.times[1:])]
        export_budget_csv(rows, OUT / f"budgets_{scn.name}.csv")
        (OUT / f"report_{scn.name}.json").write_text(json.dumps({
            "mass_residual": report.mass_residual,
            "energy_residual": report.energy_residual,
            "entropy_production": report.entropy_production,
            "apriori": report.apriori,
            "verdicts": report.verdicts,
        }, indent=2, sort_keys=True))
        all_pass &= report.passed
        print(f"{scn.name:28s} mass={report.mass_residual:+.2e} "
              f"energy={report.energy_residual:+.2e} "
              f"entropy={report.entropy_production:+.2e} "
              f"{'PASS' if report.passed else 'FAIL'}")
    return 0 if all_pass else 1


if __name__ == "__main__":
    sys.exit(main())
