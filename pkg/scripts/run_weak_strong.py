#!/usr/bin/env python3
"""Coarse-vs-fine relative-energy study on a scenario file."""

import argparse
import json
from pathlib import Path

from nsfsim import weak_strong_study


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("scenario", nargs="?",
                    default=str(Path(__file__).resolve().parents[1]
                                / "scenarios" / "throughflow.json"))
    ap.add_argument("--resolutions", default="32,64,128")
    ap.add_argument("--ratio", type=int, default=4)
    args = ap.parse_args()

    doc = json.loads(Path(args.scenario).read_text())
    out = Path("out")
    out.mkdir(exist_ok=True)
    for n, trace, (eta, rate) in weak_strong_study(
            doc, [int(v) for v in args.resolutions.split(",")], ratio=args.ratio):
        trace.to_csv(out / f"relenergy_n{n}.csv")
        print(f"n={n:4d}: E(t_end)={trace.integrals[-1]:.6e} "
              f"eta={eta:.3e} rate={rate:.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
