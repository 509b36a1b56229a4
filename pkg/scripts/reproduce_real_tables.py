#!/usr/bin/env python3
"""Reproduce the deterministic real-dataset reference numbers on Abalone.

Runs the sliding-window KNN point experiment and the MVE/AdaPI interval
experiments (95% confidence, defaults throughout) and prints cumulative
metrics next to the published reference values. Needs data/abalone.csv
(scripts/fetch_abalone.py).
"""

import argparse
import sys
import time
from pathlib import Path

from driftstream import load_csv
from driftstream.evaluation import run_experiment
from driftstream.intervals import AdaPiModel, MveModel
from driftstream.learners import SlidingWindowKNN

REFERENCE = {
    "knn_rmse": 2.348,
    "knn_adj_r2": 0.501,
    "mve_coverage": 94.96,
    "mve_nmpiw": 33.81,
    "adapi_coverage": 95.26,
    "adapi_nmpiw": 34.36,
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--data",
        type=Path,
        default=Path(__file__).resolve().parent.parent / "data" / "abalone.csv",
    )
    args = parser.parse_args()
    if not args.data.exists():
        print(f"missing {args.data}; run scripts/fetch_abalone.py first", file=sys.stderr)
        return 2

    loaded = load_csv(args.data, "rings")
    p = len(loaded.schema.columns) - 1
    print(f"abalone: {len(loaded.instances)} instances, {p} features, "
          f"{loaded.rejected_rows} rejected")

    def knn():
        return SlidingWindowKNN(loaded.schema, k=10, window=1000)

    t0 = time.time()
    point = run_experiment(loaded.instances, knn(), predictors=p, window=1000)
    print(f"\nKNN (k=10, window=1000)        [{time.time() - t0:.1f}s]")
    print(f"  rmse     {point.summary.rmse:7.3f}   reference {REFERENCE['knn_rmse']}")
    print(f"  adj R^2  {point.summary.adjusted_r2:7.3f}   reference {REFERENCE['knn_adj_r2']}")

    for name, model in [
        ("MVE", MveModel(knn(), confidence=0.95)),
        ("AdaPI", AdaPiModel(knn(), confidence=0.95, scale_floor=0.01)),
    ]:
        res = run_experiment(loaded.instances, model, predictors=p, window=1000)
        c = res.summary.coverage * 100
        w = res.summary.nmpiw * 100
        key = name.lower()
        print(f"\n{name} over KNN at 95%")
        print(f"  coverage {c:7.2f}   reference {REFERENCE[f'{key}_coverage']}")
        print(f"  nmpiw    {w:7.2f}   reference {REFERENCE[f'{key}_nmpiw']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
