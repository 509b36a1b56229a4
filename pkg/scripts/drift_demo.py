#!/usr/bin/env python3
"""End-to-end demo on generated data: synthesize all three drift kinds from
one table, evaluate two learners on each, and emit tidy report CSVs.

Self-contained (no external datasets); everything lands under --workdir.
"""

import argparse
import subprocess
import sys
from pathlib import Path

import numpy as np

from driftstream import SeededRng


def make_source(path: Path, rows: int, seed: int) -> None:
    g = SeededRng(seed).generator
    with path.open("w", encoding="utf-8") as fh:
        fh.write("temperature,humidity,pressure,demand\n")
        for _ in range(rows):
            t = g.normal(15.0, 8.0)
            h = g.uniform(0.2, 0.9)
            p = g.normal(1013.0, 6.0)
            demand = 3.0 * t - 40.0 * h + 0.05 * (p - 1013.0) + g.normal(0.0, 2.0)
            fh.write(f"{t},{h},{p},{demand}\n")


def cli(*args) -> None:
    cmd = [sys.executable, "-m", "driftstream.cli", *map(str, args)]
    subprocess.run(cmd, check=True)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", type=Path, default=Path("demo_out"))
    parser.add_argument("--rows", type=int, default=2000)
    parser.add_argument("--concept-length", type=int, default=1500)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    args.workdir.mkdir(parents=True, exist_ok=True)

    source = args.workdir / "source.csv"
    make_source(source, args.rows, args.seed)
    print(f"source table -> {source}", flush=True)

    # drifting periods span ~a quarter of a concept (must stay even and,
    # with 3+ concepts, no longer than one concept)
    drift_len = max(2, args.concept_length // 4 // 2 * 2)
    for kind, extra in [
        ("abrupt", []),
        ("gradual", ["--drift-length", str(drift_len)]),
        ("incremental", ["--drift-length", str(drift_len)]),
    ]:
        stream = args.workdir / f"{kind}.csv"
        cli(
            "synthesize", "--input", source, "--target", "demand",
            "--output", stream, "--drift", kind, "--concepts", "3",
            "--concept-length", args.concept_length, "--seed", args.seed,
            *extra,
        )
        metrics = []
        for learner, flags in [
            ("knn", ["--k", "10", "--window", "500"]),
            ("forest", ["--ensemble-size", "5", "--grace", "100"]),
        ]:
            out = args.workdir / f"{kind}_{learner}.csv"
            cli(
                "run", "--input", stream, "--target", "demand", "--output", out,
                "--learner", learner, "--prequential-window", "500", "--seed", args.seed,
                *flags,
            )
            metrics.append(out)
        cli(
            "report", "--inputs", *metrics, "--names", "knn", "forest",
            "--output", args.workdir / f"{kind}_report.csv",
            "--metric", "rmse",
            "--manifest", stream.with_suffix(".manifest.json"),
        )
    print(f"\nall artifacts under {args.workdir}/", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
