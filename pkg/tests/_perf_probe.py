"""Subprocess probe for the single-pass performance criterion.

Runs in a fresh interpreter so traced memory peaks reflect only the
evaluation loop. Prints one JSON object: wall time of a 100k-instance KNN
evaluation plus tracemalloc peaks for 10k and 100k instances over lazily
generated streams (nothing is materialized, so a peak growing with stream
length would expose any hidden O(n) state).
"""

import json
import time
import tracemalloc

import numpy as np

from driftstream import Column, Instance, NUMERIC, Schema, SeededRng
from driftstream.evaluation import run_experiment
from driftstream.learners import SlidingWindowKNN

FEATURES = 10


def schema():
    cols = tuple(Column(f"f{i}", NUMERIC) for i in range(FEATURES)) + (
        Column("y", NUMERIC),
    )
    return Schema(cols, FEATURES)


def lazy_stream(n, seed):
    g = SeededRng(seed).generator
    for _ in range(n):
        x = g.random(FEATURES)
        yield Instance(x, float(x.sum() + 0.1 * g.normal()))


def evaluate(n, seed=0):
    model = SlidingWindowKNN(schema(), k=10, window=1000)
    return run_experiment(lazy_stream(n, seed), model, predictors=FEATURES, window=1000)


def traced_peak(n):
    tracemalloc.start()
    tracemalloc.reset_peak()
    evaluate(n)
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    return peak


def main():
    t0 = time.perf_counter()
    result = evaluate(100_000)
    elapsed = time.perf_counter() - t0
    peak_10k = traced_peak(10_000)
    peak_100k = traced_peak(100_000)
    print(
        json.dumps(
            {
                "seconds_100k": elapsed,
                "instances": result.instances,
                "final_rmse": result.summary.rmse,
                "peak_10k": peak_10k,
                "peak_100k": peak_100k,
            }
        )
    )


if __name__ == "__main__":
    main()
