"""Acceptance suite: one test per exit criterion, each printing a PASS/FAIL
line (run with -s to see them live). The two real-dataset oracles (A3, A4)
need data/abalone.csv; scripts/fetch_abalone.py downloads it in a networked
environment and the tests fail with instructions when it is absent.
"""

import json
import math
import os
import subprocess
import sys
import time
from collections import Counter
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from driftstream import (
    CATEGORICAL,
    NUMERIC,
    Column,
    Instance,
    Schema,
    SeededRng,
    load_csv,
    write_csv,
)
from driftstream.drift import (
    ABRUPT,
    GRADUAL,
    INCREMENTAL,
    BootstrapSampler,
    DriftSpec,
    chunk_by_feature,
    compose_abrupt,
    compose_gradual,
    compose_incremental,
    select_drifting_feature,
    synthesize,
)
from driftstream.evaluation import MetricState, run_experiment
from driftstream.intervals import AdaPiModel, MveModel
from driftstream.learners import (
    FimtTree,
    OnlineBaggingForest,
    SlidingWindowKNN,
    hoeffding_bound,
)
from oracles import BruteForceKNN, FrozenAfter, OracleLearner, batch_metrics

REPO = Path(__file__).resolve().parent.parent
ABALONE = Path(os.environ.get("ABALONE_CSV", REPO / "data" / "abalone.csv"))


@contextmanager
def criterion(cid, text):
    try:
        yield
    except Exception:
        print(f"[{cid}] FAIL {text}")
        raise
    print(f"[{cid}] PASS {text}")


def num_schema(nfeat):
    cols = tuple(Column(f"f{i}", NUMERIC) for i in range(nfeat)) + (Column("y", NUMERIC),)
    return Schema(cols, nfeat)


def multiset(instances):
    return Counter((tuple(i.features.tolist()), i.target) for i in instances)


class ListConcept:
    def __init__(self, instances, schema):
        self.instances = list(instances)
        self.schema = schema

    def sample(self, n, rng):
        return list(self.instances[:n])


def test_a1_metric_oracles():
    with criterion("A1", "metric ops match two-pass brute force on 1000 random sets"):
        g = SeededRng(1234).generator
        t0 = time.monotonic()
        from driftstream.evaluation import adjusted_r2, coverage, nmpiw, rmse
        from driftstream.intervals import Interval

        for _ in range(1000):
            n = int(g.integers(2, 501))
            ys = g.normal(size=n) * 10
            y_hats = ys + g.normal(size=n)
            los = y_hats - np.abs(g.normal(size=n))
            his = y_hats + np.abs(g.normal(size=n))
            ivs = [Interval(float(lo), float(hi)) for lo, hi in zip(los, his)]
            expected = batch_metrics(ys, y_hats, list(zip(los, his)), predictors=1)

            pairs = list(zip(ys.tolist(), y_hats.tolist()))
            assert rmse(pairs) == pytest.approx(expected["rmse"], abs=1e-9)
            if expected["adjusted_r2"] is not None:
                assert adjusted_r2(pairs, 1) == pytest.approx(
                    expected["adjusted_r2"], abs=1e-9
                )
            assert coverage(list(zip(ys.tolist(), ivs))) == pytest.approx(
                expected["coverage"], abs=1e-9
            )
            assert nmpiw(ivs, float(ys.max() - ys.min())) == pytest.approx(
                expected["nmpiw"], abs=1e-9
            )

            state = MetricState(predictors=1)
            for y, y_hat, iv in zip(ys, y_hats, ivs):
                state.update(float(y), float(y_hat), iv)
            assert state.rmse() == pytest.approx(expected["rmse"], abs=1e-9)
            if expected["adjusted_r2"] is not None:
                assert state.adjusted_r2() == pytest.approx(
                    expected["adjusted_r2"], abs=1e-9
                )
            assert state.coverage() == pytest.approx(expected["coverage"], abs=1e-9)
            assert state.nmpiw() == pytest.approx(expected["nmpiw"], abs=1e-9)
        elapsed = time.monotonic() - t0
        assert elapsed < 5.0, f"A1 took {elapsed:.2f}s (budget 5s)"


def test_a2_protocol_equivalence():
    with criterion("A2", "prequential(window=n) equals cumulative on 50 random streams"):
        g = SeededRng(77).generator
        for _ in range(50):
            n = int(g.integers(20, 400))
            stream = [
                Instance(np.array([float(g.normal())]), float(g.normal() * 5))
                for _ in range(n)
            ]
            model = MveModel(OracleLearner(lambda x: x[0]), confidence=0.95)
            res = run_experiment(stream, model, predictors=1, window=n, report_every=n)
            final = res.records[-1]
            for field in ("rmse", "adjusted_r2", "coverage", "nmpiw"):
                a, b = getattr(final, field), getattr(res.summary, field)
                if a is None or b is None:
                    assert a == b
                else:
                    assert a == pytest.approx(b, abs=1e-9), field


def _require_abalone():
    if not ABALONE.exists():
        pytest.fail(
            f"Abalone dataset not found at {ABALONE}. This sandbox has no route "
            "to archive.ics.uci.edu; run scripts/fetch_abalone.py in a networked "
            "environment (or point ABALONE_CSV at the file) and rerun. The "
            "criterion is implemented and runs unchanged once the file exists."
        )
    res = load_csv(ABALONE, "rings")
    assert len(res.instances) == 4177, "expected the canonical 4,177-row Abalone table"
    assert len(res.schema.columns) == 9
    return res


def test_a3_real_dataset_point_oracle():
    with criterion("A3", "KNN(k=10, w=1000) on Abalone: rmse 2.348+-0.30, adjR2 0.501+-0.10"):
        res = _require_abalone()
        t0 = time.monotonic()
        model = SlidingWindowKNN(res.schema, k=10, window=1000)
        out = run_experiment(
            res.instances, model, predictors=len(res.schema.columns) - 1, window=1000
        )
        elapsed = time.monotonic() - t0
        assert abs(out.summary.rmse - 2.348) <= 0.30, out.summary
        assert abs(out.summary.adjusted_r2 - 0.501) <= 0.10, out.summary
        assert elapsed < 30.0, f"A3 took {elapsed:.2f}s (budget 30s)"


def test_a4_real_dataset_interval_oracle():
    with criterion("A4", "MVE over KNN on Abalone at 95%: C 94.96+-2.0, NMPIW 33.81+-5.0"):
        res = _require_abalone()
        model = MveModel(SlidingWindowKNN(res.schema, k=10, window=1000), confidence=0.95)
        out = run_experiment(
            res.instances, model, predictors=len(res.schema.columns) - 1, window=1000
        )
        assert abs(out.summary.coverage * 100 - 94.96) <= 2.0, out.summary
        assert abs(out.summary.nmpiw * 100 - 33.81) <= 5.0, out.summary


def _composer_run(g):
    """One randomized composer-level run with all invariants checked."""
    k = int(g.integers(2, 5))
    length = int(g.integers(4, 25))
    kind = [ABRUPT, GRADUAL, INCREMENTAL][int(g.integers(0, 3))]
    max_half = length // 2 if k > 2 else length
    half = int(g.integers(0, max_half + 1))
    seed = int(g.integers(0, 2**63))
    schema = Schema(
        (Column("f0", NUMERIC), Column("mirror", NUMERIC), Column("y", NUMERIC)), 2
    )
    concepts = []
    all_rows = []
    for c in range(k):
        vals = g.normal(loc=3.0 * c, size=length)
        rows = [Instance(np.array([v, v]), float(c)) for v in vals]
        concepts.append(ListConcept(rows, schema))
        all_rows.extend(rows)

    spec = DriftSpec(
        kind,
        k,
        length,
        drift_length=0 if kind == ABRUPT else 2 * half,
        seed=seed,
        order="given",
    )
    if kind == ABRUPT:
        out = compose_abrupt(concepts, spec, SeededRng(seed))
        rerun = compose_abrupt(concepts, spec, SeededRng(seed))
        assert multiset(out.instances) == multiset(all_rows)  # conservation
    elif kind == GRADUAL:
        out = compose_gradual(concepts, spec, SeededRng(seed))
        rerun = compose_gradual(concepts, spec, SeededRng(seed))
        assert multiset(out.instances) == multiset(all_rows)
    else:
        out = compose_incremental(concepts, spec, SeededRng(seed), "f0")
        rerun = compose_incremental(concepts, spec, SeededRng(seed), "f0")
        # drifting column removed from schema and instances
        assert [c.name for c in out.schema.columns] == ["mirror", "y"]
        assert all(len(i.features) == 1 for i in out.instances)
        # conservation over surviving columns
        assert multiset(out.instances) == multiset(
            [Instance(np.array([r.features[1]]), r.target) for r in all_rows]
        )
        # monotone drifting values inside every segment (mirror tracks f0)
        for s, e in out.boundaries:
            seg = [i.features[0] for i in out.instances[s:e]]
            assert seg == sorted(seg) or seg == sorted(seg, reverse=True)

    # boundary bookkeeping
    assert len(out) == k * length
    assert len(out.boundaries) == k - 1
    assert list(out.boundaries) == sorted(out.boundaries)
    prev_end = 0
    for s, e in out.boundaries:
        assert 0 <= s <= e <= len(out)
        assert s >= prev_end
        prev_end = e
    # determinism
    assert rerun.instances == out.instances
    assert rerun.boundaries == out.boundaries
    assert rerun.schema == out.schema


def _pipeline_run(g, tmp_path, idx):
    """One randomized end-to-end synthesize() run, byte-identical rerun."""
    rows = int(g.integers(20, 60))
    k = int(g.integers(2, 4))
    kind = [ABRUPT, GRADUAL, INCREMENTAL][int(g.integers(0, 3))]
    length = int(g.integers(k, 3 * rows // k + 1))
    half_cap = length // 2 if k > 2 else length
    half = int(g.integers(0, half_cap + 1))
    seed = int(g.integers(0, 2**63))
    smoothing = "none" if g.random() < 0.5 else "silverman"

    schema = Schema(
        (Column("f0", NUMERIC), Column("mirror", NUMERIC), Column("y", NUMERIC)), 2
    )
    data = []
    for _ in range(rows):
        v = float(g.normal())
        data.append(Instance(np.array([v, v]), 2.0 * v + float(g.normal()) * 0.1))

    spec = DriftSpec(
        kind, k, length,
        drift_length=0 if kind == ABRUPT else 2 * half,
        seed=seed,
    )
    out = synthesize(data, schema, spec, smoothing=smoothing)
    assert len(out) == k * length
    assert out.drifting_feature == "f0"  # |corr| tie with mirror breaks low
    if kind == INCREMENTAL:
        assert [c.name for c in out.schema.columns] == ["mirror", "y"]
        if smoothing == "none":
            for s, e in out.boundaries:
                seg = [i.features[0] for i in out.instances[s:e]]
                assert seg == sorted(seg) or seg == sorted(seg, reverse=True)

    p1 = tmp_path / f"run_{idx}_a.csv"
    p2 = tmp_path / f"run_{idx}_b.csv"
    write_csv(p1, out.schema, out.instances)
    rerun = synthesize(data, schema, spec, smoothing=smoothing)
    write_csv(p2, rerun.schema, rerun.instances)
    assert p1.read_bytes() == p2.read_bytes()
    assert rerun.boundaries == out.boundaries


def test_a5_composer_invariants(tmp_path):
    with criterion("A5", "500 randomized composer runs hold all invariants deterministically"):
        t0 = time.monotonic()
        g = SeededRng(2024).generator
        for _ in range(350):
            _composer_run(g)
        for i in range(150):
            _pipeline_run(g, tmp_path, i)
        elapsed = time.monotonic() - t0
        assert elapsed < 60.0, f"A5 took {elapsed:.2f}s (budget 60s)"


def _sign_flip_stream(n_pre, n_post, d=3, seed=42):
    g = SeededRng(seed).generator
    out = []
    for i in range(n_pre + n_post):
        x = g.random(d)
        s = float(x.sum())
        out.append(Instance(x, s if i < n_pre else -s))
    return out


def test_a6_drift_response():
    with criterion(
        "A6",
        "frozen learner degrades >1.5x after an abrupt flip; detector forest "
        "recovers to <=1.25x within 10k instances",
    ):
        pre, post = 12_000, 12_000
        stream = _sign_flip_stream(pre, post)
        schema = num_schema(3)
        steady_idx = range(8000, pre + 1, 1000)

        frozen = FrozenAfter(SlidingWindowKNN(schema, k=10, window=1000), cutoff=pre)
        res = run_experiment(stream, frozen, predictors=3, window=1000, report_every=1000)
        series = {r.index: r.rmse for r in res.records}
        pre_steady = float(np.mean([series[i] for i in steady_idx]))
        assert series[pre + 1000] > 1.5 * pre_steady, (
            f"first post-drift window {series[pre + 1000]:.4f} "
            f"vs steady {pre_steady:.4f}"
        )

        forest = OnlineBaggingForest(
            schema, ensemble_size=10, seed=7, grace_period=200, detect_drift=True
        )
        res = run_experiment(stream, forest, predictors=3, window=1000, report_every=1000)
        series = {r.index: r.rmse for r in res.records}
        pre_steady = float(np.mean([series[i] for i in steady_idx]))
        recovery = [
            series[i] for i in range(pre + 1000, pre + 10_001, 1000) if i in series
        ]
        assert min(recovery) <= 1.25 * pre_steady, (
            f"no recovery within 10k: min {min(recovery):.4f} vs "
            f"steady {pre_steady:.4f}"
        )


def test_a7_pi_calibration_and_adaptation():
    with criterion(
        "A7",
        "MVE covers 95+-2 under gaussian noise; AdaPI ends strictly closer to 95 "
        "than an under-covering MVE on shifted t(3) noise, scale >= 0.01",
    ):
        # (a) perfect base + N(0,1) labels
        g = SeededRng(1).generator
        stream = [Instance(np.array([0.0]), float(g.normal())) for _ in range(10_000)]
        mve = MveModel(OracleLearner(lambda x: 0.0), confidence=0.95)
        res = run_experiment(stream, mve, predictors=1, window=1000)
        assert 0.93 <= res.summary.coverage <= 0.97, res.summary.coverage

        # (b) t(3) noise whose scale quadruples mid-stream: the cumulative
        # error deviation lags, so MVE under-covers (the paper's post-drift
        # regime); i.i.d. t(3) alone over-covers and cannot meet the premise
        g = SeededRng(0).generator
        stream = []
        for i in range(10_000):
            s = 1.0 if i < 5_000 else 4.0
            stream.append(Instance(np.array([0.0]), float(g.standard_t(3) * s)))

        mve = MveModel(OracleLearner(lambda x: 0.0), confidence=0.95)
        res_mve = run_experiment(stream, mve, predictors=1, window=1000)
        c_mve = res_mve.summary.coverage * 100

        scale_min = math.inf

        class ScaleTap(AdaPiModel):
            def learn(self, x, y):
                nonlocal scale_min
                super().learn(x, y)
                scale_min = min(scale_min, self.scale)

        ada = ScaleTap(OracleLearner(lambda x: 0.0), confidence=0.95, scale_floor=0.01)
        res_ada = run_experiment(stream, ada, predictors=1, window=1000)
        c_ada = res_ada.summary.coverage * 100

        assert c_mve <= 94.0, f"premise not met: MVE coverage {c_mve:.2f}"
        assert abs(c_ada - 95.0) < abs(c_mve - 95.0), (c_ada, c_mve)
        assert scale_min >= 0.01


def test_a8_single_pass_performance():
    with criterion(
        "A8",
        "100k-instance KNN evaluation under 60s with stream-length-independent memory",
    ):
        probe = Path(__file__).parent / "_perf_probe.py"
        out = subprocess.run(
            [sys.executable, str(probe)],
            capture_output=True,
            text=True,
            check=True,
            cwd=REPO,
        )
        stats = json.loads(out.stdout.strip().splitlines()[-1])
        assert stats["instances"] == 100_000
        assert stats["seconds_100k"] < 60.0, stats
        assert stats["peak_100k"] <= 1.10 * stats["peak_10k"], stats


def test_a9_learner_oracles():
    with criterion(
        "A9",
        "KNN == exhaustive scan on a 2k stream; leaf means replay exactly; "
        "pinned forest reduces to one tree; Hoeffding bound matches the formula",
    ):
        # KNN equivalence, every prediction
        schema = Schema(
            (
                Column("a", NUMERIC),
                Column("c", CATEGORICAL, ("u", "v", "w")),
                Column("b", NUMERIC),
                Column("y", NUMERIC),
            ),
            3,
        )
        g = SeededRng(5).generator
        model = SlidingWindowKNN(schema, k=10, window=100)
        oracle = BruteForceKNN(schema, k=10, window=100)
        for _ in range(2000):
            x = np.array([g.normal(), float(g.integers(0, 3)), g.normal() * 4])
            assert model.predict(x) == pytest.approx(oracle.predict(x), abs=1e-12)
            y = float(g.normal())
            model.learn(x, y)
            oracle.learn(x, y)

        # leaf means replay to 1e-9
        tree = FimtTree(num_schema(2), grace_period=100, detect_drift=False)
        g = SeededRng(11).generator
        routed = {}
        for _ in range(4000):
            x = g.normal(size=2)
            y = float(x[0] * 3.0 - x[1] + 0.2 * g.normal())
            leaf = tree.route_leaf(x)
            routed.setdefault(id(leaf), (leaf, []))[1].append(y)
            tree.learn(x, y)
        live = {id(l) for l in tree.leaves()}
        assert len(live) > 1
        for key, (leaf, ys) in routed.items():
            if key in live and leaf.n:
                assert leaf.mean() == pytest.approx(float(np.mean(ys)), abs=1e-9)

        # forest reduction with pinned weights, detectors off
        forest = OnlineBaggingForest(
            num_schema(1), ensemble_size=4, fixed_weight=1, detect_drift=False
        )
        single = FimtTree(num_schema(1), detect_drift=False)
        g = SeededRng(3).generator
        for _ in range(2000):
            x = g.random(1)
            y = float(4.0 * x[0])
            assert forest.predict(x) == single.predict(x)
            forest.learn(x, y)
            single.learn(x, y)

        # Hoeffding bound: direct formula evaluation oracle
        expected = math.sqrt(math.log(1.0 / 0.01) / (2 * 200))
        assert abs(hoeffding_bound(0.01, 200) - expected) <= 1e-5
        assert hoeffding_bound(0.01, 200) == pytest.approx(0.1072983, abs=1e-5)
