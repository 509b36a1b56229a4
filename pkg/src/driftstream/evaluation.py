"""Test-then-train evaluation: cumulative and windowed prequential metrics.

For every instance the driver predicts (and scores) strictly before the
label is used for learning. Cumulative state keeps O(1) accumulators from
stream start; prequential state keeps a ring buffer of the last n scored
triples. The target range used to normalize interval widths is the running
range of all labels seen so far in both modes: in a single pass the final
range is unknowable upfront.

Metric functions raise UndefinedMetric when their preconditions fail;
streaming states convert that to missing values (None) which serialize as
empty CSV cells, never as fabricated zeros.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

from driftstream.data import Instance
from driftstream.intervals import Interval


class UndefinedMetric(ValueError):
    """Raised when a metric's preconditions are not met."""


def rmse(pairs: Sequence[tuple[float, float]]) -> float:
    """sqrt(mean (y - y_hat)^2) over (y, y_hat) pairs."""
    if not pairs:
        raise UndefinedMetric("rmse of an empty sequence")
    return math.sqrt(sum((y - y_hat) ** 2 for y, y_hat in pairs) / len(pairs))


def adjusted_r2(pairs: Sequence[tuple[float, float]], predictors: int) -> float:
    """1 - (1 - R^2)(n - 1)/(n - p - 1) with R^2 = 1 - SSE/SST."""
    n = len(pairs)
    if n < predictors + 2:
        raise UndefinedMetric(f"need n >= p + 2 (n={n}, p={predictors})")
    y_bar = sum(y for y, _ in pairs) / n
    sst = sum((y - y_bar) ** 2 for y, _ in pairs)
    if sst <= 0.0:
        raise UndefinedMetric("zero target variance")
    sse = sum((y - y_hat) ** 2 for y, y_hat in pairs)
    r2 = 1.0 - sse / sst
    return 1.0 - (1.0 - r2) * (n - 1) / (n - predictors - 1)


def coverage(triples: Sequence[tuple[float, Interval]]) -> float:
    """Fraction of targets inside their closed interval."""
    if not triples:
        raise UndefinedMetric("coverage of an empty sequence")
    return sum(1 for y, iv in triples if iv.contains(y)) / len(triples)


def nmpiw(intervals: Sequence[Interval], target_range: float) -> float:
    """Mean interval width normalized by the observed target range."""
    if not intervals:
        raise UndefinedMetric("nmpiw of an empty sequence")
    if target_range <= 0.0:
        raise UndefinedMetric("target range must be positive")
    return sum(iv.width for iv in intervals) / len(intervals) / target_range


@dataclass(frozen=True)
class EvaluationRecord:
    index: int
    rmse: float | None
    adjusted_r2: float | None
    coverage: float | None
    nmpiw: float | None


class MetricState:
    """Running metric accumulators, cumulative or windowed.

    window=None accumulates from stream start with O(1) scalars (Welford
    for the target variance); window=n retains the last n scored triples
    and recomputes two-pass on demand. The label min/max feeding the
    interval-width normalizer is cumulative in both modes.
    """

    def __init__(self, predictors: int, window: int | None = None):
        if predictors < 0:
            raise ValueError("predictors must be >= 0")
        if window is not None and window < 1:
            raise ValueError("window must be positive")
        self.predictors = predictors
        self.window = window
        self.count = 0
        self.y_min = math.inf
        self.y_max = -math.inf
        if window is None:
            self._sse = 0.0
            self._y_mean = 0.0
            self._y_m2 = 0.0
            self._inside = 0
            self._width_sum = 0.0
            self._n_intervals = 0
        else:
            self._buffer: deque[tuple[float, float, Interval | None]] = deque(maxlen=window)

    def update(self, y: float, y_hat: float, interval: Interval | None = None) -> None:
        self.count += 1
        self.y_min = min(self.y_min, y)
        self.y_max = max(self.y_max, y)
        if self.window is None:
            self._sse += (y - y_hat) ** 2
            delta = y - self._y_mean
            self._y_mean += delta / self.count
            self._y_m2 += delta * (y - self._y_mean)
            if interval is not None:
                self._n_intervals += 1
                self._width_sum += interval.width
                if interval.contains(y):
                    self._inside += 1
        else:
            self._buffer.append((y, y_hat, interval))

    @property
    def target_range(self) -> float:
        return self.y_max - self.y_min if self.count else 0.0

    def rmse(self) -> float | None:
        if self.count == 0:
            return None
        if self.window is None:
            return math.sqrt(self._sse / self.count)
        return rmse([(y, y_hat) for y, y_hat, _ in self._buffer])

    def adjusted_r2(self) -> float | None:
        try:
            if self.window is None:
                n = self.count
                if n < self.predictors + 2:
                    raise UndefinedMetric("window too small")
                if self._y_m2 <= 0.0:
                    raise UndefinedMetric("zero target variance")
                r2 = 1.0 - self._sse / self._y_m2
                return 1.0 - (1.0 - r2) * (n - 1) / (n - self.predictors - 1)
            return adjusted_r2([(y, y_hat) for y, y_hat, _ in self._buffer], self.predictors)
        except UndefinedMetric:
            return None

    def coverage(self) -> float | None:
        try:
            if self.window is None:
                if self._n_intervals == 0:
                    raise UndefinedMetric("no intervals")
                return self._inside / self._n_intervals
            return coverage([(y, iv) for y, _, iv in self._buffer if iv is not None])
        except UndefinedMetric:
            return None

    def nmpiw(self) -> float | None:
        try:
            if self.target_range <= 0.0:
                raise UndefinedMetric("degenerate target range")
            if self.window is None:
                if self._n_intervals == 0:
                    raise UndefinedMetric("no intervals")
                return self._width_sum / self._n_intervals / self.target_range
            return nmpiw([iv for _, _, iv in self._buffer if iv is not None], self.target_range)
        except UndefinedMetric:
            return None

    def record(self, index: int) -> EvaluationRecord:
        return EvaluationRecord(
            index=index,
            rmse=self.rmse(),
            adjusted_r2=self.adjusted_r2(),
            coverage=self.coverage(),
            nmpiw=self.nmpiw(),
        )


@dataclass(frozen=True)
class ExperimentResult:
    records: tuple[EvaluationRecord, ...]  # prequential series
    summary: EvaluationRecord  # cumulative over the whole stream
    instances: int


def run_experiment(
    stream: Iterable[Instance],
    model,
    predictors: int,
    window: int = 1000,
    report_every: int | None = None,
) -> ExperimentResult:
    """Drive one pass of interleaved test-then-train over the stream.

    Works with bare regressors and with interval models (anything exposing
    predict_with_interval). Prequential records are emitted every
    report_every instances (default: the window size) and once at stream
    end; the summary holds the final cumulative metrics.
    """
    if report_every is None:
        report_every = window
    if report_every < 1:
        raise ValueError("report_every must be positive")
    emits_intervals = hasattr(model, "predict_with_interval")

    cumulative = MetricState(predictors)
    prequential = MetricState(predictors, window=window)
    records: list[EvaluationRecord] = []
    index = 0
    for inst in stream:
        index += 1
        if emits_intervals:
            y_hat, interval = model.predict_with_interval(inst.features)
        else:
            y_hat, interval = model.predict(inst.features), None
        cumulative.update(inst.target, y_hat, interval)
        prequential.update(inst.target, y_hat, interval)
        model.learn(inst.features, inst.target)
        if index % report_every == 0:
            records.append(prequential.record(index))
    if index == 0:
        raise ValueError("empty stream")
    if not records or records[-1].index != index:
        records.append(prequential.record(index))
    return ExperimentResult(tuple(records), cumulative.record(index), index)


def _cell(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_metrics_csv(path: str | Path, records: Sequence[EvaluationRecord]) -> None:
    """`index,rmse,adj_r2,coverage,nmpiw` with missing values as empty cells."""
    lines = ["index,rmse,adj_r2,coverage,nmpiw"]
    for r in records:
        lines.append(
            f"{r.index},{_cell(r.rmse)},{_cell(r.adjusted_r2)},{_cell(r.coverage)},{_cell(r.nmpiw)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_metrics_csv(path: str | Path) -> list[EvaluationRecord]:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not lines or lines[0] != "index,rmse,adj_r2,coverage,nmpiw":
        raise ValueError(f"{path}: not a metrics csv")
    out = []
    for line in lines[1:]:
        idx, *cells = line.split(",")
        vals = [None if c == "" else float(c) for c in cells]
        out.append(EvaluationRecord(int(idx), *vals))
    return out


def summary_dict(result: ExperimentResult) -> dict:
    d = asdict(result.summary)
    d.pop("index")
    d["instances"] = result.instances
    return d


def write_summary(path: str | Path, result: ExperimentResult, extra: dict | None = None) -> None:
    payload = summary_dict(result)
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
