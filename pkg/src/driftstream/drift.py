"""Concept-drift synthesis from tabular regression data.

Pipeline: pick the numeric feature most correlated with the target, sort
the table by it, cut the sorted table into contiguous chunks (one chunk
per concept), wrap each chunk in a sampler, then compose the sampled
concepts into an abrupt, gradual, or incremental stream.

Composition only rearranges sampled instances, it never invents new ones,
so the output length is always num_concepts * concept_length and the
output multiset equals the union of the per-concept samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from driftstream.data import NUMERIC, DataError, Instance, Schema
from driftstream.rng import SeededRng

ABRUPT = "abrupt"
GRADUAL = "gradual"
INCREMENTAL = "incremental"
DRIFT_KINDS = (ABRUPT, GRADUAL, INCREMENTAL)


class ZeroVarianceError(ValueError):
    """Correlation is undefined when either sequence has zero variance."""


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation in [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("pearson needs two equal-length sequences of length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    vx = float(dx @ dx)
    vy = float(dy @ dy)
    if vx == 0.0 or vy == 0.0:
        raise ZeroVarianceError("zero variance makes correlation undefined")
    r = float(dx @ dy) / math.sqrt(vx * vy)
    return min(1.0, max(-1.0, r))


def _average_ranks(v: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties assigned the mean of their rank block."""
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v), dtype=np.float64)
    sv = v[order]
    i = 0
    while i < len(sv):
        j = i
        while j + 1 < len(sv) and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation: pearson applied to average-ranked data."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("spearman needs two equal-length sequences of length >= 2")
    return pearson(_average_ranks(x), _average_ranks(y))


_CORRELATIONS = {"pearson": pearson, "spearman": spearman}


def select_drifting_feature(
    data: Sequence[Instance], schema: Schema, method: str = "pearson"
) -> str:
    """Numeric feature with the largest |correlation(feature, target)|.

    Ties break toward the lower column index. Zero-variance features are
    not candidates (their correlation is undefined).
    """
    corr = _CORRELATIONS[method]
    target = np.array([inst.target for inst in data], dtype=np.float64)
    best_name = None
    best_score = -1.0
    saw_numeric = False
    for pos, col in enumerate(schema.feature_columns):
        if col.kind != NUMERIC:
            continue
        saw_numeric = True
        values = np.array([inst.features[pos] for inst in data], dtype=np.float64)
        try:
            score = abs(corr(values, target))
        except ZeroVarianceError:
            continue
        if score > best_score:
            best_score = score
            best_name = col.name
    if not saw_numeric:
        raise DataError("no numeric feature columns: cannot pick a drifting feature")
    if best_name is None:
        raise DataError("correlation undefined for every numeric feature")
    return best_name


def chunk_by_feature(
    data: Sequence[Instance], schema: Schema, feature: str, num_chunks: int
) -> list[list[Instance]]:
    """Sort ascending by `feature` (stable) and split into contiguous chunks.

    Chunk sizes differ by at most one; earlier chunks absorb the remainder.
    """
    if num_chunks < 2:
        raise ValueError("num_chunks must be >= 2")
    if len(data) < num_chunks:
        raise ValueError("fewer rows than chunks")
    pos = schema.feature_position(feature)
    values = np.array([inst.features[pos] for inst in data], dtype=np.float64)
    order = np.argsort(values, kind="stable")
    base, rem = divmod(len(data), num_chunks)
    chunks = []
    start = 0
    for i in range(num_chunks):
        size = base + (1 if i < rem else 0)
        chunks.append([data[j] for j in order[start : start + size]])
        start += size
    return chunks


class ConceptSource(Protocol):
    """Sampler for one stationary concept."""

    schema: Schema

    def sample(self, n: int, rng: SeededRng) -> list[Instance]: ...


def silverman_bandwidth(values: np.ndarray) -> float:
    """0.9 * min(sigma, IQR/1.34) * m^(-1/5); zero when the column is degenerate."""
    m = len(values)
    if m < 2:
        return 0.0
    sigma = float(np.std(values))
    q75, q25 = np.percentile(values, [75.0, 25.0])
    return 0.9 * min(sigma, (q75 - q25) / 1.34) * m ** (-0.2)


@dataclass
class BootstrapSampler:
    """Smoothed bootstrap over a captured chunk.

    Resamples whole rows uniformly, then jitters numeric columns with
    zero-mean Gaussian noise scaled by a per-column bandwidth. Zero
    bandwidths reproduce base rows exactly; categorical codes always come
    from the resampled row, i.e. from the chunk's empirical distribution.
    """

    schema: Schema
    base_features: np.ndarray
    base_targets: np.ndarray
    feature_bandwidths: np.ndarray
    target_bandwidth: float

    @classmethod
    def from_chunk(
        cls, chunk: Sequence[Instance], schema: Schema, smoothing: str = "silverman"
    ) -> "BootstrapSampler":
        if smoothing not in ("silverman", "none"):
            raise ValueError(f"unknown smoothing {smoothing!r}")
        feats = np.array([inst.features for inst in chunk], dtype=np.float64)
        targets = np.array([inst.target for inst in chunk], dtype=np.float64)
        fbw = np.zeros(feats.shape[1])
        tbw = 0.0
        if smoothing == "silverman":
            for pos, col in enumerate(schema.feature_columns):
                if col.kind == NUMERIC:
                    fbw[pos] = silverman_bandwidth(feats[:, pos])
            tbw = silverman_bandwidth(targets)
        return cls(schema, feats, targets, fbw, tbw)

    def sample(self, n: int, rng: SeededRng) -> list[Instance]:
        g = rng.generator
        idx = g.integers(0, len(self.base_targets), size=n)
        feats = self.base_features[idx] + g.normal(size=(n, self.base_features.shape[1])) * self.feature_bandwidths
        targets = self.base_targets[idx] + g.normal(size=n) * self.target_bandwidth
        return [Instance(feats[i], targets[i]) for i in range(n)]


@dataclass(frozen=True)
class DriftSpec:
    """Recipe for composing sampled concepts into one drifted stream."""

    kind: str
    num_concepts: int
    concept_length: int
    drift_length: int = 0
    seed: int = 0
    order: str = "random"

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise ValueError(f"unknown drift kind {self.kind!r}")
        if self.num_concepts < 2:
            raise ValueError("need at least 2 concepts")
        if self.concept_length < 1:
            raise ValueError("concept_length must be positive")
        if self.order not in ("random", "given"):
            raise ValueError(f"unknown order {self.order!r}")
        if self.kind in (GRADUAL, INCREMENTAL):
            if self.drift_length < 0 or self.drift_length % 2:
                raise ValueError("drift_length must be even and >= 0")
            half = self.drift_length // 2
            if self.concept_length < half:
                raise ValueError("concept_length must be >= drift_length / 2")
            if self.num_concepts > 2 and self.concept_length < self.drift_length:
                # interior concepts donate both their head and their tail
                raise ValueError(
                    "with more than two concepts, concept_length must be >= drift_length"
                )

    @property
    def num_drifts(self) -> int:
        return self.num_concepts - 1

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "num_concepts": self.num_concepts,
            "concept_length": self.concept_length,
            "drift_length": self.drift_length if self.kind != ABRUPT else 0,
            "seed": self.seed,
            "order": self.order,
        }


@dataclass(frozen=True)
class SynthesizedStream:
    schema: Schema
    instances: tuple[Instance, ...]
    boundaries: tuple[tuple[int, int], ...]
    drifting_feature: str | None = None

    def __len__(self) -> int:
        return len(self.instances)


def _sample_concepts(
    concepts: Sequence[ConceptSource], spec: DriftSpec, rng: SeededRng
) -> tuple[Schema, list[list[Instance]]]:
    if len(concepts) != spec.num_concepts:
        raise ValueError(f"spec wants {spec.num_concepts} concepts, got {len(concepts)}")
    if len(concepts) < 2:
        raise ValueError("need at least 2 concepts")
    schema = concepts[0].schema
    if any(c.schema != schema for c in concepts):
        raise ValueError("concepts disagree on schema")
    if spec.order == "random":
        perm = rng.substream("order").generator.permutation(len(concepts))
    else:
        perm = np.arange(len(concepts))
    streams = [
        concepts[perm[i]].sample(spec.concept_length, rng.substream(f"concept/{i}"))
        for i in range(len(concepts))
    ]
    return schema, streams


def compose_abrupt(
    concepts: Sequence[ConceptSource],
    spec: DriftSpec,
    rng: SeededRng,
    drifting_feature: str | None = None,
) -> SynthesizedStream:
    """Concatenate per-concept samples; switch points recorded as (i, i)."""
    if spec.kind != ABRUPT:
        raise ValueError(f"spec kind is {spec.kind!r}, expected {ABRUPT!r}")
    schema, streams = _sample_concepts(concepts, spec, rng)
    out: list[Instance] = []
    for s in streams:
        out.extend(s)
    L = spec.concept_length
    boundaries = tuple((L * j, L * j) for j in range(1, spec.num_concepts))
    return SynthesizedStream(schema, tuple(out), boundaries, drifting_feature)


def _compose_mixed(
    concepts: Sequence[ConceptSource],
    spec: DriftSpec,
    rng: SeededRng,
    arrange_segment,
    drifting_feature: str | None,
) -> SynthesizedStream:
    schema, streams = _sample_concepts(concepts, spec, rng)
    L = spec.concept_length
    k = spec.num_concepts
    n = spec.drift_length // 2

    out: list[Instance] = []
    boundaries = []
    for j in range(k):
        lo = n if j > 0 else 0
        hi = L - n if j < k - 1 else L
        out.extend(streams[j][lo:hi])
        if j < k - 1:
            left_pool = streams[j][L - n :]
            right_pool = streams[j + 1][:n]
            start = len(out)
            out.extend(arrange_segment(left_pool, right_pool, j))
            boundaries.append((start, start + 2 * n))
    return SynthesizedStream(schema, tuple(out), tuple(boundaries), drifting_feature)


def compose_gradual(
    concepts: Sequence[ConceptSource],
    spec: DriftSpec,
    rng: SeededRng,
    drifting_feature: str | None = None,
) -> SynthesizedStream:
    """Pool the tail/head halves around each switch and shuffle the pool.

    drift_length = 0 degenerates to the abrupt composition (with the
    boundary bookkeeping collapsing to zero-width windows).
    """
    if spec.kind != GRADUAL:
        raise ValueError(f"spec kind is {spec.kind!r}, expected {GRADUAL!r}")

    def shuffle_segment(left_pool, right_pool, j):
        pool = list(left_pool) + list(right_pool)
        perm = rng.substream(f"mix/{j}").generator.permutation(len(pool))
        return [pool[i] for i in perm]

    return _compose_mixed(concepts, spec, rng, shuffle_segment, drifting_feature)


def _drop_feature(stream: SynthesizedStream, feature: str) -> SynthesizedStream:
    pos = stream.schema.feature_position(feature)
    schema = stream.schema.drop_feature(feature)
    instances = tuple(
        Instance(np.delete(inst.features, pos), inst.target) for inst in stream.instances
    )
    return SynthesizedStream(schema, instances, stream.boundaries, feature)


def compose_incremental(
    concepts: Sequence[ConceptSource],
    spec: DriftSpec,
    rng: SeededRng,
    drifting_feature: str,
) -> SynthesizedStream:
    """Pooled transition segments are sorted by the drifting feature, then
    the feature column is removed to prevent trivial leakage.

    Sort direction per segment: ascending when the incoming pool's mean
    feature value exceeds the outgoing pool's, else descending. Ties keep
    pool order (stable sort).
    """
    if spec.kind != INCREMENTAL:
        raise ValueError(f"spec kind is {spec.kind!r}, expected {INCREMENTAL!r}")
    schema = concepts[0].schema
    names = [c.name for c in schema.columns]
    if drifting_feature not in names or drifting_feature == schema.target.name:
        raise DataError(f"drifting feature {drifting_feature!r} is not a feature column")
    if schema.columns[names.index(drifting_feature)].kind != NUMERIC:
        raise DataError(f"drifting feature {drifting_feature!r} must be numeric")
    pos = schema.feature_position(drifting_feature)

    def sort_segment(left_pool, right_pool, j):
        pool = list(left_pool) + list(right_pool)
        if not pool:
            return pool
        values = np.array([inst.features[pos] for inst in pool])
        n_left = len(left_pool)
        ascending = True
        if n_left and len(pool) > n_left:
            ascending = values[n_left:].mean() > values[:n_left].mean()
        keys = values if ascending else -values
        return [pool[i] for i in np.argsort(keys, kind="stable")]

    mixed = _compose_mixed(concepts, spec, rng, sort_segment, drifting_feature)
    return _drop_feature(mixed, drifting_feature)


def synthesize(
    data: Sequence[Instance],
    schema: Schema,
    spec: DriftSpec,
    method: str = "pearson",
    smoothing: str = "silverman",
) -> SynthesizedStream:
    """Full pipeline: feature selection, chunking, sampling, composition."""
    feature = select_drifting_feature(data, schema, method)
    chunks = chunk_by_feature(data, schema, feature, spec.num_concepts)
    samplers = [BootstrapSampler.from_chunk(c, schema, smoothing) for c in chunks]
    rng = SeededRng(spec.seed)
    if spec.kind == ABRUPT:
        return compose_abrupt(samplers, spec, rng, drifting_feature=feature)
    if spec.kind == GRADUAL:
        return compose_gradual(samplers, spec, rng, drifting_feature=feature)
    return compose_incremental(samplers, spec, rng, drifting_feature=feature)
