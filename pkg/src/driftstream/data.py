"""Tabular data model and CSV ingestion for regression streams.

A stream is an ordered sequence of Instances conforming to a Schema. File
order is stream order. Numeric cells are parsed as float64; categorical
cells are dictionary-interned to integer codes (insertion-ordered over the
accepted rows) and stored as floats inside the feature vector.

CSV dialect: UTF-8, comma separator, mandatory header row, `.` decimal
separator, numerics never quoted. Every stream file may carry a JSON
sidecar `<name>.manifest.json` describing schema, row count, seed and, for
synthesized streams, the drift recipe and true drift boundaries.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"


class DataError(Exception):
    """Unusable input data: missing file/column, empty or fully rejected table."""


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"unknown column kind {self.kind!r}")
        if not self.name:
            raise ValueError("column names must be non-empty")


@dataclass(frozen=True)
class Schema:
    columns: tuple[Column, ...]
    target_index: int

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique")
        if not 0 <= self.target_index < len(self.columns):
            raise ValueError("target_index out of range")
        if self.columns[self.target_index].kind != NUMERIC:
            raise ValueError("target column must be numeric")

    @property
    def target(self) -> Column:
        return self.columns[self.target_index]

    @property
    def feature_columns(self) -> tuple[Column, ...]:
        return tuple(c for i, c in enumerate(self.columns) if i != self.target_index)

    def feature_position(self, name: str) -> int:
        """Index of a feature column within the Instance feature vector."""
        for i, c in enumerate(self.feature_columns):
            if c.name == name:
                return i
        raise KeyError(name)

    def drop_feature(self, name: str) -> "Schema":
        kept = [c for c in self.columns if c.name != name]
        if len(kept) == len(self.columns):
            raise KeyError(name)
        if self.target.name == name:
            raise ValueError("cannot drop the target column")
        return Schema(tuple(kept), kept.index(self.target))

    def to_dict(self) -> dict:
        return {
            "columns": [
                {"name": c.name, "kind": c.kind, "categories": list(c.categories)}
                for c in self.columns
            ],
            "target": self.target.name,
        }

    @staticmethod
    def from_dict(d: Mapping) -> "Schema":
        cols = tuple(
            Column(c["name"], c["kind"], tuple(c.get("categories", ()))) for c in d["columns"]
        )
        names = [c.name for c in cols]
        return Schema(cols, names.index(d["target"]))


@dataclass(frozen=True, eq=False)
class Instance:
    """One observation: feature vector (codes for categoricals) plus target."""

    features: np.ndarray
    target: float

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        feats.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "target", float(self.target))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return self.target == other.target and np.array_equal(self.features, other.features)

    def __repr__(self) -> str:
        return f"Instance(features={self.features.tolist()}, target={self.target})"


@dataclass(frozen=True)
class LoadResult:
    schema: Schema
    instances: tuple[Instance, ...]
    rejected_rows: int


def _parse_float(text: str) -> float | None:
    try:
        v = float(text)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _looks_numeric(text: str) -> bool:
    # kind inference only; non-finite notation still counts as numeric-looking
    try:
        float(text)
        return True
    except ValueError:
        return False


def load_csv(
    path: str | Path,
    target: str,
    schema_hints: Mapping[str, str] | None = None,
) -> LoadResult:
    """Load a headed CSV as (schema, instances, rejected count), in file order.

    Column kinds come from `schema_hints` where given; otherwise a column is
    numeric when more than half of its non-empty cells look like float
    notation, else categorical. Rows are rejected (counted, not loaded) when
    any numeric cell, target included, is missing, non-parsable, or
    non-finite. No imputation is performed; categorical cells intern
    whatever text they hold, empty string included.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    hints = dict(schema_hints or {})

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        rows = [row for row in reader if row]

    if target not in header:
        raise DataError(f"{path}: target column {target!r} not in header {header}")
    if not rows:
        raise DataError(f"{path}: no data rows")
    for name in hints:
        if name not in header:
            raise DataError(f"schema hint for unknown column {name!r}")

    ncols = len(header)
    kinds: list[str] = []
    for j, name in enumerate(header):
        if name in hints:
            kinds.append(hints[name])
            continue
        cells = [row[j] for row in rows if j < len(row) and row[j] != ""]
        numericish = sum(1 for cell in cells if _looks_numeric(cell))
        kinds.append(NUMERIC if numericish * 2 > len(cells) else CATEGORICAL)

    target_index = header.index(target)
    if kinds[target_index] != NUMERIC:
        raise DataError(f"target column {target!r} is not numeric")

    vocab: list[dict[str, int]] = [{} for _ in range(ncols)]
    parsed_rows: list[list[float]] = []
    rejected = 0
    for row in rows:
        if len(row) != ncols:
            rejected += 1
            continue
        values: list[float] = []
        ok = True
        for j, cell in enumerate(row):
            if kinds[j] == NUMERIC:
                v = _parse_float(cell)
                if v is None:
                    ok = False
                    break
                values.append(v)
            else:
                code = vocab[j].setdefault(cell, len(vocab[j]))
                values.append(float(code))
        if ok:
            parsed_rows.append(values)
        else:
            rejected += 1
    if not parsed_rows:
        raise DataError(f"{path}: all {rejected} rows rejected")

    columns = tuple(
        Column(
            name,
            kinds[j],
            tuple(vocab[j]) if kinds[j] == CATEGORICAL else (),
        )
        for j, name in enumerate(header)
    )
    schema = Schema(columns, target_index)
    instances = tuple(
        Instance(
            np.array(values[:target_index] + values[target_index + 1 :], dtype=np.float64),
            values[target_index],
        )
        for values in parsed_rows
    )
    return LoadResult(schema, instances, rejected)


def _format_value(column: Column, value: float) -> str:
    if column.kind == NUMERIC:
        return repr(float(value))
    code = int(value)
    if not 0 <= code < len(column.categories):
        raise ValueError(f"code {code} out of range for column {column.name!r}")
    return column.categories[code]


def write_csv(path: str | Path, schema: Schema, stream: Iterable[Instance]) -> int:
    """Write a stream; returns row count. repr() serialization keeps the
    write-then-load round trip bit-faithful for numerics."""
    path = Path(path)
    nfeat = len(schema.columns) - 1
    try:
        fh = path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
    with fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([c.name for c in schema.columns])
        n = 0
        for inst in stream:
            if len(inst.features) != nfeat:
                raise DataError(
                    f"instance arity {len(inst.features)} != schema features {nfeat}"
                )
            cells = [
                _format_value(col, v)
                for col, v in zip(schema.feature_columns, inst.features)
            ]
            cells.insert(schema.target_index, repr(inst.target))
            writer.writerow(cells)
            n += 1
    return n


def manifest_path(stream_path: str | Path) -> Path:
    return Path(stream_path).with_suffix(".manifest.json")


def write_manifest(stream_path: str | Path, payload: Mapping) -> Path:
    """Write the JSON sidecar for a stream file; stable bytes for equal inputs."""
    out = manifest_path(stream_path)
    out.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return out


def read_manifest(stream_path: str | Path) -> dict:
    return json.loads(manifest_path(stream_path).read_text(encoding="utf-8"))


def schema_hints_from_manifest(manifest: Mapping) -> dict[str, str]:
    return {c["name"]: c["kind"] for c in manifest["schema"]["columns"]}
