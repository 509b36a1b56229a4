"""Command-line pipeline: synthesize -> run -> report.

Every artifact is written together with a manifest holding the fully
resolved configuration, so any output can be regenerated bit-identically
from its manifest alone. Exit codes: 0 ok, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from driftstream import __version__
from driftstream.data import (
    CATEGORICAL,
    NUMERIC,
    DataError,
    load_csv,
    manifest_path,
    read_manifest,
    schema_hints_from_manifest,
    write_csv,
    write_manifest,
)
from driftstream.drift import DRIFT_KINDS, DriftSpec, synthesize
from driftstream.evaluation import (
    read_metrics_csv,
    run_experiment,
    summary_dict,
    write_metrics_csv,
)
from driftstream.intervals import AdaPiModel, MveModel
from driftstream.learners import FimtTree, OnlineBaggingForest, SlidingWindowKNN, Soknl

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _add_io_flags(p, output_help):
    p.add_argument("--input", required=True, help="source CSV (header row required)")
    p.add_argument("--target", required=True, help="target column name")
    p.add_argument("--output", required=True, help=output_help)
    p.add_argument(
        "--schema-hint",
        action="append",
        default=[],
        metavar="COL=KIND",
        help="force a column kind (numeric|categorical); repeatable",
    )
    p.add_argument("--config-out", help="write the resolved configuration as JSON")


def build_parser() -> _Parser:
    parser = _Parser(prog="driftstream", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    syn = sub.add_parser("synthesize", help="compose a concept-drifted stream from a CSV")
    _add_io_flags(syn, "path of the synthesized stream CSV")
    syn.add_argument("--drift", required=True, choices=DRIFT_KINDS)
    syn.add_argument("--concepts", type=int, default=4)
    syn.add_argument("--concept-length", type=int, required=True)
    syn.add_argument("--drift-length", type=int, default=0, help="width of each drifting period")
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--order", choices=("random", "given"), default="random")
    syn.add_argument("--method", choices=("pearson", "spearman"), default="pearson")
    syn.add_argument("--smoothing", choices=("silverman", "none"), default="silverman")

    run = sub.add_parser("run", help="test-then-train evaluation over a stream CSV")
    _add_io_flags(run, "path of the metrics CSV")
    run.add_argument("--learner", choices=("knn", "fimt", "forest", "soknl"), default="knn")
    run.add_argument("--k", type=int, default=10)
    run.add_argument("--window", type=int, default=1000, help="KNN sliding-window size")
    run.add_argument("--grace", type=int, default=200)
    run.add_argument("--split-confidence", type=float, default=0.01)
    run.add_argument("--ensemble-size", type=int, default=30)
    run.add_argument("--poisson-rate", type=float, default=6.0)
    run.add_argument("--no-detectors", action="store_true", help="disable drift detectors")
    run.add_argument("--pi", choices=("none", "mve", "adapi"), default="none")
    run.add_argument("--confidence", type=float, default=0.95)
    run.add_argument("--adapi-floor", type=float, default=0.01)
    run.add_argument("--adapi-rate", type=float, default=0.02)
    run.add_argument("--prequential-window", type=int, default=1000)
    run.add_argument("--report-every", type=int, default=None)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument(
        "--debug-state-hash",
        action="store_true",
        help="print a 64-bit learner state hash every 10k instances",
    )

    rep = sub.add_parser("report", help="merge metrics CSVs into tidy long format")
    rep.add_argument("--inputs", nargs="+", required=True, help="metrics CSV files")
    rep.add_argument("--names", nargs="*", default=None, help="series names (default: file stems)")
    rep.add_argument("--output", required=True)
    rep.add_argument(
        "--metric",
        choices=("rmse", "adj_r2", "coverage", "nmpiw"),
        default="rmse",
    )
    rep.add_argument(
        "--manifest",
        default=None,
        help="stream manifest supplying drift boundaries for annotation",
    )
    return parser


def _parse_hints(pairs):
    hints = {}
    for pair in pairs:
        name, _, kind = pair.partition("=")
        if kind not in (NUMERIC, CATEGORICAL):
            raise DataError(f"bad schema hint {pair!r}; expected COL=numeric|categorical")
        hints[name] = kind
    return hints


def _load_with_hints(args):
    hints = _parse_hints(args.schema_hint)
    src_manifest = manifest_path(args.input)
    if src_manifest.exists() and not hints:
        hints = schema_hints_from_manifest(read_manifest(args.input))
    return load_csv(args.input, args.target, schema_hints=hints or None)


def _resolved_config(args, skip=("command", "config_out")):
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _dump_config(args):
    if args.config_out:
        Path(args.config_out).write_text(
            json.dumps(_resolved_config(args), sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )


def cmd_synthesize(args) -> int:
    loaded = _load_with_hints(args)
    spec = DriftSpec(
        kind=args.drift,
        num_concepts=args.concepts,
        concept_length=args.concept_length,
        drift_length=args.drift_length,
        seed=args.seed,
        order=args.order,
    )
    stream = synthesize(loaded.instances, loaded.schema, spec, args.method, args.smoothing)
    write_csv(args.output, stream.schema, stream.instances)
    write_manifest(
        args.output,
        {
            "schema": stream.schema.to_dict(),
            "rows": len(stream),
            "seed": spec.seed,
            "drift": {
                "drift_type": spec.kind,
                "boundaries": [list(b) for b in stream.boundaries],
                "drifting_feature": stream.drifting_feature,
                "seed": spec.seed,
                **spec.to_dict(),
            },
            "source": {"path": args.input, "rows": len(loaded.instances),
                       "rejected_rows": loaded.rejected_rows},
            "config": _resolved_config(args),
        },
    )
    _dump_config(args)
    print(
        f"synthesized {len(stream)} rows ({spec.kind}, {spec.num_drifts} drifts, "
        f"drifting feature {stream.drifting_feature!r}) -> {args.output}"
    )
    return 0


def _build_model(args, schema):
    detectors = not args.no_detectors
    if args.learner == "knn":
        learner = SlidingWindowKNN(schema, k=args.k, window=args.window)
    elif args.learner == "fimt":
        learner = FimtTree(
            schema,
            grace_period=args.grace,
            split_confidence=args.split_confidence,
            detect_drift=detectors,
        )
    elif args.learner == "forest":
        learner = OnlineBaggingForest(
            schema,
            ensemble_size=args.ensemble_size,
            seed=args.seed,
            grace_period=args.grace,
            split_confidence=args.split_confidence,
            poisson_rate=args.poisson_rate,
            detect_drift=detectors,
        )
    else:
        learner = Soknl(
            schema,
            ensemble_size=args.ensemble_size,
            seed=args.seed,
            grace_period=args.grace,
            split_confidence=args.split_confidence,
            poisson_rate=args.poisson_rate,
            detect_drift=detectors,
        )
    if args.pi == "mve":
        return MveModel(learner, confidence=args.confidence)
    if args.pi == "adapi":
        return AdaPiModel(
            learner,
            confidence=args.confidence,
            scale_floor=args.adapi_floor,
            adaptation_rate=args.adapi_rate,
        )
    return learner


class _StateHashTap:
    """Transparent model wrapper printing state hashes every `period` learns."""

    def __init__(self, model, period=10_000):
        self.model = model
        self.period = period
        self.count = 0
        if hasattr(model, "predict_with_interval"):
            self.predict_with_interval = model.predict_with_interval

    def predict(self, x):
        return self.model.predict(x)

    def learn(self, x, y):
        self.model.learn(x, y)
        self.count += 1
        if self.count % self.period == 0:
            print(f"state-hash {self.count} {self.model.state_hash():016x}")

    def state_hash(self):
        return self.model.state_hash()


def cmd_run(args) -> int:
    loaded = _load_with_hints(args)
    model = _build_model(args, loaded.schema)
    if args.debug_state_hash:
        model = _StateHashTap(model)
    result = run_experiment(
        loaded.instances,
        model,
        predictors=len(loaded.schema.columns) - 1,
        window=args.prequential_window,
        report_every=args.report_every,
    )
    write_metrics_csv(args.output, result.records)
    summary = summary_dict(result)
    summary["rows"] = len(loaded.instances)
    summary["rejected_rows"] = loaded.rejected_rows
    Path(args.output).with_suffix(".summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    write_manifest(
        args.output,
        {
            "schema": loaded.schema.to_dict(),
            "rows": len(loaded.instances),
            "rejected_rows": loaded.rejected_rows,
            "seed": args.seed,
            "config": _resolved_config(args),
        },
    )
    _dump_config(args)
    s = result.summary

    def fmt(v):
        return "n/a" if v is None else f"{v:.6g}"

    print(
        f"evaluated {result.instances} instances: rmse={fmt(s.rmse)} "
        f"adj_r2={fmt(s.adjusted_r2)} coverage={fmt(s.coverage)} nmpiw={fmt(s.nmpiw)}"
    )
    return 0


def cmd_report(args) -> int:
    names = args.names or [Path(p).stem for p in args.inputs]
    if len(names) != len(args.inputs):
        raise DataError("--names must match --inputs in length")
    boundaries = None
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        boundaries = [tuple(b) for b in manifest["drift"]["boundaries"]]

    header = "series,index,value" + (",drift" if boundaries is not None else "")
    lines = [header]
    for name, path in zip(names, args.inputs):
        for rec in read_metrics_csv(path):
            value = getattr(rec, "adjusted_r2" if args.metric == "adj_r2" else args.metric)
            if value is None:
                continue  # missing stays missing, never fabricated
            row = f"{name},{rec.index},{value!r}"
            if boundaries is not None:
                inside = any(s <= rec.index <= e for s, e in boundaries)
                row += f",{int(inside)}"
            lines.append(row)
    Path(args.output).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"report with {len(names)} series -> {args.output}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else USAGE_ERROR
    try:
        if args.command == "synthesize":
            return cmd_synthesize(args)
        if args.command == "run":
            return cmd_run(args)
        return cmd_report(args)
    except (DataError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
