"""Streaming regression toolkit: drift synthesis, learners, prediction
intervals, and cumulative/prequential evaluation."""

from driftstream.data import (
    CATEGORICAL,
    NUMERIC,
    Column,
    DataError,
    Instance,
    LoadResult,
    Schema,
    load_csv,
    write_csv,
)
from driftstream.rng import SeededRng

__all__ = [
    "CATEGORICAL",
    "NUMERIC",
    "Column",
    "DataError",
    "Instance",
    "LoadResult",
    "Schema",
    "SeededRng",
    "load_csv",
    "write_csv",
]

__version__ = "0.1.0"

# submodules are intentionally light to import; pull the common entry
# points up for interactive use
from driftstream.drift import DriftSpec, SynthesizedStream, synthesize  # noqa: E402
from driftstream.evaluation import run_experiment  # noqa: E402
from driftstream.intervals import AdaPiModel, Interval, MveModel  # noqa: E402
from driftstream.learners import (  # noqa: E402
    FimtTree,
    OnlineBaggingForest,
    SlidingWindowKNN,
    Soknl,
)

__all__ += [
    "AdaPiModel",
    "DriftSpec",
    "FimtTree",
    "Interval",
    "MveModel",
    "OnlineBaggingForest",
    "SlidingWindowKNN",
    "Soknl",
    "SynthesizedStream",
    "run_experiment",
    "synthesize",
]
