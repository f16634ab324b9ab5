"""Synthetic catalog, datasets, splits, metrics and experiments."""

from .catalog import HOLDOUT_NAMES, find_particle, generate_catalog, sugar_particle
from .dataset import (
    DatasetRecord,
    SimConfig,
    dumps_dataset,
    generate_dataset,
    loads_dataset,
    read_dataset,
    record_markerfield,
    record_trace,
    simulate_record,
    write_dataset,
)
from .evaluation import (
    EvalReport,
    confusion_matrix,
    dumps_report,
    evaluate,
    mae,
    mape,
    parse_report,
    split_holdout,
    split_random,
)
from .experiments import (
    PropertyPipeline,
    ablation_rate,
    humidity_dataset,
    humidity_experiment,
    run_holdout,
    run_seen,
    truths,
)
