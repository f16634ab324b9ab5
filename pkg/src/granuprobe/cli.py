"""Command-line front end.

Subcommands::

    granuprobe catalog
    granuprobe simulate
    granuprobe train
    granuprobe eval
    granuprobe ablate-rate
    granuprobe humidity
    granuprobe trace <particle> <height_mm> <procedure>

Options ``--config PATH`` (flat ``key = value`` file), ``--seed N`` and
``--out DIR`` apply to every subcommand. Files land under ``--out``:
``dataset.csv``, ``models/``, ``reports/`` and ``traces/``.

Exit codes: 0 success, 2 usage, 3 configuration, 4 simulation,
5 training/evaluation, 6 file I/O.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .domain import ContainerSpec, ContentFill
from .errors import ConfigError, DomainError
from .estimators import load_model, save_model
from .granusim import (
    FORCE_NOISE,
    FULL_RANGE,
    MARKER_NOISE,
    TORQUE_NOISE,
    TRACE_NOISE,
    stick_slip_trace,
    vibration_markerfield,
)
from .harness import (
    HOLDOUT_NAMES,
    PropertyPipeline,
    SimConfig,
    ablation_rate,
    dumps_dataset,
    dumps_report,
    evaluate,
    find_particle,
    generate_catalog,
    generate_dataset,
    humidity_experiment,
    loads_dataset,
    split_holdout,
    split_random,
    truths,
)
from .harness.dataset import procedure_seeds
from .harness.evaluation import HOLDOUT_VOLUME_RANGE

log = logging.getLogger("granuprobe")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_SIM, EXIT_TRAIN, EXIT_IO = 0, 2, 3, 4, 5, 6
PROCEDURES = ("slow-rotation", "full-rotation", "fast-rotation")
MODEL_FILES = {"height": "height.mlp", "size": "size.mlp", "shape": "shape.forest"}
MAX_SEED = 2**64 - 1


class IOFailure(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; each field is one config key."""

    seed: int = 0
    inner_width: float = ContainerSpec.inner_width
    inner_depth: float = ContainerSpec.inner_depth
    inner_height: float = ContainerSpec.inner_height
    container_mass_mc: float = ContainerSpec.container_mass_mc
    grasp_height: float = ContainerSpec.grasp_height
    gravity_g: float = ContainerSpec.gravity_g
    force_noise: float = FORCE_NOISE
    torque_noise: float = TORQUE_NOISE
    trace_noise: float = TRACE_NOISE
    marker_noise: float = MARKER_NOISE
    dataset_path: str = "dataset.csv"
    models_dir: str = "models"
    reports_dir: str = "reports"
    traces_dir: str = "traces"
    holdout: bool = True
    oracle_height: bool = False
    n_trees: int = 100
    ablation_rates: tuple = (800.0, 30.0)
    out_dir: str = field(default=".", metadata={"cli_only": True})

    def container(self) -> ContainerSpec:
        return ContainerSpec(
            self.inner_width, self.inner_depth, self.inner_height,
            self.container_mass_mc, self.grasp_height, self.gravity_g,
        )

    def sim(self) -> SimConfig:
        return SimConfig(self.container(), self.force_noise, self.torque_noise,
                         self.trace_noise, self.marker_noise)

    def path(self, name):
        return os.path.join(self.out_dir, name)


CONFIG_KEYS = {f.name: f for f in fields(RunConfig) if not f.metadata.get("cli_only")}


def _parse_value(key, text):
    kind = type(RunConfig.__dataclass_fields__[key].default)
    if kind is bool:
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"expected true/false, got {text!r}")
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    if kind is tuple:
        return tuple(float(x) for x in text.replace(",", " ").split())
    return text


def _check(cfg: RunConfig):
    if not 0 <= cfg.seed <= MAX_SEED:
        raise DomainError("seed must be an unsigned 64-bit integer")
    cfg.sim()  # container and noise invariants
    if cfg.n_trees < 1:
        raise DomainError("n_trees must be at least 1")
    if not cfg.ablation_rates or any(r <= 0 for r in cfg.ablation_rates):
        raise DomainError("ablation_rates must be positive")


def parse_config(text: str) -> RunConfig:
    """Read ``key = value`` lines; ``#`` starts a comment. Unset keys keep defaults."""
    values = {}
    key_lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError("expected 'key = value'", lineno)
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        try:
            values[key] = _parse_value(key, value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None
        key_lines[key] = lineno
    cfg = RunConfig(**values)
    try:
        _check(cfg)
    except DomainError as exc:
        # blame the first key that is invalid on its own, else the last one set
        blame = max(key_lines.values(), default=None)
        for key, lineno in key_lines.items():
            try:
                _check(replace(RunConfig(), **{key: values[key]}))
            except DomainError:
                blame = lineno
                break
        raise ConfigError(str(exc), blame) from None
    return cfg


# -- file helpers ------------------------------------------------------------


def _write(path, text):
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc
    log.info("wrote %s", path)


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc


def _load_dataset(cfg):
    path = cfg.path(cfg.dataset_path)
    try:
        return loads_dataset(_read(path))
    except DomainError as exc:
        raise IOFailure(f"{path}: {exc}") from exc


def _models_dir(cfg, split):
    return os.path.join(cfg.path(cfg.models_dir), split)


def _save_pipeline(cfg, split, pipe):
    d = _models_dir(cfg, split)
    try:
        os.makedirs(d, exist_ok=True)
        for key, fname in MODEL_FILES.items():
            save_model(pipe.models[key], os.path.join(d, fname))
    except OSError as exc:
        raise IOFailure(f"cannot write models to {d}: {exc}") from exc


def _load_pipeline(cfg, split):
    d = _models_dir(cfg, split)
    try:
        models = {k: load_model(os.path.join(d, f)) for k, f in MODEL_FILES.items()}
    except (OSError, DomainError, ValueError, IndexError, KeyError) as exc:
        raise IOFailure(f"cannot load models from {d}: {exc}") from exc
    return PropertyPipeline.from_models(oracle_height=cfg.oracle_height, **models)


def _splits(cfg, records):
    out = {"seen": split_random(records, 0.2, cfg.seed)}
    if cfg.holdout:
        out["holdout"] = split_holdout(records, HOLDOUT_NAMES, generate_catalog(cfg.seed), 6, cfg.seed, cfg.sim())
    return out


# -- subcommands -------------------------------------------------------------


def cmd_catalog(cfg, args):
    rows = [
        f"{p.name},{p.diameter_dp!r},{p.sphericity_psi!r},{p.material_density!r},{p.packing_fraction!r},{int(p.shape)}"
        for p in generate_catalog(cfg.seed)
    ]
    sys.stdout.write("\n".join(rows) + "\n")
    header = "name,diameter_mm,sphericity,density,packing_fraction,shape_class"
    _write(cfg.path("catalog.csv"), "\n".join([header, *rows]) + "\n")
    return EXIT_OK


def cmd_simulate(cfg, args):
    start = time.perf_counter()
    records = generate_dataset(generate_catalog(cfg.seed), seed=cfg.seed, cfg=cfg.sim())
    _write(cfg.path(cfg.dataset_path), dumps_dataset(records))
    print(f"{len(records)} records in {time.perf_counter() - start:.1f} s")
    return EXIT_OK


def cmd_train(cfg, args):
    records = _load_dataset(cfg)
    for split, (train, _) in _splits(cfg, records).items():
        start = time.perf_counter()
        pipe = PropertyPipeline(seed=cfg.seed, n_trees=cfg.n_trees, oracle_height=cfg.oracle_height).fit(train)
        _save_pipeline(cfg, split, pipe)
        print(f"{split}: trained on {len(train)} records in {time.perf_counter() - start:.1f} s")
    return EXIT_OK


def cmd_eval(cfg, args):
    records = _load_dataset(cfg)
    sections = {}
    for split, (train, test) in _splits(cfg, records).items():
        start = time.perf_counter()
        pipe = _load_pipeline(cfg, split)
        report = evaluate(pipe.predict(test), truths(test), [r.name for r in test])
        report.notes["n_train"] = len(train)
        if split == "holdout":
            report.notes["holdout_height_range_mm"] = "{} {}".format(*HOLDOUT_VOLUME_RANGE)
        sections[split] = report
        print(f"{split}: height MAE {report.mae['height']:.3f} mm, size MAE {report.mae['size']:.3f} mm, "
              f"shape accuracy {report.shape_accuracy:.3f} ({time.perf_counter() - start:.1f} s)")
    _write(os.path.join(cfg.path(cfg.reports_dir), "eval.txt"), dumps_report({"seed": {"value": cfg.seed}, **sections}))
    return EXIT_OK


def cmd_ablate_rate(cfg, args):
    records = _load_dataset(cfg)
    table = ablation_rate(records, cfg.ablation_rates, cfg.seed, cfg.sim(), n_trees=cfg.n_trees)
    sections = {f"rate_{rate:g}hz": row for rate, row in table.items()}
    for name, row in sections.items():
        print(f"{name}: size MAE {row['size_mae']:.3f} mm, shape accuracy {row['shape_accuracy']:.3f}")
    _write(os.path.join(cfg.path(cfg.reports_dir), "ablate-rate.txt"), dumps_report(sections))
    return EXIT_OK


def cmd_humidity(cfg, args):
    seen, interp = humidity_experiment(seed=cfg.seed, cfg=cfg.sim())
    print(f"seen split: MAE {seen.mae['humidity']:.4f} ml; interpolation split: MAE {interp.mae['humidity']:.4f} ml")
    _write(os.path.join(cfg.path(cfg.reports_dir), "humidity.txt"),
           dumps_report({"seen": seen, "interpolation": interp}))
    return EXIT_OK


def dumps_trace(kind, sample_rate, rows):
    lines = [f"# trace-v1 {kind} {sample_rate!r}"]
    lines += [",".join(repr(float(v)) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def cmd_trace(cfg, args):
    catalog = generate_catalog(cfg.seed)
    try:
        particle = find_particle(catalog, args.particle)
    except KeyError:
        raise DomainError(f"unknown particle {args.particle!r}") from None
    index = catalog.index(particle)
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(0x7ACE, index))
    _, _, slow, fast = procedure_seeds(int(ss.generate_state(1, dtype=np.uint64)[0]))
    fill = ContentFill(particle, args.height, cfg.container())
    if args.procedure == "fast-rotation":
        data = vibration_markerfield(fill, seed=fast, noise_sigma=cfg.marker_noise)
        text = dumps_trace("fast-rotation", data.sample_rate, data.magnitudes())
    else:
        kw = {} if args.procedure == "slow-rotation" else dict(theta_start=FULL_RANGE[0], theta_end=FULL_RANGE[1])
        data = stick_slip_trace(fill, seed=slow, noise_sigma=cfg.trace_noise, **kw)
        text = dumps_trace(args.procedure, data.sample_rate, np.column_stack([data.theta, data.values]))
    name = f"{particle.name}-{args.height:g}-{args.procedure}.txt"
    _write(os.path.join(cfg.path(cfg.traces_dir), name), text)
    return EXIT_OK


COMMANDS = {
    "catalog": (cmd_catalog, EXIT_SIM),
    "simulate": (cmd_simulate, EXIT_SIM),
    "train": (cmd_train, EXIT_TRAIN),
    "eval": (cmd_eval, EXIT_TRAIN),
    "ablate-rate": (cmd_ablate_rate, EXIT_TRAIN),
    "humidity": (cmd_humidity, EXIT_TRAIN),
    "trace": (cmd_trace, EXIT_SIM),
}


def dispatch(command, args, config: RunConfig) -> int:
    """Run one subcommand and map failures onto exit codes."""
    if command not in COMMANDS:
        print(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}", file=sys.stderr)
        return EXIT_USAGE
    func, error_code = COMMANDS[command]
    try:
        return func(config, args)
    except IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, ValueError, FloatingPointError) as exc:
        print(f"{command} failed: {exc}", file=sys.stderr)
        return error_code


def build_parser():
    parser = argparse.ArgumentParser(prog="granuprobe", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--seed", type=int, help="master seed, overrides the config")
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    sub.add_parser("catalog", help="list the particle catalog")
    sub.add_parser("simulate", help="generate the dataset")
    sub.add_parser("train", help="fit the seen-split and holdout models")
    sub.add_parser("eval", help="score the saved models")
    sub.add_parser("ablate-rate", help="compare 800 Hz and 30 Hz vibration features")
    sub.add_parser("humidity", help="sugar humidity experiment")
    tr = sub.add_parser("trace", help="dump one raw signal for plotting")
    tr.add_argument("particle")
    tr.add_argument("height", type=float, help="fill height in mm")
    tr.add_argument("procedure", choices=PROCEDURES)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(_read(args.config)) if args.config else RunConfig()
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
            _check(cfg)
    except IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = replace(cfg, out_dir=args.out)
    return dispatch(args.command, args, cfg)


if __name__ == "__main__":
    sys.exit(main())
