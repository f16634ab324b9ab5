"""Train/test splits, error metrics and the key=value report format."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..domain import ShapeClass
from ..errors import DomainError
from .catalog import find_particle
from .dataset import SimConfig, cell_seed, simulate_record

HOLDOUT_VOLUME_RANGE = (25.0, 75.0)  # mm of fill height
HOLDOUT_SEED_TAG = 0x401D


def round_half_up(x):
    return int(math.floor(x + 0.5))


def split_random(records, test_fraction=0.2, seed=0):
    """Shuffled split with ``round_half_up(test_fraction * n)`` test records."""
    if not 0 < test_fraction < 1:
        raise DomainError("test fraction must lie in (0, 1)")
    if len(records) == 0:
        raise DomainError("no records to split")
    n_test = round_half_up(test_fraction * len(records))
    order = np.random.default_rng(seed).permutation(len(records))
    test = sorted(order[:n_test])
    train = sorted(order[n_test:])
    return [records[i] for i in train], [records[i] for i in test]


def split_holdout(records, held_names, catalog, extra_per_particle=6, seed=0, cfg: SimConfig = SimConfig()):
    """Hold whole particle types out of training.

    The test set gets every existing record of the held particles plus
    ``extra_per_particle`` new fills of each at heights drawn uniformly
    from ``HOLDOUT_VOLUME_RANGE``.
    """
    held = list(held_names)
    names = {p.name for p in catalog}
    for name in held:
        if name not in names:
            raise DomainError(f"unknown particle {name!r}")
    held_set = set(held)
    train = [r for r in records if r.name not in held_set]
    test = [r for r in records if r.name in held_set]
    for k, name in enumerate(held):
        particle = find_particle(catalog, name)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(HOLDOUT_SEED_TAG, k)))
        heights = rng.uniform(*HOLDOUT_VOLUME_RANGE, size=extra_per_particle)
        for j, h in enumerate(heights):
            rec_seed = cell_seed(seed, HOLDOUT_SEED_TAG + 1 + k, j, 0)
            test.append(simulate_record(particle, float(h), rec_seed, cfg, repeat=j))
    return train, test


# -- metrics -----------------------------------------------------------------


def mae(pred, true):
    pred, true = _pair(pred, true)
    return float(np.mean(np.abs(pred - true)))


def mape(pred, true):
    """Mean absolute percentage error over targets that are not zero.

    Returns ``(mape, n_excluded)``; MAPE is NaN when every target is zero.
    """
    pred, true = _pair(pred, true)
    keep = true != 0
    if not keep.any():
        return float("nan"), int(len(true))
    return float(np.mean(np.abs(pred[keep] - true[keep]) / np.abs(true[keep])) * 100.0), int((~keep).sum())


def confusion_matrix(pred, true, n_classes=len(ShapeClass)):
    """Rows are true classes, columns predicted classes."""
    pred, true = _pair(pred, true)
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (true.astype(int), pred.astype(int)), 1)
    return cm


def _pair(pred, true):
    pred = np.asarray(pred, dtype=float).ravel()
    true = np.asarray(true, dtype=float).ravel()
    if len(pred) != len(true):
        raise DomainError("predictions and truths differ in length")
    if len(pred) == 0:
        raise DomainError("nothing to evaluate")
    return pred, true


@dataclass
class EvalReport:
    mae: dict
    mape: dict
    mape_excluded: dict
    shape_accuracy: float | None = None
    confusion: np.ndarray | None = None
    per_particle: dict = field(default_factory=dict)
    n_test: int = 0
    runtime_s: float = 0.0
    notes: dict = field(default_factory=dict)


def evaluate(predictions: dict, truths: dict, names=None) -> EvalReport:
    """Metrics for matching prediction/truth columns.

    ``shape`` is scored as a classification (accuracy and confusion); every
    other key as a regression (MAE, MAPE). ``names`` adds a per-particle
    breakdown.
    """
    if set(predictions) != set(truths):
        raise DomainError("predictions and truths name different quantities")
    if not predictions:
        raise DomainError("nothing to evaluate")
    report = EvalReport({}, {}, {})
    for key in sorted(predictions):
        if key == "shape":
            cm = confusion_matrix(predictions[key], truths[key])
            report.confusion = cm
            report.shape_accuracy = float(np.trace(cm) / cm.sum())
        else:
            report.mae[key] = mae(predictions[key], truths[key])
            report.mape[key], report.mape_excluded[key] = mape(predictions[key], truths[key])
    report.n_test = len(np.ravel(next(iter(truths.values()))))
    if names is not None:
        names = np.asarray(names)
        for name in sorted(set(names.tolist())):
            sel = names == name
            sub_p = {k: np.asarray(v)[sel] for k, v in predictions.items()}
            sub_t = {k: np.asarray(v)[sel] for k, v in truths.items()}
            report.per_particle[name] = evaluate(sub_p, sub_t)
    return report


# -- report file -------------------------------------------------------------


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_items(report: EvalReport, prefix=""):
    items = [(f"{prefix}n_test", report.n_test)]
    for key in sorted(report.mae):
        items.append((f"{prefix}{key}.mae", report.mae[key]))
        items.append((f"{prefix}{key}.mape", report.mape[key]))
        if report.mape_excluded[key]:
            items.append((f"{prefix}{key}.mape_excluded", report.mape_excluded[key]))
    if report.shape_accuracy is not None:
        items.append((f"{prefix}shape.accuracy", report.shape_accuracy))
        for i, row in enumerate(report.confusion):
            items.append((f"{prefix}shape.confusion.{i}", " ".join(str(int(c)) for c in row)))
    for key in sorted(report.notes):
        items.append((f"{prefix}note.{key}", report.notes[key]))
    for name, sub in report.per_particle.items():
        for key in sorted(sub.mae):
            items.append((f"{prefix}particle.{name}.{key}.mae", sub.mae[key]))
        if sub.shape_accuracy is not None:
            items.append((f"{prefix}particle.{name}.shape.accuracy", sub.shape_accuracy))
    return items


def dumps_report(sections) -> str:
    """``key = value`` lines; ``sections`` maps a prefix to an EvalReport or a plain dict.

    Runtimes are left out so reports from identical runs are byte-identical.
    """
    lines = []
    for prefix, body in sections.items():
        p = f"{prefix}." if prefix else ""
        if isinstance(body, EvalReport):
            items = report_items(body, p)
        else:
            items = [(f"{p}{k}", v) for k, v in body.items()]
        lines += [f"{k} = {_fmt(v)}" for k, v in items]
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if line.strip() and not line.startswith("#"):
            key, _, value = line.partition(" = ")
            out[key] = value
    return out
