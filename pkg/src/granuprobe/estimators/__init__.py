"""Learned and closed-form property estimators."""

from .forest import GiniForestClassifier, forest_predict, forest_train
from .mlp import AdamMLPRegressor, mlp_forward, mlp_train
from .persistence import dumps_forest, dumps_mlp, load_model, loads_forest, loads_mlp, save_model
from .properties import (
    PropertyEstimate,
    estimate_height,
    estimate_humidity,
    estimate_mass,
    estimate_size_shape,
    size_shape_inputs,
)

__all__ = [
    "AdamMLPRegressor",
    "GiniForestClassifier",
    "PropertyEstimate",
    "dumps_forest",
    "dumps_mlp",
    "estimate_height",
    "estimate_humidity",
    "estimate_mass",
    "estimate_size_shape",
    "forest_predict",
    "forest_train",
    "load_model",
    "loads_forest",
    "loads_mlp",
    "mlp_forward",
    "mlp_train",
    "size_shape_inputs",
    "save_model",
]
