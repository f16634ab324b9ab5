"""Property estimates built on the trained models.

Mass comes straight from the lift force. Height, size and humidity come
from MLP regressors, and shape from the forest.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..domain import ContainerSpec, ShapeClass, content_volume_ml
from ..errors import DomainError, NegativeMassError
from ..features import N_FEATURES, N_TOPPLE, N_VIB, FeatureVector
from .forest import GiniForestClassifier, forest_predict
from .mlp import AdamMLPRegressor, mlp_forward

log = logging.getLogger(__name__)

HEIGHT_INPUTS = 7
MIN_OUTPUT = 1e-3  # clamp floor for strictly positive outputs


@dataclass(frozen=True)
class PropertyEstimate:
    mass_g: float
    height_mm: float
    size_mm: float
    shape: ShapeClass
    container: ContainerSpec = ContainerSpec()

    @property
    def volume_ml(self) -> float:
        return content_volume_ml(self.height_mm, self.container)


def estimate_mass(delta_fz, container_mass_mc, gravity_g) -> float:
    """Content mass (g) from the vertical force change after lifting."""
    if not gravity_g > 0:
        raise DomainError("gravity must be positive")
    mass = delta_fz / gravity_g * 1000.0 - container_mass_mc
    if mass < 0:
        raise NegativeMassError(
            f"force change {delta_fz} N is less than the container weight alone"
        )
    return mass


def _as_model_input(model, n_inputs):
    if not isinstance(model, AdamMLPRegressor) or not hasattr(model, "coefs_"):
        raise DomainError("model has not been trained")
    if model.n_features_in_ != n_inputs:
        raise DomainError(f"model expects {model.n_features_in_} inputs, not {n_inputs}")


def _clamp(value, lo, hi, what):
    if value < lo or value > hi:
        clamped = min(max(value, lo), hi)
        log.warning("%s estimate %.4g clamped to %.4g", what, value, clamped)
        return clamped
    return value


def estimate_height(model: AdamMLPRegressor, torques, est_mass, container: ContainerSpec | None = None):
    """Fill height (mm) from the six tilt-hold torques and the estimated mass."""
    container = ContainerSpec() if container is None else container
    _as_model_input(model, HEIGHT_INPUTS)
    torques = np.asarray(torques, dtype=float)
    if torques.shape != (6,):
        raise DomainError("need exactly six tilt-hold torques")
    raw = float(mlp_forward(model, np.append(torques, est_mass)))
    return _clamp(raw, MIN_OUTPUT, container.inner_height - MIN_OUTPUT, "height")


def size_shape_inputs(X):
    """Model inputs for the size and shape stages: raw features with the
    vibration sums on a log1p scale.

    The sums grow multiplicatively with impact energy and span about two
    decades across the catalog; on the log scale z-scoring no longer lets
    the coarsest particles dominate the size regressor.
    """
    X = np.array(X, dtype=float)
    X[..., :N_VIB] = np.log1p(np.maximum(X[..., :N_VIB], 0.0))
    return X


def estimate_size_shape(size_model: AdamMLPRegressor, shape_model: GiniForestClassifier, fv):
    """Particle diameter (mm) and shape class from a full feature vector."""
    x = fv.to_array() if isinstance(fv, FeatureVector) else np.asarray(fv, dtype=float)
    if x.shape != (N_FEATURES,):
        raise DomainError(f"feature vector must have {N_FEATURES} values")
    _as_model_input(size_model, N_FEATURES)
    x = size_shape_inputs(x)
    size = _clamp(float(mlp_forward(size_model, x)), MIN_OUTPUT, np.inf, "size")
    return size, forest_predict(shape_model, x)


def estimate_humidity(model: AdamMLPRegressor, topple) -> float:
    """Added water (ml) from the 200 envelope features of a full-turn sweep."""
    topple = np.asarray(topple, dtype=float)
    if topple.shape != (N_TOPPLE,):
        raise DomainError(f"need {N_TOPPLE} topple features")
    _as_model_input(model, N_TOPPLE)
    return max(float(mlp_forward(model, topple)), 0.0)
