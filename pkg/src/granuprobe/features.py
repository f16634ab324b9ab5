"""Feature extraction from the virtual tactile signals.

Two families feed the size and shape estimators:

* vibration features, the summed absolute first and second differences of
  the averaged contact-marker motion at lags 1..50;
* topple features, the lower and upper envelopes of the step-like torque
  trace from the slow rotation, each resampled at 100 tilt angles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import savgol_filter
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array

from .errors import DomainError
from .granusim import TRACE_NOISE, MarkerField, SignalTrace

N_LAGS = 50
N_VIB = 2 * N_LAGS
N_ENVELOPE = 100
N_TOPPLE = 2 * N_ENVELOPE
N_FEATURES = N_VIB + N_TOPPLE + 2
MIN_SIGNAL_LENGTH = 2 * N_LAGS + 1
DEFAULT_JUMP_THRESHOLD = 5 * TRACE_NOISE

FEATURE_NAMES = tuple(f"F{i:03d}" for i in range(N_FEATURES))


@dataclass(frozen=True)
class VibrationSignal:
    values: np.ndarray
    sample_rate: float

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class FeatureVector:
    vib: np.ndarray
    topple: np.ndarray
    est_mass: float
    est_height: float

    def __post_init__(self):
        if len(self.vib) != N_VIB or len(self.topple) != N_TOPPLE:
            raise DomainError(
                f"expected {N_VIB} vibration and {N_TOPPLE} topple values, "
                f"got {len(self.vib)} and {len(self.topple)}"
            )

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.vib, self.topple, [self.est_mass, self.est_height]])

    @classmethod
    def from_array(cls, values) -> "FeatureVector":
        values = np.asarray(values, dtype=float)
        if values.shape != (N_FEATURES,):
            raise DomainError(f"feature vector must have {N_FEATURES} values, got {values.shape}")
        return cls(
            values[:N_VIB].copy(),
            values[N_VIB : N_VIB + N_TOPPLE].copy(),
            float(values[-2]),
            float(values[-1]),
        )


# -- vibration ---------------------------------------------------------------


def principal_vibration_signal(field: MarkerField, k=30) -> VibrationSignal:
    """Average displacement magnitude of the ``k`` markers that moved the most.

    Motion is ranked by path length, the summed frame-to-frame displacement.
    """
    if field.n_markers < k:
        raise DomainError(f"field has {field.n_markers} markers, need at least {k}")
    steps = np.diff(field.frames, axis=0)
    path = np.hypot(steps[..., 0], steps[..., 1]).sum(axis=0)
    top = np.argsort(-path, kind="stable")[:k]
    return VibrationSignal(field.magnitudes()[:, top].mean(axis=1), field.sample_rate)


def vib_features(signal, strict=True) -> np.ndarray:
    """``[v1_1..v1_50, v2_1..v2_50]`` for a 1-D signal ``s``.

    v1_a sums |s(t) - s(t-a)|; v2_a sums |2 s(t) - s(t-a) - s(t+a)|. With
    ``strict=False`` short signals are accepted and lags that do not fit
    contribute 0.
    """
    s = np.asarray(getattr(signal, "values", signal), dtype=float)
    if s.ndim != 1:
        raise DomainError("vibration signal must be one-dimensional")
    T = len(s)
    if strict and T < MIN_SIGNAL_LENGTH:
        raise DomainError(f"signal needs at least {MIN_SIGNAL_LENGTH} samples, got {T}")
    v1 = np.zeros(N_LAGS)
    v2 = np.zeros(N_LAGS)
    for a in range(1, N_LAGS + 1):
        if a < T:
            v1[a - 1] = np.abs(s[a:] - s[:-a]).sum()
        if 2 * a < T:
            v2[a - 1] = np.abs(2 * s[a:T - a] - s[: T - 2 * a] - s[2 * a :]).sum()
    return np.concatenate([v1, v2])


def downsample(data, target_rate):
    """Keep every ``floor(source/target)``-th frame, with no anti-alias filter."""
    source = data.sample_rate
    if not 0 < target_rate <= source:
        raise DomainError(f"target rate {target_rate} Hz must lie in (0, {source}] Hz")
    step = int(source // target_rate)
    rate = source / step
    if isinstance(data, MarkerField):
        return MarkerField(data.frames[::step], rate)
    if isinstance(data, VibrationSignal):
        return VibrationSignal(data.values[::step], rate)
    if isinstance(data, SignalTrace):
        return SignalTrace(data.theta[::step], data.values[::step], rate, data.kind)
    raise TypeError(f"cannot downsample {type(data).__name__}")


# -- topple ------------------------------------------------------------------


def detect_collapses(values, jump_threshold=DEFAULT_JUMP_THRESHOLD, window=8):
    """Indices ``i`` such that an avalanche happened between samples i and i+1.

    Each gap is scored by fitting lines to up to ``window`` samples on
    either side and comparing their values at the gap. Curvature biases of
    the two fits cancel, so smooth stick phases score near zero. Drops
    larger than ``jump_threshold`` that are the strongest within ``window``
    gaps are kept.
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n < 6:
        return np.array([], dtype=int)
    x = np.arange(n, dtype=float)
    cv = np.concatenate([[0.0], np.cumsum(v)])
    cxv = np.concatenate([[0.0], np.cumsum(x * v)])

    def line_at(a, b, at):
        # least-squares line through samples a..b inclusive, evaluated at ``at``
        m = b - a + 1
        mean_x = (a + b) / 2.0
        mean_v = (cv[b + 1] - cv[a]) / m
        sxv = cxv[b + 1] - cxv[a] - m * mean_x * mean_v
        sxx = m * (m * m - 1) / 12.0
        return mean_v + sxv / sxx * (at - mean_x)

    gaps = np.arange(2, n - 3)
    left = line_at(np.maximum(gaps - window + 1, 0), gaps, gaps + 0.5)
    right = line_at(gaps + 1, np.minimum(gaps + window, n - 1), gaps + 0.5)
    score = np.zeros(n - 1)
    score[gaps] = right - left

    keep = []
    for i in np.flatnonzero(score < -jump_threshold):
        a, b = max(i - window, 0), min(i + window + 1, n - 1)
        if score[i] == score[a:b].min() and (not keep or i - keep[-1] > window):
            keep.append(i)
    return np.array(keep, dtype=int)


def _line_value(theta, values, at):
    if len(theta) == 1:
        return float(values[0])
    slope, intercept = np.polyfit(theta - at, values, 1)
    return float(intercept)


def _smooth(theta, values, window=51):
    if len(values) >= window:
        return savgol_filter(values, window, 2, mode="interp")
    if len(values) >= 5:
        return np.polyval(np.polyfit(theta - theta[0], values, 2), theta - theta[0])
    return np.asarray(values, dtype=float)


def envelopes(trace: SignalTrace, n=N_ENVELOPE, jump_threshold=DEFAULT_JUMP_THRESHOLD, fit_span=20):
    """Lower and upper envelopes of a step-like trace, sampled at ``n`` angles.

    The upper envelope joins the values just before each avalanche, the
    lower one the values just after it. Before the first avalanche there is
    a single stacking state, so both envelopes follow the (smoothed) trace;
    after the last one the lower envelope does. Knots are read off a line
    fitted to up to ``fit_span`` samples of their stick phase, which keeps
    sensor noise out of them. Without avalanches both envelopes are the
    smoothed trace.
    """
    if len(trace) == 0:
        raise DomainError("cannot extract envelopes from an empty trace")
    if n < 2:
        raise DomainError("need at least two envelope samples")
    theta, v = trace.theta, trace.values
    grid = np.linspace(theta[0], theta[-1], n)
    if len(trace) == 1:
        flat = np.full(n, v[0])
        return flat, flat.copy()

    jumps = detect_collapses(v, jump_threshold)
    if len(jumps) == 0:
        resampled = np.interp(grid, theta, _smooth(theta, v))
        return resampled, resampled.copy()

    first_seg = slice(0, jumps[0] + 1)
    head = _smooth(theta[first_seg], v[first_seg])
    upper_t, upper_v = list(theta[first_seg]), list(head)
    lower_t, lower_v = list(theta[first_seg]), list(head)

    bounds = np.concatenate([jumps, [len(v) - 1]])
    for k in range(len(jumps)):
        first, last = bounds[k] + 1, bounds[k + 1]
        if k == len(jumps) - 1:
            tail = slice(first, last + 1)
            lower_t.extend(theta[tail])
            lower_v.extend(_smooth(theta[tail], v[tail]))
        else:
            span = slice(first, min(first + fit_span, last + 1))
            lower_t.append(theta[first])
            lower_v.append(_line_value(theta[span], v[span], theta[first]))
        span = slice(max(last + 1 - fit_span, first), last + 1)
        upper_t.append(theta[last])
        upper_v.append(_line_value(theta[span], v[span], theta[last]))

    return np.interp(grid, lower_t, lower_v), np.interp(grid, upper_t, upper_v)


def topple_features(trace: SignalTrace, n=N_ENVELOPE, jump_threshold=DEFAULT_JUMP_THRESHOLD):
    lower, upper = envelopes(trace, n, jump_threshold)
    return np.concatenate([lower, upper])


def assemble_features(vib, topple, est_mass, est_height) -> FeatureVector:
    vib = np.asarray(vib, dtype=float)
    topple = np.asarray(topple, dtype=float)
    fv = FeatureVector(vib, topple, float(est_mass), float(est_height))
    if not np.all(np.isfinite(fv.to_array())):
        raise DomainError("feature vector contains non-finite values")
    return fv


# -- estimator-API wrappers --------------------------------------------------


class VibrationFeatures(TransformerMixin, BaseEstimator):
    """Map principal vibration signals, one per row, to the 100 vibration features."""

    def __init__(self, strict=True):
        self.strict = strict

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        X = check_array(X)
        return np.array([vib_features(row, strict=self.strict) for row in X])


class ToppleFeatures(TransformerMixin, BaseEstimator):
    """Map torque traces sampled on a uniform angle grid to the 200 envelope features.

    Each row of ``X`` holds trace values at ``n_samples`` equally spaced
    angles between ``theta_start`` and ``theta_end``.
    """

    def __init__(self, theta_start=-60.0, theta_end=60.0, n_points=N_ENVELOPE, jump_threshold=None):
        self.theta_start = theta_start
        self.theta_end = theta_end
        self.n_points = n_points
        self.jump_threshold = jump_threshold

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        X = check_array(X)
        theta = np.linspace(self.theta_start, self.theta_end, X.shape[1])
        thr = DEFAULT_JUMP_THRESHOLD if self.jump_threshold is None else self.jump_threshold
        return np.array(
            [topple_features(SignalTrace(theta, row, 1.0), self.n_points, thr) for row in X]
        )


__all__ = [
    "FEATURE_NAMES",
    "FeatureVector",
    "N_FEATURES",
    "ToppleFeatures",
    "VibrationFeatures",
    "VibrationSignal",
    "assemble_features",
    "detect_collapses",
    "downsample",
    "envelopes",
    "principal_vibration_signal",
    "topple_features",
    "vib_features",
]
