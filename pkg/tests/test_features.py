import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from granuprobe.domain import ContentFill, ParticleSpec
from granuprobe.errors import DomainError
from granuprobe.features import (
    DEFAULT_JUMP_THRESHOLD,
    N_FEATURES,
    FeatureVector,
    ToppleFeatures,
    VibrationFeatures,
    VibrationSignal,
    assemble_features,
    detect_collapses,
    downsample,
    envelopes,
    principal_vibration_signal,
    topple_features,
    vib_features,
)
from granuprobe.granusim import MarkerField, SignalTrace, TRACE_NOISE, aor_model, stick_slip_trace, surface_angles

from .oracles import dyadic_signal, vib_brute, vib_convolution

PARTICLES = [
    ParticleSpec("sugar", 0.5, 0.9, 0.0016),
    ParticleSpec("rosemary", 2.0, 0.55, 0.0005),
    ParticleSpec("barley", 3.6, 0.85, 0.0013),
    ParticleSpec("chickpea", 8.5, 0.95, 0.0012),
    ParticleSpec("steel", 2.5, 1.0, 0.008),
]

# -- principal vibration signal ---------------------------------------------------


def test_principal_signal_picks_the_moving_markers():
    rng = np.random.default_rng(0)
    x = np.abs(rng.normal(size=400))
    frames = np.zeros((400, 70, 2))
    idx = rng.choice(70, 30, replace=False)
    frames[:, idx, 0] = x[:, None]
    s = principal_vibration_signal(MarkerField(frames, 800.0))
    np.testing.assert_allclose(s.values, x, rtol=1e-15)


def test_principal_signal_of_still_field_is_zero():
    s = principal_vibration_signal(MarkerField(np.zeros((200, 70, 2)), 800.0))
    assert not s.values.any()


def test_principal_signal_matches_brute_force():
    rng = np.random.default_rng(1)
    frames = rng.normal(size=(150, 70, 2))
    path = [
        sum(np.hypot(*(frames[t + 1, m] - frames[t, m])) for t in range(149)) for m in range(70)
    ]
    top = sorted(range(70), key=lambda m: -path[m])[:30]
    expected = np.array([np.mean([np.hypot(*frames[t, m]) for m in top]) for t in range(150)])
    got = principal_vibration_signal(MarkerField(frames, 800.0)).values
    np.testing.assert_allclose(got, expected, rtol=1e-13)


def test_principal_signal_needs_enough_markers():
    with pytest.raises(DomainError):
        principal_vibration_signal(MarkerField(np.zeros((10, 20, 2)), 800.0))


# -- v1 / v2 --------------------------------------------------------------------------


def test_vib_hand_example():
    f = vib_features([0.0, 1.0, 0.0, 1.0], strict=False)
    assert f[0] == 3.0
    assert f[50] == 4.0
    # lags that do not fit are zero
    assert f[3] == 0.0 and f[52] == 0.0


def test_zero_signal_has_zero_features():
    assert not vib_features(np.zeros(3200)).any()


def test_short_signal_rejected_when_strict():
    with pytest.raises(DomainError):
        vib_features(np.zeros(100))
    assert vib_features(np.zeros(101)).shape == (100,)


def test_matches_brute_force_sums():
    rng = np.random.default_rng(2)
    for n in (101, 157, 400):
        s = dyadic_signal(rng, n)
        np.testing.assert_array_equal(vib_features(s), vib_brute(s))


def test_matches_convolution_oracle_on_long_signals():
    rng = np.random.default_rng(3)
    for _ in range(10):
        s = dyadic_signal(rng, 3200)
        np.testing.assert_array_equal(vib_features(s), vib_convolution(s))


def test_short_signal_non_strict_matches_brute_force():
    rng = np.random.default_rng(4)
    s = dyadic_signal(rng, 60)
    np.testing.assert_array_equal(vib_features(s, strict=False), vib_convolution(s))


def test_accepts_vibration_signal():
    s = VibrationSignal(np.arange(200.0), 800.0)
    np.testing.assert_array_equal(vib_features(s), vib_features(np.arange(200.0)))


dyadic = arrays(np.int64, st.integers(101, 300), elements=st.integers(-2000, 2000)).map(lambda a: a / 1024.0)


@given(dyadic, st.integers(-4096, 4096))
@settings(max_examples=40, deadline=None)
def test_shift_invariance(s, c):
    np.testing.assert_array_equal(vib_features(s + c / 8.0), vib_features(s))


@given(dyadic, st.sampled_from([-4.0, -1.0, -0.5, 0.25, 2.0, 8.0]))
@settings(max_examples=40, deadline=None)
def test_scale_equivariance_exact(s, lam):
    np.testing.assert_array_equal(vib_features(lam * s), abs(lam) * vib_features(s))


@given(dyadic, st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-3))
@settings(max_examples=40, deadline=None)
def test_scale_equivariance_general(s, lam):
    np.testing.assert_allclose(vib_features(lam * s), abs(lam) * vib_features(s), rtol=1e-12, atol=1e-9)


@given(dyadic)
@settings(max_examples=40, deadline=None)
def test_time_reversal_invariance(s):
    np.testing.assert_array_equal(vib_features(s[::-1]), vib_features(s))


# -- downsampling ---------------------------------------------------------------------


def test_downsample_800_to_30():
    s = VibrationSignal(np.arange(3200.0), 800.0)
    d = downsample(s, 30.0)
    assert d.values[1] - d.values[0] == 26
    assert len(d.values) == 124
    assert d.sample_rate == pytest.approx(800 / 26)


def test_downsample_identity_and_constant():
    s = VibrationSignal(np.full(500, 3.0), 800.0)
    np.testing.assert_array_equal(downsample(s, 800.0).values, s.values)
    assert np.all(downsample(s, 30.0).values == 3.0)


def test_downsample_field_and_trace():
    f = MarkerField(np.random.default_rng(0).normal(size=(3200, 70, 2)), 800.0)
    d = downsample(f, 30.0)
    np.testing.assert_array_equal(d.frames, f.frames[::26])
    tr = SignalTrace(np.arange(100.0), np.arange(100.0), 100.0)
    assert len(downsample(tr, 50.0)) == 50


def test_downsample_rejects_upsampling():
    with pytest.raises(DomainError):
        downsample(VibrationSignal(np.zeros(10), 30.0), 800.0)


# -- envelopes ---------------------------------------------------------------------------


def sawtooth(start=-60.0, end=60.0, step=0.05, period=10.0, slope=0.05, drop=0.4):
    theta = np.arange(start, end + step / 2, step)
    k = np.floor((theta - start) / period)
    return theta, slope * theta - drop * k


def test_collapse_free_trace_envelopes_equal_trace():
    theta = np.linspace(-60, 60, 2401)
    values = 0.01 * theta + 2.0
    lower, upper = envelopes(SignalTrace(theta, values, 100.0))
    np.testing.assert_allclose(lower, upper)
    np.testing.assert_allclose(lower, 0.01 * np.linspace(-60, 60, 100) + 2.0, atol=1e-10)


def test_sawtooth_envelopes_pass_through_extrema():
    theta, values = sawtooth()
    jumps = detect_collapses(values)
    assert len(jumps) == 11
    lower, upper = envelopes(SignalTrace(theta, values, 100.0))
    grid = np.linspace(-60, 60, 100)
    # interior knots of the upper envelope are the pre-drop values
    pre_t, pre_v = theta[jumps], values[jumps]
    post_t, post_v = theta[jumps + 1], values[jumps + 1]
    inside = (grid > pre_t[0] + 0.1) & (grid < pre_t[-1] - 0.1)
    np.testing.assert_allclose(upper[inside], np.interp(grid[inside], pre_t, pre_v), atol=1e-9)
    inside = (grid > post_t[0] + 0.1) & (grid < post_t[-1] - 0.1)
    np.testing.assert_allclose(lower[inside], np.interp(grid[inside], post_t, post_v), atol=1e-9)


def test_sandwich_on_sawtooth():
    theta, values = sawtooth()
    lower, upper = envelopes(SignalTrace(theta, values, 100.0))
    assert np.all(lower <= upper + 1e-12)


def test_empty_trace_rejected():
    with pytest.raises(DomainError):
        envelopes(SignalTrace(np.array([]), np.array([]), 100.0))


def test_collapse_detection_matches_simulator():
    for p in PARTICLES:
        for h in (30.0, 50.0, 70.0):
            f = ContentFill(p, h)
            tr = stick_slip_trace(f, seed=7)
            _, counts = surface_angles(tr.theta, aor_model(p))
            expected = np.flatnonzero(np.diff(counts) > 0)
            np.testing.assert_array_equal(detect_collapses(tr.values), expected)


@pytest.mark.parametrize("p", PARTICLES, ids=lambda p: p.name)
def test_envelope_sandwich_on_simulated_traces(p):
    for h in (30.0, 50.0, 70.0):
        tr = stick_slip_trace(ContentFill(p, h), seed=11)
        lower, upper = envelopes(tr)
        grid = np.linspace(tr.theta[0], tr.theta[-1], 100)
        jumps = detect_collapses(tr.values)
        resampled = np.interp(grid, tr.theta, tr.values)
        # skip grid points whose interpolation straddles a collapse
        left = np.searchsorted(tr.theta, grid, side="right") - 1
        ok = ~np.isin(left, jumps)
        assert np.all(lower[ok] - resampled[ok] <= DEFAULT_JUMP_THRESHOLD)
        assert np.all(resampled[ok] - upper[ok] <= DEFAULT_JUMP_THRESHOLD)


@pytest.mark.parametrize("p", PARTICLES, ids=lambda p: p.name)
def test_envelopes_stable_across_seeds(p):
    for h in (30.0, 70.0):
        f = ContentFill(p, h)
        a = np.concatenate(envelopes(stick_slip_trace(f, seed=1)))
        b = np.concatenate(envelopes(stick_slip_trace(f, seed=2)))
        assert np.max(np.abs(a - b)) <= 3 * TRACE_NOISE


def test_topple_features_layout():
    tr = stick_slip_trace(ContentFill(PARTICLES[2], 50.0), seed=0)
    lower, upper = envelopes(tr)
    np.testing.assert_array_equal(topple_features(tr), np.concatenate([lower, upper]))


# -- assembly -----------------------------------------------------------------------------


def test_assemble_zeros():
    fv = assemble_features(np.zeros(100), np.zeros(200), 0.0, 0.0)
    assert fv.to_array().shape == (N_FEATURES,)
    assert not fv.to_array().any()


def test_assemble_order_round_trip():
    x = np.arange(N_FEATURES, dtype=float)
    fv = assemble_features(x[:100], x[100:300], x[300], x[301])
    np.testing.assert_array_equal(fv.to_array(), x)
    np.testing.assert_array_equal(FeatureVector.from_array(x).to_array(), x)


def test_assemble_rejects_bad_dimensions():
    with pytest.raises(DomainError):
        assemble_features(np.zeros(99), np.zeros(200), 1.0, 1.0)
    with pytest.raises(DomainError):
        assemble_features(np.zeros(100), np.zeros(200), np.nan, 1.0)


# -- transformer wrappers -------------------------------------------------------------------


def test_vibration_transformer():
    X = np.random.default_rng(0).normal(size=(3, 200))
    out = VibrationFeatures().fit_transform(X)
    np.testing.assert_array_equal(out[1], vib_features(X[1]))


def test_topple_transformer():
    theta, values = sawtooth()
    out = ToppleFeatures(theta_start=theta[0], theta_end=theta[-1]).fit_transform(values[None, :])
    np.testing.assert_allclose(out[0], topple_features(SignalTrace(theta, values, 100.0)), atol=1e-9)
