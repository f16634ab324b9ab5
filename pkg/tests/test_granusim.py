import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from granuprobe.domain import ContainerSpec, ContentFill, ParticleSpec
from granuprobe.errors import DomainError, SpillError
from granuprobe.features import detect_collapses
from granuprobe.granusim import (
    N_MARKERS,
    AorParams,
    MarkerField,
    SignalTrace,
    StickSlipState,
    advance_surface,
    aor_model,
    collision_window_frames,
    container_delta_fz,
    content_com,
    lift_delta_fz,
    stick_slip_trace,
    surface_angles,
    sweep_angles,
    tilt_hold_torques,
    vibration_markerfield,
    wrist_torque,
)

from .oracles import collapse_count_oracle

BARLEY = ParticleSpec("barley", 3.6, 0.85, 0.0013)


def fill(h=50.0, particle=BARLEY):
    return ContentFill(particle, h)


# -- angle of repose ----------------------------------------------------------


def test_aor_near_sphere_example():
    a = aor_model(ParticleSpec("p", 10.0, 1.0, 0.001))
    assert a.aor_upper == pytest.approx(20 + 8 * math.exp(-2), rel=1e-14)
    assert a.aor_upper == pytest.approx(21.08, abs=5e-3)
    assert a.aor_lower == pytest.approx(a.aor_upper - 2.0, rel=1e-14)
    assert a.sticky_fraction == 0.0


def test_aor_angular_example():
    a = aor_model(ParticleSpec("p", 2.0, 0.6, 0.001))
    assert a.aor_upper == pytest.approx(30 + 8 * math.exp(-0.4), rel=1e-14)
    assert a.aor_upper == pytest.approx(35.36, abs=5e-3)


def test_aor_humidity_saturates():
    a = aor_model(ParticleSpec("p", 0.5, 0.9, 0.0016, humidity_ml=0.5))
    b = aor_model(ParticleSpec("p", 0.5, 0.9, 0.0016, humidity_ml=2.0))
    assert a == b
    assert a.sticky_fraction == pytest.approx(0.8)


@given(st.floats(0.05, 20), st.floats(0.05, 1.0), st.floats(0.05, 1.0), st.floats(0, 1))
def test_aor_never_rises_with_sphericity(d, psi1, psi2, h):
    lo, hi = sorted([psi1, psi2])
    a_lo = aor_model(ParticleSpec("p", d, lo, 0.001, humidity_ml=h))
    a_hi = aor_model(ParticleSpec("p", d, hi, 0.001, humidity_ml=h))
    assert a_hi.aor_upper <= a_lo.aor_upper


@pytest.mark.parametrize("upper, lower, sticky", [(30, 30, 0), (30, 0, 0), (95, 20, 0), (30, 25, 1.0)])
def test_aor_params_invariants(upper, lower, sticky):
    with pytest.raises(DomainError):
        AorParams(upper, lower, sticky)


# -- stick-slip -----------------------------------------------------------------


def test_collapse_count_example():
    aor = AorParams(30.0, 25.0)
    beta, counts = surface_angles(np.array([0.0, 29.999, 30.0, 60.0]), aor)
    assert counts.tolist() == [0, 0, 1, 7]
    assert collapse_count_oracle(0, 60, 30, 25) == 7
    assert beta[2] == 25.0


@given(st.floats(15, 60), st.floats(0.5, 10), st.floats(1, 270))
@settings(max_examples=60)
def test_collapse_count_matches_stepping_oracle(upper, hyst, travel):
    upper, hyst, travel = round(upper, 2), round(hyst, 2), round(travel, 2)
    lower = upper - hyst
    if lower <= 0:
        return
    _, counts = surface_angles(np.array([0.0, travel]), AorParams(upper, lower))
    assert counts[-1] == collapse_count_oracle(0, travel, upper, lower, per_degree=100)


def test_below_threshold_sweep_has_no_collapse():
    aor = AorParams(30.0, 25.0)
    beta, counts = surface_angles(np.linspace(0, 29.0, 500), aor)
    assert counts.max() == 0
    np.testing.assert_allclose(beta, np.linspace(0, 29.0, 500))


@given(st.floats(15, 60), st.floats(0.5, 10), st.floats(-135, 0))
@settings(max_examples=40)
def test_hysteresis_bounds(upper, hyst, start):
    aor = AorParams(upper, max(upper - hyst, 0.1))
    theta = sweep_angles(start, start + 200, 5.0, 100.0)
    beta, counts = surface_angles(theta, aor)
    assert np.all(np.abs(beta) <= aor.aor_upper)
    after = np.flatnonzero(np.diff(counts) > 0) + 1
    # the readout right after a collapse sits within one sampling step of aor_lower
    assert np.all(beta[after] - aor.aor_lower <= 0.05 + 1e-9)
    # at the exact collapse instant the surface is at aor_lower
    first = aor.aor_upper
    b, c = surface_angles(np.array([0.0, first]), aor)
    assert c[-1] == 1 and b[-1] == pytest.approx(aor.aor_lower, abs=1e-12)


def test_advance_surface_both_directions():
    aor = AorParams(30.0, 25.0)
    s = advance_surface(StickSlipState(), -40.0, aor)
    assert s.collapse_count == 3
    assert s.surface_angle_beta == pytest.approx(-25.0)


def test_surface_angles_reject_bad_start():
    aor = AorParams(30.0, 25.0)
    with pytest.raises(DomainError):
        surface_angles(np.array([0.0, 1.0]), aor, beta_start=31.0)
    with pytest.raises(DomainError):
        surface_angles(np.array([0.0, 1.0]), aor, theta_start=5.0)


# -- statics ---------------------------------------------------------------------


def test_upright_torque_is_zero():
    assert content_com(0.0, 0.0, fill())[0] == pytest.approx(0.0, abs=1e-15)
    assert wrist_torque(0.0, 0.0, fill()) == pytest.approx(0.0, abs=1e-15)


def test_torque_doubles_content_term_with_mass():
    f1 = fill(50.0, ParticleSpec("a", 3.0, 0.9, 0.001))
    f2 = fill(50.0, ParticleSpec("a", 3.0, 0.9, 0.002))
    c = ContainerSpec()
    g = c.gravity_g
    box = g * c.container_mass_mc / 1000 * (-np.sin(np.radians(45)) * (c.inner_height / 2 - c.grasp_height) / 1000)
    t1 = wrist_torque(45, 0, f1) - box
    t2 = wrist_torque(45, 0, f2) - box
    assert t2 == pytest.approx(2 * t1, rel=1e-12)


def test_positive_tilt_gives_positive_torque():
    assert wrist_torque(30.0, 0.0, fill()) > 0
    assert wrist_torque(-30.0, 0.0, fill()) < 0


def test_corner_wedge_torque_is_flat_at_45_degrees():
    mass = 100.0
    vals = [
        wrist_torque(45.0, 0.0, ContentFill(ParticleSpec("p", 3, 0.9, mass / (0.6 * 3600 * h)), h))
        for h in (20.0, 25.0, 30.0)
    ]
    assert max(vals) - min(vals) < 1e-12


def test_content_offset_monotone_in_height():
    # grasp point sits above the pile, so a taller pile sits closer to it
    xs = [content_com(45.0, 0.0, fill(h))[0] for h in (30.0, 50.0, 70.0)]
    assert xs[0] > xs[1] > xs[2] > 0


def test_spill_detected():
    with pytest.raises(SpillError):
        content_com(80.0, -10.0, fill(120.0))
    # a closed bottle may be turned over on purpose
    content_com(80.0, -10.0, fill(120.0), allow_lid_contact=True)


def test_lift_force_example():
    p = ParticleSpec("p", 3.0, 0.9, 100.0 / (0.6 * 3600 * 50.0))
    f = ContentFill(p, 50.0)
    assert f.mass == pytest.approx(100.0, rel=1e-12)
    assert lift_delta_fz(f, noise_sigma=0.0) == pytest.approx(1.4715, rel=1e-12)
    assert container_delta_fz(ContainerSpec()) == pytest.approx(0.4905, rel=1e-12)


def test_lift_force_round_trip():
    f = fill()
    c = f.container
    mass = lift_delta_fz(f, noise_sigma=0.0) / c.gravity_g * 1000 - c.container_mass_mc
    assert mass == pytest.approx(f.mass, rel=1e-9)


def test_lift_force_noise_is_seeded():
    assert lift_delta_fz(fill(), seed=3) == lift_delta_fz(fill(), seed=3)
    assert lift_delta_fz(fill(), seed=3) != lift_delta_fz(fill(), seed=4)


def test_tilt_hold_definition():
    f = fill()
    t = tilt_hold_torques(f, noise_sigma=0.0)
    assert t.shape == (6,)
    assert t[3] == wrist_torque(45.0, 0.0, f)
    np.testing.assert_array_equal(t, tilt_hold_torques(f, noise_sigma=0.0, seed=99))


def test_tilt_hold_pre_shake_without_collapse():
    # an angle of repose above 60 degrees means the pile never slides
    aor = AorParams(70.0, 65.0)
    f = fill(30.0)
    t = tilt_hold_torques(f, noise_sigma=0.0, aor=aor)
    assert t[4] == wrist_torque(60.0, 60.0, f)
    assert t[4] != t[5]


def test_tilt_hold_rejects_spilling_fill():
    with pytest.raises(SpillError):
        tilt_hold_torques(fill(115.0), noise_sigma=0.0)


@pytest.mark.parametrize("theta", [30.0, 45.0, 60.0])
def test_post_shake_torque_monotone_in_height_at_fixed_mass(theta):
    # from 30 mm up the level surface spans both side walls at every hold angle;
    # lower fills at 45 degrees sit in a corner wedge whose torque does not move
    mass = 100.0
    vals = []
    for h in np.linspace(30, 80, 11):
        rho = mass / (0.6 * 3600 * h)
        vals.append(abs(wrist_torque(theta, 0.0, ContentFill(ParticleSpec("p", 3, 0.9, rho), h))))
    assert np.all(np.diff(vals) < 0)


# -- slow rotation -----------------------------------------------------------------


def test_trace_is_step_like_and_reproducible():
    tr = stick_slip_trace(fill(), seed=1)
    assert isinstance(tr, SignalTrace)
    assert np.all(np.diff(tr.theta) > 0)
    assert tr.theta[0] == -60.0 and tr.theta[-1] == pytest.approx(60.0)
    np.testing.assert_array_equal(tr.values, stick_slip_trace(fill(), seed=1).values)


def test_trace_collapses_match_surface_model():
    f = fill()
    tr = stick_slip_trace(f, noise_sigma=0.0)
    _, counts = surface_angles(tr.theta, aor_model(f.particle))
    assert len(detect_collapses(tr.values)) == counts[-1]


def test_trace_without_collapse_is_smooth():
    aor = AorParams(40.0, 35.0)
    tr = stick_slip_trace(fill(), theta_start=0.0, theta_end=35.0, noise_sigma=0.0, aor=aor)
    assert len(detect_collapses(tr.values)) == 0


def test_sticky_fraction_shrinks_every_step():
    f = fill()
    dry = AorParams(30.0, 25.0, 0.0)
    wet = AorParams(30.0, 25.0, 0.8)
    a = stick_slip_trace(f, noise_sigma=0.0, aor=dry)
    b = stick_slip_trace(f, noise_sigma=0.0, aor=wet)
    _, counts = surface_angles(a.theta, dry)
    idx = np.flatnonzero(np.diff(counts) > 0)
    assert len(idx) > 5
    assert np.all(np.abs(np.diff(b.values)[idx]) < np.abs(np.diff(a.values)[idx]))


def test_trace_rejects_bad_range():
    with pytest.raises(DomainError):
        stick_slip_trace(fill(), theta_start=10.0, theta_end=0.0)


# -- fast rotation --------------------------------------------------------------------


def test_marker_field_shape_and_determinism():
    m = vibration_markerfield(fill(), seed=5)
    assert isinstance(m, MarkerField)
    assert m.frames.shape == (collision_window_frames(), N_MARKERS, 2)
    assert m.frames.shape[0] == 3200
    np.testing.assert_array_equal(m.frames, vibration_markerfield(fill(), seed=5).frames)


def test_empty_noise_free_field_is_zero():
    m = vibration_markerfield(fill(), seed=0, noise_sigma=0.0, n_events=0)
    assert not m.frames.any()


def test_only_contact_markers_move_without_noise():
    m = vibration_markerfield(fill(), seed=0, noise_sigma=0.0)
    moving = np.flatnonzero(np.abs(m.frames).sum(axis=(0, 2)) > 0)
    assert len(moving) == 30


def test_larger_particles_vibrate_harder():
    def total_variation(d):
        p = ParticleSpec("p", d, 0.9, 0.0013)
        tv = []
        for s in range(10):
            mag = vibration_markerfield(ContentFill(p, 50.0), seed=s).magnitudes()
            tv.append(np.abs(np.diff(mag.mean(axis=1))).sum())
        return np.mean(tv)

    vals = [total_variation(d) for d in (1.0, 3.0, 6.0, 10.0)]
    assert np.all(np.diff(vals) > 0)


def test_marker_field_invariants():
    with pytest.raises(DomainError):
        MarkerField(np.zeros((10, 70)), 800.0)
    with pytest.raises(DomainError):
        MarkerField(np.zeros((10, 70, 2)), 0.0)
