"""Virtual container-particle system and its sensors.

Four exploratory procedures are simulated: lifting (wrist force), tilting
to fixed angles before and after shaking (wrist torque), a fast rotation
that makes particles hit the container base (tactile marker vibration), and
a slow rotation that makes the pile avalanche repeatedly (step-like torque).

Angles are degrees, counter-clockwise positive, measured from upright. The
pile's free surface is tracked by its inclination ``beta`` from the world
horizontal. Torque is about the grasp point, positive when the mass sits on
the +x side of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import ContainerSpec, ContentFill, ParticleSpec, g_to_kg, mm_to_m
from .errors import DomainError, SpillError
from .geometry import content_centroid, rotate

TILT_ANGLES = (30.0, 45.0, 60.0)

# Sensor and procedure constants
FORCE_NOISE = 0.01  # N
TORQUE_NOISE = 0.002  # N m, wrist F/T
TRACE_NOISE = 0.002  # sensor units, fingertip torque
MARKER_NOISE = 0.001  # mm
TORQUE_SCALE = 1000.0  # sensor units per N m

SLOW_RATE = 5.0  # deg/s
SLOW_READOUT = 100.0  # Hz
SLOW_RANGE = (-60.0, 60.0)
FULL_RANGE = (-135.0, 135.0)

FAST_RATE = 15.0  # deg/s
COLLISION_WINDOW = (-60.0, 0.0)
MARKER_RATE = 800.0  # Hz
N_MARKERS = 70
N_CONTACT = 30
MARKER_PITCH = 1.7  # mm
GEL_FREQ = 150.0  # Hz
GEL_DECAY = 0.025  # s
EVENT_CAP = 500
# marker displacement (mm) per unit of particle momentum (g m/s)
IMPACT_GAIN = 0.2


@dataclass(frozen=True)
class AorParams:
    aor_upper: float
    aor_lower: float
    sticky_fraction: float = 0.0

    def __post_init__(self):
        if not 0 < self.aor_lower < self.aor_upper < 90:
            raise DomainError(
                f"need 0 < aor_lower < aor_upper < 90, got {self.aor_lower}, {self.aor_upper}"
            )
        if not 0 <= self.sticky_fraction < 1:
            raise DomainError("sticky fraction must lie in [0, 1)")

    @property
    def hysteresis(self) -> float:
        return self.aor_upper - self.aor_lower


@dataclass(frozen=True)
class StickSlipState:
    surface_angle_beta: float = 0.0
    collapse_count: int = 0


@dataclass(frozen=True)
class WristReading:
    tilt_angle_theta: float
    force_z: float
    torque_y: float


@dataclass(frozen=True)
class MarkerField:
    """Per-frame 2D marker displacements, shape (n_frames, n_markers, 2), in mm."""

    frames: np.ndarray
    sample_rate: float = MARKER_RATE

    def __post_init__(self):
        if self.frames.ndim != 3 or self.frames.shape[2] != 2:
            raise DomainError("marker frames must have shape (n_frames, n_markers, 2)")
        if not self.sample_rate > 0:
            raise DomainError("sample rate must be positive")

    @property
    def n_markers(self) -> int:
        return self.frames.shape[1]

    def magnitudes(self) -> np.ndarray:
        return np.hypot(self.frames[..., 0], self.frames[..., 1])


@dataclass(frozen=True)
class SignalTrace:
    """Sensor value against tilt angle for one rotation sweep."""

    theta: np.ndarray
    values: np.ndarray
    sample_rate: float
    kind: str = "slow-rotation"

    def __post_init__(self):
        if self.theta.shape != self.values.shape or self.theta.ndim != 1:
            raise DomainError("theta and values must be 1-D arrays of equal length")
        if len(self.theta) > 1 and not np.all(np.diff(self.theta) > 0):
            raise DomainError("tilt angles must be strictly increasing")

    def __len__(self):
        return len(self.theta)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def humidity_level(particle: ParticleSpec) -> float:
    return min(particle.humidity_ml / 0.5, 1.0)


def aor_model(particle: ParticleSpec) -> AorParams:
    """Angle-of-repose pair and wall-sticking fraction for a particle type.

    Less spherical, smaller and wetter particles stand steeper; less
    spherical ones also collapse further each time.
    """
    psi, dp = particle.sphericity_psi, particle.diameter_dp
    wet = humidity_level(particle)
    upper = 20.0 + 25.0 * (1.0 - psi) + 8.0 * math.exp(-dp / 5.0) + 12.0 * wet
    lower = upper - (2.0 + 4.0 * (1.0 - psi))
    return AorParams(upper, lower, 0.8 * wet)


# -- free-surface dynamics ---------------------------------------------------


def surface_angles(thetas, aor: AorParams, theta_start=None, beta_start=0.0):
    """Surface inclination and cumulative collapse count along an ascending sweep.

    The surface turns with the container until it reaches ``aor_upper``,
    then avalanches back to ``aor_lower``. Collapse times are solved in
    closed form, so the result does not depend on sampling density.
    """
    thetas = np.asarray(thetas, dtype=float)
    if theta_start is None:
        theta_start = float(thetas[0])
    if abs(beta_start) > aor.aor_upper:
        raise DomainError("initial surface angle exceeds the upper angle of repose")
    travel = thetas - theta_start
    if np.any(travel < 0):
        raise DomainError("sweep angles must not precede the start angle")
    h = aor.hysteresis
    past = beta_start + travel - aor.aor_upper
    collapsed = past >= 0
    counts = np.where(collapsed, np.floor(np.where(collapsed, past, 0.0) / h) + 1, 0)
    counts = counts.astype(np.int64)
    beta = np.where(
        collapsed,
        aor.aor_lower + past - (counts - 1) * h,
        beta_start + travel,
    )
    # float guard: the residual lies in [0, h)
    beta = np.where(collapsed, np.clip(beta, aor.aor_lower, aor.aor_upper), beta)
    return beta, counts


def advance_surface(state: StickSlipState, dtheta: float, aor: AorParams) -> StickSlipState:
    """Move the container by ``dtheta`` degrees (either direction) from ``state``."""
    sign = 1.0 if dtheta >= 0 else -1.0
    beta, count = surface_angles(
        [abs(dtheta)], aor, theta_start=0.0, beta_start=sign * state.surface_angle_beta
    )
    return StickSlipState(sign * float(beta[0]), state.collapse_count + int(count[0]))


# -- statics -----------------------------------------------------------------


def _fill_area(fill: ContentFill, container: ContainerSpec) -> float:
    if not 0 < fill.fill_height_hp < container.inner_height:
        raise DomainError("fill height must lie inside the container")
    return container.inner_width * fill.fill_height_hp


def content_centroid_local(phi, fill: ContentFill, container: ContainerSpec):
    """Container-frame content centroid (mm) for a surface at ``phi`` relative to the container."""
    return content_centroid(
        container.inner_width, container.inner_height, phi, _fill_area(fill, container)
    )


def _world_offset(local_mm, theta, container: ContainerSpec):
    grasp = np.array([0.0, container.grasp_height])
    return mm_to_m(rotate(np.asarray(local_mm) - grasp, theta))


def content_com(
    theta,
    surface_angle_beta,
    fill: ContentFill,
    container: ContainerSpec | None = None,
    allow_lid_contact=False,
):
    """World-frame content centre of mass (m) relative to the grasp point.

    Raises SpillError when the pile would reach the top of the container,
    unless ``allow_lid_contact`` is set (closed bottle turned far over).
    """
    container = fill.container if container is None else container
    local, touches = content_centroid_local(surface_angle_beta - theta, fill, container)
    if touches and not allow_lid_contact:
        raise SpillError(
            f"{fill.fill_height_hp} mm fill reaches the rim at theta={theta}, beta={surface_angle_beta}"
        )
    x, z = _world_offset(local, theta, container)
    return float(x), float(z)


def container_com(theta, container: ContainerSpec):
    x, z = _world_offset([0.0, container.inner_height / 2.0], theta, container)
    return float(x), float(z)


def wrist_torque(
    theta,
    surface_angle_beta,
    fill: ContentFill,
    container: ContainerSpec | None = None,
    allow_lid_contact=False,
):
    """Gravity torque (N m) about the grasp point."""
    container = fill.container if container is None else container
    g = container.gravity_g
    xc, _ = content_com(theta, surface_angle_beta, fill, container, allow_lid_contact)
    xk, _ = container_com(theta, container)
    return g * (g_to_kg(fill.mass) * xc + g_to_kg(container.container_mass_mc) * xk)


def container_delta_fz(container: ContainerSpec) -> float:
    return g_to_kg(container.container_mass_mc) * container.gravity_g


def lift_delta_fz(fill: ContentFill, container=None, noise_sigma=FORCE_NOISE, seed=None):
    """Vertical force change (N) after lifting the filled container."""
    container = fill.container if container is None else container
    exact = g_to_kg(fill.mass + container.container_mass_mc) * container.gravity_g
    if noise_sigma == 0:
        return exact
    return exact + float(_rng(seed).normal(0.0, noise_sigma))


def tilt_hold_torques(
    fill: ContentFill,
    container=None,
    noise_sigma=TORQUE_NOISE,
    seed=None,
    aor: AorParams | None = None,
):
    """Wrist torques at 30, 45 and 60 degrees, before and after shaking.

    Returns a length-6 array ordered (30 pre, 30 post, 45 pre, 45 post,
    60 pre, 60 post). Before shaking the pile has been tilted up from
    upright; shaking levels it.
    """
    container = fill.container if container is None else container
    aor = aor_model(fill.particle) if aor is None else aor
    out = []
    for theta in TILT_ANGLES:
        pre = advance_surface(StickSlipState(), theta, aor).surface_angle_beta
        out.append(wrist_torque(theta, pre, fill, container))
        out.append(wrist_torque(theta, 0.0, fill, container))
    out = np.array(out)
    if noise_sigma:
        out = out + _rng(seed).normal(0.0, noise_sigma, size=out.shape)
    return out


def tilt_hold_readings(fill: ContentFill, container=None, noise_sigma=TORQUE_NOISE, seed=None):
    """The tilt-hold torques paired with their angles and the static lift force."""
    container = fill.container if container is None else container
    torques = tilt_hold_torques(fill, container, noise_sigma, seed)
    fz = lift_delta_fz(fill, container, noise_sigma=0.0)
    return [WristReading(theta, fz, t) for theta, t in zip(np.repeat(TILT_ANGLES, 2), torques)]


# -- dynamics ----------------------------------------------------------------


def sweep_angles(theta_start, theta_end, rate, readout_rate):
    if not theta_start < theta_end:
        raise DomainError("sweep must have theta_start < theta_end")
    if not rate > 0 or not readout_rate > 0:
        raise DomainError("rates must be positive")
    step = rate / readout_rate
    n = int(math.floor((theta_end - theta_start) / step + 1e-9)) + 1
    return theta_start + np.arange(n) * step


def stick_slip_trace(
    fill: ContentFill,
    container=None,
    theta_start=SLOW_RANGE[0],
    theta_end=SLOW_RANGE[1],
    rate=SLOW_RATE,
    readout_rate=SLOW_READOUT,
    noise_sigma=TRACE_NOISE,
    seed=None,
    aor: AorParams | None = None,
    kappa=TORQUE_SCALE,
):
    """Fingertip torque (sensor units) during a slow rotation sweep.

    The pile starts level at ``theta_start``. A ``sticky_fraction`` of the
    content clings to the walls where it settled in the upright container
    and never avalanches.
    """
    container = fill.container if container is None else container
    aor = aor_model(fill.particle) if aor is None else aor
    theta = sweep_angles(theta_start, theta_end, rate, readout_rate)
    beta, counts = surface_angles(theta, aor)
    g = container.gravity_g
    mass = g_to_kg(fill.mass)

    # within one stick phase the surface is fixed relative to the container,
    # so one centroid serves the whole phase
    phi = beta - theta
    local = np.empty((len(theta), 2))
    for c in np.unique(counts):
        idx = np.flatnonzero(counts == c)
        local[idx], _ = content_centroid_local(phi[idx[0]], fill, container)
    x_free = _world_offset(local, theta, container)[:, 0]

    stuck, _ = content_centroid_local(0.0, fill, container)
    x_stuck = _world_offset(np.broadcast_to(stuck, local.shape), theta, container)[:, 0]
    x_box = _world_offset(
        np.broadcast_to([0.0, container.inner_height / 2.0], local.shape), theta, container
    )[:, 0]

    f = aor.sticky_fraction
    torque = g * (mass * ((1.0 - f) * x_free + f * x_stuck) + g_to_kg(container.container_mass_mc) * x_box)
    values = kappa * torque
    if noise_sigma:
        values = values + _rng(seed).normal(0.0, noise_sigma, size=values.shape)
    return SignalTrace(theta, values, readout_rate, kind="slow-rotation")


def marker_layout(n_markers=N_MARKERS, n_contact=N_CONTACT, pitch=MARKER_PITCH):
    """Marker grid positions (mm), contact-marker indices and their gain profile.

    Contact markers are the ``n_contact`` closest to the grid centre; their
    gain falls off with distance from it.
    """
    cols = 10 if n_markers == 70 else int(math.ceil(math.sqrt(n_markers)))
    rows = int(math.ceil(n_markers / cols))
    gx, gy = np.meshgrid(np.arange(cols), np.arange(rows))
    pos = np.stack([gx.ravel(), gy.ravel()], axis=1)[:n_markers] * pitch
    pos = pos - pos.mean(axis=0)
    dist = np.hypot(pos[:, 0], pos[:, 1])
    contact = np.sort(np.argsort(dist, kind="stable")[:n_contact])
    gain = np.exp(-0.5 * (dist[contact] / (2.0 * pitch)) ** 2)
    return pos, contact, gain


def gel_impulse_response(sample_rate=MARKER_RATE, freq=GEL_FREQ, decay=GEL_DECAY):
    t = np.arange(int(round(8 * decay * sample_rate))) / sample_rate
    return np.exp(-t / decay) * np.sin(2 * np.pi * freq * t)


def collision_window_frames(sample_rate=MARKER_RATE):
    duration = (COLLISION_WINDOW[1] - COLLISION_WINDOW[0]) / FAST_RATE
    return int(round(duration * sample_rate))


def vibration_markerfield(
    fill: ContentFill,
    container=None,
    seed=None,
    noise_sigma=MARKER_NOISE,
    event_cap=EVENT_CAP,
    n_events=None,
    sample_rate=MARKER_RATE,
):
    """Tactile marker displacements while particles land during the fast rotation.

    Impacts arrive as a Poisson stream whose mean count is the number of
    particles in the container, capped at ``event_cap``. ``n_events`` forces
    the count (used to produce an empty stream).
    """
    container = fill.container if container is None else container
    rng = _rng(seed)
    p = fill.particle
    n_frames = collision_window_frames(sample_rate)
    if n_events is None:
        n_particles = fill.mass / p.particle_mass
        n_events = int(rng.poisson(min(n_particles, event_cap)))

    times = rng.integers(0, n_frames, size=n_events)
    fall = mm_to_m(container.inner_height - fill.fill_height_hp)
    speed = math.sqrt(2.0 * container.gravity_g * fall) * rng.uniform(0.6, 1.0, size=n_events)
    amp = IMPACT_GAIN * p.particle_mass * speed
    angle = rng.uniform(0.0, 2 * np.pi, size=n_events)

    pulses = np.zeros((n_frames, 2))
    np.add.at(pulses, times, np.stack([amp * np.cos(angle), amp * np.sin(angle)], axis=1))
    kernel = gel_impulse_response(sample_rate)
    source = np.stack(
        [np.convolve(pulses[:, k], kernel)[:n_frames] for k in range(2)], axis=1
    )

    _, contact, gain = marker_layout()
    frames = np.zeros((n_frames, N_MARKERS, 2))
    frames[:, contact, :] = source[:, None, :] * gain[None, :, None]
    if noise_sigma:
        frames += rng.normal(0.0, noise_sigma, size=frames.shape)
    return MarkerField(frames, sample_rate)
