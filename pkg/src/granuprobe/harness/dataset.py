"""Dataset records, their generation from the simulator, and the dataset file."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..domain import ContainerSpec, ContentFill, ParticleSpec, ShapeClass
from ..errors import DomainError, SpillError
from ..estimators.properties import estimate_mass
from ..features import (
    FEATURE_NAMES,
    N_FEATURES,
    assemble_features,
    downsample,
    principal_vibration_signal,
    topple_features,
    vib_features,
)
from ..granusim import (
    FORCE_NOISE,
    MARKER_NOISE,
    MARKER_RATE,
    TORQUE_NOISE,
    TRACE_NOISE,
    lift_delta_fz,
    stick_slip_trace,
    tilt_hold_torques,
    vibration_markerfield,
)

log = logging.getLogger(__name__)

DATASET_HEADER = "# dataset-v1"
HEIGHTS = (30.0, 50.0, 70.0)
REPEATS = 3
SPILL_STEP = 5.0  # mm removed per regeneration attempt after a spill
TORQUE_COLUMNS = ("T30_pre", "T30_post", "T45_pre", "T45_post", "T60_pre", "T60_post")
LABEL_COLUMNS = (
    "particle",
    "repeat",
    "seed",
    "diameter_mm",
    "sphericity",
    "density",
    "packing_fraction",
    "humidity_ml",
    "mass_g",
    "height_mm",
    "shape_class",
    "delta_fz",
    *TORQUE_COLUMNS,
)
COLUMNS = (*FEATURE_NAMES, *LABEL_COLUMNS)


@dataclass(frozen=True)
class SimConfig:
    """Container and sensor noise used for every simulated procedure."""

    container: ContainerSpec = ContainerSpec()
    force_noise: float = FORCE_NOISE
    torque_noise: float = TORQUE_NOISE
    trace_noise: float = TRACE_NOISE
    marker_noise: float = MARKER_NOISE

    def __post_init__(self):
        for name in ("force_noise", "torque_noise", "trace_noise", "marker_noise"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be non-negative")

    @classmethod
    def noiseless(cls, container: ContainerSpec = ContainerSpec()) -> "SimConfig":
        return cls(container, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True, eq=False)
class DatasetRecord:
    """One (particle, height, repeat) measurement.

    Raw signals are not stored: ``seed`` regenerates the slow-rotation trace
    and the marker field exactly (see :func:`procedure_seeds`).
    """

    particle: ParticleSpec
    fill_height: float
    repeat: int
    seed: int
    delta_fz: float
    torques: np.ndarray
    features: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.features.shape != (N_FEATURES,):
            raise DomainError(f"record needs {N_FEATURES} features")

    @property
    def name(self):
        return self.particle.name

    @property
    def fill(self) -> ContentFill:
        return ContentFill(self.particle, self.fill_height)

    @property
    def mass(self) -> float:
        return self.fill.mass

    @property
    def diameter(self) -> float:
        return self.particle.diameter_dp

    @property
    def shape(self) -> ShapeClass:
        return self.particle.shape

    @property
    def est_mass(self) -> float:
        return float(self.features[-2])

    def with_features(self, features) -> "DatasetRecord":
        return replace(self, features=np.asarray(features, dtype=float))


def procedure_seeds(seed):
    """Independent generators for lift, tilt-hold, slow rotation and fast rotation."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)]


def cell_seed(master_seed, particle_index, height_index, repeat):
    ss = np.random.SeedSequence(master_seed, spawn_key=(particle_index, height_index, repeat))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def record_markerfield(record: DatasetRecord, cfg: SimConfig = SimConfig()):
    """Regenerate the fast-rotation marker field a record was built from."""
    fill = ContentFill(record.particle, record.fill_height, cfg.container)
    return vibration_markerfield(fill, seed=procedure_seeds(record.seed)[3], noise_sigma=cfg.marker_noise)


def record_trace(record: DatasetRecord, cfg: SimConfig = SimConfig()):
    """Regenerate the slow-rotation torque trace a record was built from."""
    fill = ContentFill(record.particle, record.fill_height, cfg.container)
    return stick_slip_trace(fill, seed=procedure_seeds(record.seed)[2], noise_sigma=cfg.trace_noise)


def vibration_from_field(field, rate=MARKER_RATE):
    if rate != field.sample_rate:
        field = downsample(field, rate)
    return vib_features(principal_vibration_signal(field), strict=False)


def simulate_record(particle: ParticleSpec, height, seed, cfg: SimConfig = SimConfig(), repeat=0):
    """Run all four procedures for one fill and extract its feature vector.

    Feature F300 is the mass recovered from the lift force. F301 holds the
    true fill height; training pipelines overwrite it with model estimates.
    A fill that would touch the lid while tilted is retried ``SPILL_STEP``
    lower, with a warning.
    """
    c = cfg.container
    while True:
        fill = ContentFill(particle, height, c)
        lift, tilt, slow, fast = procedure_seeds(seed)
        try:
            torques = tilt_hold_torques(fill, noise_sigma=cfg.torque_noise, seed=tilt)
            break
        except SpillError:
            if height - SPILL_STEP <= 0:
                raise
            log.warning("%s at %.1f mm spills; retrying at %.1f mm", particle.name, height, height - SPILL_STEP)
            height -= SPILL_STEP
    delta_fz = lift_delta_fz(fill, noise_sigma=cfg.force_noise, seed=lift)
    est_mass = estimate_mass(delta_fz, c.container_mass_mc, c.gravity_g)
    trace = stick_slip_trace(fill, noise_sigma=cfg.trace_noise, seed=slow)
    field = vibration_markerfield(fill, noise_sigma=cfg.marker_noise, seed=fast)
    fv = assemble_features(vibration_from_field(field), topple_features(trace), est_mass, height)
    return DatasetRecord(particle, float(height), repeat, int(seed), float(delta_fz), torques, fv.to_array())


def generate_dataset(catalog, heights=HEIGHTS, repeats=REPEATS, seed=0, cfg: SimConfig = SimConfig()):
    """Every (particle, height, repeat) cell in canonical order.

    Each cell draws its own seed from the master seed and its indices, so
    any cell can be regenerated alone and the result does not depend on
    evaluation order.
    """
    if not catalog:
        raise DomainError("empty catalog")
    return [
        simulate_record(p, h, cell_seed(seed, i, j, r), cfg, repeat=r)
        for i, p in enumerate(catalog)
        for j, h in enumerate(heights)
        for r in range(repeats)
    ]


# -- file format -------------------------------------------------------------


def _row(rec: DatasetRecord):
    p = rec.particle
    vals = [repr(float(v)) for v in rec.features]
    vals += [
        p.name,
        str(rec.repeat),
        str(rec.seed),
        repr(float(p.diameter_dp)),
        repr(float(p.sphericity_psi)),
        repr(float(p.material_density)),
        repr(float(p.packing_fraction)),
        repr(float(p.humidity_ml)),
        repr(float(rec.mass)),
        repr(float(rec.fill_height)),
        str(int(p.shape)),
        repr(float(rec.delta_fz)),
    ]
    vals += [repr(float(t)) for t in rec.torques]
    return ",".join(vals)


def dumps_dataset(records) -> str:
    lines = [DATASET_HEADER, ",".join(COLUMNS)]
    lines += [_row(r) for r in records]
    return "\n".join(lines) + "\n"


def loads_dataset(text: str):
    lines = text.splitlines()
    if not lines or lines[0].strip() != DATASET_HEADER:
        raise DomainError("not a dataset-v1 file")
    if tuple(lines[1].split(",")) != COLUMNS:
        raise DomainError("unexpected dataset columns")
    col = {name: k for k, name in enumerate(COLUMNS)}
    records = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        v = line.split(",")
        if len(v) != len(COLUMNS):
            raise DomainError(f"line {lineno}: expected {len(COLUMNS)} fields, got {len(v)}")
        particle = ParticleSpec(
            v[col["particle"]],
            float(v[col["diameter_mm"]]),
            float(v[col["sphericity"]]),
            float(v[col["density"]]),
            float(v[col["packing_fraction"]]),
            float(v[col["humidity_ml"]]),
        )
        records.append(
            DatasetRecord(
                particle,
                float(v[col["height_mm"]]),
                int(v[col["repeat"]]),
                int(v[col["seed"]]),
                float(v[col["delta_fz"]]),
                np.array([float(v[col[c]]) for c in TORQUE_COLUMNS]),
                np.array([float(x) for x in v[:N_FEATURES]]),
            )
        )
    return records


def write_dataset(records, path):
    with open(path, "w") as fh:
        fh.write(dumps_dataset(records))


def read_dataset(path):
    with open(path) as fh:
        return loads_dataset(fh.read())
