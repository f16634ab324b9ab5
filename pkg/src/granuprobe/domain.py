"""Particle and container definitions, plus the bulk property relations.

Public quantities use the units people measure particles in: millimetres,
grams and millilitres. Torque math elsewhere converts to SI at the boundary
using the helpers at the bottom of this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

from .errors import DomainError

DEFAULT_PACKING_FRACTION = 0.6

# Shape-class sphericity band edges (upper bounds, inclusive).
POWDER_DIAMETER_MM = 1.0
SPHERICITY_EDGES = (0.7, 0.9, 0.96, 1.0)


class ShapeClass(IntEnum):
    POWDER = 0
    LOW_SPHERICITY = 1
    MEDIUM_SPHERICITY = 2
    HIGH_SPHERICITY = 3
    NEAR_SPHERE = 4


@dataclass(frozen=True)
class ParticleSpec:
    """Intrinsic properties of one particle type.

    ``material_density`` is the density of the solid itself (g/mm^3); the
    bulk density of a fill is that times ``packing_fraction``.
    """

    name: str
    diameter_dp: float
    sphericity_psi: float
    material_density: float
    packing_fraction: float = DEFAULT_PACKING_FRACTION
    humidity_ml: float = 0.0

    def __post_init__(self):
        if not self.diameter_dp > 0:
            raise DomainError(f"{self.name}: diameter must be positive, got {self.diameter_dp}")
        if not 0 < self.sphericity_psi <= 1:
            raise DomainError(f"{self.name}: sphericity must lie in (0, 1], got {self.sphericity_psi}")
        if not self.material_density > 0:
            raise DomainError(f"{self.name}: material density must be positive")
        if not 0 < self.packing_fraction < 1:
            raise DomainError(f"{self.name}: packing fraction must lie in (0, 1)")
        if not self.humidity_ml >= 0:
            raise DomainError(f"{self.name}: humidity must be non-negative")

    @property
    def particle_volume(self) -> float:
        """Volume of a single particle in mm^3."""
        return sphere_volume(self.diameter_dp)

    @property
    def particle_mass(self) -> float:
        """Mass of a single particle in g."""
        return self.material_density * self.particle_volume

    @property
    def shape(self) -> ShapeClass:
        return shape_class(self.diameter_dp, self.sphericity_psi)


@dataclass(frozen=True)
class ContainerSpec:
    """Cuboid bottle held by a parallel gripper.

    The tilt plane is spanned by ``inner_width`` and ``inner_height``. The
    grasp point sits on the container axis, ``grasp_height`` above the
    inner base.
    """

    inner_width: float = 60.0
    inner_depth: float = 60.0
    inner_height: float = 140.0
    container_mass_mc: float = 50.0
    grasp_height: float = 90.0
    gravity_g: float = 9.81

    def __post_init__(self):
        for name in ("inner_width", "inner_depth", "inner_height"):
            if not getattr(self, name) > 0:
                raise DomainError(f"container {name} must be positive")
        if not 0 < self.grasp_height < self.inner_height:
            raise DomainError("grasp height must lie strictly inside the container")
        if not self.container_mass_mc > 0:
            raise DomainError("container mass must be positive")
        if not self.gravity_g > 0:
            raise DomainError("gravity must be positive")

    @property
    def cross_section(self) -> float:
        """Horizontal inner cross-section area in mm^2."""
        return self.inner_width * self.inner_depth


@dataclass(frozen=True)
class ContentFill:
    particle: ParticleSpec
    fill_height_hp: float
    container: ContainerSpec = field(default_factory=ContainerSpec)

    def __post_init__(self):
        if not self.fill_height_hp > 0:
            raise DomainError(f"fill height must be positive, got {self.fill_height_hp}")
        if not self.fill_height_hp < self.container.inner_height:
            raise DomainError(
                f"fill height {self.fill_height_hp} mm exceeds container height "
                f"{self.container.inner_height} mm"
            )

    @property
    def mass(self) -> float:
        return content_mass(self, self.container)

    @property
    def volume_ml(self) -> float:
        return content_volume_ml(self.fill_height_hp, self.container)


def sphere_volume(diameter: float) -> float:
    return math.pi / 6.0 * diameter**3


def equivalent_diameter(individual_volume: float) -> float:
    """Diameter (mm) of the sphere whose volume equals ``individual_volume`` (mm^3)."""
    if not individual_volume > 0:
        raise DomainError(f"particle volume must be positive, got {individual_volume}")
    return (6.0 * individual_volume / math.pi) ** (1.0 / 3.0)


def sphericity(individual_volume: float, surface_area: float) -> float:
    """Surface area of the equal-volume sphere divided by the particle's surface area."""
    if not individual_volume > 0 or not surface_area > 0:
        raise DomainError("volume and surface area must both be positive")
    return math.pi ** (1.0 / 3.0) * (6.0 * individual_volume) ** (2.0 / 3.0) / surface_area


def shape_class(diameter_dp: float, sphericity_psi: float) -> ShapeClass:
    if not diameter_dp > 0:
        raise DomainError(f"diameter must be positive, got {diameter_dp}")
    if not 0 < sphericity_psi <= 1:
        raise DomainError(f"sphericity must lie in (0, 1], got {sphericity_psi}")
    # sphericity is not meaningful for powders
    if diameter_dp <= POWDER_DIAMETER_MM:
        return ShapeClass.POWDER
    for label, edge in enumerate(SPHERICITY_EDGES, start=1):
        if sphericity_psi <= edge:
            return ShapeClass(label)
    raise AssertionError("unreachable")  # pragma: no cover


def content_mass(fill: ContentFill, container: ContainerSpec | None = None) -> float:
    """Bulk content mass in g."""
    container = fill.container if container is None else container
    if not 0 < fill.fill_height_hp < container.inner_height:
        raise DomainError(
            f"fill height {fill.fill_height_hp} mm does not fit a {container.inner_height} mm container"
        )
    p = fill.particle
    return (
        p.material_density
        * p.packing_fraction
        * container.inner_width
        * container.inner_depth
        * fill.fill_height_hp
    )


def content_volume_ml(height_mm: float, container: ContainerSpec) -> float:
    return height_mm * container.cross_section / 1000.0


# SI conversions used by the simulator
def g_to_kg(mass_g: float) -> float:
    return mass_g * 1e-3


def mm_to_m(length_mm):
    return length_mm * 1e-3
