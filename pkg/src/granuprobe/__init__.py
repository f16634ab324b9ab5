"""Estimate the mass, volume, particle size and particle shape of granular
content from simulated wrist and fingertip sensing."""

from .domain import ContainerSpec, ContentFill, ParticleSpec, ShapeClass
from .errors import ConfigError, DomainError, NegativeMassError, SpillError

__version__ = "0.1.0"
