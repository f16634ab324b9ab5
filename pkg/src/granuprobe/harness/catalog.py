"""Synthetic stand-ins for 37 everyday granular materials."""

from __future__ import annotations

import numpy as np

from ..domain import ParticleSpec

# name, equivalent diameter (mm), sphericity, material density (g/mm^3), packing fraction
_BASE = [
    ("flour-analog", 0.2, 0.80, 0.0015, 0.55),
    ("fine-sugar-analog", 0.5, 0.90, 0.0016, 0.60),
    ("table-salt-analog", 0.6, 0.85, 0.0021, 0.60),
    ("ground-coffee-analog", 0.8, 0.75, 0.0011, 0.55),
    ("semolina-analog", 0.9, 0.82, 0.0014, 0.60),
    ("rosemary-analog", 2.0, 0.55, 0.0005, 0.50),
    ("crushed-pepper-analog", 1.8, 0.62, 0.0011, 0.55),
    ("tea-leaves-analog", 2.5, 0.58, 0.0007, 0.50),
    ("oat-flakes-analog", 4.0, 0.57, 0.0009, 0.50),
    ("sunflower-seed-analog", 5.0, 0.68, 0.0010, 0.55),
    ("pumpkin-seed-analog", 7.0, 0.65, 0.0011, 0.55),
    ("pasta-shells-analog", 12.0, 0.60, 0.0008, 0.45),
    ("rice-analog", 2.8, 0.78, 0.0015, 0.60),
    ("barley-analog", 3.6, 0.85, 0.0013, 0.60),
    ("orzo-analog", 4.0, 0.74, 0.0014, 0.58),
    ("lentil-analog", 4.2, 0.80, 0.0014, 0.60),
    ("buckwheat-analog", 4.0, 0.88, 0.0013, 0.60),
    ("coffee-bean-analog", 6.5, 0.82, 0.0011, 0.58),
    ("vitamin-tablet-analog", 9.0, 0.80, 0.0013, 0.58),
    ("macaroni-analog", 9.5, 0.72, 0.0009, 0.50),
    ("almond-analog", 11.0, 0.84, 0.0011, 0.58),
    ("quinoa-analog", 1.8, 0.92, 0.0012, 0.62),
    ("millet-analog", 2.0, 0.94, 0.0013, 0.62),
    ("green-bean-analog", 4.0, 0.93, 0.0014, 0.62),
    ("corn-kernel-analog", 7.0, 0.91, 0.0013, 0.60),
    ("soybean-analog", 6.5, 0.95, 0.0012, 0.62),
    ("black-bean-analog", 7.0, 0.92, 0.0013, 0.61),
    ("navy-bean-analog", 7.5, 0.91, 0.0013, 0.61),
    ("chickpea-analog", 8.5, 0.95, 0.0012, 0.61),
    ("red-bean-analog", 6.0, 0.93, 0.0013, 0.61),
    ("mustard-seed-analog", 1.8, 0.98, 0.0012, 0.63),
    ("steel-shot-analog", 2.5, 1.00, 0.0080, 0.63),
    ("tapioca-pearl-analog", 3.0, 0.99, 0.0014, 0.63),
    ("peppercorn-analog", 4.5, 0.97, 0.0011, 0.62),
    ("glass-bead-analog", 5.0, 1.00, 0.0025, 0.63),
    ("airsoft-bb-analog", 6.0, 1.00, 0.0009, 0.63),
    ("dried-pea-analog", 7.0, 0.98, 0.0013, 0.63),
]

HOLDOUT_NAMES = (
    "ground-coffee-analog",
    "rosemary-analog",
    "orzo-analog",
    "navy-bean-analog",
    "green-bean-analog",
)

DENSITY_JITTER = 0.03


def generate_catalog(seed=0):
    """The 37 particle types, with material densities jittered by up to 3% per seed.

    Diameter and sphericity are fixed so shape classes never move.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xCA7,)))
    jitter = rng.uniform(-DENSITY_JITTER, DENSITY_JITTER, size=len(_BASE))
    return [
        ParticleSpec(name, dp, psi, float(rho * (1.0 + j)), packing)
        for (name, dp, psi, rho, packing), j in zip(_BASE, jitter)
    ]


def sugar_particle(humidity_ml=0.0):
    """Fine sugar used for the humidity study."""
    return ParticleSpec("fine-sugar-analog", 0.5, 0.9, 0.0016, 0.6, humidity_ml)


def find_particle(catalog, name):
    for p in catalog:
        if p.name == name:
            return p
    raise KeyError(name)
