"""Planar polygon helpers for the container cross-section.

The content of a tilted cuboid container, seen in the tilt plane, is the
inner rectangle cut by a straight free surface. Everything here works in
the container frame: x across the width (centred), z up from the inner base.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError


def clip_halfplane(poly, normal, offset):
    """Clip a convex polygon to ``{p : normal . p <= offset}``.

    Single-edge Sutherland-Hodgman. ``poly`` is an (N, 2) array of vertices
    in order; the result may be empty.
    """
    poly = np.asarray(poly, dtype=float)
    nx, nz = normal
    out = []
    n = len(poly)
    for i in range(n):
        p = poly[i]
        q = poly[(i + 1) % n]
        dp = nx * p[0] + nz * p[1] - offset
        dq = nx * q[0] + nz * q[1] - offset
        if dp <= 0:
            out.append(p)
        if (dp < 0 < dq) or (dq < 0 < dp):
            t = dp / (dp - dq)
            out.append(p + t * (q - p))
    return np.array(out, dtype=float).reshape(-1, 2)


def polygon_area_centroid(poly):
    """Signed area and centroid of a simple polygon (shoelace formula)."""
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3:
        return 0.0, np.array([np.nan, np.nan])
    x, z = poly[:, 0], poly[:, 1]
    xn, zn = np.roll(x, -1), np.roll(z, -1)
    cross = x * zn - xn * z
    area = 0.5 * cross.sum()
    if area == 0:
        return 0.0, np.array([np.nan, np.nan])
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cz = ((z + zn) * cross).sum() / (6.0 * area)
    return area, np.array([cx, cz])


def box_polygon(width, height):
    hw = width / 2.0
    return np.array([[-hw, 0.0], [hw, 0.0], [hw, height], [-hw, height]])


def surface_normal(phi_deg):
    """Upward unit normal of a surface inclined ``phi_deg`` in the container frame."""
    phi = math.radians(phi_deg)
    return (-math.sin(phi), math.cos(phi))


def content_polygon(width, height, phi_deg, fill_area):
    """Region of the ``width`` x ``height`` box below a surface of inclination ``phi_deg``.

    The surface offset is solved so the region has area ``fill_area``.
    """
    box_area = width * height
    if not 0 < fill_area < box_area:
        raise DomainError("fill area must lie strictly between 0 and the box area")
    box = box_polygon(width, height)
    normal = surface_normal(phi_deg)
    proj = box @ np.asarray(normal)
    lo, hi = proj.min(), proj.max()

    def excess(d):
        return polygon_area_centroid(clip_halfplane(box, normal, d))[0] - fill_area

    offset = brentq(excess, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
    return clip_halfplane(box, normal, offset)


@lru_cache(maxsize=4096)
def _cached_centroid(width, height, phi_deg, fill_area):
    poly = content_polygon(width, height, phi_deg, fill_area)
    _, c = polygon_area_centroid(poly)
    touches_lid = bool(np.any(poly[:, 1] >= height - 1e-9))
    return float(c[0]), float(c[1]), touches_lid


def content_centroid(width, height, phi_deg, fill_area):
    """Container-frame centroid (mm) and whether the content reaches the top wall."""
    cx, cz, touches = _cached_centroid(
        float(width), float(height), float(phi_deg), float(fill_area)
    )
    return np.array([cx, cz]), touches


def rotate(points, theta_deg):
    """Rotate (..., 2) points counter-clockwise by ``theta_deg`` about the origin."""
    t = np.radians(theta_deg)
    c, s = np.cos(t), np.sin(t)
    points = np.asarray(points, dtype=float)
    x, z = points[..., 0], points[..., 1]
    return np.stack([c * x - s * z, s * x + c * z], axis=-1)
