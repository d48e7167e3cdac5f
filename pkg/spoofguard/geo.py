"""Displacement between GPS fixes on a spherical Earth."""

from __future__ import annotations

import math

import numpy as np

from spoofguard.errors import DegenerateInputError
from spoofguard.models import GeoPoint, LocalDisplacement

# Fixed radius used by the detection thresholds, not the WGS-84 mean radius
EARTH_RADIUS_M = 6_378_000.0

# Beyond this separation the equirectangular projection is not trusted
MAX_LOCAL_SEPARATION_M = 10_000.0


def haversine_displacement(a: GeoPoint, b: GeoPoint) -> float:
    """
    Great-circle distance between two fixes in meters.

    The arcsin argument is clamped to [0, 1] so nearly identical or
    antipodal points cannot produce a domain error from rounding.
    """
    dlat = b.lat - a.lat
    dlon = b.lon - a.lon
    h = math.sin(dlat / 2) ** 2 + math.cos(a.lat) * math.cos(b.lat) * math.sin(dlon / 2) ** 2
    h = min(max(h, 0.0), 1.0)
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


def _wrap_angle(delta: float) -> float:
    """Wrap an angle difference into [-pi, pi)."""
    if -math.pi <= delta < math.pi:
        return delta
    return (delta + math.pi) % (2 * math.pi) - math.pi


def local_displacement(a: GeoPoint, b: GeoPoint) -> LocalDisplacement:
    """
    East/north displacement from a to b.

    Equirectangular projection about the mean latitude of the segment.

    Raises:
        DegenerateInputError: If the fixes are more than 10 km apart.
    """
    separation = haversine_displacement(a, b)
    if separation > MAX_LOCAL_SEPARATION_M:
        raise DegenerateInputError(
            f"fixes {separation:.0f} m apart exceed the {MAX_LOCAL_SEPARATION_M:.0f} m local projection limit"
        )
    mean_lat = 0.5 * (a.lat + b.lat)
    dx = EARTH_RADIUS_M * _wrap_angle(b.lon - a.lon) * math.cos(mean_lat)
    dy = EARTH_RADIUS_M * (b.lat - a.lat)
    return LocalDisplacement(dx, dy)


def offset_point(a: GeoPoint, dx: float, dy: float) -> GeoPoint:
    """Fix reached from a by moving dx east and dy north (inverse of local_displacement)."""
    lat = a.lat + dy / EARTH_RADIUS_M
    lon = a.lon + dx / (EARTH_RADIUS_M * math.cos(0.5 * (a.lat + lat)))
    return GeoPoint(lat, _wrap_angle(lon))


def haversine_arrays(lat1: np.ndarray, lon1: np.ndarray, lat2: np.ndarray, lon2: np.ndarray) -> np.ndarray:
    """Vectorized haversine_displacement."""
    h = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def local_displacement_arrays(
    lat1: np.ndarray,
    lon1: np.ndarray,
    lat2: np.ndarray,
    lon2: np.ndarray,
    *,
    strict: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Vectorized local_displacement; returns (dx, dy) arrays.

    With strict=False, pairs beyond the local projection limit keep the
    projected direction but take the great-circle distance as their length.

    Raises:
        DegenerateInputError: If strict and any pair is more than 10 km apart.
    """
    dlon = wrap_angles(lon2 - lon1)
    dx = EARTH_RADIUS_M * dlon * np.cos(0.5 * (lat1 + lat2))
    dy = EARTH_RADIUS_M * (lat2 - lat1)
    norm = np.hypot(dx, dy)
    too_far = np.flatnonzero(norm > MAX_LOCAL_SEPARATION_M)
    if too_far.size == 0:
        return dx, dy
    if strict:
        raise DegenerateInputError(
            "consecutive fixes exceed the local projection limit", row=int(too_far[0])
        )
    dist = haversine_arrays(lat1[too_far], lon1[too_far], lat2[too_far], lon2[too_far])
    dx = dx.copy()
    dy = dy.copy()
    dx[too_far] *= dist / norm[too_far]
    dy[too_far] *= dist / norm[too_far]
    return dx, dy


def offset_arrays(
    lat: np.ndarray, lon: np.ndarray, dx: np.ndarray | float, dy: np.ndarray | float
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized offset_point; returns new (lat, lon) arrays."""
    new_lat = lat + np.asarray(dy) / EARTH_RADIUS_M
    new_lon = lon + np.asarray(dx) / (EARTH_RADIUS_M * np.cos(0.5 * (lat + new_lat)))
    return new_lat, wrap_angles(new_lon)


def wrap_angles(angles: np.ndarray) -> np.ndarray:
    """Wrap angles into [-pi, pi); values already in range are returned untouched."""
    angles = np.asarray(angles, dtype=np.float64)
    outside = (angles < -np.pi) | (angles >= np.pi)
    if not np.any(outside):
        return angles
    return np.where(outside, (angles + np.pi) % (2 * np.pi) - np.pi, angles)
