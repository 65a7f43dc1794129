"""Local tangent-plane projection between GPS and scene-local ENU coordinates.

Scenes are sub-kilometer, so a flat equirectangular projection is accurate to
well under a centimeter; anything more than a degree from the origin is
rejected rather than silently distorted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

M_PER_DEG_LAT = 111_320.0


class ProjectionError(ValueError):
    """Point too far from the scene origin for the flat projection."""


@dataclass(frozen=True)
class GeoPoint:
    """WGS-84-style coordinates: decimal degrees plus meters above the scene datum."""

    lat_deg: float
    lon_deg: float
    alt_m: float = 0.0


@dataclass(frozen=True)
class EnuPoint:
    """East/north/up offsets in meters relative to a scene origin."""

    east_m: float
    north_m: float
    up_m: float = 0.0


def to_enu(origin: GeoPoint, p: GeoPoint) -> EnuPoint:
    """Project ``p`` onto the local east/north/up frame anchored at ``origin``."""
    dlat = p.lat_deg - origin.lat_deg
    dlon = p.lon_deg - origin.lon_deg
    if abs(dlat) >= 1.0 or abs(dlon) >= 1.0:
        raise ProjectionError(
            f"point ({p.lat_deg}, {p.lon_deg}) is over 1 degree from the scene "
            f"origin ({origin.lat_deg}, {origin.lon_deg}); scene too large for "
            f"the flat projection"
        )
    north = dlat * M_PER_DEG_LAT
    east = dlon * M_PER_DEG_LAT * math.cos(math.radians(origin.lat_deg))
    return EnuPoint(east, north, p.alt_m - origin.alt_m)


def from_enu(origin: GeoPoint, p: EnuPoint) -> GeoPoint:
    """Inverse of :func:`to_enu`; round trips within 1e-9 m at scene scale."""
    lat = origin.lat_deg + p.north_m / M_PER_DEG_LAT
    lon = origin.lon_deg + p.east_m / (M_PER_DEG_LAT * math.cos(math.radians(origin.lat_deg)))
    return GeoPoint(lat, lon, origin.alt_m + p.up_m)


def distance(a: EnuPoint, b: EnuPoint) -> float:
    """3D Euclidean distance in meters."""
    return math.dist((a.east_m, a.north_m, a.up_m), (b.east_m, b.north_m, b.up_m))


def is_finite(p: EnuPoint) -> bool:
    return all(math.isfinite(v) for v in (p.east_m, p.north_m, p.up_m))
