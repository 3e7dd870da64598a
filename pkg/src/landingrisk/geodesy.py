"""Coordinate transforms and spherical geodesics.

Altitudes and distances are in feet unless a name says otherwise. Angles
passed between modules are radians; latitude/longitude stay in degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FT_PER_M = 1.0 / 0.3048
M_PER_FT = 0.3048
NM_FT = 1852.0 * FT_PER_M
KT_TO_FPS = NM_FT / 3600.0
G_FPS2 = 9.80665 * FT_PER_M

EARTH_RADIUS_FT = 6371.0e3 * FT_PER_M

WGS84_A = 6378137.0
WGS84_E2 = 0.00669437999014
WGS84_B = WGS84_A * math.sqrt(1.0 - WGS84_E2)

TWO_PI = 2.0 * math.pi


def wrap_angle(x, modulus=TWO_PI):
    """Wrap ``x`` into ``[0, modulus)``. Works on scalars and arrays."""
    if np.ndim(x) == 0:
        r = math.fmod(float(x), modulus)
        if r < 0.0:
            r += modulus
        # fmod of a tiny negative number can round up to exactly ``modulus``
        return 0.0 if r >= modulus else r
    r = np.mod(np.asarray(x, dtype=float), modulus)
    return np.where(r >= modulus, 0.0, r)


def wrap_pi(x):
    """Wrap into ``[-pi, pi)``."""
    return wrap_angle(np.add(x, math.pi)) - math.pi


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float
    alt: float = 0.0

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")
        if not math.isfinite(self.alt):
            raise ValueError("altitude must be finite")


@dataclass(frozen=True)
class GeoState:
    """Aircraft state: position (deg, deg, ft MSL) and course in radians."""

    lat: float
    lon: float
    alt: float
    course: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "course", wrap_angle(self.course))

    @property
    def pos(self) -> GeoPoint:
        return GeoPoint(self.lat, self.lon, self.alt)

    def replace(self, **kw) -> "GeoState":
        d = dict(lat=self.lat, lon=self.lon, alt=self.alt, course=self.course)
        d.update(kw)
        return GeoState(**d)


def lla_to_ecef(lat, lon, alt_ft=0.0):
    """WGS-84 geodetic to ECEF, meters. Accepts scalars or arrays."""
    phi = np.radians(lat)
    lam = np.radians(lon)
    h = np.asarray(alt_ft, dtype=float) * M_PER_FT
    sphi = np.sin(phi)
    cphi = np.cos(phi)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sphi * sphi)
    x = (n + h) * cphi * np.cos(lam)
    y = (n + h) * cphi * np.sin(lam)
    z = (n * (1.0 - WGS84_E2) + h) * sphi
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1)


def point_to_ecef(p: GeoPoint | GeoState) -> np.ndarray:
    return lla_to_ecef(p.lat, p.lon, p.alt)


def enu_basis(lat, lon):
    """Rows are the east, north and up unit vectors in ECEF at (lat, lon)."""
    phi = math.radians(lat)
    lam = math.radians(lon)
    sp, cp = math.sin(phi), math.cos(phi)
    sl, cl = math.sin(lam), math.cos(lam)
    return np.array([
        [-sl, cl, 0.0],
        [-sp * cl, -sp * sl, cp],
        [cp * cl, cp * sl, sp],
    ])


def gc_distance(lat1, lon1, lat2, lon2):
    """Haversine great-circle distance in feet (vectorized)."""
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(np.subtract(lon2, lon1))
    a = np.sin(dp / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_FT * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def great_circle_distance(a, b) -> float:
    """Distance in feet between two points; altitude is ignored."""
    return float(gc_distance(a.lat, a.lon, b.lat, b.lon))


def gc_bearing(lat1, lon1, lat2, lon2):
    """Initial great-circle bearing from point 1 to point 2, in [0, 2pi)."""
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    dl = np.radians(np.subtract(lon2, lon1))
    y = np.sin(dl) * np.cos(p2)
    x = np.cos(p1) * np.sin(p2) - np.sin(p1) * np.cos(p2) * np.cos(dl)
    return wrap_angle(np.arctan2(y, x))


def initial_bearing(a, b) -> float:
    return float(gc_bearing(a.lat, a.lon, b.lat, b.lon))


def destination(lat, lon, distance_ft, bearing):
    """Spherical direct problem; returns (lat, lon) in degrees (vectorized)."""
    d = np.asarray(distance_ft, dtype=float) / EARTH_RADIUS_FT
    p1 = np.radians(lat)
    l1 = np.radians(lon)
    sp1, cp1 = np.sin(p1), np.cos(p1)
    sd, cd = np.sin(d), np.cos(d)
    sp2 = sp1 * cd + cp1 * sd * np.cos(bearing)
    p2 = np.arcsin(np.clip(sp2, -1.0, 1.0))
    l2 = l1 + np.arctan2(np.sin(bearing) * sd * cp1, cd - sp1 * sp2)
    lon2 = (np.degrees(l2) + 180.0) % 360.0 - 180.0
    return np.degrees(p2), lon2


def forward_destination(origin, distance: float, bearing: float) -> GeoPoint:
    """Point reached by travelling ``distance`` feet from ``origin`` along ``bearing``.

    The altitude of the origin is carried over unchanged.
    """
    if distance < 0:
        raise ValueError("distance must be nonnegative")
    if distance == 0:
        return GeoPoint(origin.lat, origin.lon, origin.alt)
    lat, lon = destination(origin.lat, origin.lon, distance, bearing)
    return GeoPoint(float(lat), float(lon), origin.alt)


def offset(lat, lon, east_ft, north_ft):
    """Move by a local east/north displacement along the great circle."""
    east_ft = np.asarray(east_ft, dtype=float)
    north_ft = np.asarray(north_ft, dtype=float)
    dist = np.hypot(east_ft, north_ft)
    brg = np.arctan2(east_ft, north_ft)
    return destination(lat, lon, dist, brg)


class LocalFrame:
    """Equirectangular east/north frame (feet) anchored at a reference point.

    The mapping is exactly invertible, so round trips are lossless; lengths
    and angles are accurate to well under a percent over tens of miles.
    """

    def __init__(self, lat0: float, lon0: float):
        self.lat0 = lat0
        self.lon0 = lon0
        self._k = EARTH_RADIUS_FT * math.pi / 180.0
        self._c = math.cos(math.radians(lat0))

    def to_local(self, lat, lon):
        dlon = (np.subtract(lon, self.lon0) + 180.0) % 360.0 - 180.0
        x = self._k * self._c * dlon
        y = self._k * np.subtract(lat, self.lat0)
        return x, y

    def to_geo(self, x, y):
        lat = self.lat0 + np.asarray(y, dtype=float) / self._k
        lon = self.lon0 + np.asarray(x, dtype=float) / (self._k * self._c)
        lon = (lon + 180.0) % 360.0 - 180.0
        return lat, lon


def course_to_math(course):
    """Clockwise-from-north course to counter-clockwise-from-east angle."""
    return np.pi / 2.0 - np.asarray(course)


def math_to_course(theta):
    return wrap_angle(np.pi / 2.0 - np.asarray(theta))
