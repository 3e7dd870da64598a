"""Synthetic scenes for tests, demos and the benchmark.

Nothing here is real traffic: approach streams, corridors and no-fly zones
are laid out to resemble a busy terminal area so the planners have
something to avoid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from landingrisk.geodesy import NM_FT, destination, offset
from landingrisk.landing_sites import LandingSite, approach_fix, load_catalog
from landingrisk.polyhedra import CORRIDOR, NOFLY, Polyhedron, PolyhedronSet
from landingrisk.risk_model import PopulationRaster, RiskModel
from landingrisk.traffic_grid import AirspaceGrid, GridSpec, TrajectorySet, build_density_grid

LAT_BOUNDS = (38.60, 39.05)
LON_BOUNDS = (-77.25, -76.70)
ALT_BOUNDS = (0.0, 10000.0)


@dataclass
class Scene:
    model: RiskModel
    catalog: list
    lat_bounds: tuple
    lon_bounds: tuple
    alt_bounds: tuple
    traffic: TrajectorySet | None = None


def _line(lat, lon, brg, length, h0, h1, n=60, jitter=0.0, rng=None):
    d = np.linspace(0.0, length, n)
    la, lo = destination(lat, lon, d, brg)
    if jitter and rng is not None:
        la, lo = offset(la, lo, rng.normal(0, jitter, n), rng.normal(0, jitter, n))
    return np.column_stack([la, lo, np.linspace(h0, h1, n)])


def synthetic_traffic(catalog, seed: int = 0, per_runway: int = 12, overflights: int = 40) -> TrajectorySet:
    """Straight-in arrivals and climbing departures on the commercial runways plus random overflights."""
    rng = np.random.default_rng(seed)
    trajs = []
    for site in catalog:
        if not site.commercial:
            continue
        recip = site.heading + math.pi
        for _ in range(per_runway):
            lat, lon = offset(site.lat, site.lon, rng.normal(0, 300), rng.normal(0, 300))
            L = rng.uniform(12, 18) * NM_FT
            # arrival: from far out on the extended centreline down a 3 deg slope
            far = destination(float(lat), float(lon), L, recip)
            trajs.append(_line(float(far[0]), float(far[1]), site.heading, L,
                               site.elev_ft + L * math.tan(math.radians(3.0)), site.elev_ft,
                               jitter=150.0, rng=rng))
            # departure: climb out on runway heading at about 8 deg
            trajs.append(_line(float(lat), float(lon), site.heading, L, site.elev_ft,
                               min(site.elev_ft + L * math.tan(math.radians(8.0)), 9500.0),
                               jitter=150.0, rng=rng))
    for _ in range(overflights):
        lat = rng.uniform(*LAT_BOUNDS)
        lon = rng.uniform(*LON_BOUNDS)
        alt = rng.uniform(3000, 9500)
        trajs.append(_line(lat, lon, rng.uniform(0, 2 * math.pi), rng.uniform(10, 30) * NM_FT,
                           alt, alt + rng.normal(0, 300), jitter=50.0, rng=rng))
    return TrajectorySet(trajs)


def _strip(id, lat, lon, brg, length, width, floor, ceiling, kind=CORRIDOR):
    """Rectangle prism starting at (lat, lon) running ``length`` ft along ``brg``."""
    half = width / 2
    left, right = brg - math.pi / 2, brg + math.pi / 2
    p0 = destination(lat, lon, half, left)
    p1 = destination(lat, lon, half, right)
    end = destination(lat, lon, length, brg)
    p2 = destination(float(end[0]), float(end[1]), half, right)
    p3 = destination(float(end[0]), float(end[1]), half, left)
    base = [[float(p[0]), float(p[1])] for p in (p0, p1, p2, p3)]
    return Polyhedron.from_prism(id, base, floor, ceiling, kind)


# (start lat, start lon, bearing deg, length NM, ceiling ft): low-level helicopter
# style routes criss-crossing the region
CORRIDOR_LAYOUT = [
    (38.98, -77.20, 120, 9.0, 1500), (38.70, -77.15, 30, 10.0, 1300),
    (38.95, -76.95, 200, 9.0, 1500), (38.62, -76.90, 350, 11.0, 1800),
    (38.88, -77.24, 80, 8.0, 1200), (38.75, -76.75, 290, 9.0, 2000),
    (39.03, -77.05, 160, 7.0, 1500), (38.66, -77.05, 70, 8.0, 1500),
    (38.92, -76.80, 240, 6.0, 2500), (38.80, -77.22, 10, 9.0, 1500),
]


def synthetic_corridors(width_ft: float = 2000.0) -> PolyhedronSet:
    polys = [_strip(f"corridor-{i}", lat, lon, math.radians(b), L * NM_FT, width_ft, 0.0, c)
             for i, (lat, lon, b, L, c) in enumerate(CORRIDOR_LAYOUT)]
    return PolyhedronSet(polys, CORRIDOR)


def synthetic_noflys() -> PolyhedronSet:
    polys = [
        _strip("nofly-0", 38.900, -77.060, math.radians(90), 1.2 * NM_FT, 3000.0, 0.0, 18000.0, NOFLY),
        _strip("nofly-1", 38.760, -77.100, math.radians(45), 1.0 * NM_FT, 4000.0, 0.0, 6000.0, NOFLY),
    ]
    return PolyhedronSet(polys, NOFLY)


def build_scene(seed: int = 0, divisions=(30, 30, 10), population_seed: int | None = None,
                catalog=None) -> Scene:
    """Grid, 10 corridors, 2 no-fly zones, a population raster and the sample catalog."""
    catalog = list(catalog) if catalog is not None else load_catalog()
    spec = GridSpec(LAT_BOUNDS, LON_BOUNDS, ALT_BOUNDS, *divisions)
    traffic = synthetic_traffic(catalog, seed)
    grid = build_density_grid(traffic, spec)
    raster = PopulationRaster.synthetic(LAT_BOUNDS, LON_BOUNDS,
                                        seed if population_seed is None else population_seed)
    model = RiskModel(grid, synthetic_corridors(), synthetic_noflys(), raster)
    return Scene(model, catalog, LAT_BOUNDS, LON_BOUNDS, ALT_BOUNDS, traffic)


@dataclass
class GapScene:
    model: RiskModel
    site: LandingSite
    start: object
    straight: object  # straight-through reference trajectory is built by the caller
    gap_center_east: float


def corridor_gap_scene(surplus_ft: float = 1000.0, start_nm: float = 8.0, wall_nm: float = 3.0,
                       gap_east_nm: tuple = (1.0, 2.5), gamma_bg: float = math.radians(4.9)):
    """A single corridor wall across the direct line, with one gap off to the east.

    The runway lands southbound so the approach fix is north of it and the
    start state is further north, pointing at the fix.
    """
    from landingrisk.geodesy import GeoState

    site = LandingSite("GAP-18", 38.80, -77.00, 50.0, math.pi, 4000.0, 100.0)
    fix = approach_fix(site, gamma_bg)
    wall_lat, wall_lon = offset(fix.lat, fix.lon, 0.0, wall_nm * NM_FT)
    wall_lat, wall_lon = float(wall_lat), float(wall_lon)
    thick = 2000.0
    west_lo, west_hi = -8.0 * NM_FT, gap_east_nm[0] * NM_FT
    east_lo, east_hi = gap_east_nm[1] * NM_FT, 10.0 * NM_FT
    pieces = []
    for name, lo, hi in (("wall-west", west_lo, west_hi), ("wall-east", east_lo, east_hi)):
        la, lo_ = offset(wall_lat, wall_lon, lo, 0.0)
        pieces.append(_strip(name, float(la), float(lo_), math.pi / 2, hi - lo, thick, 0.0, 12000.0))
    model = RiskModel(None, PolyhedronSet(pieces, CORRIDOR), PolyhedronSet([], NOFLY), None)
    s_lat, s_lon = offset(fix.lat, fix.lon, 0.0, start_nm * NM_FT)
    d = start_nm * NM_FT
    start = GeoState(float(s_lat), float(s_lon), fix.alt + d * math.tan(gamma_bg) + surplus_ft, math.pi)
    gap_mid = 0.5 * (gap_east_nm[0] + gap_east_nm[1]) * NM_FT
    return GapScene(model, site, start, None, gap_mid)


def empty_model() -> RiskModel:
    return RiskModel(None, PolyhedronSet([], CORRIDOR), PolyhedronSet([], NOFLY), None)


def empty_grid(spec: GridSpec) -> AirspaceGrid:
    return AirspaceGrid.empty(spec)
