"""Pointwise airspace risk, ground-risk heuristic and trajectory risk integrals."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from landingrisk.geodesy import GeoState, destination, gc_distance, lla_to_ecef
from landingrisk.polyhedra import CORRIDOR, NOFLY, PolyhedronSet
from landingrisk.traffic_grid import AirspaceGrid
from landingrisk.trajectory import Trajectory

SIGMA_A_DT = 0.05
SIGMA_G_DT = 0.5
ETA_CAP = 1.0 - 1e-9


@dataclass(frozen=True)
class PopulationRaster:
    """Normalized population density on a lat/lon grid (cells are ``[lo, hi)``)."""

    lat_edges: np.ndarray
    lon_edges: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lat_e = np.asarray(self.lat_edges, dtype=float)
        lon_e = np.asarray(self.lon_edges, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (lat_e.size - 1, lon_e.size - 1):
            raise ValueError("raster values must be (n_lat_edges-1, n_lon_edges-1)")
        if np.any(np.diff(lat_e) <= 0) or np.any(np.diff(lon_e) <= 0):
            raise ValueError("raster edges must be strictly increasing")
        if np.any(vals < 0) or np.any(vals > 1) or not np.all(np.isfinite(vals)):
            raise ValueError("raster values must lie in [0, 1]")
        for name, v in (("lat_edges", lat_e), ("lon_edges", lon_e), ("values", vals)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def cell_areas(self) -> np.ndarray:
        """Relative spherical cell areas."""
        band = np.diff(np.sin(np.radians(self.lat_edges)))
        return np.outer(band, np.diff(np.radians(self.lon_edges)))

    @property
    def mean(self) -> float:
        w = self.cell_areas
        return float(np.sum(w * self.values) / np.sum(w))

    @property
    def eta_max(self) -> float:
        """Normalization ceiling for the ground heuristic (kept strictly below 1)."""
        return min(float(self.values.max()), ETA_CAP)

    def values_at(self, lat, lon):
        lat = np.asarray(lat, dtype=float)
        lon = np.asarray(lon, dtype=float)
        i = np.searchsorted(self.lat_edges, lat, side="right") - 1
        j = np.searchsorted(self.lon_edges, lon, side="right") - 1
        ok = (i >= 0) & (i < self.values.shape[0]) & (j >= 0) & (j < self.values.shape[1])
        out = np.zeros(np.shape(lat))
        out[ok] = self.values[i[ok], j[ok]]
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lat_lo"] + [repr(float(x)) for x in self.lon_edges])
            for lat, row in zip(self.lat_edges[:-1], self.values):
                w.writerow([repr(float(lat))] + [repr(float(v)) for v in row])
            w.writerow([repr(float(self.lat_edges[-1]))])

    @classmethod
    def from_csv(cls, path) -> "PopulationRaster":
        """Read the raster CSV.

        The header row holds the longitude bin edges after a label cell; each
        following row starts with a lower latitude edge and the row's
        densities; a final row holds only the upper latitude edge.
        """
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
        lon_edges = [float(x) for x in rows[0][1:] if x != ""]
        lat_edges = [float(r[0]) for r in rows[1:]]
        values = [[float(x) for x in r[1:] if x != ""] for r in rows[1:-1]]
        return cls(np.array(lat_edges), np.array(lon_edges), np.array(values))

    @classmethod
    def synthetic(cls, lat_bounds, lon_bounds, seed: int = 0, n_lat: int = 60,
                  n_lon: int = 60, n_blobs: int = 6) -> "PopulationRaster":
        """Gaussian population centres, normalized so the densest cell is 1."""
        rng = np.random.default_rng(seed)
        lat_e = np.linspace(*lat_bounds, n_lat + 1)
        lon_e = np.linspace(*lon_bounds, n_lon + 1)
        lat_c = (lat_e[:-1] + lat_e[1:]) / 2
        lon_c = (lon_e[:-1] + lon_e[1:]) / 2
        LA, LO = np.meshgrid(lat_c, lon_c, indexing="ij")
        span = min(lat_bounds[1] - lat_bounds[0], lon_bounds[1] - lon_bounds[0])
        field_ = np.full(LA.shape, 0.02)
        for _ in range(n_blobs):
            cy = rng.uniform(*lat_bounds)
            cx = rng.uniform(*lon_bounds)
            s = rng.uniform(0.05, 0.2) * span
            field_ += rng.uniform(0.3, 1.0) * np.exp(-((LA - cy) ** 2 + (LO - cx) ** 2) / (2 * s * s))
        return cls(lat_e, lon_e, field_ / field_.max())


@dataclass(frozen=True)
class RiskWeights:
    traffic: float = 0.5
    corridor: float = 0.25
    nofly: float = 0.25

    def __post_init__(self):
        w = (self.traffic, self.corridor, self.nofly)
        if min(w) < 0 or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError(f"risk weights must be nonnegative and sum to 1, got {w}")


@dataclass(frozen=True)
class ConeSpec:
    """Forward look-ahead cone; angles in radians, spacing in feet."""

    h_angle: float = math.radians(60.0)
    v_angle: float = math.radians(10.0)
    n_r: int = 5
    n_l: int = 3
    n_p: int = 1
    spacing: float = 10_000.0

    def __post_init__(self):
        if min(self.n_r, self.n_l, self.n_p) < 1:
            raise ValueError("cone sample counts must be positive")
        if self.n_r == 1 and self.h_angle > 0 or self.n_l == 1 and self.v_angle > 0:
            raise ValueError("a cone with nonzero spread needs at least two rays across it")

    def ray_angles(self, course: float, gamma_bg: float):
        i = np.arange(self.n_r)
        j = np.arange(self.n_l)
        theta_h = course - self.h_angle / 2 + i * (self.h_angle / (self.n_r - 1) if self.n_r > 1 else 0.0)
        theta_v = gamma_bg + j * (self.v_angle / (self.n_l - 1) if self.n_l > 1 else 0.0)
        return theta_h, theta_v


@dataclass
class RiskModel:
    grid: AirspaceGrid | None = None
    corridors: PolyhedronSet = field(default_factory=lambda: PolyhedronSet([], CORRIDOR))
    noflys: PolyhedronSet = field(default_factory=lambda: PolyhedronSet([], NOFLY))
    raster: PopulationRaster | None = None
    weights: RiskWeights = field(default_factory=RiskWeights)
    d_max: float = 500.0
    h_upper: float = 1500.0
    h_lower: float = 1000.0
    crossover_ft: float = 5000.0
    # optional precomputed proximity heatmaps used instead of exact geometry
    corridor_cache: AirspaceGrid | None = None
    nofly_cache: AirspaceGrid | None = None

    def __post_init__(self):
        if self.d_max <= 0:
            raise ValueError("d_max must be positive")
        if not self.h_upper > self.h_lower:
            raise ValueError("h_upper must exceed h_lower")

    @property
    def mu_kappa(self) -> float:
        return self.grid.mean if self.grid is not None else 0.0

    @property
    def mu_eta(self) -> float:
        return self.raster.mean if self.raster is not None else 0.0

    def traffic_at(self, lat, lon, alt):
        if self.grid is None:
            return np.zeros(np.shape(lat))
        return self.grid.values_at(lat, lon, alt)

    def _set_cost(self, pset, cache, lat, lon, alt, ecef):
        if cache is not None:
            return cache.values_at(lat, lon, alt)
        if not len(pset):
            return np.zeros(np.shape(lat))
        return pset.costs(ecef, self.d_max)

    def ga_points(self, lat, lon, alt) -> np.ndarray:
        """Airspace risk at arrays of positions."""
        lat = np.atleast_1d(np.asarray(lat, dtype=float))
        lon = np.atleast_1d(np.asarray(lon, dtype=float))
        alt = np.atleast_1d(np.asarray(alt, dtype=float))
        w = self.weights
        out = w.traffic * self.traffic_at(lat, lon, alt)
        need_geom = (len(self.corridors) and self.corridor_cache is None) or \
                    (len(self.noflys) and self.nofly_cache is None)
        ecef = lla_to_ecef(lat, lon, alt) if need_geom else None
        if w.corridor:
            out += w.corridor * self._set_cost(self.corridors, self.corridor_cache, lat, lon, alt, ecef)
        if w.nofly:
            out += w.nofly * self._set_cost(self.noflys, self.nofly_cache, lat, lon, alt, ecef)
        return np.clip(out, 0.0, 1.0)

    def eta_points(self, lat, lon) -> np.ndarray:
        if self.raster is None:
            return np.zeros(np.shape(lat))
        return self.raster.values_at(lat, lon)

    def prohibited(self, lat, lon, alt) -> np.ndarray:
        if not len(self.noflys):
            return np.zeros(np.shape(np.atleast_1d(lat)), dtype=bool)
        return self.noflys.inside_any(lla_to_ecef(lat, lon, alt))

    def nofly_clearance(self, lat, lon, alt) -> np.ndarray:
        """Distance in feet to the nearest no-fly zone (0 inside, inf if none)."""
        return self.noflys.min_distances(lla_to_ecef(lat, lon, alt))


def ga(model: RiskModel, s: GeoState) -> float:
    return float(model.ga_points(s.lat, s.lon, s.alt)[0])


def altitude_scale(delta_h: float, goal_risky: bool, h_upper: float = 1500.0,
                   h_lower: float = 1000.0) -> float:
    """Scale on cumulative airspace cost from the altitude left to lose."""
    if not goal_risky or delta_h >= h_upper:
        return 1.0
    if delta_h <= h_lower:
        return 0.0
    return (delta_h - h_lower) / (h_upper - h_lower)


def wa(model: RiskModel, s: GeoState, goal: GeoState, goal_risk: float | None = None) -> float:
    if goal_risk is None:
        goal_risk = ga(model, goal)
    return altitude_scale(s.alt - goal.alt, goal_risk > 0, model.h_upper, model.h_lower)


def _integrate(path: Trajectory, dt: float, fn) -> float:
    path.check_monotone()
    times, (lat, lon, alt, _) = path.resample(dt)
    if times.size < 2:
        return 0.0
    return float(np.trapezoid(fn(lat, lon, alt), times))


def cumulative_airspace_cost(model: RiskModel, path: Trajectory, goal: GeoState,
                             dt: float = SIGMA_A_DT, additive: bool = False,
                             goal_risk: float | None = None) -> float:
    """Altitude-scaled time integral of airspace risk along ``path`` (seconds).

    By default the scale of the final state multiplies the whole integral;
    ``additive=True`` applies the scale of each sample inside the integrand.
    """
    if goal_risk is None:
        goal_risk = ga(model, goal)
    if not additive:
        return wa(model, path.end, goal, goal_risk) * _integrate(path, dt, model.ga_points)
    risky = goal_risk > 0

    def scaled(lat, lon, alt):
        w = np.array([altitude_scale(a - goal.alt, risky, model.h_upper, model.h_lower) for a in alt])
        return w * model.ga_points(lat, lon, alt)

    return _integrate(path, dt, scaled)


def cone_samples(s: GeoState, cone: ConeSpec, gamma_bg: float):
    """Positions of the look-ahead samples, each shaped (n_r, n_l, n_p)."""
    theta_h, theta_v = cone.ray_angles(s.course, gamma_bg)
    k = np.arange(1, cone.n_p + 1) * cone.spacing
    TH, TV, K = np.meshgrid(theta_h, theta_v, k, indexing="ij")
    lat, lon = destination(s.lat, s.lon, K, TH)
    alt = s.alt - K * np.tan(TV)
    return lat, lon, alt


def lookahead_cost(model: RiskModel, s: GeoState, cone: ConeSpec, gamma_bg: float,
                   goal: GeoState, goal_risk: float | None = None) -> float:
    """Mean airspace risk over the forward cone, altitude scaled."""
    lat, lon, alt = cone_samples(s, cone, gamma_bg)
    mean = float(np.mean(model.ga_points(lat.ravel(), lon.ravel(), alt.ravel())))
    return wa(model, s, goal, goal_risk) * mean


def ground_weights(model: RiskModel, lat, lon, alt, goal: GeoState, d_initial: float,
                   ground_elev: float = 0.0):
    """Altitude and remaining-traversal downscaling of ground risk."""
    w1 = np.clip(1.0 - (np.asarray(alt) - ground_elev) / model.crossover_ft, 0.0, 1.0)
    w1 = np.where(np.asarray(alt) > model.crossover_ft, 0.0, w1)
    if d_initial > 0:
        w2 = np.clip(gc_distance(lat, lon, goal.lat, goal.lon) / d_initial, 0.0, 1.0)
    else:
        w2 = np.zeros(np.shape(lat))
    return w1, w2


def ground_heuristic(model: RiskModel, segment: Trajectory, goal: GeoState | None = None,
                     d_initial: float = 0.0, ground_elev: float = 0.0,
                     weighted: bool = True, dt: float = SIGMA_G_DT) -> float:
    """Time-averaged normalized overflown population between two states.

    Samples above the crossover altitude contribute nothing. With
    ``weighted=False`` both adaptive weights are taken as 1.
    """
    segment.check_monotone()
    span = segment.duration
    if span <= 0:
        raise ValueError("segment must advance in time")
    if model.raster is None:
        return 0.0
    eta_max = model.raster.eta_max
    if eta_max <= 0:
        return 0.0
    times, (lat, lon, alt, _) = segment.resample(dt)
    eta = model.eta_points(lat, lon)
    if weighted:
        w1, w2 = ground_weights(model, lat, lon, alt, goal, d_initial, ground_elev)
        eta = w1 * w2 * eta
    else:
        eta = np.where(alt > model.crossover_ft, 0.0, eta)
    return float(np.clip(np.trapezoid(eta, times) / (eta_max * span), 0.0, 1.0))


def sigma_a(model: RiskModel, path: Trajectory, dt: float = SIGMA_A_DT) -> float:
    """Unweighted exposure to airspace risk along ``path``, in seconds."""
    if len(path) == 0:
        raise ValueError("empty path")
    return _integrate(path, dt, model.ga_points)


def sigma_g(model: RiskModel, path: Trajectory, dt: float = SIGMA_G_DT) -> float:
    """Unweighted exposure to overflown population along ``path``, in seconds."""
    if len(path) == 0:
        raise ValueError("empty path")
    return _integrate(path, dt, lambda lat, lon, alt: model.eta_points(lat, lon))


def blend_weight(mu_kappa: float, mu_eta: float) -> float:
    if mu_kappa + mu_eta <= 0:
        raise ValueError("mean densities are both zero; joint risk is undefined")
    return mu_eta / (mu_kappa + mu_eta)


def sigma_t(s_a: float, s_g: float, mu_kappa: float, mu_eta: float) -> float:
    a = blend_weight(mu_kappa, mu_eta)
    return a * s_a + (1.0 - a) * s_g


def relative_difference(s_search: float, s_dubins: float) -> float:
    m = max(s_search, s_dubins)
    if m <= 0:
        return 0.0
    return abs(s_search - s_dubins) / m
