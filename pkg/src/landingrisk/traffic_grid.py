"""ADS-B ingestion and the normalized 3-D air-traffic density grid."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from landingrisk.geodesy import FT_PER_M, GeoPoint, destination, gc_bearing, gc_distance

log = logging.getLogger(__name__)

GRID_FORMAT = "landingrisk-grid"
GRID_VERSION = 1


@dataclass(frozen=True)
class GridSpec:
    lat_bounds: tuple[float, float]
    lon_bounds: tuple[float, float]
    alt_bounds: tuple[float, float]
    n_lat: int = 30
    n_lon: int = 30
    n_alt: int = 10

    def __post_init__(self):
        for name in ("lat_bounds", "lon_bounds", "alt_bounds"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must be strictly increasing, got {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        for name in ("n_lat", "n_lon", "n_alt"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
            object.__setattr__(self, name, int(getattr(self, name)))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_lat, self.n_lon, self.n_alt)

    def edges(self):
        return (
            np.linspace(*self.lat_bounds, self.n_lat + 1),
            np.linspace(*self.lon_bounds, self.n_lon + 1),
            np.linspace(*self.alt_bounds, self.n_alt + 1),
        )

    def cell_index(self, lat, lon, alt):
        """Cell indices for points; ``-1`` marks points outside the grid.

        Cells are half-open ``[lo, hi)`` on every axis, so a point sitting
        on the global upper bound belongs to no cell.
        """
        out = []
        for edges, v in zip(self.edges(), (lat, lon, alt)):
            v = np.asarray(v, dtype=float)
            i = np.searchsorted(edges, v, side="right") - 1
            bad = (i < 0) | (i >= len(edges) - 1) | ~np.isfinite(v)
            out.append(np.where(bad, -1, i))
        i, j, k = out
        inside = (i >= 0) & (j >= 0) & (k >= 0)
        return np.where(inside, i, -1), np.where(inside, j, -1), np.where(inside, k, -1)

    def to_dict(self) -> dict:
        return {
            "lat_bounds": list(self.lat_bounds),
            "lon_bounds": list(self.lon_bounds),
            "alt_bounds": list(self.alt_bounds),
            "divisions": [self.n_lat, self.n_lon, self.n_alt],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        n = d.get("divisions", [30, 30, 10])
        return cls(tuple(d["lat_bounds"]), tuple(d["lon_bounds"]), tuple(d["alt_bounds"]), *n)


@dataclass(frozen=True)
class AirspaceGrid:
    """Raw per-cell counts plus their normalization by the maximum count."""

    spec: GridSpec
    counts: np.ndarray
    normalized: np.ndarray = field(repr=False)
    kappa_max: float
    source: str = "adsb"

    @classmethod
    def from_counts(cls, spec: GridSpec, counts, source: str = "adsb") -> "AirspaceGrid":
        counts = np.asarray(counts)
        if counts.shape != spec.shape:
            raise ValueError(f"counts shape {counts.shape} != grid shape {spec.shape}")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        kmax = float(counts.max()) if counts.size else 0.0
        if kmax > 0:
            norm = counts / kmax
        else:
            # empty input: keep the sentinel and skip the division
            norm = np.zeros(spec.shape)
        counts.setflags(write=False)
        norm.setflags(write=False)
        return cls(spec, counts, norm, kmax, source)

    @classmethod
    def from_values(cls, spec: GridSpec, values, source: str) -> "AirspaceGrid":
        """Wrap precomputed costs in [0, 1] (e.g. a proximity heatmap) unscaled."""
        values = np.asarray(values, dtype=float)
        if values.shape != spec.shape:
            raise ValueError(f"values shape {values.shape} != grid shape {spec.shape}")
        if np.any(values < 0) or np.any(values > 1):
            raise ValueError("heatmap values must lie in [0, 1]")
        values.setflags(write=False)
        return cls(spec, values, values, 1.0, source)

    @classmethod
    def empty(cls, spec: GridSpec) -> "AirspaceGrid":
        return cls.from_counts(spec, np.zeros(spec.shape, dtype=np.int64))

    @property
    def mean(self) -> float:
        return mean_density(self)

    @property
    def occupancy(self) -> float:
        """Fraction of cells holding any traffic."""
        return float(np.count_nonzero(self.counts)) / self.counts.size

    def values_at(self, lat, lon, alt):
        i, j, k = self.spec.cell_index(lat, lon, alt)
        ok = i >= 0
        out = np.zeros(np.shape(i))
        out[ok] = self.normalized[i[ok], j[ok], k[ok]]
        return out

    def to_dict(self) -> dict:
        integral = np.issubdtype(self.counts.dtype, np.integer)
        return {
            "format": GRID_FORMAT,
            "version": GRID_VERSION,
            "source": self.source,
            "spec": self.spec.to_dict(),
            "counts": self.counts.astype(int if integral else float).tolist(),
            "kappa_max": self.kappa_max,
            "mean": self.mean,
            "occupancy": self.occupancy,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def from_dict(cls, d: dict) -> "AirspaceGrid":
        if d.get("format") != GRID_FORMAT:
            raise ValueError(f"not a grid file (format={d.get('format')!r})")
        if d.get("version") != GRID_VERSION:
            raise ValueError(f"unsupported grid version {d.get('version')}")
        spec = GridSpec.from_dict(d["spec"])
        counts = np.asarray(d["counts"])
        source = d.get("source", "adsb")
        if source != "adsb":
            return cls.from_values(spec, counts, source)
        return cls.from_counts(spec, counts, source)

    @classmethod
    def load(cls, path) -> "AirspaceGrid":
        return cls.from_dict(json.loads(Path(path).read_text()))


def density_at(grid: AirspaceGrid, p) -> float:
    """Normalized density of the cell containing ``p``; 0 outside the grid."""
    return float(grid.values_at(p.lat, p.lon, p.alt)[()])


def mean_density(grid: AirspaceGrid, denominator: str = "sum") -> float:
    """Mean normalized density.

    ``denominator="sum"`` divides by ``n_lat + n_lon + n_alt`` (the reference
    definition); ``"cells"`` divides by the number of cells instead.
    """
    s = grid.spec
    total = float(np.sum(grid.normalized))
    if denominator == "sum":
        return total / (s.n_lat + s.n_lon + s.n_alt)
    if denominator == "cells":
        return total / (s.n_lat * s.n_lon * s.n_alt)
    raise ValueError(f"unknown denominator {denominator!r}")


def trajectory_length(lat, lon, alt) -> float:
    """3-D polyline length in feet."""
    lat, lon, alt = (np.asarray(a, dtype=float) for a in (lat, lon, alt))
    horiz = gc_distance(lat[:-1], lon[:-1], lat[1:], lon[1:])
    return float(np.sum(np.hypot(horiz, np.diff(alt))))


def resample_arrays(lat, lon, alt, d_step: float = 100.0):
    """Resample a polyline to points spaced ``d_step`` apart in 3-D arc length.

    Returns ``ceil(L / d_step)`` points starting at the first vertex. Horizontal
    position follows the great circle between fixes and altitude is linear.
    """
    if d_step <= 0:
        raise ValueError("d_step must be positive")
    lat, lon, alt = (np.asarray(a, dtype=float) for a in (lat, lon, alt))
    if lat.size < 2:
        return lat[:0], lon[:0], alt[:0]
    horiz = gc_distance(lat[:-1], lon[:-1], lat[1:], lon[1:])
    seg = np.hypot(horiz, np.diff(alt))
    total = float(seg.sum())
    if total <= 0.0:
        log.warning("degenerate trajectory (zero length); no points produced")
        return lat[:0], lon[:0], alt[:0]
    # tolerance keeps an exact multiple of d_step from gaining a point to rounding
    n = max(1, math.ceil(total / d_step - 1e-9))
    s = np.arange(n) * d_step
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(seg[idx] > 0, (s - cum[idx]) / seg[idx], 0.0)
    brg = gc_bearing(lat[:-1], lon[:-1], lat[1:], lon[1:])
    rlat, rlon = destination(lat[idx], lon[idx], frac * horiz[idx], brg[idx])
    ralt = alt[idx] + frac * (alt[idx + 1] - alt[idx])
    return np.asarray(rlat), np.asarray(rlon), ralt


def resample_trajectory(traj, d_step: float = 100.0) -> list[GeoPoint]:
    """Resample a list of points (anything with lat/lon/alt) by arc length."""
    lat = [p.lat for p in traj]
    lon = [p.lon for p in traj]
    alt = [p.alt for p in traj]
    rlat, rlon, ralt = resample_arrays(lat, lon, alt, d_step)
    return [GeoPoint(float(a), float(b), float(c)) for a, b, c in zip(rlat, rlon, ralt)]


@dataclass
class TrajectorySet:
    """Recorded trajectories, each an ``(n, 3)`` array of lat, lon, alt_ft."""

    trajectories: list[np.ndarray]
    report: dict = field(default_factory=dict)

    def __post_init__(self):
        self.trajectories = [np.asarray(t, dtype=float).reshape(-1, 3) for t in self.trajectories]
        for t in self.trajectories:
            if len(t) < 2:
                raise ValueError("each trajectory needs at least two points")

    def __len__(self):
        return len(self.trajectories)

    @classmethod
    def from_points(cls, trajs) -> "TrajectorySet":
        return cls([[(p.lat, p.lon, p.alt) for p in t] for t in trajs])


def _count_chunk(trajs, spec: GridSpec, d_step: float):
    counts = np.zeros(spec.shape, dtype=np.int64)
    n_in = 0
    n_total = 0
    for t in trajs:
        lat, lon, alt = resample_arrays(t[:, 0], t[:, 1], t[:, 2], d_step)
        n_total += lat.size
        i, j, k = spec.cell_index(lat, lon, alt)
        ok = i >= 0
        n_in += int(ok.sum())
        np.add.at(counts, (i[ok], j[ok], k[ok]), 1)
    return counts, n_in, n_total


def build_density_grid(ts: TrajectorySet, spec: GridSpec, d_step: float = 100.0,
                       workers: int = 1) -> AirspaceGrid:
    """Count resampled trajectory points per cell and normalize by the maximum.

    With ``workers > 1`` trajectories are split across threads and the
    per-thread integer counts summed, which gives the same grid.
    """
    trajs = list(ts.trajectories)
    if workers > 1 and len(trajs) > 1:
        chunks = [trajs[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda c: _count_chunk(c, spec, d_step), chunks))
        counts = sum(p[0] for p in parts)
        n_in = sum(p[1] for p in parts)
        n_total = sum(p[2] for p in parts)
    else:
        counts, n_in, n_total = _count_chunk(trajs, spec, d_step)
    grid = AirspaceGrid.from_counts(spec, counts)
    log.info("grid built: %d/%d resampled points in bounds, occupancy %.3f",
             n_in, n_total, grid.occupancy)
    return grid


def read_adsb_csv(path, gap_s: float = 120.0, opensky: bool = False) -> TrajectorySet:
    """Read an ADS-B log into trajectories.

    Expected columns are ``time,icao24,lat,lon,alt_ft``. With ``opensky=True``
    the altitude comes from ``baroaltitude`` in meters instead. Rows are
    grouped by ``icao24`` and split wherever consecutive reports are more
    than ``gap_s`` seconds apart. Rows with missing or negative altitude are
    dropped and counted in ``report``.
    """
    df = pd.read_csv(path)
    if opensky:
        if "baroaltitude" not in df.columns:
            raise ValueError("opensky mode needs a 'baroaltitude' column")
        df["alt_ft"] = df["baroaltitude"] * FT_PER_M
    missing = {"time", "icao24", "lat", "lon", "alt_ft"} - set(df.columns)
    if missing:
        raise ValueError(f"ADS-B file is missing columns: {sorted(missing)}")
    n_rows = len(df)
    bad = df[["time", "lat", "lon", "alt_ft"]].isna().any(axis=1) | (df["alt_ft"] < 0)
    df = df.loc[~bad].sort_values(["icao24", "time"], kind="mergesort")
    trajs = []
    short = 0
    for _, g in df.groupby("icao24", sort=True):
        t = g["time"].to_numpy(dtype=float)
        seg_id = np.concatenate([[0], np.cumsum(np.diff(t) > gap_s)])
        pts = g[["lat", "lon", "alt_ft"]].to_numpy(dtype=float)
        for s in np.unique(seg_id):
            part = pts[seg_id == s]
            if len(part) < 2:
                short += 1
                continue
            trajs.append(part)
    report = {
        "rows": n_rows,
        "dropped_bad_altitude_or_missing": int(bad.sum()),
        "trajectories": len(trajs),
        "discarded_single_point": short,
    }
    log.info("ADS-B ingestion: %s", report)
    return TrajectorySet(trajs, report)
