"""Timed state sequences shared by the planners and risk integrals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from landingrisk.geodesy import GeoState, wrap_angle


def time_grid(t0: float, t1: float, dt: float) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t1 <= t0:
        return np.array([t0])
    n = int(np.floor((t1 - t0) / dt + 1e-9))
    times = t0 + dt * np.arange(n + 1)
    if t1 - times[-1] > 1e-9 * max(1.0, dt):
        times = np.append(times, t1)
    else:
        times[-1] = t1
    return times


@dataclass
class Trajectory:
    """Samples of a flown path.

    ``curvature`` is the commanded (air-relative) path curvature in 1/ft on
    the segment that ends at each sample; the first entry is 0.
    """

    t: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    alt: np.ndarray
    course: np.ndarray
    curvature: np.ndarray | None = None

    def __post_init__(self):
        for name in ("t", "lat", "lon", "alt", "course"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.t.size
        if self.curvature is None:
            self.curvature = np.zeros(n)
        self.curvature = np.asarray(self.curvature, dtype=float)
        if any(getattr(self, k).size != n for k in ("lat", "lon", "alt", "course", "curvature")):
            raise ValueError("trajectory arrays must have equal length")

    def __len__(self):
        return int(self.t.size)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0]) if len(self) else 0.0

    def state(self, i: int) -> GeoState:
        return GeoState(float(self.lat[i]), float(self.lon[i]), float(self.alt[i]), float(self.course[i]))

    @property
    def start(self) -> GeoState:
        return self.state(0)

    @property
    def end(self) -> GeoState:
        return self.state(-1)

    def check_monotone(self) -> None:
        if len(self) == 0:
            raise ValueError("empty path")
        if np.any(np.diff(self.t) < 0):
            raise ValueError("path timestamps must be non-decreasing")

    def interpolate(self, times):
        """Linear interpolation of lat, lon, alt and unwrapped course."""
        times = np.asarray(times, dtype=float)
        course = np.unwrap(self.course)
        lat = np.interp(times, self.t, self.lat)
        lon = np.interp(times, self.t, self.lon)
        alt = np.interp(times, self.t, self.alt)
        return lat, lon, alt, wrap_angle(np.interp(times, self.t, course))

    def resample(self, dt: float):
        """Time grid with step ``dt`` from the start, closed by the end time."""
        self.check_monotone()
        times = time_grid(float(self.t[0]), float(self.t[-1]), dt)
        return times, self.interpolate(times)

    def concat(self, other: "Trajectory") -> "Trajectory":
        """Append ``other`` (its first sample duplicates our last and is dropped)."""
        if len(self) == 0:
            return other
        shift = self.t[-1] - other.t[0]
        sl = slice(1, None)
        return Trajectory(
            np.concatenate([self.t, other.t[sl] + shift]),
            np.concatenate([self.lat, other.lat[sl]]),
            np.concatenate([self.lon, other.lon[sl]]),
            np.concatenate([self.alt, other.alt[sl]]),
            np.concatenate([self.course, other.course[sl]]),
            np.concatenate([self.curvature, other.curvature[sl]]),
        )

    def to_dict(self) -> dict:
        return {
            "t": self.t.tolist(),
            "lat": self.lat.tolist(),
            "lon": self.lon.tolist(),
            "alt_ft": self.alt.tolist(),
            "course_deg": np.degrees(self.course).tolist(),
            "curvature": self.curvature.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        return cls(d["t"], d["lat"], d["lon"], d["alt_ft"], np.radians(d["course_deg"]), d.get("curvature"))

    @classmethod
    def from_states(cls, states, times) -> "Trajectory":
        return cls(times, [s.lat for s in states], [s.lon for s in states],
                   [s.alt for s in states], [s.course for s in states])
