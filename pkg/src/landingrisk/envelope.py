"""Engine-out glide envelope, wind, and the discrete action set."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from landingrisk.geodesy import G_FPS2, KT_TO_FPS


@dataclass(frozen=True)
class Wind:
    """Steady wind. ``from_dir`` is the direction it blows from, radians."""

    speed_kt: float = 0.0
    from_dir: float = 0.0

    def __post_init__(self):
        if self.speed_kt < 0:
            raise ValueError("wind speed must be nonnegative")

    @property
    def velocity(self) -> tuple[float, float]:
        """(east, north) air-mass velocity in ft/s."""
        v = self.speed_kt * KT_TO_FPS
        return -v * math.sin(self.from_dir), -v * math.cos(self.from_dir)

    def headwind(self, heading: float) -> float:
        """Headwind component in knots for travel along ``heading`` (negative is tailwind)."""
        return self.speed_kt * math.cos(self.from_dir - heading)


@dataclass(frozen=True)
class GlideEnvelope:
    v_bg_kt: float = 76.0
    v_fe_kt: float = 107.0
    gamma_bg: float = math.radians(4.9)
    bank_max: float = math.radians(30.0)
    gamma_max_factor: float = 1.5

    def __post_init__(self):
        if not 0 < self.v_bg_kt < self.v_fe_kt:
            raise ValueError("need 0 < v_bg < v_FE")
        if self.gamma_bg <= 0:
            raise ValueError("best-glide angle must be a positive descent angle")
        if not 0 < self.bank_max < math.pi / 2:
            raise ValueError("bank limit must lie in (0, 90) degrees")
        if self.gamma_max_factor < 1:
            raise ValueError("gamma_max_factor must be at least 1")

    @property
    def v_ref_kt(self) -> float:
        return 0.5 * (self.v_bg_kt + self.v_fe_kt)

    @property
    def v_ref(self) -> float:
        """Reference airspeed, ft/s."""
        return self.v_ref_kt * KT_TO_FPS

    @property
    def turn_radius(self) -> float:
        return self.v_ref ** 2 / (G_FPS2 * math.tan(self.bank_max))

    @property
    def max_curvature(self) -> float:
        return 1.0 / self.turn_radius

    @property
    def gamma_max(self) -> float:
        return self.gamma_bg * self.gamma_max_factor

    @property
    def gamma_band(self) -> tuple[float, float]:
        return self.gamma_bg, self.gamma_max

    @property
    def gamma_turn(self) -> float:
        """Air-relative descent angle in a coordinated turn at the bank limit."""
        return math.atan(math.tan(self.gamma_bg) / math.cos(self.bank_max) ** 1.5)

    def air_angle(self, dchi: float) -> float:
        return self.gamma_bg if dchi == 0 else self.gamma_turn

    def ground_angle(self, headwind_kt: float = 0.0, gamma_air: float | None = None) -> float:
        """Flight-path angle over the ground for a given headwind component."""
        g = self.gamma_bg if gamma_air is None else gamma_air
        gs = self.v_ref - headwind_kt * KT_TO_FPS
        if gs <= 0:
            return math.pi / 2
        return math.atan(self.v_ref * math.tan(g) / gs)


@dataclass(frozen=True)
class ActionSet:
    """Course changes applied per expansion and the straight-step length."""

    course_changes: tuple = tuple(math.radians(d) for d in (0.0, -22.5, 22.5, -45.0, 45.0))
    step: float = 1000.0

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("segment length must be positive")
        if not self.course_changes:
            raise ValueError("empty action set")

    def table(self, envelope: GlideEnvelope) -> np.ndarray:
        """Rows of (course change, air descent angle, air arc length)."""
        rows = []
        for d in self.course_changes:
            if d == 0:
                rows.append((0.0, envelope.gamma_bg, self.step))
            else:
                rows.append((d, envelope.gamma_turn, envelope.turn_radius * abs(d)))
        return np.array(rows)
