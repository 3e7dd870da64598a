"""Runway catalog, approach fixes and utility-based site ranking."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

from landingrisk.envelope import GlideEnvelope, Wind
from landingrisk.geodesy import (NM_FT, GeoState, forward_destination, great_circle_distance,
                                 initial_bearing, wrap_angle)

FINAL_DISTANCE_FT = NM_FT
WIND_GUARD_EPS = 1e-9


@dataclass(frozen=True)
class LandingSite:
    """A runway end. (lat, lon) is the touchdown point, heading is true, radians."""

    id: str
    lat: float
    lon: float
    elev_ft: float
    heading: float
    length_ft: float
    width_ft: float
    commercial: bool = False
    military: bool = False

    def __post_init__(self):
        if self.length_ft <= 0 or self.width_ft <= 0:
            raise ValueError(f"{self.id}: runway dimensions must be positive")
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    @property
    def touchdown(self) -> GeoState:
        return GeoState(self.lat, self.lon, self.elev_ft, self.heading)

    def to_dict(self) -> dict:
        return {
            "id": self.id, "lat": self.lat, "lon": self.lon, "elev_ft": self.elev_ft,
            "true_heading_deg": math.degrees(self.heading),
            "length_ft": self.length_ft, "width_ft": self.width_ft,
            "commercial": bool(self.commercial), "military": bool(self.military),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LandingSite":
        return cls(str(d["id"]), float(d["lat"]), float(d["lon"]), float(d["elev_ft"]),
                   math.radians(float(d["true_heading_deg"])), float(d["length_ft"]),
                   float(d["width_ft"]), bool(d.get("commercial", False)),
                   bool(d.get("military", False)))


def load_catalog(path=None) -> list[LandingSite]:
    """Read a runway-end catalog; without a path the bundled sample is used."""
    if path is None:
        text = resources.files("landingrisk").joinpath("data/sites.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    data = json.loads(text)
    if isinstance(data, dict):
        data = data["sites"]
    return [LandingSite.from_dict(d) for d in data]


def save_catalog(sites, path) -> None:
    with open(path, "w") as fh:
        json.dump([s.to_dict() for s in sites], fh, indent=1)


def approach_fix(site: LandingSite, gamma_bg: float, d_final: float = FINAL_DISTANCE_FT) -> GeoState:
    """Virtual fix on the extended centreline, inbound course, on the glide line."""
    if gamma_bg < 0:
        raise ValueError("gamma_bg is a descent magnitude and must be nonnegative")
    p = forward_destination(site.touchdown, d_final, wrap_angle(site.heading - math.pi))
    return GeoState(p.lat, p.lon, site.elev_ft + d_final * math.tan(gamma_bg), site.heading)


def slope_to_fix(s0: GeoState, fix: GeoState) -> float:
    d = great_circle_distance(s0, fix)
    if d == 0:
        raise ValueError("slope to the fix is undefined directly above it")
    return math.atan((s0.alt - fix.alt) / d)


def headwind_component(site: LandingSite, wind_speed: float, wind_from: float) -> float:
    if wind_speed < 0:
        raise ValueError("wind speed must be nonnegative")
    return wind_speed * math.cos(wind_from - site.heading)


@dataclass(frozen=True)
class UtilityWeights:
    slope: float = 0.5
    wind: float = 0.1
    dimension: float = 0.05
    commercial: float = 0.15
    military: float = 0.15


@dataclass
class SiteEvaluation:
    site: LandingSite
    fix: GeoState
    slope: float
    headwind_kt: float
    utility: float = 0.0
    terms: dict = field(default_factory=dict)


@dataclass
class Ranking:
    evaluations: list
    status: str = "ok"
    excluded: list = field(default_factory=list)

    def __bool__(self):
        return bool(self.evaluations)

    def __len__(self):
        return len(self.evaluations)

    def __getitem__(self, i):
        return self.evaluations[i]

    def __iter__(self):
        return iter(self.evaluations)


def direct_ground_angle(envelope: GlideEnvelope, s0: GeoState, fix: GeoState, wind: Wind) -> float:
    """Best-glide angle over the ground flying straight from ``s0`` to the fix."""
    brg = initial_bearing(s0, fix)
    return envelope.ground_angle(wind.headwind(brg))


def evaluate_sites(sites, s0: GeoState, wind: Wind, gamma_bg: float) -> list[SiteEvaluation]:
    out = []
    for site in sites:
        fix = approach_fix(site, gamma_bg)
        out.append(SiteEvaluation(site, fix, slope_to_fix(s0, fix),
                                  headwind_component(site, wind.speed_kt, wind.from_dir)))
    return out


def score(evals: list[SiteEvaluation], weights: UtilityWeights = UtilityWeights()) -> None:
    """Fill utilities in place, normalizing each term by its supremum over the set."""
    if not evals:
        return
    g_max = max(e.slope for e in evals)
    hw = [e.headwind_kt for e in evals]
    hw_max, hw_min = max(hw), min(hw)
    l_max = max(e.site.length_ft for e in evals)
    w_max = max(e.site.width_ft for e in evals)
    for e in evals:
        u_g = e.slope / g_max if g_max > 0 else 0.0
        if hw_max > 0:
            u_w = e.headwind_kt / hw_max
        else:
            # every site has calm or tailwind; rescale so larger headwind still scores higher
            u_w = (e.headwind_kt - hw_min) / (hw_max - hw_min + WIND_GUARD_EPS)
        u_d = 0.5 * (e.site.length_ft / l_max + e.site.width_ft / w_max)
        u_c = 1.0 - float(e.site.commercial)
        u_m = 1.0 - float(e.site.military)
        e.terms = {"slope": u_g, "wind": u_w, "dimension": u_d, "commercial": u_c, "military": u_m}
        e.utility = (weights.slope * u_g + weights.wind * u_w + weights.dimension * u_d
                     + weights.commercial * u_c + weights.military * u_m)


def rank_sites(sites, s0: GeoState, wind: Wind = Wind(), weights: UtilityWeights = UtilityWeights(),
               envelope: GlideEnvelope | None = None, margin: float = 0.0) -> Ranking:
    """Rank reachable sites by utility, best first; ties go to the smaller id.

    A site is reachable when the slope to its fix is positive and, if an
    envelope is given, no shallower than the wind-corrected direct glide
    angle plus ``margin``.
    """
    sites = list(sites)
    if not sites:
        raise ValueError("no candidate sites")
    env = envelope or GlideEnvelope()
    evals = evaluate_sites(sites, s0, wind, env.gamma_bg)
    keep, dropped = [], []
    for e in evals:
        need = 0.0
        if envelope is not None:
            need = direct_ground_angle(envelope, s0, e.fix, wind) + margin
        (keep if e.slope > 0 and e.slope >= need else dropped).append(e)
    score(keep, weights)
    keep.sort(key=lambda e: (-e.utility, e.site.id))
    return Ranking(keep, "ok" if keep else "no-reachable-site", [e.site.id for e in dropped])
