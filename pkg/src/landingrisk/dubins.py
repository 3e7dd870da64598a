"""Turn-straight-turn Dubins paths with a glide altitude profile and S-turn extension.

Geometry is solved in an east/north plane anchored midway between the
endpoints, with headings measured counter-clockwise from east (``psi``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from landingrisk.envelope import Wind
from landingrisk.geodesy import (TWO_PI, GeoState, LocalFrame, course_to_math, math_to_course,
                                 wrap_angle)
from landingrisk.risk_model import RiskModel, sigma_a, sigma_g, sigma_t
from landingrisk.trajectory import Trajectory

WORDS = ("LSL", "RSR", "LSR", "RSL")
LEFT, RIGHT = 1, -1
SIDES = {"left": LEFT, "right": RIGHT}
SAMPLE_FT = 5.0


def _centers(x, y, psi, r):
    left = (x - r * math.sin(psi), y + r * math.cos(psi))
    right = (x + r * math.sin(psi), y - r * math.cos(psi))
    return left, right


def planar_word(word: str, start, goal, r: float):
    """(arc1, straight, arc2) for one word, or None when the word does not exist."""
    x0, y0, p0 = start
    x1, y1, p1 = goal
    l0, r0 = _centers(x0, y0, p0, r)
    l1, r1 = _centers(x1, y1, p1, r)
    c0 = l0 if word[0] == "L" else r0
    c1 = l1 if word[2] == "L" else r1
    vx, vy = c1[0] - c0[0], c1[1] - c0[1]
    d = math.hypot(vx, vy)
    phi = math.atan2(vy, vx)
    if word[0] == word[2]:
        # coincident circles: a single arc, any tangent heading works
        theta, s = (phi, d) if d > 1e-9 * r else (p0, 0.0)
    else:
        if d < 2 * r:
            return None
        s = math.sqrt(max(d * d - 4 * r * r, 0.0))
        off = math.atan2(2 * r, s)
        theta = phi + off if word == "LSR" else phi - off
    a1 = wrap_angle(theta - p0) if word[0] == "L" else wrap_angle(p0 - theta)
    a2 = wrap_angle(p1 - theta) if word[2] == "L" else wrap_angle(theta - p1)
    # full-circle artefacts from rounding
    a1 = 0.0 if a1 > TWO_PI - 1e-10 else a1
    a2 = 0.0 if a2 > TWO_PI - 1e-10 else a2
    return a1, s, a2


def planar_lengths(x0, y0, p0, x1, y1, p1, r: float, split: bool = False):
    """Lengths of the four words for arrays of start poses to one goal pose, shape (n, 4).

    Words that do not exist are ``inf``. With ``split=True`` the turning and
    straight parts are returned separately.
    """
    x0, y0, p0 = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (x0, y0, p0))
    s0, c0 = np.sin(p0), np.cos(p0)
    s1, c1 = math.sin(p1), math.cos(p1)
    start_c = {"L": (x0 - r * s0, y0 + r * c0), "R": (x0 + r * s0, y0 - r * c0)}
    goal_c = {"L": (x1 - r * s1, y1 + r * c1), "R": (x1 + r * s1, y1 - r * c1)}
    out = np.full((x0.size, 4), np.inf)
    arcs = np.full((x0.size, 4), np.inf)
    for col, w in enumerate(WORDS):
        ax, ay = start_c[w[0]]
        bx, by = goal_c[w[2]]
        vx, vy = bx - ax, by - ay
        d = np.hypot(vx, vy)
        phi = np.arctan2(vy, vx)
        if w[0] == w[2]:
            theta, st = np.where(d > 1e-9 * r, phi, p0), d
            ok = np.ones_like(d, dtype=bool)
        else:
            ok = d >= 2 * r
            st = np.sqrt(np.maximum(d * d - 4 * r * r, 0.0))
            off = np.arctan2(2 * r, st)
            theta = phi + off if w == "LSR" else phi - off
        a1 = np.mod(theta - p0, TWO_PI) if w[0] == "L" else np.mod(p0 - theta, TWO_PI)
        a2 = np.mod(p1 - theta, TWO_PI) if w[2] == "L" else np.mod(theta - p1, TWO_PI)
        out[:, col] = np.where(ok, r * (a1 + a2) + st, np.inf)
        arcs[:, col] = np.where(ok, r * (a1 + a2), np.inf)
    if split:
        return arcs, out - np.where(np.isfinite(arcs), arcs, 0.0)
    return out


def _advance(x, y, psi, sign, length, r, s):
    """Pose after travelling ``s`` (array, 0..length) along one primitive."""
    if sign == 0:
        return x + s * np.cos(psi), y + s * np.sin(psi), np.full_like(s, psi)
    k = sign / r
    ang = psi + k * s
    px = x + (np.sin(ang) - math.sin(psi)) / k
    py = y - (np.cos(ang) - math.cos(psi)) / k
    return px, py, ang


@dataclass(frozen=True)
class DubinsPath:
    word: str
    arc1: float
    straight: float
    arc2: float
    radius: float
    start: GeoState
    goal: GeoState
    gamma: float
    frame_lat: float
    frame_lon: float
    s_turn: tuple | None = None  # (side, beta, n_units)
    feasible: bool = True

    @property
    def frame(self) -> LocalFrame:
        return LocalFrame(self.frame_lat, self.frame_lon)

    def segments(self) -> list[tuple[int, float]]:
        """Primitives as (turn sign, arc length); sign 0 is straight."""
        r = self.radius
        s1 = LEFT if self.word[0] == "L" else RIGHT
        s2 = LEFT if self.word[2] == "L" else RIGHT
        segs = [(s1, self.arc1 * r)]
        if self.s_turn is None:
            segs.append((0, self.straight))
        else:
            side, beta, n = self.s_turn
            fwd = 2 * r * n * math.sin(beta)
            lead = 0.5 * (self.straight - fwd)
            segs.append((0, lead))
            segs.append((side, r * beta))
            for i in range(n - 1):
                segs.append((-side if i % 2 == 0 else side, 2 * r * beta))
            segs.append((side, r * beta))
            segs.append((0, lead))
        segs.append((s2, self.arc2 * r))
        return [(sg, ln) for sg, ln in segs if ln > 0]

    @property
    def length(self) -> float:
        return sum(ln for _, ln in self.segments())

    @property
    def planar_length(self) -> float:
        """Length of the unextended word."""
        return self.radius * (self.arc1 + self.arc2) + self.straight

    @property
    def drop(self) -> float:
        return self.start.alt - self.goal.alt

    @property
    def commanded_gamma(self) -> float:
        return math.atan2(self.drop, self.length)

    def sample(self, step: float = SAMPLE_FT):
        """Arc length, local x, y, psi and curvature along the path."""
        fr = self.frame
        x, y = fr.to_local(self.start.lat, self.start.lon)
        x, y = float(x), float(y)
        psi = float(course_to_math(self.start.course))
        out_s, out_x, out_y, out_p, out_k = [np.zeros(1)], [np.array([x])], [np.array([y])], \
            [np.array([psi])], [np.zeros(1)]
        s0 = 0.0
        for sign, ln in self.segments():
            n = max(1, int(math.ceil(ln / step)))
            s = np.linspace(0.0, ln, n + 1)[1:]
            px, py, pp = _advance(x, y, psi, sign, ln, self.radius, s)
            out_s.append(s0 + s)
            out_x.append(px)
            out_y.append(py)
            out_p.append(pp)
            out_k.append(np.full(n, abs(sign) / self.radius))
            x, y, psi = float(px[-1]), float(py[-1]), float(pp[-1])
            s0 += ln
        return (np.concatenate(out_s), np.concatenate(out_x), np.concatenate(out_y),
                np.concatenate(out_p), np.concatenate(out_k))

    def end_pose(self):
        s, x, y, p, _ = self.sample(step=1e9)
        return float(x[-1]), float(y[-1]), float(p[-1])

    def trajectory(self, v_air: float, wind: Wind = Wind(), step: float = SAMPLE_FT,
                   t0: float = 0.0) -> Trajectory:
        """Fly the ground path at airspeed ``v_air`` (ft/s), crabbing into the wind."""
        s, x, y, psi, k = self.sample(step)
        we, wn = wind.velocity
        along = we * np.cos(psi) + wn * np.sin(psi)
        cross = -we * np.sin(psi) + wn * np.cos(psi)
        if np.any(np.abs(cross) >= v_air):
            raise ValueError("crosswind exceeds airspeed")
        gs = along + np.sqrt(v_air ** 2 - cross ** 2)
        if np.any(gs <= 0):
            raise ValueError("path not flyable against the wind")
        inv = 1.0 / gs
        t = t0 + np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(s))])
        lat, lon = self.frame.to_geo(x, y)
        # pin the endpoints to the exact states (the frame is exactly invertible, this only
        # removes accumulated rounding)
        lat[0], lon[0] = self.start.lat, self.start.lon
        alt = self.start.alt - self.drop * s / self.length if self.length > 0 else np.full_like(s, self.start.alt)
        alt[-1] = self.goal.alt
        return Trajectory(t, lat, lon, alt, math_to_course(psi), k)


def _local_poses(s0: GeoState, sN: GeoState):
    fr = LocalFrame(0.5 * (s0.lat + sN.lat), 0.5 * (s0.lon + sN.lon))
    x0, y0 = fr.to_local(s0.lat, s0.lon)
    x1, y1 = fr.to_local(sN.lat, sN.lon)
    start = (float(x0), float(y0), float(course_to_math(s0.course)))
    goal = (float(x1), float(y1), float(course_to_math(sN.course)))
    return fr, start, goal


def planar_words(s0: GeoState, sN: GeoState, radius: float, gamma: float) -> list[DubinsPath]:
    """Every existing TST word, ignoring altitude."""
    if radius <= 0:
        raise ValueError("turn radius must be positive")
    fr, start, goal = _local_poses(s0, sN)
    out = []
    for w in WORDS:
        sol = planar_word(w, start, goal, radius)
        if sol is not None:
            out.append(DubinsPath(w, sol[0], sol[1], sol[2], radius, s0, sN, gamma, fr.lat0, fr.lon0))
    return out


def solve(s0: GeoState, sN: GeoState, radius: float, gamma: float,
          band: tuple[float, float] | None = None) -> list[DubinsPath]:
    """Words whose altitude drop is flyable inside the descent-angle band.

    ``band`` defaults to ``(gamma, 1.5 * gamma)``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be a positive descent angle")
    lo, hi = band if band is not None else (gamma, 1.5 * gamma)
    drop = s0.alt - sN.alt
    out = []
    for p in planar_words(s0, sN, radius, gamma):
        L = p.planar_length
        if L * math.tan(lo) - 1e-9 <= drop <= L * math.tan(hi) + 1e-9:
            out.append(p)
    return out


def s_turn_parameters(extra: float, straight: float, radius: float):
    """(beta, n_units) weaving ``extra`` feet into a straight of length ``straight``.

    Units are left/right arc pairs of angle beta; an even count returns the
    path to its original line. Returns None when the weave does not fit.
    """
    if extra <= 0:
        return 0.0, 0
    cap = math.pi / 2 - 1.0
    n = int(math.ceil(extra / (2 * radius * cap) - 1e-12))
    n = max(2, n + (n % 2))
    target = extra / (2 * radius * n)
    if target > cap:
        n += 2
        target = extra / (2 * radius * n)
    beta = brentq(lambda b: b - math.sin(b) - target, 0.0, math.pi / 2, xtol=1e-14)
    if 2 * radius * n * math.sin(beta) > straight + 1e-9:
        return None
    return beta, n


def extend_s_turn(path: DubinsPath, excess_altitude: float, side: str = "left") -> DubinsPath:
    """Dissipate ``excess_altitude`` at the path's nominal glide angle by weaving.

    The weave stays on one side of the straight leg, within one turn
    diameter. When it cannot fit, the returned path has ``feasible=False``.
    """
    if excess_altitude < 0:
        raise ValueError("excess altitude must be nonnegative")
    if excess_altitude == 0:
        return path
    extra = excess_altitude / math.tan(path.gamma)
    params = s_turn_parameters(extra, path.straight, path.radius)
    if params is None:
        return replace(path, feasible=False)
    beta, n = params
    return replace(path, s_turn=(SIDES[side], beta, n))


def candidates(s0: GeoState, sN: GeoState, radius: float, gamma: float,
               band: tuple[float, float] | None = None) -> list[DubinsPath]:
    """Band-feasible words plus left and right S-turn variants of words with surplus altitude."""
    lo, hi = band if band is not None else (gamma, 1.5 * gamma)
    drop = s0.alt - sN.alt
    out = []
    for p in planar_words(s0, sN, radius, gamma):
        L = p.planar_length
        if drop < L * math.tan(lo) - 1e-9:
            continue
        if drop <= L * math.tan(hi) + 1e-9:
            out.append(p)
            continue
        excess = drop - L * math.tan(gamma)
        for side in ("left", "right"):
            q = extend_s_turn(p, excess, side)
            if q.feasible:
                out.append(q)
    return out


def _order_key(p: DubinsPath):
    side = 0 if p.s_turn is None else (1 if p.s_turn[0] == LEFT else 2)
    return WORDS.index(p.word), side


@dataclass
class DubinsChoice:
    path: DubinsPath
    trajectory: Trajectory
    sigma_a: float
    sigma_g: float
    sigma_t: float


def score_path(p: DubinsPath, model: RiskModel, v_air: float, wind: Wind = Wind(),
               t0: float = 0.0) -> DubinsChoice:
    traj = p.trajectory(v_air, wind, t0=t0)
    sa = sigma_a(model, traj)
    sg = sigma_g(model, traj)
    if model.mu_kappa + model.mu_eta > 0:
        st = sigma_t(sa, sg, model.mu_kappa, model.mu_eta)
    else:
        st = sa
    return DubinsChoice(p, traj, sa, sg, st)


def min_risk_select(paths, model: RiskModel, v_air: float, wind: Wind = Wind(),
                    metric: str = "airspace", t0: float = 0.0) -> DubinsChoice:
    """Lowest-risk candidate (sigma_a for "airspace", sigma_t for "joint")."""
    paths = [p for p in paths if p.feasible]
    if not paths:
        raise ValueError("no candidate paths")
    best, best_key = None, None
    for p in sorted(paths, key=_order_key):
        try:
            c = score_path(p, model, v_air, wind, t0)
        except ValueError:
            continue
        risk = c.sigma_a if metric == "airspace" else c.sigma_t
        if best is None or risk < best_key:
            best, best_key = c, risk
    if best is None:
        raise ValueError("no candidate path is flyable in this wind")
    return best
