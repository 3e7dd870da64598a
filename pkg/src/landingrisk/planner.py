"""Gradient-guided best-first search for non-ascending emergency landing paths."""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from landingrisk import dubins
from landingrisk.envelope import ActionSet, GlideEnvelope, Wind
from landingrisk.geodesy import (NM_FT, GeoState, LocalFrame, destination, gc_bearing, gc_distance,
                                 offset, wrap_pi)
from landingrisk.landing_sites import SiteEvaluation, rank_sites
from landingrisk.risk_model import (SIGMA_A_DT, SIGMA_G_DT, ConeSpec, RiskModel, altitude_scale,
                                    ground_weights, sigma_a, sigma_g, sigma_t)
from landingrisk.trajectory import Trajectory, time_grid

AIRSPACE_WEIGHTS = (0.2, 0.2, 0.1, 0.0, 0.5)
JOINT_WEIGHTS = (0.1, 0.1, 0.05, 0.5, 0.25)
ADMISSIBLE_WEIGHTS = (0.0, 1.0, 0.0, 0.0, 0.0)
HEURISTIC_NAMES = ("descent_angle", "remaining_distance", "heading", "ground", "lookahead")


@dataclass
class PlannerConfig:
    envelope: GlideEnvelope = field(default_factory=GlideEnvelope)
    actions: ActionSet = field(default_factory=ActionSet)
    mode: str = "airspace"
    weights: tuple | None = None
    cone: ConeSpec | None = None
    h_cutoff: float = 500.0
    gamma_span: float = math.radians(10.0)
    descent_margin: float = math.radians(1.0)
    remaining_cap: float = 2.0
    heading_gate: float = 3.0 * NM_FT
    goal_min: float = 0.25 * NM_FT
    goal_max: float = 1.5 * NM_FT
    goal_course_tol: float = math.radians(30.0)
    surplus_max: float = 800.0
    entry_distance: float = 0.5 * NM_FT
    max_expansions: int = 1500
    avoid_nofly: bool = True
    additive_scale: bool = False
    max_sites: int = 3
    reach_margin: float = 0.0
    dt: float = SIGMA_A_DT

    def __post_init__(self):
        if self.mode not in ("airspace", "joint"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.weights is not None and min(self.weights) < 0:
            raise ValueError("heuristic weights must be nonnegative")
        if self.max_expansions < 1:
            raise ValueError("max_expansions must be positive")

    @property
    def heuristic_weights(self) -> np.ndarray:
        if self.weights is not None:
            return np.asarray(self.weights, dtype=float)
        return np.asarray(AIRSPACE_WEIGHTS if self.mode == "airspace" else JOINT_WEIGHTS)

    @property
    def cone_spec(self) -> ConeSpec:
        return self.cone if self.cone is not None else ConeSpec(spacing=10.0 * self.actions.step)


@dataclass
class PlanResult:
    status: str
    path: Trajectory | None = None
    method: str = "search"
    site_id: str | None = None
    sigma_a: float = float("nan")
    sigma_g: float = float("nan")
    sigma_t: float = float("nan")
    runtime_ms: float = 0.0
    expansions: int = 0
    outcome: str = ""
    search: "PlanResult | None" = None
    dubins: "PlanResult | None" = None
    trace: list = field(default_factory=list)
    attempts: list = field(default_factory=list)
    g: float = float("nan")  # search cost of the node where the closing segment starts

    @property
    def ok(self) -> bool:
        return self.status == "success"

    def to_dict(self, model: RiskModel | None = None) -> dict:
        d = {
            "status": self.status, "method": self.method, "outcome": self.outcome,
            "site_id": self.site_id, "sigma_a": self.sigma_a, "sigma_g": self.sigma_g,
            "sigma_t": self.sigma_t, "runtime_ms": self.runtime_ms, "expansions": self.expansions,
        }
        if self.path is not None:
            d["path"] = self.path.to_dict()
            if model is not None:
                p = self.path
                d["path"]["ga"] = model.ga_points(p.lat, p.lon, p.alt).tolist()
                d["path"]["eta"] = model.eta_points(p.lat, p.lon).tolist()
        for k in ("search", "dubins"):
            sub = getattr(self, k)
            if sub is not None:
                d[k] = sub.to_dict()
        return d


def segment_offsets(course: float, dchi: float, air_len: float, radius: float, tau, v: float):
    """Air-mass east/north displacement and heading after time ``tau`` on one action."""
    tau = np.asarray(tau, dtype=float)
    d = v * tau
    if dchi == 0:
        return d * math.sin(course), d * math.cos(course), np.full(tau.shape, course)
    sgn = 1.0 if dchi > 0 else -1.0
    chi = course + sgn * d / radius
    east = sgn * radius * (math.cos(course) - np.cos(chi))
    north = sgn * radius * (np.sin(chi) - math.sin(course))
    return east, north, chi


class _Segment:
    __slots__ = ("tau", "lat", "lon", "alt", "course", "curv")


def fly_actions(state: GeoState, table, env: GlideEnvelope, wind: Wind,
                dt: float = SIGMA_A_DT) -> list:
    """Samples of each action in ``table`` flown from ``state`` every ``dt`` seconds."""
    v = env.v_ref
    we, wn = wind.velocity
    taus, easts, norths, chis = [], [], [], []
    for dchi, _, air_len in table:
        tau = time_grid(0.0, air_len / v, dt)
        east, north, chi = segment_offsets(state.course, dchi, air_len, env.turn_radius, tau, v)
        taus.append(tau)
        easts.append(east + we * tau)
        norths.append(north + wn * tau)
        chis.append(chi)
    lat, lon = offset(state.lat, state.lon, np.concatenate(easts), np.concatenate(norths))
    cuts = np.cumsum([t.size for t in taus])[:-1]
    segs = []
    for (dchi, gamma_air, _), tau, la, lo, chi in zip(table, taus, np.split(lat, cuts),
                                                      np.split(lon, cuts), chis):
        seg = _Segment()
        seg.tau = tau
        seg.lat = la
        seg.lon = lo
        seg.lat[0], seg.lon[0] = state.lat, state.lon
        seg.alt = state.alt - v * tau * math.tan(gamma_air)
        seg.course = chi
        seg.curv = np.full(tau.shape, 0.0 if dchi == 0 else 1.0 / env.turn_radius)
        seg.curv[0] = 0.0
        segs.append(seg)
    return segs


def fly_action(state: GeoState, dchi: float, gamma_air: float, air_len: float,
               env: GlideEnvelope, wind: Wind, dt: float = SIGMA_A_DT) -> _Segment:
    """Samples of one action flown from ``state`` every ``dt`` seconds."""
    return fly_actions(state, [(dchi, gamma_air, air_len)], env, wind, dt)[0]


@dataclass
class _Node:
    state: GeoState
    t: float
    raw: float  # unscaled airspace-risk integral from the start, seconds
    g: float
    h: float
    parent: int
    action: int
    hd2: float


class Search:
    """One best-first search from ``s0`` toward a site's approach fix."""

    def __init__(self, s0: GeoState, site: SiteEvaluation, model: RiskModel,
                 config: PlannerConfig = PlannerConfig(), wind: Wind = Wind()):
        self.s0 = s0
        self.site = site
        self.fix = site.fix
        self.model = model
        self.cfg = config
        self.wind = wind
        self.env = config.envelope
        self.table = config.actions.table(self.env)
        self.w = config.heuristic_weights
        self.cone = config.cone_spec
        self.d0 = float(gc_distance(s0.lat, s0.lon, self.fix.lat, self.fix.lon))
        self.goal_risk = float(model.ga_points(self.fix.lat, self.fix.lon, self.fix.alt)[0])
        self.start_risky = float(model.ga_points(s0.lat, s0.lon, s0.alt)[0]) > 0
        self.frame = LocalFrame(self.fix.lat, self.fix.lon)
        turn = min((abs(a) for a in config.actions.course_changes if a != 0), default=math.pi / 4)
        straight_drop = config.actions.step * math.tan(self.env.gamma_bg)
        self.key_res = (config.actions.step / 2, config.actions.step / 2, straight_drop / 2, turn / 2)
        self._tan_turn = math.tan(self.env.gamma_turn)
        back = self.fix.course + math.pi
        self.entry = (config.entry_distance * math.sin(back), config.entry_distance * math.cos(back))
        self.trace: list = []
        self.nodes: list[_Node] = []

    # --- heuristics -----------------------------------------------------
    def _glide_need(self, lat, lon, d):
        """Altitude needed above the fix to glide straight in, per state."""
        brg = gc_bearing(lat, lon, self.fix.lat, self.fix.lon)
        we, wn = self.wind.velocity
        hw = -(we * np.sin(brg) + wn * np.cos(brg))  # ft/s against the track
        v = self.env.v_ref
        gs = np.maximum(v - hw, 1e-6)
        tan_g = v * math.tan(self.env.gamma_bg) / gs
        return d * tan_g, tan_g

    def heuristic_terms(self, lat, lon, alt, course):
        lat = np.atleast_1d(lat)
        lon = np.atleast_1d(lon)
        alt = np.atleast_1d(alt)
        course = np.atleast_1d(course)
        d = gc_distance(lat, lon, self.fix.lat, self.fix.lon)
        _, tan_g = self._glide_need(lat, lon, d)
        dh = alt - self.fix.alt
        # the altitude budget is judged over the turn-constrained path to the fix
        need = self.glide_need(lat, lon, course, tan_g)
        L = need / tan_g
        g_req = np.arctan2(dh, L)
        target = np.arctan(tan_g) + self.cfg.descent_margin
        hd1 = np.clip(np.abs(g_req - target) / self.cfg.gamma_span, 0.0, 1.0)
        hd2 = np.clip(d / self.d0, 0.0, self.cfg.remaining_cap) if self.d0 > 0 else np.zeros_like(d)
        brg = gc_bearing(lat, lon, self.fix.lat, self.fix.lon)
        hchi = np.abs(wrap_pi(course - brg)) / math.pi
        hchi = np.where(d <= self.cfg.heading_gate, hchi, 0.0)
        return hd1, hd2, hchi

    def glide_need(self, lat, lon, course, tan_g):
        """Least altitude above the fix needed to fly a Dubins path to it.

        The path joins the extended centreline ``entry_distance`` before the
        fix, inside the goal region. Turns are charged at the banked descent
        angle and straights at the wind-corrected best-glide angle, matching
        how actions are flown.
        """
        x, y = self.frame.to_local(lat, lon)
        psi = np.pi / 2 - np.asarray(course)
        ex, ey = self.entry
        arcs, straight = dubins.planar_lengths(x, y, psi, ex, ey, math.pi / 2 - self.fix.course,
                                               self.env.turn_radius, split=True)
        tan_g = np.asarray(tan_g)[:, None]
        need = arcs * self._tan_turn + (straight + self.cfg.entry_distance) * tan_g
        return need.min(axis=1)

    def _suppressed(self, alt: float) -> bool:
        return self.start_risky and (self.s0.alt - alt) < self.cfg.h_cutoff

    def _scale(self, alt):
        return altitude_scale(alt - self.fix.alt, self.goal_risk > 0, self.model.h_upper, self.model.h_lower)

    # --- goal -------------------------------------------------------------
    def in_goal_region(self, s: GeoState) -> bool:
        d = float(gc_distance(s.lat, s.lon, self.fix.lat, self.fix.lon))
        if not self.cfg.goal_min <= d <= self.cfg.goal_max:
            return False
        if abs(float(wrap_pi(s.course - self.fix.course))) > self.cfg.goal_course_tol:
            return False
        need, _ = self._glide_need(s.lat, s.lon, d)
        surplus = s.alt - self.fix.alt - float(need)
        return 0.0 <= surplus <= self.cfg.surplus_max

    def closing_candidates(self, s: GeoState):
        return dubins.candidates(s, self.fix, self.env.turn_radius, self.env.gamma_bg, self.env.gamma_band)

    # --- search -----------------------------------------------------------
    def _key(self, s: GeoState):
        x, y = self.frame.to_local(s.lat, s.lon)
        r = self.key_res
        return (int(round(float(x) / r[0])), int(round(float(y) / r[1])),
                int(round((s.alt - self.fix.alt) / r[2])), int(round(s.course / r[3])) % int(round(2 * math.pi / r[3])))

    def _expand(self, node: _Node):
        env, cfg, model = self.env, self.cfg, self.model
        segs = fly_actions(node.state, self.table, env, self.wind, cfg.dt)
        ends = [GeoState(float(s.lat[-1]), float(s.lon[-1]), float(s.alt[-1]), float(s.course[-1])) for s in segs]
        want_cone = self.w[4] > 0
        lats = [s.lat for s in segs]
        lons = [s.lon for s in segs]
        alts = [s.alt for s in segs]
        if want_cone:
            la, lo, al = self._cone_batch(ends)
            lats.extend(la)
            lons.extend(lo)
            alts.extend(al)
        sizes = [a.size for a in lats]
        ga = model.ga_points(np.concatenate(lats), np.concatenate(lons), np.concatenate(alts))
        parts = np.split(ga, np.cumsum(sizes)[:-1])
        children = []
        e_lat = np.array([e.lat for e in ends])
        e_lon = np.array([e.lon for e in ends])
        e_alt = np.array([e.alt for e in ends])
        hd1, hd2, hchi = self.heuristic_terms(e_lat, e_lon, e_alt, np.array([e.course for e in ends]))
        d_end = gc_distance(e_lat, e_lon, self.fix.lat, self.fix.lon)
        _, tan_g = self._glide_need(e_lat, e_lon, d_end)
        need = self.glide_need(e_lat, e_lon, np.array([e.course for e in ends]), tan_g)
        blocked = np.zeros(len(segs), dtype=bool)
        if cfg.avoid_nofly and len(model.noflys):
            n_seg = sum(s.tau.size for s in segs)
            inside = model.prohibited(np.concatenate(lats)[:n_seg], np.concatenate(lons)[:n_seg],
                                      np.concatenate(alts)[:n_seg])
            blocked = np.array([b.any() for b in np.split(inside, np.cumsum([s.tau.size for s in segs])[:-1])])
        for k, (seg, e) in enumerate(zip(segs, ends)):
            if e.alt - self.fix.alt < float(need[k]) - 1e-6:
                continue  # can no longer glide to the fix
            if blocked[k]:
                continue
            seg_ga = parts[k]
            if cfg.additive_scale:
                w = np.array([self._scale(a) for a in seg.alt])
                inc = float(np.trapezoid(w * seg_ga, seg.tau))
                raw = node.raw + inc
                g = raw
            else:
                raw = node.raw + float(np.trapezoid(seg_ga, seg.tau))
                g = self._scale(e.alt) * raw
            hp = 0.0
            if self.w[3] > 0:
                hp = self._ground_term(e, seg)
            ha = 0.0
            if want_cone:
                ha = self._scale(e.alt) * float(np.mean(parts[len(segs) + k]))
            terms = np.array([hd1[k], hd2[k], hchi[k], hp, ha])
            h = 0.0 if self._suppressed(e.alt) else float(self.w @ terms)
            children.append((k, e, float(seg.tau[-1]), raw, g, h, float(hd2[k])))
        return children

    def _cone_batch(self, ends):
        """Look-ahead samples for several states with a single direct-problem call."""
        c = self.cone
        th_rel, tv = c.ray_angles(0.0, self.env.gamma_bg)
        k = np.arange(1, c.n_p + 1) * c.spacing
        TH, TV, K = (a.ravel() for a in np.meshgrid(th_rel, tv, k, indexing="ij"))
        m = TH.size
        lat0 = np.repeat([e.lat for e in ends], m)
        lon0 = np.repeat([e.lon for e in ends], m)
        brg = np.concatenate([e.course + TH for e in ends])
        dist = np.tile(K, len(ends))
        la, lo = destination(lat0, lon0, dist, brg)
        alt = np.concatenate([e.alt - K * np.tan(TV) for e in ends])
        return np.split(la, len(ends)), np.split(lo, len(ends)), np.split(alt, len(ends))

    def _ground_term(self, e: GeoState, seg) -> float:
        model = self.model
        if model.raster is None or model.raster.eta_max <= 0:
            return 0.0
        T = float(seg.tau[-1])
        tg = time_grid(0.0, T, SIGMA_G_DT)
        lat = np.interp(tg, seg.tau, seg.lat)
        lon = np.interp(tg, seg.tau, seg.lon)
        alt = np.interp(tg, seg.tau, seg.alt)
        eta = model.eta_points(lat, lon)
        w1, w2 = ground_weights(model, lat, lon, alt, self.fix, self.d0, self.site.site.elev_ft)
        val = np.trapezoid(w1 * w2 * eta, tg) / (model.raster.eta_max * T)
        return float(np.clip(val, 0.0, 1.0))

    def run(self) -> PlanResult:
        t_start = time.perf_counter()
        cfg = self.cfg
        s0 = self.s0
        hd1, hd2, hchi = self.heuristic_terms(s0.lat, s0.lon, s0.alt, s0.course)
        h0 = 0.0 if self.start_risky else float(self.w @ np.array([hd1[0], hd2[0], hchi[0], 0.0, 0.0]))
        self.nodes = [_Node(s0, 0.0, 0.0, 0.0, h0, -1, -1, float(hd2[0]))]
        best_g = {self._key(s0): 0.0}
        counter = 0
        heap = [(h0, float(hd2[0]), counter, 0)]
        expansions = 0
        while heap and expansions < cfg.max_expansions:
            f, _, _, idx = heapq.heappop(heap)
            node = self.nodes[idx]
            key = self._key(node.state)
            if node.g > best_g.get(key, math.inf):
                continue
            self.trace.append((expansions, s0.alt - node.state.alt, node.h, self._suppressed(node.state.alt)))
            if idx > 0 and self.in_goal_region(node.state):
                closing = [c for c in self.closing_candidates(node.state) if c.feasible]
                if closing:
                    res = self._finish(idx, closing)
                    if res is not None:
                        res.expansions = expansions
                        res.runtime_ms = 1e3 * (time.perf_counter() - t_start)
                        res.trace = self.trace
                        return res
            expansions += 1
            for k, e, dt, raw, g, h, d2 in self._expand(node):
                ck = self._key(e)
                if g >= best_g.get(ck, math.inf):
                    continue
                best_g[ck] = g
                self.nodes.append(_Node(e, node.t + dt, raw, g, h, idx, k, d2))
                counter += 1
                heapq.heappush(heap, (g + h, d2, counter, len(self.nodes) - 1))
        status = "expansion-limit" if heap else "exhausted"
        return PlanResult(status, site_id=self.site.site.id, expansions=expansions,
                          runtime_ms=1e3 * (time.perf_counter() - t_start), trace=self.trace)

    def reconstruct(self, idx: int) -> Trajectory:
        chain = []
        while idx > 0:
            chain.append(idx)
            idx = self.nodes[idx].parent
        chain.reverse()
        t = [np.zeros(1)]
        lat = [np.array([self.s0.lat])]
        lon = [np.array([self.s0.lon])]
        alt = [np.array([self.s0.alt])]
        crs = [np.array([self.s0.course])]
        curv = [np.zeros(1)]
        for i in chain:
            n = self.nodes[i]
            p = self.nodes[n.parent]
            seg = fly_actions(p.state, self.table, self.env, self.wind, self.cfg.dt)[n.action]
            t.append(p.t + seg.tau[1:])
            lat.append(seg.lat[1:])
            lon.append(seg.lon[1:])
            alt.append(seg.alt[1:])
            crs.append(seg.course[1:])
            curv.append(seg.curv[1:])
        return Trajectory(np.concatenate(t), np.concatenate(lat), np.concatenate(lon),
                          np.concatenate(alt), np.concatenate(crs), np.concatenate(curv))

    def _finish(self, idx: int, closing) -> PlanResult | None:
        node = self.nodes[idx]
        if self.cfg.avoid_nofly and len(self.model.noflys):
            clear = []
            for c in closing:
                tr = c.trajectory(self.env.v_ref, self.wind)
                if not self.model.prohibited(tr.lat, tr.lon, tr.alt).any():
                    clear.append(c)
            closing = clear
        try:
            choice = dubins.min_risk_select(closing, self.model, self.env.v_ref, self.wind,
                                            self.cfg.mode, t0=node.t)
        except ValueError:
            return None
        body = self.reconstruct(idx)
        path = body.concat(choice.trajectory)
        res = PlanResult("success", path, "search", self.site.site.id, g=node.g)
        return _scored(res, self.model)


def _scored(res: PlanResult, model: RiskModel) -> PlanResult:
    res.sigma_a = sigma_a(model, res.path)
    res.sigma_g = sigma_g(model, res.path)
    if model.mu_kappa + model.mu_eta > 0:
        res.sigma_t = sigma_t(res.sigma_a, res.sigma_g, model.mu_kappa, model.mu_eta)
    else:
        res.sigma_t = res.sigma_a
    return res


def search(s0: GeoState, site: SiteEvaluation, model: RiskModel,
           config: PlannerConfig = PlannerConfig(), wind: Wind = Wind()) -> PlanResult:
    return Search(s0, site, model, config, wind).run()


def total_cost(g: float, terms, weights, suppressed: bool = False) -> float:
    """f = g + w.h, with the heuristic dropped while suppressed."""
    return g if suppressed else g + float(np.dot(weights, terms))


def dubins_plan(s0: GeoState, site: SiteEvaluation, model: RiskModel,
                config: PlannerConfig = PlannerConfig(), wind: Wind = Wind()) -> PlanResult:
    """Minimum-risk Dubins path (with S-turn variants) straight from ``s0`` to the fix."""
    t_start = time.perf_counter()
    env = config.envelope
    cands = dubins.candidates(s0, site.fix, env.turn_radius, env.gamma_bg, env.gamma_band)
    if not cands:
        return PlanResult("dubins-infeasible", method="dubins", site_id=site.site.id,
                          runtime_ms=1e3 * (time.perf_counter() - t_start))
    try:
        choice = dubins.min_risk_select(cands, model, env.v_ref, wind, config.mode)
    except ValueError:
        return PlanResult("dubins-infeasible", method="dubins", site_id=site.site.id,
                          runtime_ms=1e3 * (time.perf_counter() - t_start))
    res = PlanResult("success", choice.trajectory, "dubins", site.site.id)
    _scored(res, model)
    res.runtime_ms = 1e3 * (time.perf_counter() - t_start)
    return res


def plan(s0: GeoState, catalog, model: RiskModel, wind: Wind = Wind(),
         config: PlannerConfig = PlannerConfig()) -> PlanResult:
    """Search the best site, then alternates by utility, with a Dubins fallback.

    The returned result carries both the search outcome and the best-site
    Dubins solution so the two can be compared.
    """
    t_start = time.perf_counter()
    ranking = rank_sites(catalog, s0, wind, envelope=config.envelope, margin=config.reach_margin)
    if not ranking:
        return PlanResult("no-reachable-site", outcome="total-failure",
                          runtime_ms=1e3 * (time.perf_counter() - t_start))
    best = ranking[0]
    dub = dubins_plan(s0, best, model, config, wind)
    attempts = []
    found = None
    for rank, ev in enumerate(ranking.evaluations[:max(1, config.max_sites)]):
        r = search(s0, ev, model, config, wind)
        attempts.append((ev.site.id, r.status, r.expansions, r.runtime_ms))
        if r.ok:
            found = (rank, r)
            break
    if found is not None:
        rank, r = found
        out = PlanResult("success", r.path, "search", r.site_id, r.sigma_a, r.sigma_g, r.sigma_t,
                         r.runtime_ms, r.expansions, "best-site" if rank == 0 else "multiple-site")
        out.search = r
    elif dub.ok:
        out = PlanResult("success", dub.path, "dubins-fallback", dub.site_id, dub.sigma_a,
                         dub.sigma_g, dub.sigma_t, dub.runtime_ms, 0, "dubins-fallback")
    else:
        out = PlanResult("total-failure", outcome="total-failure")
    out.dubins = dub
    out.attempts = attempts
    if found is None and attempts:
        out.expansions = sum(a[2] for a in attempts)
    return out
