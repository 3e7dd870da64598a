"""Halton-sampled benchmark of the search planner against the Dubins baseline."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from landingrisk.envelope import GlideEnvelope, Wind
from landingrisk.geodesy import TWO_PI, GeoState
from landingrisk.landing_sites import rank_sites
from landingrisk.planner import PlannerConfig, PlanResult, plan
from landingrisk.risk_model import RiskModel, relative_difference

HALTON_BASES = (2, 3, 5, 7)
COMPARABLE_EPS = 0.02
METRICS = ("sigma_a", "sigma_g", "sigma_t")
CATEGORIES = ("comparable", "search-better", "dubins-better", "search-failed", "dubins-failed", "both-failed")


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % k for k in range(2, int(math.isqrt(n)) + 1))


def halton(index: int, base: int) -> float:
    """Radical inverse of ``index`` in ``base``."""
    if index < 1:
        raise ValueError("Halton index starts at 1")
    if not _is_prime(base):
        raise ValueError(f"Halton base must be prime, got {base}")
    # integer numerator and denominator, divided once, so values are exactly rounded
    num, den = 0, 1
    i = index
    while i > 0:
        i, digit = divmod(i, base)
        num = num * base + digit
        den *= base
    return num / den


@dataclass(frozen=True)
class ScenarioBox:
    lat_bounds: tuple
    lon_bounds: tuple
    alt_bounds: tuple
    course_bounds: tuple = (0.0, TWO_PI)

    def point(self, index: int, bases=HALTON_BASES) -> GeoState:
        u = [halton(index, b) for b in bases]
        lat = self.lat_bounds[0] + u[0] * (self.lat_bounds[1] - self.lat_bounds[0])
        lon = self.lon_bounds[0] + u[1] * (self.lon_bounds[1] - self.lon_bounds[0])
        alt = self.alt_bounds[0] + u[2] * (self.alt_bounds[1] - self.alt_bounds[0])
        crs = self.course_bounds[0] + u[3] * (self.course_bounds[1] - self.course_bounds[0])
        return GeoState(lat, lon, alt, crs)

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in asdict(self).items()}


@dataclass
class ScenarioSet:
    box: ScenarioBox
    n: int
    bases: tuple
    scenarios: list
    indices: list
    attempts: int = 0

    def to_dicts(self) -> list[dict]:
        return [{"id": i, "halton_index": k, "lat": s.lat, "lon": s.lon, "alt_ft": s.alt,
                 "course_deg": math.degrees(s.course)}
                for i, (k, s) in enumerate(zip(self.indices, self.scenarios))]


def acceptable(s: GeoState, catalog, model: RiskModel, envelope: GlideEnvelope,
               wind: Wind = Wind(), margin: float = math.radians(0.5)) -> bool:
    """Reachable to some site with margin and at least one turn radius clear of no-fly zones."""
    if len(model.noflys):
        clear = float(model.nofly_clearance(s.lat, s.lon, s.alt)[0])
        if clear < envelope.turn_radius:
            return False
    return bool(rank_sites(catalog, s, wind, envelope=envelope, margin=margin))


def generate_scenarios(box: ScenarioBox, n: int, catalog, model: RiskModel,
                       envelope: GlideEnvelope = GlideEnvelope(), wind: Wind = Wind(),
                       seed_offset: int = 0, max_attempts: int | None = None,
                       workers: int = 1, bases=HALTON_BASES,
                       margin: float = math.radians(0.5)) -> ScenarioSet:
    """Walk the Halton sequence, keeping the first ``n`` acceptable points.

    Candidates are tested in batches (optionally on several threads) but
    accepted strictly in sequence order, so the result does not depend on
    the worker count.
    """
    if n < 1:
        raise ValueError("n must be positive")
    cap = max_attempts if max_attempts is not None else 50 * n + 100
    accepted, idx = [], []
    k = 1 + seed_offset
    tried = 0
    batch = max(8, 2 * workers)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        while len(accepted) < n:
            if tried >= cap:
                raise RuntimeError(f"only {len(accepted)} of {n} scenarios accepted after {tried} attempts")
            ks = list(range(k, k + min(batch, cap - tried)))
            pts = [box.point(i, bases) for i in ks]
            oks = list(pool.map(lambda s: acceptable(s, catalog, model, envelope, wind, margin), pts))
            for i, s, ok in zip(ks, pts, oks):
                tried += 1
                if ok and len(accepted) < n:
                    accepted.append(s)
                    idx.append(i)
            k += len(ks)
    return ScenarioSet(box, n, tuple(bases), accepted, idx, tried)


def categorize(search_ok: bool, dubins_ok: bool, s_val: float, d_val: float,
               threshold: float = COMPARABLE_EPS) -> tuple[str, float]:
    if not search_ok and not dubins_ok:
        return "both-failed", float("nan")
    if not search_ok:
        return "search-failed", float("nan")
    if not dubins_ok:
        return "dubins-failed", float("nan")
    eps = relative_difference(s_val, d_val)
    if eps <= threshold:
        return "comparable", eps
    return ("search-better" if s_val < d_val else "dubins-better"), eps


@dataclass
class OutcomeRecord:
    id: int
    lat: float
    lon: float
    alt_ft: float
    course_deg: float
    outcome: str
    method: str
    site_id: str | None
    best_site_id: str | None
    best_site: bool
    search_ok: bool
    dubins_ok: bool
    search: dict = field(default_factory=dict)
    dubins: dict = field(default_factory=dict)
    eps: dict = field(default_factory=dict)
    category: dict = field(default_factory=dict)
    expansions: int = 0
    runtime_ms: float = 0.0

    def row(self) -> dict:
        r = {k: getattr(self, k) for k in ("id", "lat", "lon", "alt_ft", "course_deg", "outcome", "method",
                                           "site_id", "best_site_id", "best_site", "search_ok", "dubins_ok")}
        for m in METRICS:
            r[f"search_{m}"] = self.search.get(m, float("nan"))
            r[f"dubins_{m}"] = self.dubins.get(m, float("nan"))
            r[f"eps_{m}"] = self.eps.get(m, float("nan"))
            r[f"category_{m}"] = self.category.get(m, "")
        r["expansions"] = self.expansions
        r["runtime_ms"] = self.runtime_ms
        return r

    def deterministic_row(self) -> dict:
        """The row without wall-clock fields, NaN as None, for reproducibility checks."""
        r = self.row()
        r.pop("runtime_ms")
        return {k: None if isinstance(v, float) and math.isnan(v) else v for k, v in r.items()}


def make_record(i: int, s0: GeoState, res: PlanResult) -> OutcomeRecord:
    sr = res.search
    dr = res.dubins
    search_ok = sr is not None and sr.ok
    dubins_ok = dr is not None and dr.ok
    rec = OutcomeRecord(i, s0.lat, s0.lon, s0.alt, math.degrees(s0.course), res.outcome, res.method,
                        res.site_id, dr.site_id if dr is not None else None,
                        res.outcome == "best-site", search_ok, dubins_ok,
                        expansions=res.expansions, runtime_ms=sr.runtime_ms if search_ok else res.runtime_ms)
    for m in METRICS:
        sv = getattr(sr, m) if search_ok else float("nan")
        dv = getattr(dr, m) if dubins_ok else float("nan")
        if search_ok:
            rec.search[m] = sv
        if dubins_ok:
            rec.dubins[m] = dv
        rec.category[m], rec.eps[m] = categorize(search_ok, dubins_ok, sv, dv)
    return rec


@dataclass
class BenchResult:
    records: list
    summary: dict
    results: list = field(default_factory=list, repr=False)


def run_benchmark(scenarios, catalog, model: RiskModel, config: PlannerConfig = PlannerConfig(),
                  wind: Wind = Wind(), workers: int = 1, keep_paths: bool = False) -> BenchResult:
    """Plan every scenario; individual failures are recorded, never raised."""
    states = scenarios.scenarios if isinstance(scenarios, ScenarioSet) else list(scenarios)

    def one(item):
        i, s0 = item
        try:
            res = plan(s0, catalog, model, wind, config)
        except Exception as exc:  # a single bad scenario must not sink the batch
            res = PlanResult("error", outcome="total-failure", method=f"error: {exc}")
        return make_record(i, s0, res), (res if keep_paths else None)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        out = list(pool.map(one, enumerate(states)))
    records = [r for r, _ in out]
    return BenchResult(records, summarize(records, model), [p for _, p in out])


def describe(values) -> dict:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return {"n": 0, "min": None, "max": None, "mean": None, "median": None, "std": None}
    return {"n": int(v.size), "min": float(v.min()), "max": float(v.max()), "mean": float(v.mean()),
            "median": float(np.median(v)), "std": float(v.std())}


def summarize(records, model: RiskModel | None = None) -> dict:
    """Category counts, per-site landings and descriptive risk statistics.

    Statistics cover cases where both methods converged, for best-site
    landings and for all landings. Rows scaled by the mean traffic density
    express the same exposure in units of average airspace.
    """
    recs = sorted(records, key=lambda r: r.id)
    both = [r for r in recs if r.search_ok and r.dubins_ok]
    out = {"n": len(recs), "categories": {}, "outcomes": {}, "sites": {}, "stats": {}}
    for m in METRICS:
        counts = {c: 0 for c in CATEGORIES}
        for r in recs:
            counts[r.category[m]] += 1
        out["categories"][m] = counts
    for r in recs:
        out["outcomes"][r.outcome] = out["outcomes"].get(r.outcome, 0) + 1
        if r.site_id is not None and r.outcome != "total-failure":
            out["sites"][r.site_id] = out["sites"].get(r.site_id, 0) + 1
    out["sites"] = dict(sorted(out["sites"].items()))
    mu = model.mu_kappa if model is not None else None
    for label, group in (("best_site", [r for r in both if r.best_site]), ("all", both)):
        block = {}
        for m in METRICS:
            block[m] = {"search": describe([r.search[m] for r in group]),
                        "dubins": describe([r.dubins[m] for r in group])}
        if mu:
            block["sigma_a_per_mean_density"] = {
                "search": describe([r.search["sigma_a"] / mu for r in group]),
                "dubins": describe([r.dubins["sigma_a"] / mu for r in group])}
        out["stats"][label] = block
    out["mu_kappa"] = mu
    out["mu_eta"] = model.mu_eta if model is not None else None
    return out


def runtime_cdf(records, t_max: float, metric: str = "sigma_a", n_points: int = 200) -> dict:
    """Runtime CDF over best-site landings where search clearly beat Dubins.

    Returns Pr(E1|E2) times the empirical CDF of runtimes in E1 and E2,
    with E2 = best-site landings with relative difference above the
    comparable threshold and E1 = cases where the search risk is lower.
    """
    if not records:
        raise ValueError("no records")
    e2 = [r for r in records if r.best_site and r.search_ok and r.dubins_ok
          and r.eps[metric] > COMPARABLE_EPS]
    if not e2:
        return {"undefined": True, "pr_e1_given_e2": None, "value_at_t_max": None, "t": [], "F": []}
    e12 = [r for r in e2 if r.search[metric] < r.dubins[metric]]
    pr = len(e12) / len(e2)
    rt = np.sort([r.runtime_ms for r in e12])
    t = np.linspace(0.0, t_max, n_points)

    def F(x):
        if rt.size == 0:
            return np.zeros_like(np.asarray(x, dtype=float))
        return pr * np.searchsorted(rt, x, side="right") / rt.size

    return {"undefined": False, "pr_e1_given_e2": pr, "value_at_t_max": float(F(t_max)),
            "n_e2": len(e2), "n_e1_e2": len(e12), "t": t.tolist(), "F": F(t).tolist()}


def write_records_csv(records, path) -> None:
    rows = [r.row() for r in sorted(records, key=lambda r: r.id)]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()) if rows else ["id"])
        w.writeheader()
        w.writerows(rows)


def read_records_csv(path) -> list[OutcomeRecord]:
    def num(x):
        return float(x) if x not in ("", "nan") else float("nan")

    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rec = OutcomeRecord(int(row["id"]), float(row["lat"]), float(row["lon"]), float(row["alt_ft"]),
                                float(row["course_deg"]), row["outcome"], row["method"],
                                row["site_id"] or None, row["best_site_id"] or None,
                                row["best_site"] == "True", row["search_ok"] == "True",
                                row["dubins_ok"] == "True", expansions=int(row["expansions"]),
                                runtime_ms=float(row["runtime_ms"]))
            for m in METRICS:
                if rec.search_ok:
                    rec.search[m] = num(row[f"search_{m}"])
                if rec.dubins_ok:
                    rec.dubins[m] = num(row[f"dubins_{m}"])
                rec.eps[m] = num(row[f"eps_{m}"])
                rec.category[m] = row[f"category_{m}"]
            out.append(rec)
    return out


def write_summary_json(summary: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=1)


def write_cdf_csv(cdf: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_ms", "F"])
        w.writerows(zip(cdf["t"], cdf["F"]))


def write_polyline(traj, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "lat", "lon", "alt_ft"])
        w.writerows(zip(traj.t, traj.lat, traj.lon, traj.alt))
