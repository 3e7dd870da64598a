"""Command-line entry point: heatmaps, single plans and the benchmark."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

from landingrisk import bench, synthetic
from landingrisk.envelope import Wind
from landingrisk.geodesy import GeoState
from landingrisk.landing_sites import load_catalog
from landingrisk.planner import PlannerConfig, plan
from landingrisk.polyhedra import CORRIDOR, NOFLY, PolyhedronSet, load_polyhedra, proximity_heatmap
from landingrisk.risk_model import PopulationRaster, RiskModel
from landingrisk.traffic_grid import AirspaceGrid, GridSpec, build_density_grid, read_adsb_csv

log = logging.getLogger("landingrisk")

DEFAULT_BOX_ALT = (1500.0, 5000.0)
PLANNER_KEYS = ("mode", "max_expansions", "max_sites", "h_cutoff", "surplus_max", "avoid_nofly",
                "additive_scale", "reach_margin")


def load_config(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def parse_population_seed(text: str | None) -> int | None:
    if text is None:
        return None
    key, _, val = text.partition("=")
    if key != "seed" or not val:
        raise argparse.ArgumentTypeError("expected seed=<n>")
    return int(val)


def grid_spec(cfg: dict) -> GridSpec:
    if "grid_spec" in cfg:
        return GridSpec.from_dict(cfg["grid_spec"])
    return GridSpec(synthetic.LAT_BOUNDS, synthetic.LON_BOUNDS, synthetic.ALT_BOUNDS)


def load_scene(cfg: dict, population_seed: int | None = None) -> tuple[RiskModel, list]:
    """Scene from config file paths, falling back to the synthetic scene."""
    catalog = load_catalog(cfg.get("catalog"))
    if not any(k in cfg for k in ("grid", "polyhedra", "population")):
        sc = synthetic.build_scene(seed=cfg.get("seed", 0), population_seed=population_seed,
                                   catalog=catalog)
        return sc.model, catalog
    grid = AirspaceGrid.load(cfg["grid"]) if "grid" in cfg else None
    if "polyhedra" in cfg:
        corridors, noflys = load_polyhedra(cfg["polyhedra"])
    else:
        corridors, noflys = PolyhedronSet([], CORRIDOR), PolyhedronSet([], NOFLY)
    if "population" in cfg:
        raster = PopulationRaster.from_csv(cfg["population"])
    elif population_seed is not None:
        spec = grid_spec(cfg)
        raster = PopulationRaster.synthetic(spec.lat_bounds, spec.lon_bounds, population_seed)
    else:
        raster = None
    return RiskModel(grid, corridors, noflys, raster), catalog


def planner_config(cfg: dict, mode: str | None = None) -> PlannerConfig:
    kw = {k: v for k, v in cfg.get("planner", {}).items() if k in PLANNER_KEYS}
    if mode is not None:
        kw["mode"] = mode
    return PlannerConfig(**kw)


def wind_from(cfg: dict) -> Wind:
    w = cfg.get("wind", {})
    return Wind(float(w.get("speed_kt", 0.0)), math.radians(float(w.get("from_deg", 0.0))))


def scenario_box(cfg: dict) -> bench.ScenarioBox:
    b = cfg.get("box", {})
    return bench.ScenarioBox(tuple(b.get("lat_bounds", synthetic.LAT_BOUNDS)),
                             tuple(b.get("lon_bounds", synthetic.LON_BOUNDS)),
                             tuple(b.get("alt_bounds", DEFAULT_BOX_ALT)))


def cmd_heatmap_build(args, cfg) -> int:
    spec = grid_spec(cfg)
    if args.adsb:
        ts = read_adsb_csv(args.adsb, opensky=args.opensky)
    else:
        ts = synthetic.synthetic_traffic(load_catalog(cfg.get("catalog")), seed=args.seed)
    grid = build_density_grid(ts, spec, workers=args.workers)
    grid.save(args.out)
    print(f"wrote {args.out}: {len(ts)} trajectories, occupancy {grid.occupancy:.3f}, mean {grid.mean:.4f}")
    return 0


def cmd_heatmap_poly(args, cfg) -> int:
    spec = grid_spec(cfg)
    if args.polyhedra:
        corridors, noflys = load_polyhedra(args.polyhedra)
    else:
        corridors, noflys = synthetic.synthetic_corridors(), synthetic.synthetic_noflys()
    pset = corridors if args.kind == CORRIDOR else noflys
    grid = proximity_heatmap(pset, spec, d_max=args.d_max)
    grid.save(args.out)
    print(f"wrote {args.out}: {len(pset)} {args.kind} volumes, occupancy {grid.occupancy:.3f}")
    return 0


def read_scenario(path) -> tuple[GeoState, dict]:
    with open(path) as fh:
        d = json.load(fh)
    s = GeoState(float(d["lat"]), float(d["lon"]), float(d["alt_ft"]), math.radians(float(d["course_deg"])))
    return s, d


def cmd_plan(args, cfg) -> int:
    s0, extra = read_scenario(args.scenario)
    if "wind_kts" in extra:
        cfg = {**cfg, "wind": {"speed_kt": extra["wind_kts"], "from_deg": extra.get("wind_from_deg", 0.0)}}
    model, catalog = load_scene(cfg, args.population_seed)
    config = planner_config(cfg, args.mode)
    res = plan(s0, catalog, model, wind_from(cfg), config)
    out = res.to_dict(model)
    out["attempts"] = [list(a) for a in res.attempts]
    text = json.dumps(out, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    print(f"{res.outcome}: {res.method} to {res.site_id}, sigma_a={res.sigma_a:.4g}, "
          f"sigma_g={res.sigma_g:.4g}, {res.expansions} expansions", file=sys.stderr)
    if args.figure:
        from landingrisk.plotting import plot_path
        plot_path(res, args.figure, model)
    return 0 if res.ok else 1


def cmd_bench_run(args, cfg) -> int:
    model, catalog = load_scene(cfg, args.population_seed)
    config = planner_config(cfg, args.mode)
    wind = wind_from(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    ss = bench.generate_scenarios(scenario_box(cfg), args.n, catalog, model, config.envelope, wind,
                                  seed_offset=args.seed_offset, workers=args.workers)
    (out / "scenarios.json").write_text(json.dumps({"box": ss.box.to_dict(), "bases": list(ss.bases),
                                                    "attempts": ss.attempts,
                                                    "scenarios": ss.to_dicts()}, indent=1))
    br = bench.run_benchmark(ss, catalog, model, config, wind, workers=args.workers,
                             keep_paths=args.paths)
    bench.write_records_csv(br.records, out / "records.csv")
    summary = dict(br.summary, mode=config.mode, wall_s=time.perf_counter() - t0)
    bench.write_summary_json(summary, out / "summary.json")
    if args.paths:
        pdir = out / "paths"
        pdir.mkdir(exist_ok=True)
        for rec, res in zip(br.records, br.results):
            if res is None:
                continue
            if res.path is not None:
                bench.write_polyline(res.path, pdir / f"{rec.id:05d}_{res.method}.csv")
            if res.dubins is not None and res.dubins.path is not None and res.method != "dubins-fallback":
                bench.write_polyline(res.dubins.path, pdir / f"{rec.id:05d}_dubins.csv")
    print(f"{args.n} scenarios in {summary['wall_s']:.1f} s, outcomes {summary['outcomes']}")
    return 0


def cmd_bench_report(args, cfg) -> int:
    src = Path(args.dir)
    records = bench.read_records_csv(src / "records.csv")
    metric = "sigma_t" if args.metric == "joint" else "sigma_a"
    summary = bench.summarize(records)
    cdf = bench.runtime_cdf(records, args.t_max, metric)
    bench.write_cdf_csv(cdf, src / "runtime_cdf.csv")
    if args.format == "json":
        print(json.dumps({"summary": summary, "runtime_cdf": {k: v for k, v in cdf.items() if k not in ("t", "F")}},
                         indent=1))
    else:
        print("metric,category,count")
        for m, counts in summary["categories"].items():
            for c, k in counts.items():
                print(f"{m},{c},{k}")
        print("outcome,count")
        for o, k in summary["outcomes"].items():
            print(f"{o},{k}")
        print("site,landings")
        for s, k in summary["sites"].items():
            print(f"{s},{k}")
    if args.figures:
        from landingrisk.plotting import plot_risk_cdf, plot_runtime_cdf
        plot_runtime_cdf(cdf, src / "runtime_cdf.png")
        plot_risk_cdf(records, src / f"{metric}_cdf.png", metric)
        print(f"figures written to {src}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="landingrisk", description=__doc__)
    p.add_argument("--config", help="JSON config with scene paths, box, wind and planner settings")
    p.add_argument("--seed-offset", type=int, default=0, help="skip this many Halton points")
    p.add_argument("--synthetic-population", dest="population_seed", type=parse_population_seed,
                   metavar="seed=<n>", help="use a synthetic population raster")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    hm = sub.add_parser("heatmap", help="build density or proximity heatmaps").add_subparsers(
        dest="heatmap_command", required=True)
    b = hm.add_parser("build", help="traffic density grid from ADS-B (or synthetic traffic)")
    b.add_argument("--adsb", help="ADS-B CSV; synthetic traffic when omitted")
    b.add_argument("--opensky", action="store_true", help="altitude from baroaltitude in meters")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_heatmap_build)
    pp = hm.add_parser("poly", help="proximity-cost heatmap for corridors or no-fly zones")
    pp.add_argument("--polyhedra", help="polyhedra JSON; synthetic layout when omitted")
    pp.add_argument("--kind", choices=(CORRIDOR, NOFLY), default=CORRIDOR)
    pp.add_argument("--d-max", type=float, default=500.0)
    pp.add_argument("--out", required=True)
    pp.set_defaults(func=cmd_heatmap_poly)

    pl = sub.add_parser("plan", help="plan one emergency landing")
    pl.add_argument("--scenario", required=True,
                    help="JSON with lat, lon, alt_ft, course_deg and optional wind_kts, wind_from_deg")
    pl.add_argument("--mode", choices=("airspace", "joint"))
    pl.add_argument("--out")
    pl.add_argument("--figure", help="write a PNG of the ground track and altitude profile")
    pl.set_defaults(func=cmd_plan)

    bn = sub.add_parser("bench", help="Halton benchmark against the Dubins baseline").add_subparsers(
        dest="bench_command", required=True)
    r = bn.add_parser("run")
    r.add_argument("--n", type=int, default=200)
    r.add_argument("--mode", choices=("airspace", "joint"))
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--paths", action="store_true", help="also write per-path polyline CSVs")
    r.add_argument("--out", default="bench_out")
    r.set_defaults(func=cmd_bench_run)
    rp = bn.add_parser("report")
    rp.add_argument("--dir", default="bench_out")
    rp.add_argument("--format", choices=("csv", "json"), default="csv")
    rp.add_argument("--metric", choices=("airspace", "joint"), default="airspace")
    rp.add_argument("--t-max", type=float, default=3000.0, help="CDF horizon in ms")
    rp.add_argument("--figures", action="store_true", help="render PNG figures next to the data")
    rp.set_defaults(func=cmd_bench_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = load_config(args.config)
    return args.func(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
