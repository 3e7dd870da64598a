import math
import statistics
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import radical_inverse_fraction

from landingrisk.bench import (CATEGORIES, COMPARABLE_EPS, METRICS, OutcomeRecord, ScenarioBox, categorize,
                               generate_scenarios, halton, read_records_csv, run_benchmark, runtime_cdf,
                               summarize, write_records_csv)
from landingrisk.envelope import GlideEnvelope
from landingrisk.planner import PlannerConfig
from landingrisk.polyhedra import distances
from landingrisk.geodesy import lla_to_ecef
from landingrisk.synthetic import LAT_BOUNDS, LON_BOUNDS, build_scene, empty_model

ENV = GlideEnvelope()

BASE2 = ["1/2", "1/4", "3/4", "1/8", "5/8", "3/8", "7/8", "1/16", "9/16", "5/16", "13/16", "3/16", "11/16",
         "7/16", "15/16", "1/32"]
BASE3 = ["1/3", "2/3", "1/9", "4/9", "7/9", "2/9", "5/9", "8/9", "1/27", "10/27", "19/27", "4/27", "13/27",
         "22/27", "7/27", "16/27"]


@pytest.fixture(scope="module")
def scene():
    return build_scene(0)


def test_halton_first_sixteen_exact():
    for i in range(16):
        assert halton(i + 1, 2) == float(Fraction(BASE2[i]))
        assert halton(i + 1, 3) == float(Fraction(BASE3[i]))
    assert halton(3, 3) == pytest.approx(1 / 9, abs=1e-12)
    assert halton(4, 3) == pytest.approx(4 / 9, abs=1e-12)


@given(st.integers(1, 10**9), st.sampled_from([2, 3, 5, 7, 11, 13]))
def test_halton_matches_digit_reversal(i, b):
    v = halton(i, b)
    assert v == float(radical_inverse_fraction(i, b))
    assert 0 < v < 1


def test_halton_rejects_bad_input():
    with pytest.raises(ValueError):
        halton(0, 2)
    with pytest.raises(ValueError):
        halton(1, 4)


def test_empty_nofly_accepts_raw_mapping():
    box = ScenarioBox((38.79, 38.81), (-77.01, -76.99), (8000.0, 9000.0))
    from landingrisk.landing_sites import LandingSite
    site = LandingSite("S", 38.8, -77.0, 0.0, 0.0, 5000.0, 100.0)
    ss = generate_scenarios(box, 20, [site], empty_model())
    assert ss.indices == list(range(1, 21))
    for k, s in zip(ss.indices, ss.scenarios):
        assert s.lat == 38.79 + halton(k, 2) * (38.81 - 38.79)
        assert s.alt == 8000.0 + halton(k, 5) * 1000.0
        assert s.course == halton(k, 7) * 2 * math.pi


def test_generation_deterministic_and_clear(scene):
    box = ScenarioBox(LAT_BOUNDS, LON_BOUNDS, (1500.0, 5000.0))
    a = generate_scenarios(box, 30, scene.catalog, scene.model, workers=1)
    b = generate_scenarios(box, 30, scene.catalog, scene.model, workers=4)
    assert a.scenarios == b.scenarios and a.indices == b.indices
    assert a.attempts > 30  # some candidates were rejected
    one = generate_scenarios(box, 1, scene.catalog, scene.model)
    assert one.scenarios[0] == a.scenarios[0]
    for s in a.scenarios:
        p = lla_to_ecef(s.lat, s.lon, s.alt)[None, :]
        clear = min(float(distances(P, p)[0]) for P in scene.model.noflys)
        assert clear >= ENV.turn_radius
    shifted = generate_scenarios(box, 5, scene.catalog, scene.model, seed_offset=100)
    assert shifted.indices[0] > 100


def test_generation_cap_raises(scene):
    box = ScenarioBox(LAT_BOUNDS, LON_BOUNDS, (0.0, 1.0))
    with pytest.raises(RuntimeError):
        generate_scenarios(box, 3, scene.catalog, scene.model, max_attempts=40)


def test_categorize_examples():
    cat, eps = categorize(True, True, 0.04, 79.8)
    assert cat == "search-better" and eps == pytest.approx(0.9995, abs=1e-4)
    assert categorize(True, True, 0.0, 0.0) == ("comparable", 0.0)
    assert categorize(True, True, 1.0, 1.02)[0] == "comparable"
    assert categorize(True, True, 1.1, 1.0)[0] == "dubins-better"
    assert categorize(False, True, 0, 1)[0] == "search-failed"
    assert categorize(True, False, 0, 1)[0] == "dubins-failed"
    assert categorize(False, False, 0, 1)[0] == "both-failed"


def fake_record(i, rng):
    s_ok, d_ok = rng.random() < 0.9, rng.random() < 0.9
    rec = OutcomeRecord(i, 38.8, -77.0, 3000.0, 0.0, "best-site" if rng.random() < 0.7 else "multiple-site",
                        "search", "S", "S", False, s_ok, d_ok, runtime_ms=float(rng.uniform(10, 4000)))
    rec.best_site = rec.outcome == "best-site" and s_ok
    for m in METRICS:
        sv = float(rng.choice([0.0, rng.uniform(0, 5)]))
        dv = float(sv * rng.choice([1.0, 1.01, rng.uniform(0.5, 3)]))
        if s_ok:
            rec.search[m] = sv
        if d_ok:
            rec.dubins[m] = dv
        rec.category[m], rec.eps[m] = categorize(s_ok, d_ok, sv, dv)
    return rec


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 60))
def test_category_partition_and_threshold(seed, n):
    rng = np.random.default_rng(seed)
    recs = [fake_record(i, rng) for i in range(n)]
    s = summarize(recs)
    for m in METRICS:
        assert sum(s["categories"][m].values()) == n
        assert set(s["categories"][m]) == set(CATEGORIES)
    for r in recs:
        for m in METRICS:
            if r.search_ok and r.dubins_ok:
                assert (r.category[m] == "comparable") == (r.eps[m] <= COMPARABLE_EPS)
    perm = [recs[i] for i in rng.permutation(n)]
    assert summarize(perm) == s


def test_summary_matches_direct_aggregation():
    rng = np.random.default_rng(3)
    recs = [fake_record(i, rng) for i in range(80)]
    s = summarize(recs)
    both = [r for r in recs if r.search_ok and r.dubins_ok]
    vals = [r.search["sigma_a"] for r in both]
    got = s["stats"]["all"]["sigma_a"]["search"]
    assert got["mean"] == pytest.approx(statistics.fmean(vals))
    assert got["median"] == pytest.approx(statistics.median(vals))
    assert got["min"] == min(vals) and got["max"] == max(vals)
    assert got["std"] == pytest.approx(statistics.pstdev(vals))
    bs = [r.dubins["sigma_g"] for r in both if r.best_site]
    assert s["stats"]["best_site"]["sigma_g"]["dubins"]["mean"] == pytest.approx(statistics.fmean(bs))


def test_scaled_exposure_row_ratio():
    rng = np.random.default_rng(4)
    recs = [fake_record(i, rng) for i in range(50)]

    class M:
        mu_kappa = 0.014
        mu_eta = 0.1374

    s = summarize(recs, M())
    for who in ("search", "dubins"):
        raw = s["stats"]["all"]["sigma_a"][who]["mean"]
        scaled = s["stats"]["all"]["sigma_a_per_mean_density"][who]["mean"]
        assert scaled == pytest.approx(raw / 0.014)


def test_runtime_cdf_full_mass_and_undefined():
    rng = np.random.default_rng(5)
    recs = [fake_record(i, rng) for i in range(100)]
    c = runtime_cdf(recs, 5000.0)
    assert not c["undefined"]
    assert c["value_at_t_max"] == pytest.approx(c["pr_e1_given_e2"])
    assert np.all(np.diff(c["F"]) >= 0)
    for r in recs:
        r.best_site = False
    assert runtime_cdf(recs, 5000.0)["undefined"]
    with pytest.raises(ValueError):
        runtime_cdf([], 10.0)


def test_runtime_cdf_order_statistics():
    rng = np.random.default_rng(6)
    recs = [fake_record(i, rng) for i in range(200)]
    c = runtime_cdf(recs, 3000.0, n_points=61)
    e2 = [r for r in recs if r.best_site and r.search_ok and r.dubins_ok and r.eps["sigma_a"] > 0.02]
    e12 = sorted(r.runtime_ms for r in e2 if r.search["sigma_a"] < r.dubins["sigma_a"])
    pr = len(e12) / len(e2)
    assert c["pr_e1_given_e2"] == pr
    for t, F in zip(c["t"], c["F"]):
        rank = sum(1 for x in e12 if x <= t)
        assert F == pytest.approx(pr * rank / len(e12))


def test_records_csv_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    recs = [fake_record(i, rng) for i in range(20)]
    write_records_csv(recs, tmp_path / "r.csv")
    back = read_records_csv(tmp_path / "r.csv")
    for a, b in zip(recs, back):
        ra, rb = a.row(), b.row()
        for k in ra:
            if isinstance(ra[k], float) and math.isnan(ra[k]):
                assert math.isnan(rb[k])
            else:
                assert ra[k] == rb[k], k


def test_benchmark_reproducible_across_workers(scene):
    box = ScenarioBox(LAT_BOUNDS, LON_BOUNDS, (1500.0, 5000.0))
    ss = generate_scenarios(box, 4, scene.catalog, scene.model)
    cfg = PlannerConfig(max_expansions=300)
    a = run_benchmark(ss, scene.catalog, scene.model, cfg, workers=1)
    b = run_benchmark(ss, scene.catalog, scene.model, cfg, workers=3)
    assert [r.deterministic_row() for r in a.records] == [r.deterministic_row() for r in b.records]
    assert sum(a.summary["categories"]["sigma_a"].values()) == 4
