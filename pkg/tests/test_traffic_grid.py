import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landingrisk.geodesy import NM_FT, GeoPoint, destination, gc_distance
from landingrisk.traffic_grid import (AirspaceGrid, GridSpec, TrajectorySet, build_density_grid, density_at,
                                      mean_density, read_adsb_csv, resample_arrays, resample_trajectory)

SPEC = GridSpec((38.6, 39.0), (-77.3, -76.8), (0.0, 10000.0), 30, 30, 10)


def straight(lat, lon, brg, length, h0, h1, n=5):
    d = np.linspace(0, length, n)
    la, lo = destination(lat, lon, d, brg)
    return np.column_stack([la, lo, np.linspace(h0, h1, n)])


def brute_cell(spec, lat, lon, alt):
    """Oracle: scan every cell and test half-open membership."""
    le, oe, ae = spec.edges()
    for i in range(spec.n_lat):
        if not le[i] <= lat < le[i + 1]:
            continue
        for j in range(spec.n_lon):
            if not oe[j] <= lon < oe[j + 1]:
                continue
            for k in range(spec.n_alt):
                if ae[k] <= alt < ae[k + 1]:
                    return i, j, k
    return None


random_traj = st.builds(
    lambda la, lo, b, L, h0, h1: straight(la, lo, b, L, h0, h1, n=4),
    st.floats(38.55, 39.05), st.floats(-77.35, -76.75), st.floats(0, 2 * math.pi),
    st.floats(200, 5 * NM_FT), st.floats(-500, 11000), st.floats(-500, 11000))


def test_resample_count_follows_ceiling_rule():
    t = straight(38.8, -77.0, 0.3, 1000.0, 2000, 2000, n=2)
    pts = resample_trajectory([GeoPoint(*p) for p in t], 100.0)
    assert len(pts) == 10
    assert (pts[0].lat, pts[0].lon) == pytest.approx((t[0, 0], t[0, 1]))
    short = straight(38.8, -77.0, 0.3, 50.0, 2000, 2000, n=2)
    assert len(resample_arrays(short[:, 0], short[:, 1], short[:, 2], 100.0)[0]) == 1


def test_resample_degenerate_is_empty():
    lat = np.full(3, 38.8)
    out = resample_arrays(lat, np.full(3, -77.0), np.full(3, 1000.0), 100.0)
    assert len(out[0]) == 0
    with pytest.raises(ValueError):
        resample_arrays(lat, lat, lat, 0.0)


def dense_polyline(t, step=1.0):
    """Oracle: brute-force 1 ft sampling of the polyline vertices by linear interpolation."""
    out = []
    for a, b in zip(t[:-1], t[1:]):
        L = math.hypot(float(gc_distance(a[0], a[1], b[0], b[1])), b[2] - a[2])
        n = max(2, int(L / step) + 1)
        u = np.linspace(0, 1, n)[:, None]
        out.append(a + u * (b - a))
    return np.vstack(out)


@settings(max_examples=25, deadline=None)
@given(random_traj)
def test_resampled_points_lie_on_polyline(t):
    la, lo, al = resample_arrays(t[:, 0], t[:, 1], t[:, 2], 100.0)
    dense = dense_polyline(t)
    for p in zip(la, lo, al):
        h = gc_distance(p[0], p[1], dense[:, 0], dense[:, 1])
        d = np.hypot(h, dense[:, 2] - p[2]).min()
        assert d < 100.0


@settings(max_examples=25, deadline=None)
@given(random_traj)
def test_resampled_spacing_is_d_step(t):
    la, lo, al = resample_arrays(t[:, 0], t[:, 1], t[:, 2], 100.0)
    if len(la) > 1:
        step = np.hypot(gc_distance(la[:-1], lo[:-1], la[1:], lo[1:]), np.diff(al))
        assert np.allclose(step, 100.0, rtol=1e-6)


def test_single_cell_seven_points():
    spec = GridSpec((0.0, 1.0), (0.0, 1.0), (0.0, 1000.0), 1, 1, 1)
    t = straight(0.5, 0.5, 0.0, 650.0, 500, 500, n=2)
    g = build_density_grid(TrajectorySet([t]), spec, 100.0)
    assert int(g.counts[0, 0, 0]) == 7
    assert g.normalized[0, 0, 0] == 1.0


@settings(max_examples=15, deadline=None)
@given(st.lists(random_traj, min_size=1, max_size=6))
def test_density_conservation(trajs):
    ts = TrajectorySet(trajs)
    g = build_density_grid(ts, SPEC, 100.0)
    n_in = 0
    for t in trajs:
        la, lo, al = resample_arrays(t[:, 0], t[:, 1], t[:, 2], 100.0)
        lo_b, hi_b = SPEC.lat_bounds, SPEC.lon_bounds
        inside = ((la >= lo_b[0]) & (la < lo_b[1]) & (lo >= hi_b[0]) & (lo < hi_b[1])
                  & (al >= SPEC.alt_bounds[0]) & (al < SPEC.alt_bounds[1]))
        n_in += int(inside.sum())
    assert int(g.counts.sum()) == n_in
    if n_in:
        assert g.normalized.max() == 1.0
    assert np.all((g.normalized >= 0) & (g.normalized <= 1))


def test_duplicate_trajectories_double_counts_not_density():
    t = straight(38.8, -77.0, 1.0, 3 * NM_FT, 1000, 4000)
    g1 = build_density_grid(TrajectorySet([t]), SPEC)
    g2 = build_density_grid(TrajectorySet([t, t.copy()]), SPEC)
    assert np.array_equal(g2.counts, 2 * g1.counts)
    assert np.array_equal(g2.normalized, g1.normalized)


def test_parallel_build_matches_serial():
    rng = np.random.default_rng(1)
    trajs = [straight(rng.uniform(38.6, 39), rng.uniform(-77.3, -76.8), rng.uniform(0, 6.28),
                      rng.uniform(1, 8) * NM_FT, rng.uniform(0, 9000), rng.uniform(0, 9000)) for _ in range(30)]
    ts = TrajectorySet(trajs)
    a = build_density_grid(ts, SPEC, workers=1)
    b = build_density_grid(ts, SPEC, workers=4)
    assert np.array_equal(a.counts, b.counts)
    assert a.to_dict() == build_density_grid(ts, SPEC).to_dict()


def test_empty_set_gives_zero_grid():
    g = build_density_grid(TrajectorySet([]), SPEC)
    assert g.kappa_max == 0 and not g.normalized.any()
    assert mean_density(g) == 0.0


def test_density_at_agrees_with_brute_scan():
    rng = np.random.default_rng(2)
    counts = rng.integers(0, 5, SPEC.shape)
    g = AirspaceGrid.from_counts(SPEC, counts)
    for _ in range(1000):
        p = GeoPoint(rng.uniform(38.55, 39.05), rng.uniform(-77.35, -76.75), rng.uniform(-500, 10500))
        c = brute_cell(SPEC, p.lat, p.lon, p.alt)
        want = 0.0 if c is None else g.normalized[c]
        assert density_at(g, p) == want


def test_density_half_open_boundaries():
    g = AirspaceGrid.from_counts(SPEC, np.ones(SPEC.shape, dtype=int))
    le, oe, ae = SPEC.edges()
    assert density_at(g, GeoPoint(le[3], oe[4], ae[2])) == 1.0
    assert density_at(g, GeoPoint(le[-1], oe[4], ae[2])) == 0.0
    assert density_at(g, GeoPoint(10.0, 10.0, 100.0)) == 0.0


def test_mean_density_sum_of_divisions():
    counts = np.zeros(SPEC.shape, dtype=int)
    counts[3, 4, 5] = 9
    g = AirspaceGrid.from_counts(SPEC, counts)
    assert g.mean == pytest.approx(1 / 70, abs=1e-15)
    assert mean_density(g, "cells") == pytest.approx(1 / 9000)
    rng = np.random.default_rng(3)
    g = AirspaceGrid.from_counts(SPEC, rng.integers(0, 7, SPEC.shape))
    total = 0.0
    for i in range(30):
        for j in range(30):
            for k in range(10):
                total += g.normalized[i, j, k]
    assert g.mean == pytest.approx(total / 70, abs=1e-12)
    with pytest.raises(ValueError):
        mean_density(g, "product")


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec((1.0, 0.0), (0, 1), (0, 1))
    with pytest.raises(ValueError):
        GridSpec((0, 1), (0, 1), (0, 1), 0, 1, 1)


def test_grid_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    g = AirspaceGrid.from_counts(SPEC, rng.integers(0, 3, SPEC.shape))
    g.save(tmp_path / "g.json")
    h = AirspaceGrid.load(tmp_path / "g.json")
    assert np.array_equal(g.counts, h.counts) and h.spec == g.spec
    assert h.mean == g.mean


def test_adsb_ingestion(tmp_path):
    rows = ["time,icao24,lat,lon,alt_ft"]
    for k in range(5):
        rows.append(f"{k * 10},abc,{38.8 + k * 0.01},-77.0,{3000 - 100 * k}")
    # 300 s gap opens a new trajectory
    for k in range(3):
        rows.append(f"{400 + k * 10},abc,{38.7 + k * 0.01},-77.1,2000")
    rows.append("50,def,38.9,-77.0,-5")
    rows.append("60,def,38.9,-77.0,")
    rows.append("70,ghi,38.9,-77.0,1000")
    p = tmp_path / "a.csv"
    p.write_text("\n".join(rows) + "\n")
    ts = read_adsb_csv(p)
    assert len(ts) == 2
    assert ts.report["dropped_bad_altitude_or_missing"] == 2
    assert ts.report["discarded_single_point"] == 1
    assert [len(t) for t in ts.trajectories] == [5, 3]


def test_adsb_opensky_meters(tmp_path):
    p = tmp_path / "o.csv"
    p.write_text("time,icao24,lat,lon,baroaltitude\n0,a,38.8,-77,1000\n10,a,38.81,-77,900\n")
    ts = read_adsb_csv(p, opensky=True)
    assert ts.trajectories[0][0, 2] == pytest.approx(1000 / 0.3048)
    with pytest.raises(ValueError):
        read_adsb_csv(p)
