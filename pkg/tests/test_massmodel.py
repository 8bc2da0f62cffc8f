import dataclasses
import math

import numpy as np
import pytest

from millmass.errors import (
    EngagementMismatch,
    MassUnderflow,
    ParseError,
    SelfIntersectingRegion,
    VolumeUnderflow,
)
from millmass.geometry import TWO_PI, Circle2, circle_circle_lune_area, wrap_angle
from millmass.massmodel import (
    LookupTable,
    MassState,
    RemovalRecord,
    interval_overlap,
    pair_intervals,
    removals_to_csv,
    removed_area_slice,
    removed_volume_step,
    run_path,
    shift_intervals,
    update_com,
    update_mass,
    SliceRemoval,
)
from millmass.tool import Tool
from millmass.toolpath import ToolPath, resample
from millmass.workpiece import init_workpiece

RHO = 2.81e-3
R = 5.0
F = 0.5  # feed per step used in these tests


def make_tool(**kw):
    args = dict(diameter=10.0, flute_count=2, helix_angle_deg=30.0,
                flute_length=20.0, disk_height=0.1)
    args.update(kw)
    return Tool(**args)


def mc_area_centroid(inside, lo, hi, n=400_000, seed=1):
    """Monte-Carlo area and centroid of an indicator function on a box."""
    rng = np.random.default_rng(seed)
    pts = lo + (np.asarray(hi) - lo) * rng.random((n, 2))
    mask = inside(pts)
    box = float(np.prod(np.asarray(hi) - lo))
    area = box * mask.sum() / n
    return area, pts[mask].mean(axis=0)


# ---------------------------------------------------------------------------
# interval utilities
# ---------------------------------------------------------------------------


def test_interval_overlap_wrapping():
    a = (3.0 * math.pi / 2.0, 3.0 * math.pi / 2.0 + math.pi)  # crosses the seam
    b = (0.0, 1.0)
    assert interval_overlap(a, b) == pytest.approx(1.0)
    assert interval_overlap((0.0, TWO_PI), (1.0, 2.5)) == pytest.approx(1.5)
    assert interval_overlap((0.0, 1.0), (2.0, 3.0)) == 0.0


def test_pair_intervals_count_mismatch():
    with pytest.raises(EngagementMismatch):
        pair_intervals([(0.0, 1.0)], [(0.0, 1.0), (2.0, 3.0)])
    with pytest.raises(EngagementMismatch):
        pair_intervals([(0.0, 1.0)], [(2.0, 3.0)])


def test_pair_intervals_two_regions():
    prev = [(0.0, 1.0), (3.0, 4.0)]
    curr = [(3.1, 4.1), (0.2, 1.2)]
    pairs = pair_intervals(prev, curr)
    assert ((0.0, 1.0), (0.2, 1.2)) in pairs
    assert ((3.0, 4.0), (3.1, 4.1)) in pairs


def test_shift_intervals_round_trip():
    iv = [(wrap_angle(5.9), wrap_angle(5.9) + 1.0)]
    there = shift_intervals(iv, 0.7, "down")
    back = shift_intervals(there, -0.7, "down")
    assert back[0][0] == pytest.approx(iv[0][0])
    assert back[0][1] - back[0][0] == pytest.approx(1.0)
    up = shift_intervals(iv, 0.7, "up")
    assert up[0][0] == pytest.approx(wrap_angle(5.9 - 0.7))


# ---------------------------------------------------------------------------
# removed area construction vs independent oracles
# ---------------------------------------------------------------------------


def slot_intervals():
    """Exact steady-state slot engagement for feed F, both positions."""
    delta = math.asin(F / (2.0 * R))
    phi_in = 1.5 * math.pi - delta
    return [(phi_in, phi_in + math.pi + 2.0 * delta)]


def test_slot_crescent_matches_lune_closed_form():
    c0 = Circle2((0.0, 0.0), R)
    c1 = Circle2((F, 0.0), R)
    iv = slot_intervals()
    area, cen = removed_area_slice(c0, c1, iv, iv)
    exact = circle_circle_lune_area(c0, c1)
    assert area == pytest.approx(exact, rel=2e-3)
    assert cen[1] == pytest.approx(0.0, abs=1e-9)
    assert cen[0] > R - 1.0  # crescent hugs the leading edge


def test_full_circle_lune_area_and_centroid():
    c0 = Circle2((2.0, -1.0), R)
    c1 = Circle2((2.0 + F, -1.0), R)
    iv = [(0.0, TWO_PI)]
    area, cen = removed_area_slice(c0, c1, iv, iv)
    exact = circle_circle_lune_area(c0, c1)
    assert area == pytest.approx(exact, rel=2e-3)

    def inside(p):
        return (np.hypot(p[:, 0] - c1.center[0], p[:, 1] - c1.center[1]) <= R) & (
            np.hypot(p[:, 0] - c0.center[0], p[:, 1] - c0.center[1]) > R
        )

    mc_a, mc_c = mc_area_centroid(inside, np.array([2.0 + F - R, -1.0 - R]),
                                  np.array([2.0 + F + R, -1.0 + R]))
    assert area == pytest.approx(mc_a, rel=0.03)
    np.testing.assert_allclose(cen, mc_c, atol=0.05)


def test_half_immersion_area_and_centroid():
    # material fills y >= 0; removed region is the upper half crescent
    c0 = Circle2((0.0, 0.0), R)
    c1 = Circle2((F, 0.0), R)
    gamma = math.acos(F / (2.0 * R))
    curr = [(math.pi + gamma, TWO_PI)]
    prev = [(TWO_PI - gamma, TWO_PI)]
    area, cen = removed_area_slice(c0, c1, prev, curr, mismatch_tol=0.25)
    exact = 0.5 * circle_circle_lune_area(c0, c1)
    assert area == pytest.approx(exact, rel=5e-3)

    def inside(p):
        return (
            (p[:, 1] >= 0.0)
            & (np.hypot(p[:, 0] - F, p[:, 1]) <= R)
            & (np.hypot(p[:, 0], p[:, 1]) > R)
        )

    mc_a, mc_c = mc_area_centroid(inside, np.array([F - R, 0.0]), np.array([F + R, R]))
    assert area == pytest.approx(mc_a, rel=0.03)
    np.testing.assert_allclose(cen, mc_c, atol=0.05)
    assert cen[1] > 0.0


def test_removed_area_edge_cases():
    c0 = Circle2((0.0, 0.0), R)
    c1 = Circle2((F, 0.0), R)
    iv = slot_intervals()
    # vanished engagement: nothing to bound
    assert removed_area_slice(c0, c1, iv, []) == (0.0, None)
    # concentric circles: no in-plane sweep
    assert removed_area_slice(c0, c0, iv, iv) == (0.0, None)
    # fresh entry cannot be reconstructed from angles
    with pytest.raises(EngagementMismatch):
        removed_area_slice(c0, c1, [], iv)
    # measure jump beyond tolerance
    with pytest.raises(EngagementMismatch):
        removed_area_slice(c0, c1, [(0.0, 0.4)], [(0.0, 2.4)])
    # fully engaged paired with a partial interval
    with pytest.raises(EngagementMismatch):
        removed_area_slice(c0, c1, [(0.0, TWO_PI)], [(0.0, 0.85 * TWO_PI)],
                           mismatch_tol=0.5)


def test_removed_area_rejects_crossed_boundary():
    c0 = Circle2((0.0, 0.0), R)
    c1 = Circle2((F, 0.0), R)
    # same measure and some overlap, but rotated so far the closures
    # cannot bound a simple region
    with pytest.raises((SelfIntersectingRegion, EngagementMismatch)):
        removed_area_slice(c0, c1, [(1.5, 3.5)], [(0.0, 2.0)])


def test_disjoint_full_circles_remove_whole_disk():
    c0 = Circle2((0.0, 0.0), R)
    c1 = Circle2((2.5 * R, 0.0), R)
    iv = [(0.0, TWO_PI)]
    area, cen = removed_area_slice(c0, c1, iv, iv)
    assert area == pytest.approx(math.pi * R * R, rel=1e-3)
    np.testing.assert_allclose(cen, c1.center, atol=1e-3)


# ---------------------------------------------------------------------------
# recursion algebra
# ---------------------------------------------------------------------------


def test_update_mass_and_com_algebra():
    state = MassState(0, RHO * 100.0, 100.0, np.array([1.0, 0.0, 0.0]))
    rec = RemovalRecord(1, 40.0, np.array([2.0, 0.0, 0.0]))
    com = update_com(state, rec)
    np.testing.assert_allclose(com, [(100.0 - 80.0) / 60.0, 0.0, 0.0])
    state2 = dataclasses.replace(update_mass(state, rec, RHO), com=com)
    assert state2.volume == pytest.approx(60.0)
    assert state2.mass == pytest.approx(RHO * 60.0)
    # removing nothing moves nothing
    rec0 = RemovalRecord(2, 0.0, None)
    np.testing.assert_allclose(update_com(state2, rec0), com, atol=0)


def test_update_mass_underflow():
    state = MassState(0, RHO * 10.0, 10.0, np.zeros(3))
    with pytest.raises((VolumeUnderflow, MassUnderflow)):
        update_mass(state, RemovalRecord(1, 11.0, np.zeros(3)), RHO)


def test_removed_volume_step_weighting():
    per = [
        SliceRemoval(0, 1.0, 2.0, np.array([0.0, 0.0, 1.0]), "boundary"),
        SliceRemoval(1, 1.0, 6.0, np.array([4.0, 0.0, 2.0]), "dexel"),
    ]
    vol, cen = removed_volume_step(per)
    assert vol == pytest.approx(8.0)
    np.testing.assert_allclose(cen, [3.0, 0.0, 1.75])


# ---------------------------------------------------------------------------
# full runs on small boards
# ---------------------------------------------------------------------------


def test_run_path_air_cut_fixed_point():
    wp = init_workpiece((20.0, 20.0, 10.0), grid_spacing=0.1, density=RHO)
    tool = make_tool()
    path = resample(ToolPath(np.array([[-10.0, 10.0, 15.0], [30.0, 10.0, 15.0]])), 0.5)
    table, records = run_path(wp, tool, path)
    arr = table.as_array()
    assert np.all(arr[:, 9] == 0.0)
    assert np.all(arr[:, 5] == arr[0, 5])
    assert np.all(arr[:, 6:9] == arr[0, 6:9])
    assert all(r.volume == 0.0 for r in records)


def test_run_path_slot_mass_and_sources():
    wp = init_workpiece((60.0, 60.0, 20.0), grid_spacing=0.1, density=RHO)
    tool = make_tool()
    path = resample(ToolPath(np.array([[5.0, 30.0, 18.0], [55.0, 30.0, 18.0]])), 0.5)
    v0 = wp.volume()
    table, records = run_path(wp, tool, path)
    expect = (50.0 * 10.0 + math.pi * 25.0) * 2.0
    model_dv = table.removed_volume()
    assert model_dv == pytest.approx(expect, rel=0.01)
    assert table.mass_loss() == pytest.approx(RHO * expect, rel=0.01)
    # additivity against the dexel board's own bookkeeping
    assert model_dv == pytest.approx(v0 - wp.volume(), rel=0.02)
    # after the embedded entry transient the steps run on the boundary
    # model; the last step may fall back where the cutter grazes the face
    for r in records[2:-1]:
        assert r.per_slice, f"step {r.n} removed nothing"
        assert all(s.source == "boundary" for s in r.per_slice), (
            f"step {r.n} fell back: "
            f"{[(s.slice_index, s.source) for s in r.per_slice if s.source != 'boundary']}"
        )
    # removed centroid stays on the slot centreline at mid depth
    for r in records[2:]:
        assert r.centroid[1] == pytest.approx(30.0, abs=0.05)
        assert r.centroid[2] == pytest.approx(19.0, abs=0.05)


def test_run_path_face_slab_com_drop():
    # mill the whole top 2 mm off a 20 x 20 x 10 block in five passes
    wp = init_workpiece((20.0, 20.0, 10.0), grid_spacing=0.1, density=RHO)
    tool = make_tool()
    rows = [-2.0, 4.0, 10.0, 16.0, 22.0]
    pts = []
    x_lo, x_hi = -6.0, 26.0
    for i, y in enumerate(rows):
        a, b = (x_lo, x_hi) if i % 2 == 0 else (x_hi, x_lo)
        pts.append([a, y, 8.0])
        pts.append([b, y, 8.0])
        if i + 1 < len(rows):
            pts.append([b, rows[i + 1], 8.0])
    path = resample(ToolPath(np.array(pts)), 0.5)
    table, _ = run_path(wp, tool, path)
    expect_dv = 20.0 * 20.0 * 2.0
    assert table.mass_loss() == pytest.approx(RHO * expect_dv, rel=0.01)
    com = table.as_array()[-1, 6:9]
    # slab off the top: com drops from 5.0 to 4.0 exactly
    np.testing.assert_allclose(com, [10.0, 10.0, 4.0], atol=0.05)
    # mass is monotone non-increasing along the path
    masses = table.as_array()[:, 5]
    assert np.all(np.diff(masses) <= 1e-12)


def test_lookup_table_csv_round_trip(tmp_path):
    t = LookupTable(meta={"scenario": "unit", "rho_g_mm3": "0.00281"})
    t.append(0, 0.0, (1.0, 2.0, 3.0), 202.32, (30.0, 30.0, 10.0), 0.0)
    t.append(1, 0.5, (1.5, 2.0, 3.0), 202.277851, (30.00123, 29.99877, 9.999), 15.0)
    f = tmp_path / "table.csv"
    t.to_csv(f)
    text = f.read_text()
    assert "n,s_mm,x_mm,y_mm,z_mm,m_g,cx_mm,cy_mm,cz_mm,Vr_mm3" in text
    back = LookupTable.from_csv(f)
    assert back.meta["scenario"] == "unit"
    np.testing.assert_allclose(back.as_array(), t.as_array(), rtol=1e-8, atol=1e-12)


def test_lookup_table_rejects_foreign_csv(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("a,b\n1,2\n")
    with pytest.raises(ParseError):
        LookupTable.from_csv(f)


def test_removals_csv_header(tmp_path):
    recs = [RemovalRecord(1, 12.5, np.array([1.0, 2.0, 3.0])),
            RemovalRecord(2, 0.0, None)]
    f = tmp_path / "removals.csv"
    removals_to_csv(recs, f)
    lines = f.read_text().splitlines()
    assert lines[0] == "n,Vr_mm3,crx,cry,crz"
    assert lines[1].startswith("1,12.5,")
    assert lines[2] == "2,0,nan,nan,nan"
