"""End-to-end acceptance checks.

Six headline criteria, one summary line printed per criterion (the
lines bypass capture so a plain pytest run shows them).  Everything
here drives the public API or the CLI the way a user would.
"""

import math
import time

import numpy as np
import pytest

from millmass import (
    ScenarioConfig,
    Tool,
    ToolPath,
    compare,
    init_workpiece,
    resample,
    run_path,
    scenario_path,
    voxel_carve_path,
)
from millmass.cli import main as cli_main

RHO = 2.81e-3
BLANK_V0 = 60.0 * 60.0 * 20.0


def _announce(capsys, num, name, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {num}] {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def _run_model(cfg, name):
    path = cfg.prepare_path(scenario_path(name, cfg))
    wp = cfg.build_workpiece()
    table, records = run_path(
        wp, cfg.build_tool(), path,
        delta_phi=cfg.delta_phi, mode=cfg.mode, depth_limit=cfg.depth_limit,
    )
    return table, records, path, wp


def _run_oracle(cfg, path):
    grid = cfg.build_voxel_grid()
    return voxel_carve_path(grid, cfg.build_tool(), path, depth_limit=cfg.depth_limit)


@pytest.fixture(scope="module")
def pocket_run():
    """Shared serpentine 60x60x3 clearing run (criteria 2 and 5)."""
    cfg = ScenarioConfig()
    t0 = time.perf_counter()
    table, records, path, wp = _run_model(cfg, "pocket")
    t_model = time.perf_counter() - t0
    oracle = _run_oracle(cfg, path)
    total = time.perf_counter() - t0
    return {"cfg": cfg, "table": table, "records": records, "oracle": oracle,
            "t_model": t_model, "t_total": total}


def test_criterion_1_slot_analytic(capsys):
    cfg = ScenarioConfig()
    t0 = time.perf_counter()
    table, records, path, wp = _run_model(cfg, "slot")
    dt = time.perf_counter() - t0
    expect_dv = (2.0 * 5.0 * 50.0 + math.pi * 25.0) * 2.0
    dv = table.removed_volume()
    err = abs(dv - expect_dv) / expect_dv
    dm_ok = table.mass_loss() == pytest.approx(RHO * dv, rel=1e-9)
    ok = err <= 0.01 and dt < 10.0 and dm_ok
    _announce(capsys, 1, "slot analytic", ok,
              f"dV err {100 * err:.3f}%, {dt:.1f} s")
    assert err <= 0.01, f"slot dV {dv:.4f} vs {expect_dv:.4f}"
    assert dm_ok
    assert dt < 10.0, f"slot run took {dt:.1f} s"


def test_criterion_2_slab_com_identity(capsys, pocket_run):
    table = pocket_run["table"]
    oracle = pocket_run["oracle"]
    com_model_z = table.as_array()[-1, 8]
    com_oracle_z = oracle.com_after[2]
    dm = table.mass_loss()
    ok = (abs(com_model_z - 8.5) <= 0.05
          and abs(com_oracle_z - 8.5) <= 0.02
          and abs(dm - 30.348) <= 0.01 * 30.348)
    _announce(capsys, 2, "slab COM identity", ok,
              f"model z {com_model_z:.3f}, oracle z {com_oracle_z:.3f}, "
              f"dm {dm:.3f} g")
    assert abs(com_model_z - 8.5) <= 0.05
    assert abs(com_oracle_z - 8.5) <= 0.02
    assert dm == pytest.approx(30.348, rel=0.01)


def test_criterion_3_stepped_oracle_equivalence(capsys):
    cfg = ScenarioConfig(voxel_spacing=0.05)
    t0 = time.perf_counter()
    table, records, path, wp = _run_model(cfg, "steps")
    oracle = _run_oracle(cfg, path)
    dt = time.perf_counter() - t0
    rep = compare(table, oracle)
    ok = rep["e_dm"] <= 0.05 and rep["e_dc"] <= 0.05 and dt < 300.0
    _announce(capsys, 3, "stepped vs oracle", ok,
              f"e_dm {100 * rep['e_dm']:.2f}%, e_dc {100 * rep['e_dc']:.2f}%, "
              f"{dt:.0f} s")
    assert rep["e_dm"] <= 0.05, rep
    assert rep["e_dc"] <= 0.05, rep
    assert dt < 300.0


def test_criterion_4_tilted_oracle_equivalence(capsys):
    # voxel step widened to 0.1 mm: the tilted bounding box at 0.05 mm
    # would blow the voxel cell budget
    cfg = ScenarioConfig(tilt_deg=20.0, voxel_spacing=0.1)
    t0 = time.perf_counter()
    table, records, path, wp = _run_model(cfg, "steps")
    oracle = _run_oracle(cfg, path)
    dt = time.perf_counter() - t0
    rep = compare(table, oracle)
    ok = rep["e_dm"] <= 0.10 and rep["e_dc"] <= 0.10
    _announce(capsys, 4, "tilted 20 deg vs oracle", ok,
              f"e_dm {100 * rep['e_dm']:.2f}%, e_dc {100 * rep['e_dc']:.2f}%, "
              f"{dt:.0f} s")
    assert rep["e_dm"] <= 0.10, rep
    assert rep["e_dc"] <= 0.10, rep


def test_criterion_5_pocket_feasibility(capsys, pocket_run):
    rep = compare(pocket_run["table"], pocket_run["oracle"])
    total = pocket_run["t_total"]
    ok = rep["e_dm"] <= 0.05 and total < 900.0
    _announce(capsys, 5, "pocket feasibility", ok,
              f"e_dm {100 * rep['e_dm']:.2f}%, {total:.0f} s incl. oracle")
    assert rep["e_dm"] <= 0.05, rep
    assert total < 900.0


def test_criterion_6_invariant_suite(capsys, tmp_path, monkeypatch):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20260822)
    blank = (20.0, 20.0, 10.0)
    tool = Tool(diameter=8.0, flute_length=6.0, disk_height=0.2)
    delta_phi = math.radians(1.0)
    n_cases = 204
    box_tol = 0.01
    sweep_tol = 0.45  # one dexel cell plus closure slack

    for case in range(n_cases):
        air = case % 5 == 4
        npts = int(rng.integers(3, 6))
        xy = rng.uniform(-4.0, 24.0, (npts, 2))
        if air:
            z = rng.uniform(11.5, 14.0, npts)
        else:
            z = rng.uniform(7.0, 9.8, npts)
        path = resample(ToolPath(points=np.column_stack([xy, z])), 1.0)
        wp = init_workpiece(blank, grid_spacing=0.2, density=RHO)
        v0 = wp.volume()
        table, records = run_path(wp, tool, path, delta_phi=delta_phi)
        arr = table.as_array()
        masses = arr[:, 5]

        # mass monotone non-increasing
        assert np.all(np.diff(masses) <= 1e-9), f"case {case}: mass went up"

        # additivity against the board's own exact bookkeeping
        dv_model = table.removed_volume()
        dv_dexel = v0 - wp.volume()
        assert abs(dv_model - dv_dexel) <= 0.02 * dv_dexel + 1e-9, (
            f"case {case}: model {dv_model:.6f} vs dexel {dv_dexel:.6f}"
        )

        # workpiece COM stays inside the blank hull on every step
        coms = arr[:, 6:9]
        lo = np.array([0.0, 0.0, 0.0]) - box_tol
        hi = np.array(blank) + box_tol
        assert np.all(coms >= lo) and np.all(coms <= hi), f"case {case}"

        # removed-material centroid stays inside each move's swept hull
        for r, a, b in zip(records, path.points[:-1], path.points[1:]):
            if r.volume <= 1e-9:
                continue
            c = r.centroid
            xy_lo = np.minimum(a[:2], b[:2]) - tool.radius - sweep_tol
            xy_hi = np.maximum(a[:2], b[:2]) + tool.radius + sweep_tol
            z_lo = min(a[2], b[2]) - sweep_tol
            z_hi = min(max(a[2], b[2]) + tool.flute_length, blank[2]) + sweep_tol
            assert np.all(c[:2] >= xy_lo) and np.all(c[:2] <= xy_hi), (
                f"case {case} step {r.n}: centroid {c} outside swept xy"
            )
            assert z_lo <= c[2] <= z_hi, (
                f"case {case} step {r.n}: centroid {c} outside swept z"
            )
            assert np.all(c >= lo) and np.all(c <= hi), (
                f"case {case} step {r.n}: centroid {c} outside blank"
            )

        if air:
            # cuts through empty space change nothing at all
            assert dv_dexel == 0.0 and dv_model == 0.0
            assert np.all(masses == masses[0])
            assert np.all(coms == coms[0])

    # resolution halving: fine vs coarse slot agree to 0.5%
    dv = {}
    for label, cfg in (
        ("fine", ScenarioConfig()),
        ("coarse", ScenarioConfig(grid_spacing=0.2, disk_height=0.2,
                                  delta_phi_deg=0.8)),
    ):
        table, _, _, _ = _run_model(cfg, "slot")
        dv[label] = table.removed_volume()
    halving = abs(dv["coarse"] - dv["fine"]) / dv["fine"]
    assert halving <= 0.005, dv

    # byte determinism across runs and worker counts
    path_csv = tmp_path / "p.csv"
    path_csv.write_text("x_mm,y_mm,z_mm\n4,10,8.5\n16,10,8.5\n")
    outputs = []
    for threads, tag in (("1", "a"), ("4", "b")):
        monkeypatch.setenv("MILLMASS_THREADS", threads)
        out = tmp_path / f"t_{tag}.csv"
        rc = cli_main(["simulate", "--path", str(path_csv), "--out", str(out),
                       "--grid-spacing-mm", "0.2", "--disk-height-mm", "0.2"])
        assert rc == 0
        outputs.append(
            (out.read_bytes(), (tmp_path / f"t_{tag}.removals.csv").read_bytes())
        )
    assert outputs[0] == outputs[1], "outputs differ across worker counts"

    dt = time.perf_counter() - t0
    ok = dt < 300.0
    _announce(capsys, 6, "invariant suite", ok,
              f"{n_cases} random cases, halving {100 * halving:.3f}%, {dt:.0f} s")
    assert dt < 300.0, f"invariant suite took {dt:.1f} s"
