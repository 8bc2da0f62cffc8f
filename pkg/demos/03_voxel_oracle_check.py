"""Model vs brute force: same slot, two independent simulators.

The engagement-based model runs on a dexel board; the reference carves
a dense voxel grid.  They share nothing but the tool path, so close
agreement is meaningful.
"""

from millmass import (
    ScenarioConfig,
    compare,
    run_path,
    scenario_path,
    voxel_carve_path,
)


def main():
    cfg = ScenarioConfig()
    path = cfg.prepare_path(scenario_path("slot", cfg))

    wp = cfg.build_workpiece()
    table, _ = run_path(wp, cfg.build_tool(), path,
                        delta_phi=cfg.delta_phi, mode=cfg.mode)

    grid = cfg.build_voxel_grid()
    oracle = voxel_carve_path(grid, cfg.build_tool(), path)
    print(f"voxel oracle: {grid.nx} x {grid.ny} x {grid.nz} cells, "
          f"{oracle.runtime_s:.1f} s")

    rep = compare(table, oracle)
    print(f"\n{'quantity':<12} {'model':>12} {'oracle':>12} {'e':>8}")
    print(f"{'dm [g]':<12} {rep['dm_model_g']:>12.6g} "
          f"{rep['dm_oracle_g']:>12.6g} {100 * rep['e_dm']:>7.3f}%")
    print(f"{'|dc| [mm]':<12} {rep['dc_model_mm']:>12.6g} "
          f"{rep['dc_oracle_mm']:>12.6g} {100 * rep['e_dc']:>7.3f}%")

    worst = max(rep["per_step"][2:],
                key=lambda s: abs(s["Vr_model_mm3"] - s["Vr_oracle_mm3"]))
    print(f"\nworst per-step volume gap after entry: step {worst['n']}, "
          f"{worst['Vr_model_mm3']:.4f} vs {worst['Vr_oracle_mm3']:.4f} mm^3")


if __name__ == "__main__":
    main()
