"""Command-line front end.

Subcommands: ``simulate`` (dexel/engagement model), ``oracle`` (voxel
reference), ``compare`` (error report between the two), ``scenario``
(built-in benchmark paths).  Option precedence is flags over config
file over defaults; the effective configuration is written into every
output header so a result file is self-describing.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ConfigError, MillmassError
from .massmodel import LookupTable, removals_to_csv, run_path
from .oracle import OracleResult, compare, voxel_carve_path
from .scenarios import SCENARIO_NAMES, ScenarioConfig, scenario_path
from .toolpath import load_path, save_path

# (flag, config section, config key, type tag) for generic overrides
_OVERRIDE_FLAGS = [
    ("tilt_deg", "stock", "tilt_deg", float),
    ("tilt_axis", "stock", "tilt_axis", str),
    ("density_g_cm3", "stock", "density_g_cm3", float),
    ("tool_diameter_mm", "tool", "diameter_mm", float),
    ("path_step_mm", "sim", "path_step_mm", float),
    ("disk_height_mm", "sim", "disk_height_mm", float),
    ("delta_phi_deg", "sim", "delta_phi_deg", float),
    ("grid_spacing_mm", "sim", "grid_spacing_mm", float),
    ("voxel_spacing_mm", "sim", "voxel_spacing_mm", float),
    ("mode", "sim", "mode", str),
    ("depth_limit_mm", "sim", "depth_limit_mm", float),
    ("stepover_mm", "sim", "stepover_mm", float),
]


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    _worker_cap()
    try:
        return args.func(args)
    except MillmassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="millmass",
        description="Workpiece mass and center-of-mass prediction for milling paths.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run the engagement-based mass model")
    _add_config_flags(p_sim)
    p_sim.add_argument("--path", required=True, help="tool path file (CSV or G-code)")
    p_sim.add_argument("--out", required=True, help="lookup table CSV to write")
    p_sim.add_argument("--removals-out", default=None,
                       help="per-step removal CSV (default: <out>.removals.csv)")
    p_sim.set_defaults(func=_cmd_simulate)

    p_ora = sub.add_parser("oracle", help="run the brute-force voxel reference")
    _add_config_flags(p_ora)
    p_ora.add_argument("--path", required=True, help="tool path file (CSV or G-code)")
    p_ora.add_argument("--out", required=True, help="oracle result JSON to write")
    p_ora.set_defaults(func=_cmd_oracle)

    p_cmp = sub.add_parser("compare", help="error report: model vs oracle")
    p_cmp.add_argument("--model", required=True, help="lookup table CSV from simulate")
    p_cmp.add_argument("--oracle", required=True, help="result JSON from oracle")
    p_cmp.add_argument("--out", default=None, help="report JSON to write (optional)")
    p_cmp.set_defaults(func=_cmd_compare)

    p_scn = sub.add_parser("scenario", help="emit a built-in benchmark path")
    p_scn.add_argument("name", choices=SCENARIO_NAMES)
    _add_config_flags(p_scn)
    p_scn.add_argument("--out", required=True, help="path CSV to write")
    p_scn.set_defaults(func=_cmd_scenario)
    return parser


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON configuration file")
    for flag, _, _, kind in _OVERRIDE_FLAGS:
        p.add_argument(f"--{flag.replace('_', '-')}", type=kind, default=None,
                       dest=flag, help=argparse.SUPPRESS)


def _load_config(args) -> ScenarioConfig:
    """Merge defaults, config file and command-line flags."""
    doc: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"$: invalid JSON ({exc})") from exc
    for flag, section, key, _ in _OVERRIDE_FLAGS:
        value = getattr(args, flag, None)
        if value is not None:
            doc.setdefault(section, {})[key] = value
    return ScenarioConfig.from_dict(doc)


def _worker_cap() -> int:
    """Worker cap from MILLMASS_THREADS.

    All kernels run serially today, so any valid cap is honored
    trivially; results never depend on it.  Garbage values warn.
    """
    raw = os.environ.get("MILLMASS_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        print(f"warning: ignoring MILLMASS_THREADS={raw!r}", file=sys.stderr)
        return 1
    return n


def _meta(cfg: ScenarioConfig, extra: dict) -> dict:
    """Flatten the effective config into output-header key/value pairs.

    Volatile run facts (thread cap, timing) stay out: outputs must be
    byte-identical across runs and worker counts.
    """
    meta = {}
    for section, items in cfg.to_dict().items():
        for key, value in items.items():
            meta[f"{section}.{key}"] = value
    meta.update(extra)
    return meta


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    path = cfg.prepare_path(load_path(args.path))
    wp = cfg.build_workpiece()
    tool = cfg.build_tool()
    table, records = run_path(
        wp, tool, path,
        delta_phi=cfg.delta_phi,
        mode=cfg.mode,
        depth_limit=cfg.depth_limit,
        meta=_meta(cfg, {"path": str(args.path), "n_steps": len(path.points) - 1}),
    )
    table.to_csv(args.out)
    removals_out = args.removals_out or _default_removals_name(args.out)
    removals_to_csv(records, removals_out)
    n_fallback = sum(
        1 for r in records if any(s.source == "dexel" for s in r.per_slice)
    )
    print(f"wrote {args.out} ({len(table)} rows) and {removals_out}")
    print(f"initial mass {table.initial_mass:.6g} g, final {table.final_mass:.6g} g, "
          f"removed {table.removed_volume():.6g} mm^3")
    print(f"{n_fallback} of {len(records)} steps used the measured-removal fallback")
    return 0


def _default_removals_name(out: str) -> str:
    stem, ext = os.path.splitext(out)
    return f"{stem}.removals{ext or '.csv'}"


def _cmd_oracle(args) -> int:
    cfg = _load_config(args)
    path = cfg.prepare_path(load_path(args.path))
    grid = cfg.build_voxel_grid()
    tool = cfg.build_tool()
    result = voxel_carve_path(grid, tool, path, depth_limit=cfg.depth_limit)
    result.to_json(args.out)
    print(f"wrote {args.out}")
    print(f"removed {result.v_before - result.v_after:.6g} mm^3 "
          f"({result.dm_g:.6g} g) in {result.runtime_s:.1f} s "
          f"at {cfg.voxel_spacing} mm voxels")
    return 0


def _cmd_compare(args) -> int:
    table = LookupTable.from_csv(args.model)
    oracle = OracleResult.from_json(args.oracle)
    report = compare(table, oracle)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=1)
    print(f"{'quantity':<12} {'model':>12} {'reference':>12} {'e':>8}")
    for label, mk, rk, ek in (
        ("dm [g]", "dm_model_g", "dm_oracle_g", "e_dm"),
        ("|dc| [mm]", "dc_model_mm", "dc_oracle_mm", "e_dc"),
    ):
        print(f"{label:<12} {report[mk]:>12.6g} {report[rk]:>12.6g} "
              f"{100.0 * report[ek]:>7.2f}%")
    if args.out:
        print(f"wrote {args.out}")
    return 0


def _cmd_scenario(args) -> int:
    cfg = _load_config(args)
    path = scenario_path(args.name, cfg)
    save_path(path, args.out)
    print(f"wrote {args.out} ({len(path.points)} points, workpiece frame)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
