"""Run configuration and built-in benchmark scenarios.

The generators produce tool paths in the workpiece frame for a
rectangular blank.  When the configuration tilts the workpiece, the
same rigid placement is applied to the blank and to the path, so the
programmed features land on the inclined faces while the tool stays
vertical.  All features run along x and the default tilt axis is x,
which keeps the cutting passes horizontal in the machine frame.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .geometry import Frame, tilt_transform
from .oracle import DEFAULT_CELL_BUDGET, VoxelGrid
from .tool import Tool
from .toolpath import ToolPath, resample
from .workpiece import WorkpieceModel, init_workpiece

SCENARIO_NAMES = ("slot", "steps", "pocket")


@dataclass
class ScenarioConfig:
    """Everything needed to set up a simulation or oracle run."""

    dims: tuple = (60.0, 60.0, 20.0)
    density_g_cm3: float = 2.81
    tilt_deg: float = 0.0
    tilt_axis: str = "x"
    tool_diameter: float = 10.0
    flutes: int = 2
    helix_deg: float = 30.0
    flute_length: float = 20.0
    path_step: float = 0.5
    disk_height: float = 0.1
    delta_phi_deg: float = 0.4
    grid_spacing: float = 0.1
    voxel_spacing: float = 0.1
    mode: str = "down"
    depth_limit: float | None = None
    stepover: float = 6.0

    def __post_init__(self):
        for name in ("path_step", "disk_height", "delta_phi_deg",
                     "grid_spacing", "voxel_spacing", "stepover"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"$.sim.{_JSON_NAME.get(name, name)}: must be > 0")
        if any(d <= 0.0 for d in self.dims):
            raise ConfigError("$.stock.dims_mm: all dimensions must be > 0")
        if self.delta_phi_deg > 5.0:
            raise ConfigError("$.sim.delta_phi_deg: must be within (0, 5]")
        if not 0.0 <= self.tilt_deg <= 45.0:
            raise ConfigError("$.stock.tilt_deg: must be within [0, 45]")
        if self.tilt_axis not in ("x", "y"):
            raise ConfigError("$.stock.tilt_axis: must be 'x' or 'y'")
        if self.mode not in ("down", "up"):
            raise ConfigError("$.sim.mode: must be 'down' or 'up'")
        if self.stepover >= self.tool_diameter:
            raise ConfigError("$.sim.stepover_mm: must be below the tool diameter")

    # ---- construction from JSON -------------------------------------

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        if not isinstance(doc, dict):
            raise ConfigError("$: config root must be an object")
        kwargs = {}
        for section, items in doc.items():
            if section not in _SECTIONS:
                raise ConfigError(f"$.{section}: unknown section")
            if not isinstance(items, dict):
                raise ConfigError(f"$.{section}: must be an object")
            for key, value in items.items():
                path = f"$.{section}.{key}"
                if key not in _SECTIONS[section]:
                    raise ConfigError(f"{path}: unknown key")
                attr, kind = _SECTIONS[section][key]
                kwargs[attr] = _coerce(path, value, kind)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, filename) -> "ScenarioConfig":
        with open(filename, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"$: invalid JSON ({exc})") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        out: dict = {s: {} for s in _SECTIONS}
        for section, items in _SECTIONS.items():
            for key, (attr, _) in items.items():
                value = getattr(self, attr)
                if isinstance(value, tuple):
                    value = list(value)
                out[section][key] = value
        return out

    # ---- derived builders -------------------------------------------

    @property
    def density_g_mm3(self) -> float:
        return self.density_g_cm3 * 1e-3

    @property
    def delta_phi(self) -> float:
        return math.radians(self.delta_phi_deg)

    def placement(self) -> Frame | None:
        if self.tilt_deg == 0.0:
            return None
        center = 0.5 * np.asarray(self.dims, dtype=float)
        return tilt_transform(self.tilt_deg, self.tilt_axis, origin=center)

    def build_tool(self) -> Tool:
        return Tool(
            diameter=self.tool_diameter,
            flute_count=self.flutes,
            helix_angle_deg=self.helix_deg,
            flute_length=self.flute_length,
            disk_height=self.disk_height,
        )

    def build_workpiece(self) -> WorkpieceModel:
        return init_workpiece(
            self.dims,
            grid_spacing=self.grid_spacing,
            density=self.density_g_mm3,
            placement=self.placement(),
        )

    def build_voxel_grid(self, max_cells: int = DEFAULT_CELL_BUDGET) -> VoxelGrid:
        return VoxelGrid.from_box(
            self.dims,
            self.voxel_spacing,
            self.density_g_mm3,
            placement=self.placement(),
            max_cells=max_cells,
        )

    def prepare_path(self, path: ToolPath) -> ToolPath:
        """Resample and move a workpiece-frame path into the machine frame."""
        out = resample(path, self.path_step)
        frame = self.placement()
        if frame is not None:
            out = ToolPath(points=frame.transform(out.points),
                           feeds=out.feeds, source=out.source)
        return out


_JSON_NAME = {
    "path_step": "path_step_mm",
    "disk_height": "disk_height_mm",
    "grid_spacing": "grid_spacing_mm",
    "voxel_spacing": "voxel_spacing_mm",
    "stepover": "stepover_mm",
}

# section -> json key -> (attribute, type tag)
_SECTIONS = {
    "stock": {
        "dims_mm": ("dims", "vec3"),
        "density_g_cm3": ("density_g_cm3", "num"),
        "tilt_deg": ("tilt_deg", "num"),
        "tilt_axis": ("tilt_axis", "str"),
    },
    "tool": {
        "diameter_mm": ("tool_diameter", "num"),
        "flutes": ("flutes", "int"),
        "helix_deg": ("helix_deg", "num"),
        "flute_length_mm": ("flute_length", "num"),
    },
    "sim": {
        "path_step_mm": ("path_step", "num"),
        "disk_height_mm": ("disk_height", "num"),
        "delta_phi_deg": ("delta_phi_deg", "num"),
        "grid_spacing_mm": ("grid_spacing", "num"),
        "voxel_spacing_mm": ("voxel_spacing", "num"),
        "mode": ("mode", "str"),
        "depth_limit_mm": ("depth_limit", "optnum"),
        "stepover_mm": ("stepover", "num"),
    },
}


def _coerce(path: str, value, kind: str):
    if kind == "num":
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if kind == "optnum":
        if value is None:
            return None
        return _coerce(path, value, "num")
    if kind == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if kind == "vec3":
        if (not isinstance(value, (list, tuple)) or len(value) != 3
                or any(isinstance(v, bool) or not isinstance(v, (int, float))
                       for v in value)):
            raise ConfigError(f"{path}: expected a list of three numbers")
        return tuple(float(v) for v in value)
    raise AssertionError(kind)


# ---- built-in scenario paths (workpiece frame) -----------------------


def slot_path(cfg: ScenarioConfig) -> ToolPath:
    """Straight full-width slot, 2 mm deep, along the middle of the blank.

    Start and end sit one radius inside the faces, so the removed volume
    has the closed form (2R*L + pi*R^2) * depth.
    """
    dx, dy, dz = cfg.dims
    r = cfg.tool_diameter / 2.0
    z = dz - 2.0
    pts = np.array([[r, dy / 2.0, z], [dx - r, dy / 2.0, z]])
    return ToolPath(points=pts, source="scenario:slot")


def pocket_path(cfg: ScenarioConfig) -> ToolPath:
    """Serpentine clearing of the whole top face to 3 mm depth."""
    dx, dy, dz = cfg.dims
    r = cfg.tool_diameter / 2.0
    step = cfg.stepover
    z = dz - 3.0
    x_lo, x_hi = -(r + 1.0), dx + r + 1.0
    rows = list(np.arange(step / 2.0 - r, dy + r - step / 2.0 + 1e-9, step))
    if rows[-1] < dy - r:
        rows.append(rows[-1] + step)
    pts = []
    for i, y in enumerate(rows):
        a, b = (x_lo, x_hi) if i % 2 == 0 else (x_hi, x_lo)
        pts.append([a, y, z])
        pts.append([b, y, z])
        if i + 1 < len(rows):
            pts.append([b, rows[i + 1], z])
    return ToolPath(points=np.array(pts), source="scenario:pocket")


def steps_path(cfg: ScenarioConfig) -> ToolPath:
    """Three through-features of widths D, 0.75*D and 0.5*D.

    One shallow interior slot plus two edge shoulders at full depth,
    cut as single straight passes with air retracts in between.  The
    edge shoulders overhang the blank so the in-stock widths come out
    at 7.5 and 5 mm for the default 10 mm tool; radial immersion then
    spans full, three-quarter and half engagement.
    """
    dx, dy, dz = cfg.dims
    r = cfg.tool_diameter / 2.0
    x_lo, x_hi = -(r + 3.0), dx + r + 3.0
    z_air = dz + 5.0
    z_f1 = dz - 0.5
    z_deep = dz - 2.0
    y_f1 = 12.0
    y_f2 = dy - r / 2.0
    y_f3 = 0.0
    pts = [
        [x_lo, y_f1, z_air], [x_lo, y_f1, z_f1],
        [x_hi, y_f1, z_f1], [x_hi, y_f1, z_air],
        [x_hi, y_f2, z_air], [x_hi, y_f2, z_deep],
        [x_lo, y_f2, z_deep], [x_lo, y_f2, z_air],
        [x_lo, y_f3, z_air], [x_lo, y_f3, z_deep],
        [x_hi, y_f3, z_deep], [x_hi, y_f3, z_air],
    ]
    return ToolPath(points=np.array(pts), source="scenario:steps")


_GENERATORS = {"slot": slot_path, "steps": steps_path, "pocket": pocket_path}


def scenario_path(name: str, cfg: ScenarioConfig) -> ToolPath:
    """Workpiece-frame path for a named built-in scenario."""
    try:
        gen = _GENERATORS[name]
    except KeyError:
        raise ConfigError(
            f"unknown scenario {name!r}; choose from {', '.join(SCENARIO_NAMES)}"
        ) from None
    return gen(cfg)
