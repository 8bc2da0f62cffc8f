"""Brute-force voxel reference for mass and center-of-mass tracking.

Deliberately independent of the dexel/engagement machinery: the stock is
a dense boolean occupancy grid and every tool motion clears the voxels
whose centers fall inside the swept capsule.  Slow but simple, with
conservation exact by construction; used as ground truth in tests and by
the ``compare`` report.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import IncompatibleInputs, OutOfMemoryBudget
from .geometry import Frame
from .tool import Tool
from .toolpath import ToolPath

DEFAULT_CELL_BUDGET = 800_000_000


@dataclass
class OracleResult:
    """Summary of one voxel carve run."""

    spacing: float
    density: float
    v_before: float
    v_after: float
    com_before: np.ndarray
    com_after: np.ndarray
    per_step: list[dict] = field(default_factory=list)
    runtime_s: float = 0.0

    @property
    def dm_g(self) -> float:
        return self.density * (self.v_before - self.v_after)

    @property
    def dc_mm(self) -> np.ndarray:
        return np.asarray(self.com_after) - np.asarray(self.com_before)

    def to_json(self, filename) -> None:
        doc = {
            "spacing_mm": self.spacing,
            "density_g_mm3": self.density,
            "v_before_mm3": self.v_before,
            "v_after_mm3": self.v_after,
            "com_before_mm": list(map(float, self.com_before)),
            "com_after_mm": list(map(float, self.com_after)),
            "per_step": self.per_step,
            "runtime_s": self.runtime_s,
        }
        with open(filename, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)

    @classmethod
    def from_json(cls, filename) -> "OracleResult":
        with open(filename, encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls(
            spacing=float(doc["spacing_mm"]),
            density=float(doc["density_g_mm3"]),
            v_before=float(doc["v_before_mm3"]),
            v_after=float(doc["v_after_mm3"]),
            com_before=np.array(doc["com_before_mm"], dtype=float),
            com_after=np.array(doc["com_after_mm"], dtype=float),
            per_step=list(doc.get("per_step", [])),
            runtime_s=float(doc.get("runtime_s", 0.0)),
        )


class VoxelGrid:
    """Dense boolean occupancy on a uniform grid, cell centers sampled."""

    def __init__(self, origin, spacing: float, occ: np.ndarray, density: float):
        self.origin = np.asarray(origin, dtype=float).reshape(3)
        self.spacing = float(spacing)
        self.occ = occ
        self.density = float(density)
        self.nx, self.ny, self.nz = occ.shape
        h = self.spacing
        self._xs = self.origin[0] + h * (np.arange(self.nx) + 0.5)
        self._ys = self.origin[1] + h * (np.arange(self.ny) + 0.5)
        self._zs = self.origin[2] + h * (np.arange(self.nz) + 0.5)

    @classmethod
    def from_box(cls, dims, spacing: float, density: float,
                 placement: Frame | None = None,
                 max_cells: int = DEFAULT_CELL_BUDGET) -> "VoxelGrid":
        """Voxelize a rectangular blank, optionally placed by a rigid frame."""
        dims = np.asarray(dims, dtype=float).reshape(3)
        if np.any(dims <= 0.0) or spacing <= 0.0:
            raise ValueError("dimensions and spacing must be positive")
        if placement is None:
            placement = Frame.identity()
        corners = np.array(
            [[x, y, z] for x in (0.0, dims[0]) for y in (0.0, dims[1])
             for z in (0.0, dims[2])]
        )
        world = placement.transform(corners)
        lo = world.min(axis=0)
        hi = world.max(axis=0)
        n = np.maximum(1, np.ceil((hi - lo) / spacing - 1e-9).astype(int))
        cells = int(n[0]) * int(n[1]) * int(n[2])
        if cells > max_cells:
            raise OutOfMemoryBudget(
                f"{cells} voxels at spacing {spacing} mm exceed the budget "
                f"of {max_cells} cells"
            )
        grid = cls(lo, spacing, np.zeros(tuple(n), dtype=bool), density)

        # fill column-wise: vertical line through each (x, y) cell center,
        # clipped against the box slabs in the box frame
        X, Y = np.meshgrid(grid._xs, grid._ys, indexing="ij")
        base = np.stack([X.ravel(), Y.ravel(), np.zeros(X.size)], axis=1)
        rot = placement.rotation
        q0 = (base - placement.origin) @ rot
        d = rot.T[:, 2]
        t_lo = np.full(X.size, -np.inf)
        t_hi = np.full(X.size, np.inf)
        for axis in range(3):
            if abs(d[axis]) < 1e-15:
                inside = (q0[:, axis] >= 0.0) & (q0[:, axis] <= dims[axis])
                t_lo = np.where(inside, t_lo, np.inf)
                t_hi = np.where(inside, t_hi, -np.inf)
            else:
                ta = (0.0 - q0[:, axis]) / d[axis]
                tb = (dims[axis] - q0[:, axis]) / d[axis]
                t_lo = np.maximum(t_lo, np.minimum(ta, tb))
                t_hi = np.minimum(t_hi, np.maximum(ta, tb))
        oz, h = lo[2], spacing
        k_lo = np.ceil((t_lo - oz) / h - 0.5 - 1e-9).astype(np.int64)
        k_hi = np.floor((t_hi - oz) / h - 0.5 + 1e-9).astype(np.int64)
        k_lo = k_lo.reshape(grid.nx, grid.ny)
        k_hi = k_hi.reshape(grid.nx, grid.ny)
        # assemble in z blocks to bound temporary memory
        block = max(1, int(50_000_000 // (grid.nx * grid.ny)))
        for k0 in range(0, grid.nz, block):
            k1 = min(grid.nz, k0 + block)
            kk = np.arange(k0, k1)[None, None, :]
            grid.occ[:, :, k0:k1] = (kk >= k_lo[:, :, None]) & (kk <= k_hi[:, :, None])
        return grid

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    def volume(self) -> float:
        return float(np.count_nonzero(self.occ)) * self.cell_volume

    def com(self):
        """Occupancy centroid; None when the grid is empty."""
        count = np.count_nonzero(self.occ)
        if count == 0:
            return None
        sx = float(self.occ.sum(axis=(1, 2)) @ self._xs)
        sy = float(self.occ.sum(axis=(0, 2)) @ self._ys)
        sz = float(self.occ.sum(axis=(0, 1)) @ self._zs)
        return np.array([sx, sy, sz]) / count

    def carve_move(self, a, b, radius: float, cut_length: float) -> int:
        """Clear voxels swept by one tip motion; returns cleared count."""
        a = np.asarray(a, dtype=float).reshape(3)
        b = np.asarray(b, dtype=float).reshape(3)
        h = self.spacing
        i0 = max(0, int(math.ceil((min(a[0], b[0]) - radius - self.origin[0]) / h - 0.5 - 1e-12)))
        i1 = min(self.nx - 1, int(math.floor((max(a[0], b[0]) + radius - self.origin[0]) / h - 0.5 + 1e-12)))
        j0 = max(0, int(math.ceil((min(a[1], b[1]) - radius - self.origin[1]) / h - 0.5 - 1e-12)))
        j1 = min(self.ny - 1, int(math.floor((max(a[1], b[1]) + radius - self.origin[1]) / h - 0.5 + 1e-12)))
        if i0 > i1 or j0 > j1:
            return 0
        X = self._xs[i0 : i1 + 1][:, None]
        Y = self._ys[j0 : j1 + 1][None, :]
        qx = X - a[0]
        qy = Y - a[1]
        dx, dy, dz = b - a
        seg2 = dx * dx + dy * dy
        if seg2 < 1e-24:
            reach = qx * qx + qy * qy <= radius * radius
            zlo = np.full(reach.shape, min(a[2], b[2]))
            zhi = np.full(reach.shape, max(a[2], b[2]) + cut_length)
        else:
            m = (qx * dx + qy * dy) / seg2
            c = (qx * qx + qy * qy - radius * radius) / seg2
            disc = m * m - c
            reach = disc >= 0.0
            sq = np.sqrt(np.where(reach, disc, 0.0))
            reach &= (m - sq <= 1.0) & (m + sq >= 0.0)
            t0 = np.clip(m - sq, 0.0, 1.0)
            t1 = np.clip(m + sq, 0.0, 1.0)
            za = a[2] + t0 * dz
            zb = a[2] + t1 * dz
            zlo = np.minimum(za, zb)
            zhi = np.maximum(za, zb) + cut_length
        oz = self.origin[2]
        k_lo = np.ceil((zlo - oz) / h - 0.5 - 1e-9).astype(np.int64)
        k_hi = np.floor((zhi - oz) / h - 0.5 + 1e-9).astype(np.int64)
        k_lo = np.clip(k_lo, 0, self.nz)
        k_hi = np.clip(k_hi, -1, self.nz - 1)
        k_win_lo = int(k_lo[reach].min()) if np.any(reach) else 0
        k_win_hi = int(k_hi[reach].max()) if np.any(reach) else -1
        if k_win_lo > k_win_hi:
            return 0
        view = self.occ[i0 : i1 + 1, j0 : j1 + 1, k_win_lo : k_win_hi + 1]
        kk = np.arange(k_win_lo, k_win_hi + 1)[None, None, :]
        mask = reach[:, :, None] & (kk >= k_lo[:, :, None]) & (kk <= k_hi[:, :, None])
        mask &= view
        cleared = int(np.count_nonzero(mask))
        if cleared:
            view &= ~mask
        return cleared


def voxel_carve_path(grid: VoxelGrid, tool: Tool, path: ToolPath,
                     depth_limit: float | None = None) -> OracleResult:
    """Carve a whole path through the voxel grid and summarize the result."""
    cut_len = tool.flute_length if depth_limit is None else min(tool.flute_length, depth_limit)
    t0 = time.perf_counter()
    v_before = grid.volume()
    com_before = grid.com()
    per_step = []
    pts = path.points
    for n in range(len(pts) - 1):
        cleared = grid.carve_move(pts[n], pts[n + 1], tool.radius, cut_len)
        per_step.append({"n": n + 1, "Vr_mm3": cleared * grid.cell_volume})
    v_after = grid.volume()
    com_after = grid.com()
    if com_after is None:
        com_after = com_before
    return OracleResult(
        spacing=grid.spacing,
        density=grid.density,
        v_before=v_before,
        v_after=v_after,
        com_before=np.asarray(com_before, dtype=float),
        com_after=np.asarray(com_after, dtype=float),
        per_step=per_step,
        runtime_s=time.perf_counter() - t0,
    )


def compare(table, oracle: OracleResult) -> dict:
    """Model-vs-oracle error report.

    ``table`` is a LookupTable (or anything with ``as_array()`` returning
    the standard 10 columns).  Raises :class:`IncompatibleInputs` when
    the two runs clearly describe different setups.
    """
    arr = table.as_array()
    if arr.shape[0] < 1:
        raise IncompatibleInputs("model table is empty")
    rho = oracle.density
    v0_model = arr[0, 5] / rho
    if abs(v0_model - oracle.v_before) > 0.01 * max(v0_model, oracle.v_before):
        raise IncompatibleInputs(
            f"initial volume differs: model {v0_model:.6g} mm^3 vs "
            f"oracle {oracle.v_before:.6g} mm^3"
        )
    dm_model = float(arr[0, 5] - arr[-1, 5])
    dm_oracle = oracle.dm_g
    dc_model = float(np.linalg.norm(arr[-1, 6:9] - arr[0, 6:9]))
    dc_oracle = float(np.linalg.norm(oracle.dc_mm))
    per_step = []
    model_steps = {int(row[0]): float(row[9]) for row in arr[1:]}
    for entry in oracle.per_step:
        n = int(entry["n"])
        if n in model_steps:
            per_step.append(
                {"n": n, "Vr_model_mm3": model_steps[n],
                 "Vr_oracle_mm3": float(entry["Vr_mm3"])}
            )
    return {
        "dm_model_g": dm_model,
        "dm_oracle_g": dm_oracle,
        "e_dm": _rel_err(dm_model, dm_oracle),
        "dc_model_mm": dc_model,
        "dc_oracle_mm": dc_oracle,
        "e_dc": _rel_err(dc_model, dc_oracle),
        "per_step": per_step,
    }


def _rel_err(value: float, reference: float) -> float:
    if reference == 0.0:
        return 0.0 if value == 0.0 else math.inf
    return abs(value - reference) / abs(reference)
