"""Dexel board workpiece model: carving and engagement extraction.

The stock is discretized into vertical columns on a regular xy grid.
Most columns hold a single solid z-interval stored in two float arrays
(``bot``, ``top``); the rare columns that get split into several pieces
(tool passing fully inside the material) move to an overflow table of
interval lists.  Carving a tool motion subtracts a capsule-swept volume
column by column, which keeps volume bookkeeping exact by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooCoarse
from .geometry import TWO_PI, Frame, wrap_angle
from .tool import Tool, angular_resolution

# membership slack when classifying removal against interval ends
_Z_EPS = 1e-9


@dataclass
class SliceEngagement:
    """Engagement of one tool disk slice at one path position.

    ``intervals`` is a list of ``(phi_in, phi_ex)`` tuples in the
    feed-referenced convention of :mod:`millmass.geometry`:
    ``phi_in`` in [0, 2*pi), ``phi_ex`` in (phi_in, phi_in + 2*pi].
    """

    slice_index: int
    intervals: list[tuple[float, float]]
    feed_angle: float
    mode: str
    z_mid: float

    def measure(self) -> float:
        return sum(ex - pin for pin, ex in self.intervals)


@dataclass
class RemovedDexels:
    """Material removed by one carve, as per-column z-intervals."""

    x: np.ndarray
    y: np.ndarray
    z0: np.ndarray
    z1: np.ndarray
    cell_area: float

    @property
    def volume(self) -> float:
        if self.z0.size == 0:
            return 0.0
        return float(self.cell_area * (self.z1 - self.z0).sum())

    def centroid(self):
        """Volume centroid of the removed material, None when empty."""
        if self.z0.size == 0:
            return None
        w = self.z1 - self.z0
        tot = w.sum()
        if tot <= 0.0:
            return None
        return np.array(
            [
                (w * self.x).sum() / tot,
                (w * self.y).sum() / tot,
                (w * 0.5 * (self.z0 + self.z1)).sum() / tot,
            ]
        )

    def slice_breakdown(self, z_edges: np.ndarray):
        """Split the removal into horizontal bins.

        The outermost bins are stretched to cover all removed material so
        the per-bin volumes always sum to the exact total.  Returns
        ``(volumes, centroids)`` with centroid rows NaN for empty bins.
        """
        edges = np.asarray(z_edges, dtype=float).copy()
        k = edges.size - 1
        vols = np.zeros(k)
        cents = np.full((k, 3), np.nan)
        if self.z0.size == 0:
            return vols, cents
        edges[0] = min(edges[0], float(self.z0.min()))
        edges[-1] = max(edges[-1], float(self.z1.max()))
        # only bins overlapping the removed z-range do any work
        k0 = max(0, int(np.searchsorted(edges, self.z0.min(), side="right")) - 1)
        k1 = min(k, int(np.searchsorted(edges, self.z1.max(), side="left")))
        lo = np.maximum(self.z0[None, :], edges[k0:k1, None])
        hi = np.minimum(self.z1[None, :], edges[k0 + 1 : k1 + 1, None])
        ov = np.clip(hi - lo, 0.0, None)
        w = ov.sum(axis=1)
        vols[k0:k1] = self.cell_area * w
        nz = w > 0.0
        if np.any(nz):
            zmid = np.where(ov > 0.0, 0.5 * (lo + hi), 0.0)
            cx = (ov @ self.x)[nz] / w[nz]
            cy = (ov @ self.y)[nz] / w[nz]
            cz = (zmid * ov).sum(axis=1)[nz] / w[nz]
            rows = np.arange(k0, k1)[nz]
            cents[rows, 0] = cx
            cents[rows, 1] = cy
            cents[rows, 2] = cz
        return vols, cents


class WorkpieceModel:
    """Heightfield dexel board in machine coordinates."""

    def __init__(self, origin_xy, spacing: float, bot: np.ndarray, top: np.ndarray,
                 density: float):
        self.origin = np.asarray(origin_xy, dtype=float).reshape(2)
        self.spacing = float(spacing)
        self.bot = np.asarray(bot, dtype=float)
        self.top = np.asarray(top, dtype=float)
        if self.bot.shape != self.top.shape or self.bot.ndim != 2:
            raise ValueError("bot/top must be matching 2-d arrays")
        self.density = float(density)
        self.nx, self.ny = self.bot.shape
        # overflow columns: (ix, iy) -> sorted list of (z0, z1); a column
        # present here has its base arrays zeroed out
        self._overflow: dict[tuple[int, int], list[tuple[float, float]]] = {}
        h = self.spacing
        self._xs = self.origin[0] + h * (np.arange(self.nx) + 0.5)
        self._ys = self.origin[1] + h * (np.arange(self.ny) + 0.5)

    # -- queries ------------------------------------------------------------

    @property
    def cell_area(self) -> float:
        return self.spacing * self.spacing

    @property
    def xs(self) -> np.ndarray:
        return self._xs

    @property
    def ys(self) -> np.ndarray:
        return self._ys

    def volume(self) -> float:
        v = float((self.top - self.bot).sum())
        for segs in self._overflow.values():
            v += sum(z1 - z0 for z0, z1 in segs)
        return self.cell_area * v

    def mass(self) -> float:
        return self.density * self.volume()

    def com(self):
        """Volume centroid (uniform density), None for empty stock."""
        w = self.top - self.bot
        tot = float(w.sum())
        sx = float((w.sum(axis=1) * self._xs).sum())
        sy = float((w.sum(axis=0) * self._ys).sum())
        sz = float((w * 0.5 * (self.top + self.bot)).sum())
        for (ix, iy), segs in self._overflow.items():
            for z0, z1 in segs:
                dz = z1 - z0
                tot += dz
                sx += dz * self._xs[ix]
                sy += dz * self._ys[iy]
                sz += dz * 0.5 * (z0 + z1)
        if tot <= 0.0:
            return None
        return np.array([sx / tot, sy / tot, sz / tot])

    def solid_at(self, points) -> np.ndarray:
        """Boolean membership for (N, 3) sample points."""
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        ix = np.floor((p[:, 0] - self.origin[0]) / self.spacing).astype(np.intp)
        iy = np.floor((p[:, 1] - self.origin[1]) / self.spacing).astype(np.intp)
        ok = (ix >= 0) & (ix < self.nx) & (iy >= 0) & (iy < self.ny)
        out = np.zeros(p.shape[0], dtype=bool)
        ixc = np.clip(ix, 0, self.nx - 1)
        iyc = np.clip(iy, 0, self.ny - 1)
        z = p[:, 2]
        out = ok & (z >= self.bot[ixc, iyc]) & (z <= self.top[ixc, iyc])
        if self._overflow:
            for n in np.nonzero(ok & ~out)[0]:
                segs = self._overflow.get((int(ix[n]), int(iy[n])))
                if segs and any(z0 <= z[n] <= z1 for z0, z1 in segs):
                    out[n] = True
        return out

    def z_top_max(self) -> float:
        m = float(self.top.max()) if self.top.size else 0.0
        for segs in self._overflow.values():
            if segs:
                m = max(m, segs[-1][1])
        return m

    def dump_csv(self, filename) -> None:
        """Write the board as ``x_mm,y_mm,z0_mm,z1_mm`` rows, one per dexel."""
        with open(filename, "w") as fh:
            fh.write("x_mm,y_mm,z0_mm,z1_mm\n")
            solid = self.top > self.bot
            for ix, iy in np.argwhere(solid):
                fh.write(
                    f"{self._xs[ix]:.9g},{self._ys[iy]:.9g},"
                    f"{self.bot[ix, iy]:.9g},{self.top[ix, iy]:.9g}\n"
                )
            for (ix, iy), segs in sorted(self._overflow.items()):
                for z0, z1 in segs:
                    fh.write(
                        f"{self._xs[ix]:.9g},{self._ys[iy]:.9g},{z0:.9g},{z1:.9g}\n"
                    )

    # -- carving ------------------------------------------------------------

    def carve_capsule(self, a, b, radius: float, cut_length: float) -> RemovedDexels:
        """Subtract the volume swept by a vertical cylinder moving a -> b.

        The cylinder has the given radius, extends ``cut_length`` upward
        from the tool tip, and the tip travels the straight segment from
        ``a`` to ``b`` (3-d points).  Returns what was removed.
        """
        a = np.asarray(a, dtype=float).reshape(3)
        b = np.asarray(b, dtype=float).reshape(3)
        h = self.spacing
        x0, y0 = self.origin
        lo_x = min(a[0], b[0]) - radius
        hi_x = max(a[0], b[0]) + radius
        lo_y = min(a[1], b[1]) - radius
        hi_y = max(a[1], b[1]) + radius
        i0 = max(0, int(math.ceil((lo_x - x0) / h - 0.5 - 1e-12)))
        i1 = min(self.nx - 1, int(math.floor((hi_x - x0) / h - 0.5 + 1e-12)))
        j0 = max(0, int(math.ceil((lo_y - y0) / h - 0.5 - 1e-12)))
        j1 = min(self.ny - 1, int(math.floor((hi_y - y0) / h - 0.5 + 1e-12)))
        empty = RemovedDexels(
            np.empty(0), np.empty(0), np.empty(0), np.empty(0), self.cell_area
        )
        if i0 > i1 or j0 > j1:
            return empty

        X = self._xs[i0 : i1 + 1][:, None]
        Y = self._ys[j0 : j1 + 1][None, :]
        qx = X - a[0]
        qy = Y - a[1]
        dx, dy, dz = b - a
        seg2 = dx * dx + dy * dy
        if seg2 < 1e-24:
            inside = qx * qx + qy * qy <= radius * radius
            zlo = np.where(inside, min(a[2], b[2]), 0.0)
            zhi = np.where(inside, max(a[2], b[2]) + cut_length, 0.0)
            reach = inside
        else:
            m = (qx * dx + qy * dy) / seg2
            c = (qx * qx + qy * qy - radius * radius) / seg2
            disc = m * m - c
            reach = disc >= 0.0
            sq = np.sqrt(np.where(reach, disc, 0.0))
            t_in = m - sq
            t_out = m + sq
            reach &= (t_in <= 1.0) & (t_out >= 0.0)
            t0 = np.clip(t_in, 0.0, 1.0)
            t1 = np.clip(t_out, 0.0, 1.0)
            za = a[2] + t0 * dz
            zb = a[2] + t1 * dz
            zlo = np.minimum(za, zb)
            zhi = np.maximum(za, zb) + cut_length

        bot = self.bot[i0 : i1 + 1, j0 : j1 + 1]
        top = self.top[i0 : i1 + 1, j0 : j1 + 1]
        rlo = np.maximum(zlo, bot)
        rhi = np.minimum(zhi, top)
        cut = reach & (rhi - rlo > _Z_EPS)
        if self._overflow:
            for (ix, iy) in list(self._overflow):
                if i0 <= ix <= i1 and j0 <= iy <= j1:
                    cut[ix - i0, iy - j0] = False

        rem_x: list[np.ndarray] = []
        rem_y: list[np.ndarray] = []
        rem_z0: list[np.ndarray] = []
        rem_z1: list[np.ndarray] = []
        if np.any(cut):
            below = cut & (zlo > bot + _Z_EPS)  # material survives below the cut
            above = cut & (zhi < top - _Z_EPS)  # material survives above the cut
            split = below & above
            if np.any(split):
                for ii, jj in np.argwhere(split):
                    gx, gy = int(i0 + ii), int(j0 + jj)
                    self._overflow[(gx, gy)] = [
                        (float(bot[ii, jj]), float(zlo[ii, jj])),
                        (float(zhi[ii, jj]), float(top[ii, jj])),
                    ]
                cut_nb = cut & ~split
            else:
                cut_nb = cut
            ii, jj = np.nonzero(cut)
            rem_x.append(np.broadcast_to(X, cut.shape)[ii, jj])
            rem_y.append(np.broadcast_to(Y, cut.shape)[ii, jj])
            rem_z0.append(rlo[ii, jj].copy())
            rem_z1.append(rhi[ii, jj].copy())
            # base array update; split columns collapse to empty here
            new_top = np.where(cut_nb & ~above, np.minimum(top, zlo), top)
            new_bot = np.where(cut_nb & above, zhi, bot)
            new_top = np.where(split, bot, new_top)
            new_bot = np.where(split, bot, new_bot)
            new_top = np.maximum(new_top, new_bot)
            self.top[i0 : i1 + 1, j0 : j1 + 1] = new_top
            self.bot[i0 : i1 + 1, j0 : j1 + 1] = new_bot

        if self._overflow:
            self._carve_overflow(
                a, b, radius, cut_length, i0, i1, j0, j1,
                rem_x, rem_y, rem_z0, rem_z1,
            )

        if not rem_x:
            return empty
        return RemovedDexels(
            np.concatenate(rem_x),
            np.concatenate(rem_y),
            np.concatenate(rem_z0),
            np.concatenate(rem_z1),
            self.cell_area,
        )

    def _carve_overflow(self, a, b, radius, cut_length, i0, i1, j0, j1,
                        rem_x, rem_y, rem_z0, rem_z1) -> None:
        dx, dy, dz = b - a
        seg2 = dx * dx + dy * dy
        r2 = radius * radius
        done = []
        for (ix, iy), segs in self._overflow.items():
            if not (i0 <= ix <= i1 and j0 <= iy <= j1):
                continue
            qx = self._xs[ix] - a[0]
            qy = self._ys[iy] - a[1]
            if seg2 < 1e-24:
                if qx * qx + qy * qy > r2:
                    continue
                zlo = min(a[2], b[2])
                zhi = max(a[2], b[2]) + cut_length
            else:
                m = (qx * dx + qy * dy) / seg2
                c = (qx * qx + qy * qy - r2) / seg2
                disc = m * m - c
                if disc < 0.0:
                    continue
                sq = math.sqrt(disc)
                if m - sq > 1.0 or m + sq < 0.0:
                    continue
                t0 = min(1.0, max(0.0, m - sq))
                t1 = min(1.0, max(0.0, m + sq))
                za, zb = a[2] + t0 * dz, a[2] + t1 * dz
                zlo = min(za, zb)
                zhi = max(za, zb) + cut_length
            new_segs, removed = _subtract_interval(segs, zlo, zhi)
            if removed:
                for z0r, z1r in removed:
                    rem_x.append(np.array([self._xs[ix]]))
                    rem_y.append(np.array([self._ys[iy]]))
                    rem_z0.append(np.array([z0r]))
                    rem_z1.append(np.array([z1r]))
                if len(new_segs) <= 1:
                    done.append((ix, iy))
                    if new_segs:
                        self.bot[ix, iy], self.top[ix, iy] = new_segs[0]
                    else:
                        self.top[ix, iy] = self.bot[ix, iy]
                else:
                    self._overflow[(ix, iy)] = new_segs
        for key in done:
            del self._overflow[key]


def _subtract_interval(segs, lo, hi):
    """Remove [lo, hi] from a sorted interval list; returns (kept, removed)."""
    kept, removed = [], []
    for z0, z1 in segs:
        a0, a1 = max(z0, lo), min(z1, hi)
        if a1 > a0 + _Z_EPS:
            removed.append((a0, a1))
            if a0 > z0 + _Z_EPS:
                kept.append((z0, a0))
            if a1 < z1 - _Z_EPS:
                kept.append((a1, z1))
        else:
            kept.append((z0, z1))
    return kept, removed


# ---------------------------------------------------------------------------
# module level API
# ---------------------------------------------------------------------------


def init_workpiece(dims, grid_spacing: float = 0.1, density: float = 2.81e-3,
                   placement: Frame | None = None) -> WorkpieceModel:
    """Build the dexel board for a rectangular blank.

    ``dims`` are the box edge lengths in mm; the box spans ``[0, dims]``
    in its own frame and ``placement`` (optional) positions that frame in
    machine coordinates.  Because the blank is convex, every vertical
    machine line meets it in a single interval, so the heightfield is an
    exact representation up to the xy sampling.  ``density`` is in g/mm^3.
    """
    dims = np.asarray(dims, dtype=float).reshape(3)
    if np.any(dims <= 0.0):
        raise ValueError("workpiece dimensions must be positive")
    if grid_spacing <= 0.0:
        raise ValueError("grid spacing must be positive")
    if grid_spacing > dims.min() / 10.0:
        raise GridTooCoarse(
            f"grid spacing {grid_spacing} mm exceeds a tenth of the smallest "
            f"workpiece dimension {dims.min()} mm"
        )
    if placement is None:
        placement = Frame.identity()

    corners = np.array(
        [[x, y, z] for x in (0.0, dims[0]) for y in (0.0, dims[1]) for z in (0.0, dims[2])]
    )
    world = placement.transform(corners)
    lo = world.min(axis=0)
    hi = world.max(axis=0)
    h = float(grid_spacing)
    nx = max(1, int(math.ceil((hi[0] - lo[0]) / h - 1e-9)))
    ny = max(1, int(math.ceil((hi[1] - lo[1]) / h - 1e-9)))

    xs = lo[0] + h * (np.arange(nx) + 0.5)
    ys = lo[1] + h * (np.arange(ny) + 0.5)
    X, Y = np.meshgrid(xs, ys, indexing="ij")

    # vertical machine line through each column, clipped against the box
    # slabs in the box's own frame
    rot = placement.rotation
    base = np.stack([X.ravel(), Y.ravel(), np.zeros(X.size)], axis=1)
    q0 = (base - placement.origin) @ rot  # line point at machine z = 0
    d = rot.T[:, 2]  # direction of +z machine in box frame

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

    solid = t_hi > t_lo
    bot = np.where(solid, t_lo, 0.0).reshape(nx, ny)
    top = np.where(solid, t_hi, 0.0).reshape(nx, ny)
    return WorkpieceModel((lo[0], lo[1]), h, bot, top, density)


def carve_step(wp: WorkpieceModel, tool: Tool, p_from, p_to,
               depth_limit: float | None = None) -> RemovedDexels:
    """Carve one straight tool tip motion out of the board.

    ``depth_limit`` optionally caps the cutting length above the tip
    (defaults to the flute length).
    """
    cut_len = tool.flute_length if depth_limit is None else min(tool.flute_length, depth_limit)
    return wp.carve_capsule(p_from, p_to, tool.radius, cut_len)


def extract_engagement(wp: WorkpieceModel, tool: Tool, p, feed_angle: float = 0.0,
                       mode: str = "down", delta_phi: float | None = None,
                       min_run: int = 2) -> list[SliceEngagement]:
    """Sample cutter-workpiece engagement at tip position ``p``.

    For every tool disk slice, points on the cutter circle at the slice
    mid-height are tested against the board; contiguous solid runs become
    feed-referenced angular intervals.  Runs shorter than ``min_run``
    samples are treated as sampling noise.  Slices without engagement are
    omitted from the result.
    """
    if delta_phi is None:
        delta_phi = angular_resolution(tool)
    if not 0.0 < delta_phi <= math.radians(5.0) + 1e-12:
        raise ValueError("delta_phi must be in (0, 5 deg]")
    p = np.asarray(p, dtype=float).reshape(3)
    k = max(8, int(math.ceil(TWO_PI / delta_phi)))
    dphi = TWO_PI / k
    alphas = dphi * np.arange(k)
    px = p[0] + tool.radius * np.cos(alphas)
    py = p[1] + tool.radius * np.sin(alphas)

    h = wp.spacing
    ix = np.floor((px - wp.origin[0]) / h).astype(np.intp)
    iy = np.floor((py - wp.origin[1]) / h).astype(np.intp)
    valid = (ix >= 0) & (ix < wp.nx) & (iy >= 0) & (iy < wp.ny)
    ixc = np.clip(ix, 0, wp.nx - 1)
    iyc = np.clip(iy, 0, wp.ny - 1)
    bot_g = np.where(valid, wp.bot[ixc, iyc], 1.0)
    top_g = np.where(valid, wp.top[ixc, iyc], 0.0)

    ovf_samples = []
    if wp._overflow:
        for n in np.nonzero(valid)[0]:
            segs = wp._overflow.get((int(ix[n]), int(iy[n])))
            if segs:
                ovf_samples.append((int(n), segs))

    z_lo = float(bot_g[top_g > bot_g].min()) if np.any(top_g > bot_g) else math.inf
    z_hi = float(top_g.max())

    out = []
    for sl in tool.slices():
        z = p[2] + sl.z_mid
        if z < z_lo - _Z_EPS or z > z_hi + _Z_EPS:
            if not ovf_samples:
                continue
        engaged = (z >= bot_g) & (z <= top_g)
        for n, segs in ovf_samples:
            engaged[n] = any(s0 <= z <= s1 for s0, s1 in segs)
        if not engaged.any():
            continue
        intervals = _runs_to_intervals(engaged, alphas, dphi, feed_angle, mode, min_run)
        if intervals:
            out.append(SliceEngagement(sl.index, intervals, feed_angle, mode, z))
    return out


def _runs_to_intervals(engaged: np.ndarray, alphas: np.ndarray, dphi: float,
                       feed_angle: float, mode: str, min_run: int):
    k = engaged.size
    if engaged.all():
        return [(0.0, TWO_PI)]
    # rotate so index 0 is outside material, then runs cannot wrap
    k0 = int(np.argmin(engaged))
    rolled = np.roll(engaged, -k0)
    d = np.diff(rolled.astype(np.int8))
    starts = np.nonzero(d == 1)[0] + 1
    ends = np.nonzero(d == -1)[0]
    if rolled[-1]:
        ends = np.append(ends, k - 1)
    intervals = []
    for s, e in zip(starts, ends):
        count = e - s + 1
        if count < min_run:
            continue
        a_lo = alphas[(s + k0) % k] - 0.5 * dphi
        measure = min(TWO_PI, count * dphi)
        a_hi = a_lo + measure
        if mode == "down":
            phi_in = float(wrap_angle(feed_angle - a_hi))
        elif mode == "up":
            phi_in = float(wrap_angle(a_lo - feed_angle))
        else:
            raise ValueError(f"unknown milling mode {mode!r}")
        intervals.append((phi_in, phi_in + measure))
    intervals.sort()
    return intervals
