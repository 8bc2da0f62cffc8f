"""Removed-material model and the mass / center-of-mass recursion.

For every path step and every tool disk slice, the area swept out of the
workpiece is reconstructed from the engagement intervals at the previous
and the current position.  The region removed by one slice in one step
is bounded by four pieces: the engaged arc of the current cutter circle
(entry to exit, in tooth travel direction), a straight closure at the
exit, the engaged arc of the previous circle traversed backwards, and a
straight closure at the entry.  Area and centroid of that boundary
polygon feed a simple recursion

    m[n+1] = m[n] - rho * V_r[n]
    c[n+1] = (c[n] * V[n] - c_r[n] * V_r[n]) / V[n+1]

Whenever the boundary construction is not well posed (fresh entry into
material, vanishing engagement, interval pairing failures, degenerate or
self-crossing boundaries), the step falls back to the dexel-measured
removal of the carve itself, which keeps the volume bookkeeping additive
by construction.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegeneratePolygon,
    EngagementMismatch,
    MassUnderflow,
    ParseError,
    SelfIntersectingRegion,
    VolumeUnderflow,
)
from .geometry import (
    TWO_PI,
    Circle2,
    arc_polyline,
    circle_circle_intersection_angles,
    circle_line_intersections,
    phi_to_absolute,
    polygon_area_centroid,
    segments_properly_intersect,
    wrap_angle,
)
from .tool import Tool, angular_resolution
from .toolpath import ToolPath
from .workpiece import WorkpieceModel, carve_step, extract_engagement

log = logging.getLogger(__name__)

# intervals at least this close to 2*pi count as a fully engaged circle
_FULL_SLACK = 1e-9

# boundary-model slice volume must stay within this relative band of the
# dexel-measured one, otherwise the construction is distrusted
_AGREEMENT_TOL = 0.2


@dataclass(frozen=True)
class MassState:
    """Workpiece mass, volume and center of mass after step ``n``."""

    n: int
    mass: float
    volume: float
    com: np.ndarray


@dataclass
class SliceRemoval:
    """Removal attributed to one disk slice within one step."""

    slice_index: int
    area: float          # mm^2 in the slice plane
    volume: float        # mm^3
    centroid: np.ndarray | None
    source: str          # "boundary" or "dexel"


@dataclass
class RemovalRecord:
    """Everything removed during one path step."""

    n: int
    volume: float
    centroid: np.ndarray | None
    per_slice: list[SliceRemoval] = field(default_factory=list)

    @property
    def fallback_volume(self) -> float:
        return sum(s.volume for s in self.per_slice if s.source == "dexel")


# ---------------------------------------------------------------------------
# interval pairing
# ---------------------------------------------------------------------------


def interval_overlap(a, b) -> float:
    """Arc length shared by two wrapped angular intervals."""
    sa, la = wrap_angle(a[0]), a[1] - a[0]
    sb, lb = wrap_angle(b[0]), b[1] - b[0]
    total = 0.0
    for shift in (-TWO_PI, 0.0, TWO_PI):
        lo = max(sa, sb + shift)
        hi = min(sa + la, sb + shift + lb)
        if hi > lo:
            total += hi - lo
    return min(total, la, lb)


def pair_intervals(prev: list, curr: list) -> list:
    """Match engagement intervals of consecutive positions one-to-one.

    Raises :class:`EngagementMismatch` when the counts differ or some
    interval finds no overlapping partner.
    """
    if len(prev) != len(curr):
        raise EngagementMismatch(
            f"interval count changed {len(prev)} -> {len(curr)}"
        )
    if len(prev) == 1:
        if interval_overlap(prev[0], curr[0]) <= 0.0:
            raise EngagementMismatch("engagement intervals do not overlap")
        return [(prev[0], curr[0])]
    scored = sorted(
        ((interval_overlap(p, c), i, j) for i, p in enumerate(prev) for j, c in enumerate(curr)),
        reverse=True,
    )
    used_p: set[int] = set()
    used_c: set[int] = set()
    pairs = []
    for ov, i, j in scored:
        if i in used_p or j in used_c:
            continue
        if ov <= 0.0:
            raise EngagementMismatch("engagement intervals do not overlap")
        used_p.add(i)
        used_c.add(j)
        pairs.append((prev[i], curr[j]))
    return pairs


def shift_intervals(intervals: list, turn: float, mode: str = "down") -> list:
    """Re-express intervals after the feed frame turned by ``turn`` rad."""
    if turn == 0.0 or not intervals:
        return list(intervals)
    # alpha is fixed in space; phi = feed - alpha (down) / alpha - feed (up)
    d = turn if mode == "down" else -turn
    out = []
    for pin, pex in intervals:
        new_in = float(wrap_angle(pin + d))
        out.append((new_in, new_in + (pex - pin)))
    out.sort()
    return out


# ---------------------------------------------------------------------------
# removed area of a single slice
# ---------------------------------------------------------------------------


def removed_area_slice(c_prev: Circle2, c_curr: Circle2, iv_prev: list, iv_curr: list,
                       *, arc_step: float = math.radians(0.4), mode: str = "down",
                       mismatch_tol: float = 0.2):
    """Area and centroid removed by one disk slice over one step.

    ``iv_prev`` / ``iv_curr`` are the slice's engagement intervals at the
    two positions, already expressed in the current move's feed frame.
    Returns ``(area, centroid)`` with ``centroid=None`` for zero area.
    Empty current engagement means the slice leaves no region to bound
    and yields zero; a fresh entry (empty previous engagement) cannot be
    bounded and raises :class:`EngagementMismatch`.
    """
    if not iv_curr:
        return 0.0, None
    delta = c_curr.center - c_prev.center
    dist = float(np.hypot(*delta))
    if dist < 1e-12:
        return 0.0, None  # no in-plane motion, nothing swept sideways
    if not iv_prev:
        raise EngagementMismatch("no engagement at the previous position")
    feed = math.atan2(delta[1], delta[0])

    total = 0.0
    moment = np.zeros(2)
    for p, c in pair_intervals(iv_prev, iv_curr):
        mp = p[1] - p[0]
        mc = c[1] - c[0]
        if abs(mc - mp) > mismatch_tol * max(mp, mc):
            raise EngagementMismatch(
                f"engagement measure jumped {mp:.4f} -> {mc:.4f} rad"
            )
        full_p = mp >= TWO_PI - _FULL_SLACK
        full_c = mc >= TWO_PI - _FULL_SLACK
        if full_p and full_c:
            poly = _full_circle_lune(c_prev, c_curr, feed, arc_step)
        elif full_p or full_c:
            raise EngagementMismatch("fully engaged paired with partial interval")
        else:
            poly = _arc_boundary(c_prev, c_curr, p, c, feed, mode, arc_step)
        try:
            area, cen = polygon_area_centroid(poly)
        except DegeneratePolygon:
            continue  # grazing contact, nothing measurable removed
        total += area
        moment += area * cen
    if total <= 0.0:
        return 0.0, None
    return total, moment / total


def _full_circle_lune(c_prev: Circle2, c_curr: Circle2, feed: float,
                      arc_step: float) -> np.ndarray:
    """Boundary of disk(curr) minus disk(prev) for a fully embedded slice."""
    if circle_circle_intersection_angles(c_prev, c_curr) is None:
        # the previous disk does not reach into the current one
        return arc_polyline(c_curr, feed, feed + TWO_PI, arc_step)[:-1]
    delta = c_curr.center - c_prev.center
    dist = float(np.hypot(*delta))
    gamma = math.acos(max(-1.0, min(1.0, dist / (2.0 * c_curr.radius))))
    # crescent cusps sit at feed +- (pi - gamma) on the current circle and
    # at feed +- gamma on the previous one; both arcs run through the
    # feed-side points of their circles
    outer = arc_polyline(c_curr, feed + (math.pi - gamma), feed - (math.pi - gamma), arc_step)
    inner = arc_polyline(c_prev, feed - gamma, feed + gamma, arc_step)
    return np.vstack([outer, inner])


def _arc_boundary(c_prev: Circle2, c_curr: Circle2, ivp, ivc, feed: float,
                  mode: str, arc_step: float) -> np.ndarray:
    a_in_c = float(phi_to_absolute(ivc[0], feed, mode))
    a_ex_c = float(phi_to_absolute(ivc[1], feed, mode))
    a_in_p = float(phi_to_absolute(ivp[0], feed, mode))
    a_ex_p = float(phi_to_absolute(ivp[1], feed, mode))
    arc_new = arc_polyline(c_curr, a_in_c, a_ex_c, arc_step)  # tooth travel
    arc_old = arc_polyline(c_prev, a_ex_p, a_in_p, arc_step)  # backwards
    # the circles cross at two cusp points; a healthy region has them at
    # (or beyond) the arc ends, never in the interior of both arcs
    inter = circle_circle_intersection_angles(c_prev, c_curr)
    if inter is not None:
        ang_prev, ang_curr = inter
        for ap, ac in zip(ang_prev, ang_curr):
            if _angle_inside_span(ac, a_in_c, a_ex_c, arc_step) and \
               _angle_inside_span(ap, a_ex_p, a_in_p, arc_step):
                raise SelfIntersectingRegion("boundary arcs cross each other")
    seg_exit = (arc_new[-1], arc_old[0])
    seg_entry = (arc_old[-1], arc_new[0])
    if segments_properly_intersect(*seg_exit, *seg_entry):
        raise SelfIntersectingRegion("entry and exit closures cross")
    for seg in (seg_exit, seg_entry):
        if _segment_crosses_arc(seg, c_curr, a_in_c, a_ex_c, arc_step) or \
           _segment_crosses_arc(seg, c_prev, a_ex_p, a_in_p, arc_step):
            raise SelfIntersectingRegion("closure segment crosses a boundary arc")
    return np.vstack([arc_new, arc_old])


def _angle_inside_span(ang: float, a_from: float, a_to: float, margin: float) -> bool:
    """Is the absolute angle strictly inside the arc span, away from its ends?"""
    lo, hi = min(a_from, a_to), max(a_from, a_to)
    if hi - lo <= 2.0 * margin:
        return False
    ang_u = lo + float(wrap_angle(ang - lo))
    return lo + margin < ang_u < hi - margin


def _segment_crosses_arc(seg, circle: Circle2, a_from: float, a_to: float,
                         arc_step: float) -> bool:
    """Does the open segment cross the arc away from the arc's endpoints?"""
    lo, hi = min(a_from, a_to), max(a_from, a_to)
    margin = arc_step
    if hi - lo <= 2.0 * margin:
        return False
    for pt, t in circle_line_intersections(circle, seg[0], seg[1]):
        if not 1e-6 < t < 1.0 - 1e-6:
            continue
        ang = math.atan2(pt[1] - circle.center[1], pt[0] - circle.center[0])
        ang_u = lo + float(wrap_angle(ang - lo))
        if lo + margin < ang_u < hi - margin:
            return True
    return False


# ---------------------------------------------------------------------------
# step assembly and the recursion
# ---------------------------------------------------------------------------


def removed_volume_step(per_slice: list[SliceRemoval]) -> tuple[float, np.ndarray | None]:
    """Total volume and volume-weighted centroid of one step's removals."""
    vol = 0.0
    moment = np.zeros(3)
    for s in per_slice:
        if s.volume <= 0.0 or s.centroid is None:
            continue
        vol += s.volume
        moment += s.volume * s.centroid
    if vol <= 0.0:
        return 0.0, None
    return vol, moment / vol


def update_mass(state: MassState, record: RemovalRecord, density: float) -> MassState:
    """Advance mass and volume by one removal; center of mass unchanged."""
    v_new = state.volume - record.volume
    m_new = state.mass - density * record.volume
    slack = 1e-9 * max(1.0, state.volume)
    if v_new < -slack:
        raise VolumeUnderflow(
            f"step {record.n}: removing {record.volume:.6g} mm^3 from "
            f"{state.volume:.6g} mm^3"
        )
    if m_new < -density * slack:
        raise MassUnderflow(f"step {record.n}: workpiece mass would go negative")
    return MassState(record.n, max(0.0, m_new), max(0.0, v_new), state.com)


def update_com(state: MassState, record: RemovalRecord) -> np.ndarray:
    """Center of mass after removing ``record`` from ``state``."""
    if record.volume <= 0.0 or record.centroid is None:
        return state.com.copy()
    v_new = state.volume - record.volume
    if v_new <= 0.0:
        return state.com.copy()  # nothing left; keep the last finite value
    return (state.com * state.volume - record.centroid * record.volume) / v_new


# ---------------------------------------------------------------------------
# lookup table
# ---------------------------------------------------------------------------


class LookupTable:
    """Per-step mass property table emitted by :func:`run_path`."""

    HEADER = "n,s_mm,x_mm,y_mm,z_mm,m_g,cx_mm,cy_mm,cz_mm,Vr_mm3"

    def __init__(self, meta: dict | None = None):
        self.meta = dict(meta or {})
        self.rows: list[tuple] = []

    def append(self, n: int, s: float, pos, mass: float, com, vr: float) -> None:
        pos = np.asarray(pos, dtype=float)
        com = np.asarray(com, dtype=float)
        self.rows.append(
            (int(n), float(s), float(pos[0]), float(pos[1]), float(pos[2]),
             float(mass), float(com[0]), float(com[1]), float(com[2]), float(vr))
        )

    def __len__(self) -> int:
        return len(self.rows)

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(-1, 10)

    @property
    def initial_mass(self) -> float:
        return self.rows[0][5]

    @property
    def final_mass(self) -> float:
        return self.rows[-1][5]

    def mass_loss(self) -> float:
        return self.initial_mass - self.final_mass

    def com_shift(self) -> np.ndarray:
        a = self.as_array()
        return a[-1, 6:9] - a[0, 6:9]

    def removed_volume(self) -> float:
        return float(self.as_array()[:, 9].sum())

    def to_csv(self, filename) -> None:
        with open(filename, "w", encoding="utf-8") as fh:
            for key, value in self.meta.items():
                fh.write(f"# {key}: {value}\n")
            fh.write(self.HEADER + "\n")
            for row in self.rows:
                fh.write(f"{row[0]}," + ",".join(f"{v:.9g}" for v in row[1:]) + "\n")

    @classmethod
    def from_csv(cls, filename) -> "LookupTable":
        table = cls()
        with open(filename, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        body = []
        for ln in lines:
            if ln.startswith("#"):
                key, _, value = ln[1:].partition(":")
                table.meta[key.strip()] = value.strip()
            elif ln.strip():
                body.append(ln)
        if not body or body[0] != cls.HEADER:
            raise ParseError(f"{filename}: expected header {cls.HEADER!r}")
        for i, ln in enumerate(body[1:], start=2):
            parts = ln.split(",")
            if len(parts) != 10:
                raise ParseError(f"{filename}: line {i}: expected 10 columns")
            try:
                table.rows.append((int(parts[0]),) + tuple(float(v) for v in parts[1:]))
            except ValueError as exc:
                raise ParseError(f"{filename}: line {i}: {exc}") from None
        return table


def removals_to_csv(records: list[RemovalRecord], filename) -> None:
    """Per-step removed volume and its centroid, one row per step."""
    with open(filename, "w", encoding="utf-8") as fh:
        fh.write("n,Vr_mm3,crx,cry,crz\n")
        for r in records:
            if r.centroid is None:
                fh.write(f"{r.n},{r.volume:.9g},nan,nan,nan\n")
            else:
                fh.write(
                    f"{r.n},{r.volume:.9g},{r.centroid[0]:.9g},"
                    f"{r.centroid[1]:.9g},{r.centroid[2]:.9g}\n"
                )


# ---------------------------------------------------------------------------
# full path run
# ---------------------------------------------------------------------------


def _move_feed_angle(a: np.ndarray, b: np.ndarray, fallback: float) -> float:
    dx, dy = b[0] - a[0], b[1] - a[1]
    if dx * dx + dy * dy < 1e-18:
        return fallback
    return math.atan2(dy, dx)


def _first_feed_angle(pts: np.ndarray) -> float:
    for i in range(len(pts) - 1):
        dx, dy = pts[i + 1][0] - pts[i][0], pts[i + 1][1] - pts[i][1]
        if dx * dx + dy * dy >= 1e-18:
            return math.atan2(dy, dx)
    return 0.0


def run_path(wp: WorkpieceModel, tool: Tool, path: ToolPath, *,
             delta_phi: float | None = None, mode: str = "down",
             depth_limit: float | None = None, mismatch_tol: float = 0.2,
             meta: dict | None = None):
    """Simulate a tool path and return ``(LookupTable, [RemovalRecord])``.

    The workpiece board is carved in place.  Engagement is extracted one
    position ahead against pre-move material, so each position is sampled
    exactly once and reused for the adjacent steps.
    """
    if delta_phi is None:
        delta_phi = angular_resolution(tool)
    pts = path.points
    v0 = wp.volume()
    com0 = wp.com()
    if com0 is None:
        com0 = np.zeros(3)
    state = MassState(0, wp.density * v0, v0, np.asarray(com0, dtype=float))
    table = LookupTable(meta)
    table.append(0, 0.0, pts[0], state.mass, state.com, 0.0)
    records: list[RemovalRecord] = []

    edges = tool.slice_edges()
    heights = np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    radius = tool.radius

    feed_prev = _first_feed_angle(pts)
    eng_prev = {e.slice_index: e for e in
                extract_engagement(wp, tool, pts[0], feed_prev, mode, delta_phi)}
    s = 0.0
    for n in range(len(pts) - 1):
        a, b = pts[n], pts[n + 1]
        feed = _move_feed_angle(a, b, feed_prev)
        turn = feed - feed_prev
        eng_next = {e.slice_index: e for e in
                    extract_engagement(wp, tool, b, feed, mode, delta_phi)}
        removed = carve_step(wp, tool, a, b, depth_limit)
        vols, cents = removed.slice_breakdown(b[2] + edges)

        c_prev = Circle2(a[:2], radius)
        c_curr = Circle2(b[:2], radius)
        planar = float(np.hypot(b[0] - a[0], b[1] - a[1])) >= 1e-12
        per_slice: list[SliceRemoval] = []
        for k in np.nonzero(vols > 0.0)[0]:
            k = int(k)
            dex_v = float(vols[k])
            result = None
            if planar and k in eng_prev and k in eng_next:
                ivp = shift_intervals(eng_prev[k].intervals, turn, mode)
                ivc = eng_next[k].intervals
                try:
                    area, cen2 = removed_area_slice(
                        c_prev, c_curr, ivp, ivc,
                        arc_step=delta_phi, mode=mode, mismatch_tol=mismatch_tol,
                    )
                    if area > 0.0:
                        vol = area * float(heights[k])
                        if abs(vol - dex_v) <= _AGREEMENT_TOL * max(vol, dex_v):
                            cen = np.array([cen2[0], cen2[1], b[2] + mids[k]])
                            result = SliceRemoval(k, area, vol, cen, "boundary")
                        else:
                            log.debug(
                                "step %d slice %d: boundary volume %.4g vs "
                                "dexel %.4g, falling back", n + 1, k, vol, dex_v,
                            )
                except (EngagementMismatch, SelfIntersectingRegion) as exc:
                    log.debug("step %d slice %d: %s", n + 1, k, exc)
            if result is None:
                area = dex_v / float(heights[k])
                result = SliceRemoval(k, area, dex_v, cents[k].copy(), "dexel")
            per_slice.append(result)

        vr, cr = removed_volume_step(per_slice)
        record = RemovalRecord(n + 1, vr, cr, per_slice)
        records.append(record)
        com_next = update_com(state, record)
        state = dataclasses.replace(
            update_mass(state, record, wp.density), com=com_next
        )
        s += float(np.linalg.norm(b - a))
        table.append(n + 1, s, b, state.mass, state.com, vr)
        eng_prev = eng_next
        feed_prev = feed
    return table, records
