"""Planar and rigid-body geometry primitives.

Angle conventions used throughout the package
---------------------------------------------

Absolute plane angles are measured counter-clockwise from +x as usual.
Engagement angles ``phi`` are feed-referenced: ``phi = 0`` points along
the instantaneous feed direction and ``phi`` grows in the direction the
cutting edge travels.  In down (climb) milling the spindle turns
clockwise in the plan view, so the mapping to absolute angles is

    alpha = feed_angle - phi        (down milling)
    alpha = feed_angle + phi        (up milling)

Angular intervals ``(phi_in, phi_ex)`` are stored with
``phi_in`` wrapped into ``[0, 2*pi)`` and ``phi_ex`` in
``(phi_in, phi_in + 2*pi]``; an exit value above ``2*pi`` simply means
the interval crosses the feed direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePolygon

TWO_PI = 2.0 * math.pi

# Discriminants within this band count as tangency, single intersection.
TANGENT_EPS = 1e-12

# Shoelace areas below this are treated as degenerate (mm^2).
AREA_EPS = 1e-12


def vec3(x: float, y: float, z: float) -> np.ndarray:
    return np.array([x, y, z], dtype=float)


def wrap_angle(a):
    """Wrap angle(s) into [0, 2*pi)."""
    return np.mod(a, TWO_PI)


def phi_to_absolute(phi, feed_angle: float, mode: str = "down"):
    """Map feed-referenced engagement angles to absolute plane angles."""
    if mode == "down":
        return feed_angle - np.asarray(phi, dtype=float)
    if mode == "up":
        return feed_angle + np.asarray(phi, dtype=float)
    raise ValueError(f"unknown milling mode {mode!r}")


def absolute_to_phi(alpha, feed_angle: float, mode: str = "down"):
    """Inverse of :func:`phi_to_absolute` (result not wrapped)."""
    if mode == "down":
        return feed_angle - np.asarray(alpha, dtype=float)
    if mode == "up":
        return np.asarray(alpha, dtype=float) - feed_angle
    raise ValueError(f"unknown milling mode {mode!r}")


# ---------------------------------------------------------------------------
# rigid placements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    """Rigid placement of a body: ``world = rotation @ local + origin``."""

    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=float).reshape(3)
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "rotation", r)
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-9):
            raise ValueError("rotation matrix is not orthonormal")
        if np.linalg.det(r) < 0.0:
            raise ValueError("rotation matrix is reflecting")

    def transform(self, points):
        """Map local points (3,) or (N, 3) into world coordinates."""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.origin

    def inverse_transform(self, points):
        p = np.asarray(points, dtype=float)
        return (p - self.origin) @ self.rotation

    @staticmethod
    def identity() -> "Frame":
        return Frame()


def tilt_transform(angle_deg: float, axis, origin=None) -> Frame:
    """Rotation by ``angle_deg`` about ``axis`` through ``origin``.

    Uses the Rodrigues formula; ``axis`` may be any non-zero 3-vector or
    one of the strings "x", "y", "z".
    """
    named = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}
    if isinstance(axis, str):
        try:
            axis = named[axis.lower()]
        except KeyError:
            raise ValueError(f"unknown axis name {axis!r}") from None
    k = np.asarray(axis, dtype=float).reshape(3)
    norm = np.linalg.norm(k)
    if norm == 0.0:
        raise ValueError("rotation axis must be non-zero")
    k = k / norm
    th = math.radians(angle_deg)
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    rot = np.eye(3) + math.sin(th) * kx + (1.0 - math.cos(th)) * (kx @ kx)
    if origin is None:
        origin = np.zeros(3)
    origin = np.asarray(origin, dtype=float).reshape(3)
    # rotate about a point: world = R (p - o) + o
    return Frame(origin=origin - rot @ origin, rotation=rot)


# ---------------------------------------------------------------------------
# circles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Circle2:
    """Circle in the plane (mm)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(2)
        object.__setattr__(self, "center", c)
        if not self.radius > 0.0:
            raise ValueError("circle radius must be positive")

    def point_at(self, angle):
        """Point(s) on the circle at absolute angle(s)."""
        a = np.asarray(angle, dtype=float)
        xy = np.stack([np.cos(a), np.sin(a)], axis=-1)
        return self.center + self.radius * xy


def circle_line_intersections(circle: Circle2, p0, p1):
    """Intersections of a circle with the segment's carrier line.

    Returns a list of ``(point, t)`` with ``point = p0 + t*(p1 - p0)``,
    sorted by ``t``.  A discriminant within ``TANGENT_EPS`` of zero is
    reported as a single tangency point.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    d = p1 - p0
    f = p0 - circle.center
    a = float(d @ d)
    if a == 0.0:
        return []
    b = 2.0 * float(f @ d)
    c = float(f @ f) - circle.radius**2
    disc = b * b - 4.0 * a * c
    if disc < -TANGENT_EPS:
        return []
    if disc <= TANGENT_EPS:
        t = -b / (2.0 * a)
        return [(p0 + t * d, t)]
    s = math.sqrt(disc)
    ts = sorted(((-b - s) / (2.0 * a), (-b + s) / (2.0 * a)))
    return [(p0 + t * d, t) for t in ts]


def circle_circle_intersection_angles(a: Circle2, b: Circle2):
    """Angles on each circle where the two circles cross.

    Returns ``(ang_a, ang_b)``: for each circle the pair of absolute
    angles of the two intersection points, or ``None`` when the circles
    do not cross in two points.
    """
    delta = b.center - a.center
    d = float(np.hypot(*delta))
    if d <= TANGENT_EPS or d >= a.radius + b.radius or d <= abs(a.radius - b.radius):
        return None
    base = math.atan2(delta[1], delta[0])
    ca = (d * d + a.radius**2 - b.radius**2) / (2.0 * d * a.radius)
    cb = (d * d + b.radius**2 - a.radius**2) / (2.0 * d * b.radius)
    ca = min(1.0, max(-1.0, ca))
    cb = min(1.0, max(-1.0, cb))
    ga = math.acos(ca)
    gb = math.acos(cb)
    # index i names the same physical point on both circles; seen from b
    # the intersections lie back towards a
    ang_a = (base - ga, base + ga)
    ang_b = (base + math.pi + gb, base + math.pi - gb)
    return ang_a, ang_b


def circle_circle_lune_area(a: Circle2, b: Circle2) -> float:
    """Area of ``disk(b) minus disk(a)``.

    For the equal-radius case this is the crescent swept when a cutter
    of radius R advances by the centre distance.
    """
    d = float(np.hypot(*(b.center - a.center)))
    ra, rb = a.radius, b.radius
    area_b = math.pi * rb * rb
    if d >= ra + rb:
        return area_b
    if d <= abs(ra - rb):
        # one disk inside the other
        return area_b - math.pi * ra * ra if ra < rb else 0.0
    # standard two-disk intersection area
    da = (d * d + ra * ra - rb * rb) / (2.0 * d)
    db = d - da
    inter = (
        ra * ra * math.acos(min(1.0, max(-1.0, da / ra)))
        - da * math.sqrt(max(0.0, ra * ra - da * da))
        + rb * rb * math.acos(min(1.0, max(-1.0, db / rb)))
        - db * math.sqrt(max(0.0, rb * rb - db * db))
    )
    return area_b - inter


def arc_polyline(circle: Circle2, ang_start: float, ang_end: float, max_step: float) -> np.ndarray:
    """Sample an arc as an (N, 2) polyline, endpoints included.

    The arc runs from ``ang_start`` to ``ang_end`` in the signed sense of
    the difference (decreasing angles give a clockwise arc).  ``max_step``
    bounds the angular spacing between samples.
    """
    if max_step <= 0.0:
        raise ValueError("max_step must be positive")
    span = ang_end - ang_start
    n = max(1, int(math.ceil(abs(span) / max_step)))
    angles = ang_start + span * np.linspace(0.0, 1.0, n + 1)
    return circle.point_at(angles)


# ---------------------------------------------------------------------------
# polygons
# ---------------------------------------------------------------------------


def polygon_area_centroid(vertices) -> tuple[float, np.ndarray]:
    """Signed-area based area and centroid of a simple polygon.

    Vertices are (N, 2), not necessarily closed.  Orientation is
    normalized away: the returned area is positive.  Raises
    :class:`DegeneratePolygon` for fewer than three vertices or a
    numerically zero area.
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
        raise DegeneratePolygon("polygon needs at least three plane vertices")
    x = v[:, 0]
    y = v[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    cross = x * yn - xn * y
    area2 = cross.sum()
    if abs(area2) < 2.0 * AREA_EPS:
        raise DegeneratePolygon(f"polygon area {0.5 * area2:.3e} mm^2 is degenerate")
    cx = ((x + xn) * cross).sum() / (3.0 * area2)
    cy = ((y + yn) * cross).sum() / (3.0 * area2)
    return abs(0.5 * area2), np.array([cx, cy])


def segments_properly_intersect(p0, p1, q0, q1, eps: float = 1e-12) -> bool:
    """True when the open segments cross at an interior point."""
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    q0 = np.asarray(q0, float)
    q1 = np.asarray(q1, float)
    r = p1 - p0
    s = q1 - q0
    denom = r[0] * s[1] - r[1] * s[0]
    if abs(denom) < eps:
        return False
    qp = q0 - p0
    t = (qp[0] * s[1] - qp[1] * s[0]) / denom
    u = (qp[0] * r[1] - qp[1] * r[0]) / denom
    return eps < t < 1.0 - eps and eps < u < 1.0 - eps
