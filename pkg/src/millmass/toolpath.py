"""Tool path representation and I/O.

Paths are polylines of tool tip positions in machine coordinates (mm).
Two input formats are supported: a CSV with header
``x_mm,y_mm,z_mm[,f_mm_min]`` and a small G-code subset (G0/G1 with
modal words).  Arc motions are refused rather than approximated.
"""

from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, UnsupportedMotion

log = logging.getLogger(__name__)


@dataclass
class ToolPath:
    """Polyline of tool tip positions, optional per-point feed rates."""

    points: np.ndarray
    feeds: np.ndarray | None = None
    source: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ValueError("path needs an (N, 3) array with N >= 1")
        feeds = self.feeds
        if feeds is not None:
            feeds = np.asarray(feeds, dtype=float).reshape(-1)
            if feeds.shape[0] != pts.shape[0]:
                raise ValueError("feeds length must match points")
        # collapse exact consecutive duplicates, they carry no motion
        keep = np.ones(pts.shape[0], dtype=bool)
        keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
        self.points = pts[keep]
        self.feeds = feeds[keep] if feeds is not None else None

    def __len__(self) -> int:
        return self.points.shape[0]

    def length(self) -> float:
        """Total polyline length in mm."""
        if len(self) < 2:
            return 0.0
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())

    def arc_lengths(self) -> np.ndarray:
        """Cumulative distance along the path, one value per point."""
        s = np.zeros(len(self))
        if len(self) > 1:
            s[1:] = np.cumsum(np.linalg.norm(np.diff(self.points, axis=0), axis=1))
        return s


def resample(path: ToolPath, step: float) -> ToolPath:
    """Subdivide segments so no step exceeds ``step`` mm.

    Original vertices are preserved exactly; each segment is split into
    equal pieces.  Feeds are held constant within a segment.
    """
    if step <= 0.0:
        raise ValueError("resample step must be positive")
    pts = path.points
    if len(path) < 2:
        return ToolPath(pts.copy(), None if path.feeds is None else path.feeds.copy(), path.source)
    out = [pts[0]]
    out_f = [path.feeds[0]] if path.feeds is not None else None
    for i in range(len(path) - 1):
        a, b = pts[i], pts[i + 1]
        seg = float(np.linalg.norm(b - a))
        n = max(1, int(math.ceil(seg / step - 1e-12)))
        for k in range(1, n + 1):
            out.append(a + (b - a) * (k / n))
            if out_f is not None:
                out_f.append(path.feeds[i + 1])
    return ToolPath(np.array(out), np.array(out_f) if out_f is not None else None, path.source)


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------


def load_path(filename) -> ToolPath:
    """Load a tool path from a ``.csv`` or G-code (``.nc``/``.gcode``) file."""
    p = Path(filename)
    suffix = p.suffix.lower()
    if suffix == ".csv":
        return _load_csv(p)
    if suffix in (".nc", ".gcode", ".ngc", ".tap"):
        return _load_gcode(p)
    raise ParseError(f"{p}: unrecognized path format {suffix!r}")


def save_path(path: ToolPath, filename) -> None:
    """Write a path as CSV; floats use repr so a round trip is bit exact."""
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        if path.feeds is not None:
            w.writerow(["x_mm", "y_mm", "z_mm", "f_mm_min"])
            for pt, f in zip(path.points, path.feeds):
                w.writerow([repr(float(v)) for v in pt] + [repr(float(f))])
        else:
            w.writerow(["x_mm", "y_mm", "z_mm"])
            for pt in path.points:
                w.writerow([repr(float(v)) for v in pt])


def _load_csv(p: Path) -> ToolPath:
    with open(p, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise ParseError(f"{p}: empty path file")
    header = [h.strip().lower() for h in rows[0]]
    if header[:3] != ["x_mm", "y_mm", "z_mm"]:
        raise ParseError(f"{p}: line 1: expected header x_mm,y_mm,z_mm[,f_mm_min]")
    has_feed = len(header) > 3 and header[3] == "f_mm_min"
    pts, feeds = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            pts.append([float(row[0]), float(row[1]), float(row[2])])
            if has_feed:
                feeds.append(float(row[3]))
        except (ValueError, IndexError) as exc:
            raise ParseError(f"{p}: line {lineno}: {exc}") from None
    if not pts:
        raise ParseError(f"{p}: no path points")
    return ToolPath(np.array(pts), np.array(feeds) if has_feed else None, str(p))


_WORD_RE = re.compile(r"([A-Za-z])\s*([+-]?\d*\.?\d+)")


def _load_gcode(p: Path) -> ToolPath:
    pts, feeds = [], []
    x = y = z = None
    feed = 0.0
    motion = None
    warned: set[str] = set()
    with open(p) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split(";", 1)[0]
            line = re.sub(r"\([^)]*\)", " ", line).strip()  # () comments
            if not line or line.startswith("%"):
                continue
            moved = False
            for letter, num in _WORD_RE.findall(line):
                letter = letter.upper()
                if letter == "G":
                    code = float(num)
                    if code in (0.0, 1.0):
                        motion = int(code)
                    elif code in (2.0, 3.0):
                        raise UnsupportedMotion(
                            f"{p}: line {lineno}: arc motion G{int(code)} is not supported, "
                            "linearize the path first"
                        )
                    elif code in (20.0,):
                        raise ParseError(f"{p}: line {lineno}: inch units (G20) not supported")
                    elif code not in (17.0, 21.0, 40.0, 49.0, 54.0, 90.0):
                        _warn_once(warned, f"G{num}", p, lineno)
                elif letter == "X":
                    x, moved = float(num), True
                elif letter == "Y":
                    y, moved = float(num), True
                elif letter == "Z":
                    z, moved = float(num), True
                elif letter == "F":
                    feed = float(num)
                elif letter in ("M", "S", "T", "N"):
                    pass  # spindle/tool/line-number words do not affect geometry
                else:
                    _warn_once(warned, letter, p, lineno)
            if moved:
                if motion is None:
                    raise ParseError(f"{p}: line {lineno}: coordinate words before G0/G1")
                if x is None or y is None or z is None:
                    raise ParseError(
                        f"{p}: line {lineno}: first motion must define X, Y and Z"
                    )
                pts.append([x, y, z])
                feeds.append(feed)
    if not pts:
        raise ParseError(f"{p}: no motion found")
    return ToolPath(np.array(pts), np.array(feeds), str(p))


def _warn_once(warned: set[str], word: str, p: Path, lineno: int) -> None:
    if word not in warned:
        warned.add(word)
        log.warning("%s: line %d: ignoring word %s", p, lineno, word)
