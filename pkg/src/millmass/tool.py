"""Cutting tool description and its axial disk decomposition."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DiskSlice:
    """One axial slice of the tool, z measured up from the tip."""

    index: int
    z_low: float
    z_high: float
    angular_offset: float  # helix lag of the cutting edge at slice mid-height, rad

    @property
    def height(self) -> float:
        return self.z_high - self.z_low

    @property
    def z_mid(self) -> float:
        return 0.5 * (self.z_low + self.z_high)


@dataclass(frozen=True)
class Tool:
    """Flat end mill, dimensions in mm, angles in degrees."""

    diameter: float
    flute_count: int = 2
    helix_angle_deg: float = 30.0
    flute_length: float = 20.0
    disk_height: float = 0.1

    def __post_init__(self):
        if not self.diameter > 0.0:
            raise ValueError("tool diameter must be positive")
        if self.flute_count < 1:
            raise ValueError("tool needs at least one flute")
        if not 0.0 <= self.helix_angle_deg < 90.0:
            raise ValueError("helix angle must be in [0, 90) degrees")
        if not self.flute_length > 0.0:
            raise ValueError("flute length must be positive")
        if not 0.0 < self.disk_height <= self.flute_length:
            raise ValueError("disk height must be in (0, flute_length]")

    @property
    def radius(self) -> float:
        return 0.5 * self.diameter

    @property
    def n_slices(self) -> int:
        return int(math.ceil(self.flute_length / self.disk_height - 1e-9))

    def slice_edges(self) -> np.ndarray:
        """z breakpoints of the disk stack, from 0 to flute_length."""
        edges = self.disk_height * np.arange(self.n_slices + 1, dtype=float)
        edges[-1] = self.flute_length  # last slice may be shorter
        return edges

    def slices(self) -> list[DiskSlice]:
        edges = self.slice_edges()
        lag = 2.0 * math.tan(math.radians(self.helix_angle_deg)) / self.diameter
        out = []
        for i in range(self.n_slices):
            z0, z1 = float(edges[i]), float(edges[i + 1])
            out.append(DiskSlice(i, z0, z1, 0.5 * (z0 + z1) * lag))
        return out


def angular_resolution(tool: Tool) -> float:
    """Engagement sampling step matched to the helix lag across one disk.

    Over one disk height the cutting edge twists by
    ``2 * b * tan(helix) / D`` radians; sampling engagement finer than
    that resolves nothing the disk model can represent.
    """
    lag = 2.0 * tool.disk_height * math.tan(math.radians(tool.helix_angle_deg)) / tool.diameter
    cap = math.radians(0.5)
    if lag <= 0.0:
        return cap
    return min(lag, cap)
