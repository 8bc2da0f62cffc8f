"""millmass: a-priori workpiece mass and center-of-mass simulation for milling.

The package tracks how mass and center of mass of a workpiece evolve
along a milling tool path.  Material removal is modelled per tool disk
slice from cutter-workpiece engagement angles; a voxel oracle provides
an independent brute-force check.
"""

from .errors import (
    ConfigError,
    DegeneratePolygon,
    EngagementMismatch,
    GridTooCoarse,
    IncompatibleInputs,
    MassUnderflow,
    MillmassError,
    OutOfMemoryBudget,
    ParseError,
    SelfIntersectingRegion,
    UnsupportedMotion,
    VolumeUnderflow,
)
from .massmodel import (
    LookupTable,
    MassState,
    RemovalRecord,
    removals_to_csv,
    run_path,
)
from .oracle import OracleResult, VoxelGrid, compare, voxel_carve_path
from .scenarios import ScenarioConfig, scenario_path
from .tool import Tool, angular_resolution
from .toolpath import ToolPath, load_path, resample, save_path
from .workpiece import WorkpieceModel, extract_engagement, init_workpiece

__all__ = [
    "ConfigError",
    "DegeneratePolygon",
    "EngagementMismatch",
    "GridTooCoarse",
    "IncompatibleInputs",
    "LookupTable",
    "MassState",
    "MassUnderflow",
    "MillmassError",
    "OracleResult",
    "OutOfMemoryBudget",
    "ParseError",
    "RemovalRecord",
    "ScenarioConfig",
    "SelfIntersectingRegion",
    "Tool",
    "ToolPath",
    "UnsupportedMotion",
    "VolumeUnderflow",
    "VoxelGrid",
    "WorkpieceModel",
    "angular_resolution",
    "compare",
    "extract_engagement",
    "init_workpiece",
    "load_path",
    "removals_to_csv",
    "resample",
    "run_path",
    "save_path",
    "scenario_path",
    "voxel_carve_path",
]

__version__ = "0.1.0"
