"""Exception types raised by the simulation pipeline.

Everything derives from MillmassError so callers can catch the whole
family at an application boundary (the CLI does exactly that).
"""


class MillmassError(Exception):
    """Base class for all errors raised by this package."""


class DegeneratePolygon(MillmassError):
    """Polygon has fewer than three vertices or (numerically) zero area."""


class GridTooCoarse(MillmassError):
    """Dexel grid spacing is too large relative to the workpiece."""


class SelfIntersectingRegion(MillmassError):
    """Constructed removal boundary crosses itself and has no unique area."""


class EngagementMismatch(MillmassError):
    """Engagement intervals of consecutive positions cannot be paired up."""


class MassUnderflow(MillmassError):
    """Mass update would drive the workpiece mass negative."""


class VolumeUnderflow(MillmassError):
    """Volume update would drive the workpiece volume negative."""


class OutOfMemoryBudget(MillmassError):
    """Requested discretization exceeds the configured cell budget."""


class IncompatibleInputs(MillmassError):
    """Two results that should describe the same setup disagree."""


class ParseError(MillmassError):
    """Tool path or configuration input could not be parsed."""


class UnsupportedMotion(ParseError):
    """Tool path contains a motion type the simulator does not model."""


class ConfigError(MillmassError):
    """Scenario configuration violates the schema.

    The message carries a JSON-path style locator such as
    ``$.tool.diameter_mm`` pointing at the offending entry.
    """
