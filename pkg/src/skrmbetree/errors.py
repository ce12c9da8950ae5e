"""Exception types shared across the simulator."""


class SimError(Exception):
    """Base class for simulator errors."""


class ConfigError(SimError):
    """Invalid or conflicting configuration."""


class BoundaryError(SimError):
    """A shift would push track contents past a physical track end."""


class PortRangeError(SimError):
    """Port index outside the track's port set."""


class DoubleInjectError(SimError):
    """Inject issued on a cell that already holds a skyrmion."""


class CapacityError(SimError):
    """Track pool, group, or node capacity exhausted."""


class ArenaFullError(SimError):
    """No free slot left in the value arena."""


class UnsupportedBatchError(SimError):
    """Multi-word batch handed to a single-word-only strategy."""


class AlignmentError(SimError):
    """Batch members do not share one track or overlap the same slot."""


class AllocationError(SimError):
    """Unknown node, track, or slot in an allocation table."""


class StructureError(SimError):
    """Tree structural corruption detected by an audit."""
