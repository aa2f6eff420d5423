"""Exception types shared across the package."""


class LyapbifError(Exception):
    """Base class for all package errors."""


class IdentityMap(LyapbifError):
    """Fixed points were requested for a map numerically equal to the identity."""


class CapExceeded(LyapbifError):
    """An exact enumeration would exceed the configured size cap."""


class UnknownGenerator(LyapbifError):
    pass


class UnknownPreset(LyapbifError):
    pass


class FamilyError(LyapbifError):
    """A family specification is malformed (e.g. a generator without unit determinant)."""


class MeasureError(LyapbifError):
    pass


class SentinelCluster(LyapbifError):
    """Two or more adjacent -inf cells (or one on the grid boundary) prevent a dd^c evaluation."""


class BoundaryZero(LyapbifError):
    """The function vanishes (numerically) on a box boundary and jiggling failed."""


class DegenerateMeasure(LyapbifError):
    """A mass field with non-positive total cannot be normalized."""


NUMERIC_ERRORS = (BoundaryZero, SentinelCluster, DegenerateMeasure, IdentityMap, CapExceeded)
