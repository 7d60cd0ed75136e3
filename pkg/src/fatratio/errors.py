"""Exception hierarchy shared by every stage of the pipeline.

Everything derives from :class:`FatRatioError` so the CLI can map data and
algorithm failures to exit code 2 with a single ``except`` clause. Where a
builtin exception is the natural fit (``ValueError``, ``IndexError``) the
class also inherits from it.
"""


class FatRatioError(Exception):
    """Base class for data/algorithm errors raised by this package."""


class InvalidConfigError(FatRatioError, ValueError):
    pass


# volume_io
class MalformedHeaderError(FatRatioError, ValueError):
    pass


class TruncatedVolumeError(MalformedHeaderError):
    pass


class UnsupportedDatatypeError(FatRatioError, ValueError):
    pass


class SliceIndexError(FatRatioError, IndexError):
    pass


# fatseg
class DegenerateCenterError(FatRatioError, ValueError):
    pass


class NoSubcutaneousFatError(FatRatioError):
    pass


class NonFiniteError(FatRatioError, ValueError):
    pass


# metrics
class ShapeMismatchError(FatRatioError, ValueError):
    pass


class EmptyCountsError(FatRatioError, ValueError):
    pass


class ZeroReferenceError(FatRatioError, ZeroDivisionError):
    pass


class LengthMismatchError(FatRatioError, ValueError):
    pass


class UnknownLabelError(FatRatioError, ValueError):
    pass


# scoring
class InvalidStrideError(FatRatioError, ValueError):
    pass


class EmptySeriesError(FatRatioError, ValueError):
    pass


class OutOfRangeError(FatRatioError, ValueError):
    pass


# phantom
class InvalidGeometryError(FatRatioError, ValueError):
    pass


class InfeasibleError(FatRatioError, ValueError):
    pass
