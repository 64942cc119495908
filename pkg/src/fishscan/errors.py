"""Exception hierarchy shared by every pipeline stage."""


class FishScanError(Exception):
    """Base class for all errors raised by fishscan."""


class DataError(FishScanError):
    """Input data is unusable (bad file, bad manifest, degenerate region)."""


class UnsupportedFormat(DataError):
    pass


class CorruptFile(DataError):
    pass


class IoFailure(DataError):
    pass


class BadParameter(FishScanError, ValueError):
    """A configuration or call argument violates its contract."""


class TooFewSamples(BadParameter):
    pass


class OutOfDomain(BadParameter):
    pass


class BadTarget(BadParameter):
    pass


class BadAlpha(BadParameter):
    pass


class TileTooSmall(BadParameter):
    pass


class TooFewPoints(BadParameter):
    pass


class BadK(BadParameter):
    pass


class RegionTooSmall(DataError):
    pass


class DegenerateRegion(DataError):
    pass


class EmptyRegion(DataError):
    pass


class EmptyMask(DataError):
    pass


class NoValidPairs(DataError):
    pass


class DegenerateGlcm(DataError):
    pass


class SegmentationEmpty(DataError):
    pass


class EmptyDataset(DataError):
    pass


class SingleClass(DataError):
    pass


class DimensionMismatch(BadParameter):
    pass


class LengthMismatch(BadParameter):
    pass


class EmptyInput(DataError):
    pass


class EmptyConfusion(DataError):
    pass


class MissingLabelDir(DataError):
    pass


class EmptyClass(DataError):
    pass


class AllImagesRejected(DataError):
    pass


class ModelVersionMismatch(DataError):
    pass


class NonConvergence(FishScanError):
    """Raised only on request; solvers normally return a flagged result."""
