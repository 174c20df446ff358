"""Exception hierarchy.

Every failure mode surfaces as a subclass of :class:`RwckitError` whose class
name is stable and machine-parseable (the CLI prints ``ERROR <ClassName>: ...``
on the diagnostics stream).
"""


class RwckitError(Exception):
    """Base class for all rwckit errors."""


# --- snapshot container format ------------------------------------------------

class SnapshotFormatError(RwckitError):
    """A file does not conform to the WSNP byte layout."""


class MagicMismatchError(SnapshotFormatError):
    """The file does not start with the WSNP magic bytes."""


class UnsupportedVersionError(SnapshotFormatError):
    """The container version is unknown to this reader."""


class TruncatedError(SnapshotFormatError):
    """The file ended before the declared payload was complete."""


class InvalidNameError(SnapshotFormatError):
    """A stored layer name is not valid UTF-8."""


class InvalidSnapshotError(RwckitError):
    """An in-memory snapshot violates its invariants (raised on write)."""


# --- cross-snapshot run consistency --------------------------------------------

class RunConsistencyError(RwckitError):
    """Snapshots of one run disagree on layer structure or ordering."""


class ShapeMismatchError(RunConsistencyError):
    def __init__(self, layer: str, epoch_a: int, epoch_b: int,
                 shape_a=None, shape_b=None):
        self.layer = layer
        self.epoch_a = epoch_a
        self.epoch_b = epoch_b
        detail = f" ({shape_a} vs {shape_b})" if shape_a is not None else ""
        super().__init__(
            f"layer {layer!r} changes shape between epochs "
            f"{epoch_a} and {epoch_b}{detail}"
        )


class MissingLayerError(RunConsistencyError):
    def __init__(self, layer: str, epoch: int):
        self.layer = layer
        self.epoch = epoch
        super().__init__(f"layer {layer!r} is missing at epoch {epoch}")


# --- relative weight change ----------------------------------------------------

class LengthMismatchError(RwckitError):
    """Paired sequences have different lengths."""


class ZeroDenominatorError(RwckitError):
    """The previous-epoch weight vector has zero L1 norm."""


class NoLayersRemainingError(RwckitError):
    """The minimum-parameter filter removed every layer."""


# --- principal component reduction ----------------------------------------------

class DimensionTooSmallError(RwckitError):
    """Requested more components than min(rows, columns) allows."""


class DegenerateDataError(RwckitError):
    """The centered matrix is exactly zero (all rows identical)."""


class DimensionMismatchError(RwckitError):
    """Input column count does not match the fitted model."""


# --- clustering -----------------------------------------------------------------

class TooFewDistinctPointsError(RwckitError):
    """Fewer distinct points than requested centroids."""


class KTooLargeError(RwckitError):
    """k exceeds the number of points."""


class DegenerateInputError(RwckitError):
    """Fewer distinct points than clusters requested."""


class KMaxTooLargeError(RwckitError):
    """k_max exceeds the number of points."""


# --- taxonomy -------------------------------------------------------------------

class InvalidPatternError(RwckitError):
    """A taxonomy rule pattern does not compile."""


class UnknownLayerError(RwckitError):
    """A matrix layer has no entry in the grouping map."""


# --- reporting ------------------------------------------------------------------

class InvalidCurveError(RwckitError):
    """A scree curve is empty or internally inconsistent."""


# --- trainer --------------------------------------------------------------------

class LabelOutOfRangeError(RwckitError):
    """A class label lies outside [0, num_classes)."""
