"""Domain exceptions raised across the pipeline."""


class LesionScreenError(Exception):
    """Base class for all domain errors."""


class MalformedImage(LesionScreenError):
    """Byte stream claims to be an image but cannot be decoded."""


class UnsupportedFormat(LesionScreenError):
    """Byte stream is neither PNG nor JPEG."""


class EmptyDataset(LesionScreenError):
    """Ingest found no decodable images."""


class UnknownLabelFolder(LesionScreenError):
    """Ingest met a subfolder that maps to no known class label."""


class InsufficientPatients(LesionScreenError):
    """Fold planning needs at least 10 distinct patients."""


class EmptyClass(LesionScreenError):
    """A class present in the manifest has no patient to assign."""


class InvalidGrid(LesionScreenError):
    """Color-space augmentation grid violates its invariants."""


class InvalidSpec(LesionScreenError):
    """Standard augmentation spec violates its invariants."""


class BadMagic(LesionScreenError):
    """Weight file does not start with the LSW1 magic."""


class TruncatedFile(LesionScreenError):
    """Weight file ended before the declared payload was read."""


class ShapeMismatch(LesionScreenError):
    """Adjacent layers in a model graph have incompatible shapes."""


class NonFiniteActivation(LesionScreenError):
    """Forward pass produced NaN or infinity."""


class NoConvLayer(LesionScreenError):
    """Grad-CAM requires at least one convolution layer."""


class LengthMismatch(LesionScreenError):
    """Prediction and truth label lists differ in length."""


class UnknownLabel(LesionScreenError):
    """A label is not one of the six dataset classes."""


class WrongFoldCount(LesionScreenError):
    """Fold summary expects exactly five per-fold reports."""


class ManifestFormatError(LesionScreenError):
    """A manifest or fold-plan file is malformed."""


class IoFailure(LesionScreenError):
    """Filesystem operation failed while writing pipeline outputs."""
