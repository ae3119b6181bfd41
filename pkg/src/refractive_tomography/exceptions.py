"""Exception hierarchy for the refractive tomography toolkit.

Every error derives from ``TomographyError`` and from ``ValueError`` so that
callers can catch either the domain root or the builtin.
"""

from pathlib import Path
from typing import Optional


class TomographyError(ValueError):
    """Root of all toolkit errors."""


class GridError(TomographyError):
    """Invalid grid dimensions or sampling pitch."""


class GridMismatchError(TomographyError):
    """Two operands live on different sampling grids."""


class OpticsParameterError(TomographyError):
    """Non-physical optical parameter such as a non-positive wavelength or NA."""


class OutOfBandIlluminationError(TomographyError):
    """Illumination wavevector is not a propagating plane wave in the medium."""


class NegativeIntensityError(TomographyError):
    """A measured intensity image contains negative values."""


class StackMismatchError(TomographyError):
    """A stored layer-field stack does not belong to the given volume."""


class InconsistentDatasetError(TomographyError):
    """Intensities, illuminations and optical system disagree."""


class ReconstructionDivergedError(TomographyError):
    """The iterative reconstruction produced a non-finite cost or field."""

    def __init__(self, epoch: int, angle_index: int, detail: str = "non-finite cost"):
        self.epoch = epoch
        self.angle_index = angle_index
        super().__init__(
            f"Reconstruction diverged at epoch {epoch}, angle {angle_index}: {detail}"
        )


class NoReliableOverlapError(TomographyError):
    """Phase correlation found no trustworthy translation between two volumes."""

    def __init__(self, confidence: float, threshold: float):
        self.confidence = confidence
        self.threshold = threshold
        super().__init__(
            f"No reliable overlap: registration confidence {confidence:.3g} "
            f"below threshold {threshold:.3g}"
        )


class SpacingMismatchError(TomographyError):
    """Volumes to be combined have different voxel spacings."""


class DatasetFormatError(TomographyError):
    """Base class for on-disk format violations."""

    def __init__(self, message: str, path: Optional[Path] = None):
        self.path = path
        super().__init__(message if path is None else f"{message} ({path})")


class SchemaError(DatasetFormatError):
    """Metadata document does not match the expected schema."""


class PayloadLengthError(DatasetFormatError):
    """Binary payload byte length disagrees with the declared dimensions."""


class NonFinitePayloadError(DatasetFormatError):
    """Binary payload contains NaN or Inf values."""
