"""Data models for the refractive tomography toolkit."""

from refractive_tomography.models.acquisition import (
    AcquisitionDataset,
    AnglePerturbation,
    NoiseSpec,
)
from refractive_tomography.models.optics import (
    ComplexField2D,
    FrequencyGrid,
    Illumination,
    IlluminationSet,
    OpticalSystem,
    Pupil,
    RealImage,
)
from refractive_tomography.models.results import (
    AngleEstimate,
    CalibrationResult,
    CostHistory,
    LayerFieldStack,
    PlacementEntry,
    PlacementReport,
    ReconstructionResult,
    RegistrationResult,
)
from refractive_tomography.models.volume import (
    BlendMask,
    Box,
    PhantomSpec,
    PlacedVolume,
    RIVolume,
    Shell,
    Sphere,
)

__all__ = [
    "AcquisitionDataset",
    "AngleEstimate",
    "AnglePerturbation",
    "BlendMask",
    "Box",
    "CalibrationResult",
    "ComplexField2D",
    "CostHistory",
    "FrequencyGrid",
    "Illumination",
    "IlluminationSet",
    "LayerFieldStack",
    "NoiseSpec",
    "OpticalSystem",
    "PhantomSpec",
    "PlacedVolume",
    "PlacementEntry",
    "PlacementReport",
    "Pupil",
    "RIVolume",
    "RealImage",
    "ReconstructionResult",
    "RegistrationResult",
    "Shell",
    "Sphere",
]
