"""Acquisition datasets and the noise/perturbation knobs used to synthesize them."""

from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from refractive_tomography.exceptions import InconsistentDatasetError
from refractive_tomography.models.optics import IlluminationSet, OpticalSystem


class NoiseSpec(BaseModel):
    """Detector noise model.

    ``parameter`` is the relative standard deviation for ``gaussian`` and the
    photon budget per pixel (at unit intensity) for ``poisson``.
    """

    model: Literal["none", "gaussian", "poisson"] = "none"
    parameter: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def check_poisson_budget(self) -> "NoiseSpec":
        if self.model == "poisson" and self.parameter <= 0.0:
            raise ValueError("poisson noise needs a positive photon budget")
        return self


class AnglePerturbation(BaseModel):
    """Integer reporting errors injected into the stored wavevectors."""

    max_samples: int = Field(default=3, ge=0, description="Max offset per axis (samples)")


class AcquisitionDataset(BaseModel):
    """Intensity images with the illuminations and optics that produced them.

    ``illuminations`` are the reported wavevectors. ``true_illuminations`` is
    only populated for simulated data with an injected perturbation.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    system: OpticalSystem
    illuminations: IlluminationSet
    intensities: np.ndarray
    true_illuminations: Optional[IlluminationSet] = None

    @field_validator("intensities", mode="before")
    @classmethod
    def validate_intensities(cls, v) -> np.ndarray:
        arr = np.asarray(v)
        if arr.ndim != 3:
            raise ValueError(f"intensities must be (angles, nx, ny), got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("intensities contain non-finite values")
        return arr

    @model_validator(mode="after")
    def check_consistency_on_build(self) -> "AcquisitionDataset":
        self.check_consistency()
        return self

    def check_consistency(self) -> None:
        """Verify that images, illuminations and optics agree.

        Raises:
            InconsistentDatasetError: On any disagreement
        """
        count = self.intensities.shape[0]
        if count != len(self.illuminations):
            raise InconsistentDatasetError(
                f"{count} intensity images but {len(self.illuminations)} illuminations"
            )
        if count == 0:
            raise InconsistentDatasetError("dataset holds no images")
        if self.intensities.shape[1:] != (self.system.nx, self.system.ny):
            raise InconsistentDatasetError(
                f"image shape {self.intensities.shape[1:]} does not match system grid "
                f"({self.system.nx}, {self.system.ny})"
            )
        if self.true_illuminations is not None and len(self.true_illuminations) != count:
            raise InconsistentDatasetError(
                f"{len(self.true_illuminations)} true illuminations for {count} images"
            )

    @property
    def angle_count(self) -> int:
        return int(self.intensities.shape[0])
