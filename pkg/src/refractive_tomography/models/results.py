"""Result models produced by the forward model, reconstructor, calibrator and stitcher."""

from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from refractive_tomography.models.optics import IlluminationSet
from refractive_tomography.models.volume import RIVolume

AngleFlag = Literal["ok", "darkfield", "low_confidence"]


class LayerFieldStack(BaseModel):
    """Fields stored by one forward pass.

    ``fields[k]`` is the field after layer ``k + 1``; ``entrance`` is the
    incident plane wave before the first layer. The propagation parameters are
    recorded so the backward pass needs nothing else.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    entrance: np.ndarray
    fields: np.ndarray
    wavelength: float = Field(gt=0.0)
    dz: float = Field(gt=0.0)
    pixel_pitch: float = Field(gt=0.0)
    pad_factor: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def check_shapes(self) -> "LayerFieldStack":
        if self.fields.ndim != 3 or self.fields.shape[1:] != self.entrance.shape:
            raise ValueError(
                f"layer fields {self.fields.shape} do not match entrance {self.entrance.shape}"
            )
        return self

    @property
    def n_layers(self) -> int:
        return int(self.fields.shape[0])

    @property
    def exit_field(self) -> np.ndarray:
        return self.fields[-1]

    def previous(self, k: int) -> np.ndarray:
        """Field entering layer ``k`` (0-based)."""
        return self.entrance if k == 0 else self.fields[k - 1]


class CostHistory(BaseModel):
    """Per-epoch data-fidelity cost, one entry per completed epoch."""

    costs: List[float] = Field(default_factory=list)

    @property
    def epochs(self) -> List[int]:
        return list(range(1, len(self.costs) + 1))

    def __len__(self) -> int:
        return len(self.costs)

    def append(self, cost: float) -> None:
        self.costs.append(float(cost))

    def relative_change(self, index: int) -> float:
        """|c[i] - c[i-1]| / c[i-1]; a change between two zero costs counts as 0."""
        previous, current = self.costs[index - 1], self.costs[index]
        if previous == 0.0:
            return 0.0 if current == 0.0 else float("inf")
        return abs(current - previous) / abs(previous)

    def has_plateaued(self, tolerance: float, window: int) -> bool:
        """True when the last ``window`` relative changes are all below ``tolerance``."""
        if tolerance <= 0.0 or len(self.costs) < window + 1:
            return False
        return all(
            self.relative_change(i) < tolerance
            for i in range(len(self.costs) - window, len(self.costs))
        )


class ReconstructionResult(BaseModel):
    """Reconstructed volume with its cost history and run metadata."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    volume: RIVolume
    history: CostHistory = Field(default_factory=CostHistory)
    calibrated_illuminations: IlluminationSet
    metadata: Dict[str, Any] = Field(default_factory=dict)
    stop_reason: Literal["max_epochs", "plateau", "not_started"] = "not_started"

    @property
    def epochs_completed(self) -> int:
        return len(self.history)


class AngleEstimate(BaseModel):
    """Calibration outcome for one image."""

    k0: Optional[Tuple[float, float]] = None
    confidence: float = Field(ge=0.0, le=1.0)
    flag: AngleFlag
    energy_ratio: Optional[float] = Field(
        default=None, description="In-disk to out-of-disk AC spectral energy at the estimate"
    )


class CalibrationResult(BaseModel):
    """Per-angle estimates together with the reported and corrected wavevectors."""

    estimates: List[AngleEstimate]
    reported: IlluminationSet
    corrected: IlluminationSet
    frequency_step: Tuple[float, float] = Field(
        description="Lattice steps (x, y) used to express samples"
    )

    @field_validator("frequency_step")
    @classmethod
    def validate_frequency_step(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if min(v) <= 0.0:
            raise ValueError(f"frequency_step must be > 0, got {v}")
        return v

    @property
    def k0_estimates(self) -> List[Optional[Tuple[float, float]]]:
        return [e.k0 for e in self.estimates]

    @property
    def confidence(self) -> List[float]:
        return [e.confidence for e in self.estimates]

    @property
    def flags(self) -> List[AngleFlag]:
        return [e.flag for e in self.estimates]

    @property
    def corrections_samples(self) -> List[Optional[float]]:
        """Distance between reported and accepted estimate, in frequency samples."""
        out: List[Optional[float]] = []
        for estimate, reported in zip(self.estimates, self.reported):
            if estimate.flag != "ok" or estimate.k0 is None:
                out.append(None)
                continue
            dk = np.subtract(estimate.k0, reported.k0) / np.asarray(self.frequency_step)
            out.append(float(np.hypot(*dk)))
        return out

    @property
    def max_correction_samples(self) -> float:
        values = [c for c in self.corrections_samples if c is not None]
        return max(values) if values else 0.0

    def to_report(self) -> Dict[str, Any]:
        """JSON-ready comparison of reported and estimated wavevectors."""
        angles = []
        for index, (estimate, reported, correction) in enumerate(
            zip(self.estimates, self.reported, self.corrections_samples)
        ):
            angles.append(
                {
                    "index": index,
                    "reported": list(reported.k0),
                    "estimated": list(estimate.k0) if estimate.k0 is not None else None,
                    "confidence": estimate.confidence,
                    "flag": estimate.flag,
                    "energy_ratio": estimate.energy_ratio,
                    "correction_samples": correction,
                }
            )
        return {
            "angle_count": len(self.estimates),
            "flag_counts": {
                flag: self.flags.count(flag) for flag in ("ok", "low_confidence", "darkfield")
            },
            "max_correction_samples": self.max_correction_samples,
            "frequency_step": list(self.frequency_step),
            "angles": angles,
        }


class RegistrationResult(BaseModel):
    """Integer translation of one volume relative to another."""

    shift: Tuple[int, int, int]
    confidence: float = Field(ge=0.0)


class PlacementEntry(BaseModel):
    index: int
    offset: Tuple[int, int, int]
    confidence: Optional[float] = None


class PlacementReport(BaseModel):
    """Offsets and registration confidences from chained stitching."""

    entries: List[PlacementEntry] = Field(default_factory=list)
    global_shape: Tuple[int, int, int]
