"""Optical system, sampling grid and illumination models."""

from functools import lru_cache
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ComplexField2D = NDArray[np.complexfloating]
RealImage = NDArray[np.floating]


@lru_cache(maxsize=64)
def _angular_frequencies(n: int, pitch: float) -> NDArray[np.float64]:
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=pitch)
    k.setflags(write=False)
    return k


class FrequencyGrid(BaseModel):
    """Angular spatial-frequency sampling (rad/um) of an ``nx`` x ``ny`` grid.

    Arrays are laid out ``(nx, ny)`` with y fastest and DC at index (0, 0).
    """

    model_config = ConfigDict(frozen=True)

    nx: int = Field(ge=2)
    ny: int = Field(ge=2)
    pixel_pitch: float = Field(gt=0.0, description="Sample spacing in um")

    @field_validator("nx", "ny")
    @classmethod
    def validate_even(cls, v: int, info) -> int:
        if v % 2:
            raise ValueError(f"{info.field_name} must be even, got {v}")
        return v

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def kx(self) -> NDArray[np.float64]:
        return _angular_frequencies(self.nx, self.pixel_pitch)

    @property
    def ky(self) -> NDArray[np.float64]:
        return _angular_frequencies(self.ny, self.pixel_pitch)

    @property
    def step_x(self) -> float:
        return 2.0 * np.pi / (self.nx * self.pixel_pitch)

    @property
    def step_y(self) -> float:
        return 2.0 * np.pi / (self.ny * self.pixel_pitch)

    @property
    def nyquist(self) -> float:
        return np.pi / self.pixel_pitch

    @property
    def k_squared(self) -> NDArray[np.float64]:
        """|k|^2 on the full 2D grid."""
        return self.kx[:, None] ** 2 + self.ky[None, :] ** 2

    def coordinates(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Sample positions x = i * pitch, y = j * pitch as broadcastable columns."""
        x = np.arange(self.nx)[:, None] * self.pixel_pitch
        y = np.arange(self.ny)[None, :] * self.pixel_pitch
        return x, y

    def snap(self, k0: Sequence[float]) -> Tuple[float, float]:
        """Nearest lattice wavevector to ``k0``."""
        ix = int(np.rint(k0[0] / self.step_x))
        iy = int(np.rint(k0[1] / self.step_y))
        return (ix * self.step_x, iy * self.step_y)

    def to_samples(self, k0: Sequence[float]) -> Tuple[float, float]:
        """Express a wavevector in units of frequency samples."""
        return (k0[0] / self.step_x, k0[1] / self.step_y)


class Pupil(BaseModel):
    """Frequency-domain transfer function of the detection objective."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    transfer: np.ndarray
    na: float = Field(gt=0.0)
    wavelength: float = Field(gt=0.0, description="Vacuum wavelength in um")
    cutoff: float = Field(ge=0.0, description="Transverse cutoff 2*pi*NA/lambda in rad/um")
    clipped: bool = Field(default=False, description="Cutoff exceeded the grid Nyquist")

    @property
    def is_all_pass(self) -> bool:
        return bool(np.all(self.transfer == 1))


class Illumination(BaseModel):
    """Plane-wave illumination ``amplitude * exp(j (kx x + ky y))``."""

    model_config = ConfigDict(frozen=True)

    k0: Tuple[float, float] = (0.0, 0.0)
    amplitude: float = Field(default=1.0, ge=0.0)
    phase: float = Field(default=0.0, description="Phase of the complex amplitude in rad")

    @field_validator("k0")
    @classmethod
    def validate_finite(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if not all(np.isfinite(v)):
            raise ValueError(f"k0 must be finite, got {v}")
        return v

    @property
    def complex_amplitude(self) -> complex:
        return complex(self.amplitude * np.exp(1j * self.phase))

    @property
    def radius(self) -> float:
        return float(np.hypot(*self.k0))


class IlluminationSet(BaseModel):
    """Ordered collection of illumination wavevectors."""

    illuminations: List[Illumination] = Field(default_factory=list)

    @classmethod
    def from_wavevectors(cls, wavevectors: Sequence[Sequence[float]]) -> "IlluminationSet":
        return cls(
            illuminations=[Illumination(k0=(float(k[0]), float(k[1]))) for k in wavevectors]
        )

    @property
    def wavevectors(self) -> NDArray[np.float64]:
        """``(L, 2)`` array of wavevectors in rad/um."""
        if not self.illuminations:
            return np.zeros((0, 2))
        return np.array([ill.k0 for ill in self.illuminations], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.illuminations)

    def __iter__(self) -> Iterator[Illumination]:  # type: ignore[override]
        return iter(self.illuminations)

    def __getitem__(self, index: int) -> Illumination:
        return self.illuminations[index]


class OpticalSystem(BaseModel):
    """Imaging geometry shared by the forward model, calibration and storage.

    ``wavelength_medium`` is the wavelength inside the immersion medium; the
    vacuum value (used for the pupil cutoff) is ``wavelength_medium * n_medium``.
    """

    model_config = ConfigDict(frozen=True)

    wavelength_medium: float = Field(gt=0.0, description="In-medium wavelength (um)")
    n_medium: float = Field(gt=0.0, description="Background refractive index")
    na_detection: float = Field(gt=0.0)
    na_illumination: Optional[float] = Field(default=None, gt=0.0)
    nx: int = Field(ge=2)
    ny: int = Field(ge=2)
    n_layers: int = Field(ge=1)
    pixel_pitch: float = Field(gt=0.0, description="Lateral sampling (um)")
    dz: float = Field(gt=0.0, description="Layer spacing (um)")
    z_hat: Optional[float] = Field(
        default=None, description="Signed focus offset from the exit plane (um)"
    )
    pad_factor: int = Field(default=1, ge=1)

    @field_validator("nx", "ny")
    @classmethod
    def validate_even(cls, v: int, info) -> int:
        if v % 2:
            raise ValueError(f"{info.field_name} must be even, got {v}")
        return v

    @model_validator(mode="before")
    @classmethod
    def default_focus(cls, data):
        if isinstance(data, dict) and data.get("z_hat") is None:
            if "dz" in data and "n_layers" in data:
                data = {**data, "z_hat": float(data["dz"]) * int(data["n_layers"]) / 2.0}
        return data

    @property
    def focus_offset(self) -> float:
        return float(self.z_hat) if self.z_hat is not None else self.dz * self.n_layers / 2.0

    @property
    def wavelength_vacuum(self) -> float:
        return self.wavelength_medium * self.n_medium

    @property
    def medium_wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength_medium

    @property
    def pupil_cutoff(self) -> float:
        return 2.0 * np.pi * self.na_detection / self.wavelength_vacuum

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(nx=self.nx, ny=self.ny, pixel_pitch=self.pixel_pitch)

    @property
    def pupil(self) -> Pupil:
        # Deferred import: grid_optics depends on this module.
        from refractive_tomography.core.grid_optics import make_pupil

        return make_pupil(self.grid, self.na_detection, self.wavelength_vacuum)

    @property
    def pupil_radius_samples(self) -> Tuple[float, float]:
        """Pupil radius in frequency samples along x and along y."""
        grid = self.grid
        return (self.pupil_cutoff / grid.step_x, self.pupil_cutoff / grid.step_y)
