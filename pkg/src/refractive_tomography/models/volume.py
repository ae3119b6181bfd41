"""Refractive-index volumes, phantom descriptions and stitching placements."""

from typing import Annotated, List, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class RIVolume(BaseModel):
    """Complex refractive index sampled on an ``(n_layers, nx, ny)`` grid."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: np.ndarray
    dz: float = Field(gt=0.0, description="Layer spacing (um)")
    pixel_pitch: float = Field(gt=0.0, description="Lateral spacing (um)")
    n_medium: float = Field(gt=0.0, description="Background index")

    @field_validator("n", mode="before")
    @classmethod
    def validate_values(cls, v) -> np.ndarray:
        arr = np.asarray(v)
        if not np.iscomplexobj(arr):
            arr = arr.astype(np.complex128)
        if arr.ndim != 3:
            raise ValueError(f"volume must be 3D (layers, nx, ny), got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ValueError(f"volume dimensions must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("volume contains non-finite values")
        return arr

    @classmethod
    def homogeneous(
        cls,
        shape: Tuple[int, int, int],
        dz: float,
        pixel_pitch: float,
        n_medium: float,
        dtype: type = np.complex128,
    ) -> "RIVolume":
        """Volume filled with the background index."""
        return cls(
            n=np.full(shape, n_medium, dtype=dtype),
            dz=dz,
            pixel_pitch=pixel_pitch,
            n_medium=n_medium,
        )

    @property
    def shape(self) -> Tuple[int, int, int]:
        return tuple(self.n.shape)  # type: ignore[return-value]

    @property
    def n_layers(self) -> int:
        return int(self.n.shape[0])

    @property
    def spacing(self) -> Tuple[float, float, float]:
        return (self.dz, self.pixel_pitch, self.pixel_pitch)

    @property
    def contrast(self) -> np.ndarray:
        """``n - n_medium`` per voxel."""
        return self.n - self.n_medium

    def with_values(self, values: np.ndarray) -> "RIVolume":
        """Copy of this volume's metadata around new index values."""
        return RIVolume(
            n=values, dz=self.dz, pixel_pitch=self.pixel_pitch, n_medium=self.n_medium
        )

    def copy(self) -> "RIVolume":  # type: ignore[override]
        return self.with_values(self.n.copy())


class PlacedVolume(BaseModel):
    """A volume positioned at an integer voxel offset ``(z, x, y)`` in a global frame."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    volume: RIVolume
    offset: Tuple[int, int, int] = (0, 0, 0)

    @property
    def extent(self) -> Tuple[int, int, int]:
        return tuple(o + s for o, s in zip(self.offset, self.volume.shape))  # type: ignore

    @property
    def slices(self) -> Tuple[slice, slice, slice]:
        bounds = zip(self.offset, self.volume.shape)
        return tuple(slice(o, o + s) for o, s in bounds)  # type: ignore


class BlendMask(BaseModel):
    """Fusion weights for one placed volume, same shape as that volume."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    weights: np.ndarray

    @field_validator("weights")
    @classmethod
    def validate_range(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 3:
            raise ValueError(f"mask must be 3D, got shape {v.shape}")
        if np.any(v < 0.0) or np.any(v > 1.0 + 1e-12):
            raise ValueError("mask weights must lie in [0, 1]")
        return v


class Sphere(BaseModel):
    """Solid ball of uniform index."""

    kind: Literal["sphere"] = "sphere"
    center: Tuple[float, float, float] = Field(description="(x, y, z) in um from grid center")
    radius: float = Field(gt=0.0)
    index: complex

    def contains(self, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        cx, cy, cz = self.center
        return (x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2 <= self.radius**2


class Shell(BaseModel):
    """Spherical shell between ``inner_radius`` and ``radius``."""

    kind: Literal["shell"] = "shell"
    center: Tuple[float, float, float]
    radius: float = Field(gt=0.0)
    inner_radius: float = Field(ge=0.0)
    index: complex

    @model_validator(mode="after")
    def check_radii(self) -> "Shell":
        if self.inner_radius >= self.radius:
            raise ValueError(
                f"inner_radius {self.inner_radius} must be below radius {self.radius}"
            )
        return self

    def contains(self, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        cx, cy, cz = self.center
        r2 = (x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2
        return (r2 <= self.radius**2) & (r2 >= self.inner_radius**2)


class Box(BaseModel):
    """Axis-aligned cuboid."""

    kind: Literal["box"] = "box"
    center: Tuple[float, float, float]
    size: Tuple[float, float, float]
    index: complex

    @field_validator("size")
    @classmethod
    def validate_size(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(s <= 0 for s in v):
            raise ValueError(f"box size must be positive, got {v}")
        return v

    def contains(self, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        cx, cy, cz = self.center
        sx, sy, sz = self.size
        return (
            (np.abs(x - cx) <= sx / 2.0)
            & (np.abs(y - cy) <= sy / 2.0)
            & (np.abs(z - cz) <= sz / 2.0)
        )


Primitive = Annotated[Union[Sphere, Shell, Box], Field(discriminator="kind")]


class PhantomSpec(BaseModel):
    """Grid geometry plus an ordered list of primitives (later entries win)."""

    nx: int = Field(ge=1)
    ny: int = Field(ge=1)
    n_layers: int = Field(ge=1)
    pixel_pitch: float = Field(gt=0.0)
    dz: float = Field(gt=0.0)
    n_medium: float = Field(gt=0.0)
    primitives: List[Primitive] = Field(default_factory=list)

    @field_validator("primitives")
    @classmethod
    def validate_indices(cls, v: List[Primitive]) -> List[Primitive]:
        for primitive in v:
            if not np.isfinite(primitive.index):
                raise ValueError(f"primitive index must be finite, got {primitive.index}")
        return v

    @model_validator(mode="after")
    def check_inside_grid(self) -> "PhantomSpec":
        half = (
            self.nx * self.pixel_pitch / 2.0,
            self.ny * self.pixel_pitch / 2.0,
            self.n_layers * self.dz / 2.0,
        )
        for primitive in self.primitives:
            if any(abs(c) > h for c, h in zip(primitive.center, half)):
                raise ValueError(
                    f"{primitive.kind} centered at {primitive.center} lies outside the grid"
                )
        return self

    def voxel_centers(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Centered voxel coordinates broadcastable to ``(n_layers, nx, ny)``."""
        z = (np.arange(self.n_layers) - (self.n_layers - 1) / 2.0) * self.dz
        x = (np.arange(self.nx) - (self.nx - 1) / 2.0) * self.pixel_pitch
        y = (np.arange(self.ny) - (self.ny - 1) / 2.0) * self.pixel_pitch
        return x[None, :, None], y[None, None, :], z[:, None, None]
