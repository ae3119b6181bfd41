"""On-disk dataset and volume formats.

A dataset directory holds ``meta.json`` plus one raw payload per angle
(``intensity_0000.raw`` onward). A volume directory holds ``meta.json`` plus
``real.raw`` and ``imag.raw``. Payloads are little-endian float32, row-major
with y fastest; a volume whose manifest declares ``"precision": "double"``
holds float64 payloads instead. Volumes are stored layer by layer. All
lengths are um and all wavevectors rad/um.
"""

import csv
import io
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from refractive_tomography.config import get_logger
from refractive_tomography.exceptions import (
    DatasetFormatError,
    NonFinitePayloadError,
    PayloadLengthError,
    SchemaError,
)
from refractive_tomography.models.acquisition import AcquisitionDataset
from refractive_tomography.models.optics import IlluminationSet, OpticalSystem
from refractive_tomography.models.results import CostHistory
from refractive_tomography.models.volume import RIVolume
from refractive_tomography.storage.artifact_repository import ArtifactRepository
from refractive_tomography.storage.filesystem_repository import FileSystemRepository

logger = get_logger(__name__)

PAYLOAD_DTYPE = np.dtype("<f4")
# volumes may also be written at the working precision of a double run
VOLUME_PAYLOAD_DTYPES = {"single": PAYLOAD_DTYPE, "double": np.dtype("<f8")}
META_FILE = "meta.json"
GROUND_TRUTH_FILE = "ground_truth.json"
FORMAT_VERSION = 1


class DatasetManifest(BaseModel):
    """Schema of a dataset's ``meta.json``."""

    format_version: int = FORMAT_VERSION
    wavelength_medium_um: float = Field(gt=0.0)
    n_medium: float = Field(gt=0.0)
    na_detection: float = Field(gt=0.0)
    na_illumination: Optional[float] = Field(default=None, gt=0.0)
    nx: int = Field(gt=0)
    ny: int = Field(gt=0)
    n_layers: int = Field(gt=0)
    pixel_pitch_um: float = Field(gt=0.0)
    dz_um: float = Field(gt=0.0)
    z_hat_um: float
    pad_factor: int = Field(default=1, ge=1)
    illuminations: List[Tuple[float, float]]
    intensity_files: List[str]

    @model_validator(mode="after")
    def check_lengths(self) -> "DatasetManifest":
        if len(self.illuminations) != len(self.intensity_files):
            raise ValueError(
                f"{len(self.illuminations)} illuminations but "
                f"{len(self.intensity_files)} intensity files"
            )
        return self

    def to_system(self) -> OpticalSystem:
        return OpticalSystem(
            wavelength_medium=self.wavelength_medium_um,
            n_medium=self.n_medium,
            na_detection=self.na_detection,
            na_illumination=self.na_illumination,
            nx=self.nx,
            ny=self.ny,
            n_layers=self.n_layers,
            pixel_pitch=self.pixel_pitch_um,
            dz=self.dz_um,
            z_hat=self.z_hat_um,
            pad_factor=self.pad_factor,
        )


class VolumeManifest(BaseModel):
    """Schema of a volume's ``meta.json``."""

    format_version: int = FORMAT_VERSION
    dims: Tuple[int, int, int] = Field(description="(n_layers, nx, ny)")
    spacings: Tuple[float, float, float] = Field(description="(dz, dx, dy) in um")
    n_medium: float = Field(gt=0.0)
    precision: Literal["single", "double"] = "single"
    real_file: str = "real.raw"
    imag_file: str = "imag.raw"

    @model_validator(mode="after")
    def check_positive(self) -> "VolumeManifest":
        if any(d <= 0 for d in self.dims) or any(s <= 0 for s in self.spacings):
            raise ValueError(f"dims {self.dims} and spacings {self.spacings} must be positive")
        if not np.isclose(self.spacings[1], self.spacings[2]):
            raise ValueError(f"lateral spacings must be equal, got {self.spacings[1:]}")
        return self


def _repo(repository: Optional[ArtifactRepository]) -> ArtifactRepository:
    return repository or FileSystemRepository()


def _read_manifest(path: Path, schema: type, repository: ArtifactRepository):
    meta_path = Path(path) / META_FILE
    if not repository.exists(meta_path):
        raise SchemaError("missing metadata document", meta_path)
    try:
        return schema(**repository.read_json(meta_path))
    except ValueError as e:
        # covers JSON decoding errors and pydantic ValidationError
        raise SchemaError(f"invalid metadata: {e}", meta_path) from e
    except TypeError as e:
        raise SchemaError(f"metadata is not a JSON object: {e}", meta_path) from e


def _read_payload(
    path: Path,
    shape: Tuple[int, ...],
    repository: ArtifactRepository,
    dtype: np.dtype = PAYLOAD_DTYPE,
) -> np.ndarray:
    if not repository.exists(path):
        raise PayloadLengthError("payload file missing", path)
    data = repository.read_bytes(path)
    expected = int(np.prod(shape)) * dtype.itemsize
    if len(data) != expected:
        logger.error(
            "Payload length mismatch",
            extra={"path": str(path), "bytes": len(data), "expected": expected},
        )
        raise PayloadLengthError(f"payload has {len(data)} bytes, expected {expected}", path)
    values = np.frombuffer(data, dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))
    if not np.all(np.isfinite(values)):
        raise NonFinitePayloadError("payload contains NaN or Inf", path)
    return values


def _payload_bytes(values: np.ndarray, dtype: np.dtype = PAYLOAD_DTYPE) -> bytes:
    return np.ascontiguousarray(values, dtype=dtype).tobytes(order="C")


def illuminations_to_json(illums: IlluminationSet) -> List[List[float]]:
    return [[float(kx), float(ky)] for kx, ky in illums.wavevectors]


def save_dataset(
    dataset: AcquisitionDataset, path: Path, repository: Optional[ArtifactRepository] = None
) -> Path:
    """Write a dataset directory; the true illuminations go to ``ground_truth.json``.

    Returns:
        The dataset directory
    """
    repository = _repo(repository)
    path = Path(path)
    repository.create_directory(path)
    system = dataset.system

    files = []
    for index, image in enumerate(dataset.intensities):
        name = f"intensity_{index:04d}.raw"
        repository.write_bytes(path / name, _payload_bytes(image))
        files.append(name)

    manifest = DatasetManifest(
        wavelength_medium_um=system.wavelength_medium,
        n_medium=system.n_medium,
        na_detection=system.na_detection,
        na_illumination=system.na_illumination,
        nx=system.nx,
        ny=system.ny,
        n_layers=system.n_layers,
        pixel_pitch_um=system.pixel_pitch,
        dz_um=system.dz,
        z_hat_um=system.focus_offset,
        pad_factor=system.pad_factor,
        illuminations=[tuple(k) for k in illuminations_to_json(dataset.illuminations)],
        intensity_files=files,
    )
    repository.write_json(path / META_FILE, manifest.model_dump(mode="json"))

    if dataset.true_illuminations is not None:
        repository.write_json(
            path / GROUND_TRUTH_FILE,
            {"illuminations": illuminations_to_json(dataset.true_illuminations)},
        )

    logger.info("Dataset saved", extra={"path": str(path), "angles": len(files)})
    return path


def load_dataset(path: Path, repository: Optional[ArtifactRepository] = None) -> AcquisitionDataset:
    """Read a dataset directory.

    Raises:
        SchemaError: If ``meta.json`` is missing or malformed
        PayloadLengthError: If a payload has the wrong byte length (names the file)
        NonFinitePayloadError: If a payload holds NaN or Inf
    """
    repository = _repo(repository)
    path = Path(path)
    manifest: DatasetManifest = _read_manifest(path, DatasetManifest, repository)

    images = [
        _read_payload(path / name, (manifest.nx, manifest.ny), repository)
        for name in manifest.intensity_files
    ]

    truth = None
    truth_path = path / GROUND_TRUTH_FILE
    if repository.exists(truth_path):
        try:
            truth = IlluminationSet.from_wavevectors(
                repository.read_json(truth_path)["illuminations"]
            )
        except (ValueError, KeyError, TypeError) as e:
            raise SchemaError(f"invalid ground truth: {e}", truth_path) from e

    try:
        system = manifest.to_system()
        dataset = AcquisitionDataset(
            system=system,
            illuminations=IlluminationSet.from_wavevectors(manifest.illuminations),
            intensities=np.stack(images) if images else np.zeros((0, manifest.nx, manifest.ny)),
            true_illuminations=truth,
        )
    except ValidationError as e:
        raise SchemaError(f"inconsistent dataset: {e}", path / META_FILE) from e

    logger.info("Dataset loaded", extra={"path": str(path), "angles": dataset.angle_count})
    return dataset


def save_volume(
    volume: RIVolume,
    path: Path,
    repository: Optional[ArtifactRepository] = None,
    precision: Literal["single", "double"] = "single",
) -> Path:
    """Write a volume directory (both payloads always present).

    ``precision="double"`` stores float64 payloads, so a double-precision run
    can be checkpointed without rounding.
    """
    repository = _repo(repository)
    path = Path(path)
    repository.create_directory(path)

    manifest = VolumeManifest(
        dims=volume.shape,
        spacings=volume.spacing,
        n_medium=volume.n_medium,
        precision=precision,
    )
    dtype = VOLUME_PAYLOAD_DTYPES[precision]
    repository.write_bytes(path / manifest.real_file, _payload_bytes(volume.n.real, dtype))
    repository.write_bytes(path / manifest.imag_file, _payload_bytes(volume.n.imag, dtype))
    repository.write_json(path / META_FILE, manifest.model_dump(mode="json"))

    logger.info(
        "Volume saved", extra={"path": str(path), "dims": volume.shape, "precision": precision}
    )
    return path


def load_volume(path: Path, repository: Optional[ArtifactRepository] = None) -> RIVolume:
    """Read a volume directory as a complex64 (or, for double payloads, complex128) RIVolume.

    Raises:
        SchemaError: If ``meta.json`` is missing or malformed
        PayloadLengthError: If dims and payload sizes disagree
        NonFinitePayloadError: If a payload holds NaN or Inf
    """
    repository = _repo(repository)
    path = Path(path)
    manifest: VolumeManifest = _read_manifest(path, VolumeManifest, repository)

    dtype = VOLUME_PAYLOAD_DTYPES[manifest.precision]
    real = _read_payload(path / manifest.real_file, manifest.dims, repository, dtype)
    imag = _read_payload(path / manifest.imag_file, manifest.dims, repository, dtype)
    complex_dtype = np.complex64 if manifest.precision == "single" else np.complex128
    values = np.empty(manifest.dims, dtype=complex_dtype)
    values.real = real
    values.imag = imag

    dz, dx, _ = manifest.spacings
    return RIVolume(n=values, dz=dz, pixel_pitch=dx, n_medium=manifest.n_medium)


def load_volume_list(
    manifest_path: Path, repository: Optional[ArtifactRepository] = None
) -> List[RIVolume]:
    """Load the volumes listed (in chain order) by a stitch manifest.

    The manifest is JSON ``{"volumes": [path, ...]}``; relative paths resolve
    against the manifest's directory.

    Raises:
        SchemaError: If the manifest is malformed
    """
    repository = _repo(repository)
    manifest_path = Path(manifest_path)
    try:
        entries = repository.read_json(manifest_path)["volumes"]
        if not isinstance(entries, list) or not entries:
            raise ValueError("'volumes' must be a non-empty list")
    except FileNotFoundError as e:
        raise SchemaError("stitch manifest not found", manifest_path) from e
    except (ValueError, KeyError, TypeError) as e:
        raise SchemaError(f"invalid stitch manifest: {e}", manifest_path) from e

    base = manifest_path.parent
    return [load_volume(base / str(entry), repository) for entry in entries]


def cost_history_csv(history: CostHistory) -> str:
    """``epoch,cost`` CSV, one row per completed epoch."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["epoch", "cost"])
    for epoch, cost in zip(history.epochs, history.costs):
        writer.writerow([epoch, repr(float(cost))])
    return buffer.getvalue()


def read_cost_history_csv(text: str) -> CostHistory:
    """Parse a CSV produced by :func:`cost_history_csv`."""
    rows = list(csv.DictReader(io.StringIO(text)))
    try:
        return CostHistory(costs=[float(row["cost"]) for row in rows])
    except (KeyError, ValueError) as e:
        raise DatasetFormatError(f"invalid cost history: {e}") from e


def profile_csv(positions: Sequence[float], values: np.ndarray, axis: str) -> str:
    """Line profile CSV with position (um) and real/imaginary index columns."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([f"{axis}_um", "n_real", "n_imag"])
    for position, value in zip(positions, values):
        writer.writerow([f"{position:.6f}", repr(float(value.real)), repr(float(value.imag))])
    return buffer.getvalue()
