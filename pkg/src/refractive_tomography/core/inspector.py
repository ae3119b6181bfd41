"""Read-only diagnostics: orthogonal slices, line profiles and spectrum images."""

import io
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image, ImageDraw

from refractive_tomography.config import get_logger
from refractive_tomography.config.settings import CalibrationSettings
from refractive_tomography.core.calibration import brightfield_energy_ratio, estimate_wavevector
from refractive_tomography.core.grid_optics import intensity_spectrum
from refractive_tomography.exceptions import TomographyError
from refractive_tomography.models.acquisition import AcquisitionDataset
from refractive_tomography.models.optics import OpticalSystem
from refractive_tomography.models.volume import RIVolume
from refractive_tomography.storage.artifact_repository import ArtifactRepository
from refractive_tomography.storage.formats import profile_csv

logger = get_logger(__name__)

AXES = ("z", "x", "y")


def _center(volume: RIVolume, voxel: Optional[Sequence[int]]) -> Tuple[int, int, int]:
    if voxel is None:
        return tuple(s // 2 for s in volume.shape)  # type: ignore[return-value]
    if len(voxel) != 3 or any(not 0 <= v < s for v, s in zip(voxel, volume.shape)):
        raise TomographyError(f"voxel {tuple(voxel)} outside volume of shape {volume.shape}")
    return tuple(int(v) for v in voxel)  # type: ignore[return-value]


def orthogonal_slices(
    volume: RIVolume, voxel: Optional[Sequence[int]] = None
) -> Dict[str, np.ndarray]:
    """Real-index slices through ``voxel`` (``(z, x, y)``, default the center)."""
    z, x, y = _center(volume, voxel)
    real = volume.n.real
    return {"xy": real[z].copy(), "xz": real[:, :, y].T.copy(), "yz": real[:, x, :].T.copy()}


def line_profile(
    volume: RIVolume, axis: str, voxel: Optional[Sequence[int]] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Index values along ``axis`` through ``voxel`` with centered positions in um."""
    if axis not in AXES:
        raise TomographyError(f"axis must be one of {AXES}, got '{axis}'")
    z, x, y = _center(volume, voxel)
    spacing = dict(zip(AXES, volume.spacing))[axis]
    if axis == "z":
        values = volume.n[:, x, y]
    elif axis == "x":
        values = volume.n[z, :, y]
    else:
        values = volume.n[z, x, :]
    positions = (np.arange(values.size) - (values.size - 1) / 2.0) * spacing
    return positions, values.copy()


def to_png(
    image: np.ndarray, window: Optional[Tuple[float, float]] = None
) -> Tuple[bytes, Dict[str, float]]:
    """Encode a real image as 8-bit grayscale PNG.

    Returns:
        PNG bytes and the ``{"min", "max"}`` window mapped to 0 and 255
    """
    lo, hi = window if window is not None else (float(image.min()), float(image.max()))
    span = hi - lo if hi > lo else 1.0
    scaled = np.clip((image - lo) / span, 0.0, 1.0)
    pil = Image.fromarray((scaled * 255).round().astype(np.uint8), mode="L")
    buffer = io.BytesIO()
    pil.save(buffer, format="PNG")
    return buffer.getvalue(), {"min": lo, "max": hi}


def spectrum_image(
    intensity: np.ndarray, system: OpticalSystem, k0: Optional[Sequence[float]] = None
) -> bytes:
    """Log-scaled centered spectrum as PNG, with the disk pair at ``+-k0`` outlined."""
    log_spectrum = np.log10(intensity_spectrum(intensity) + 1e-12)
    finite = log_spectrum[np.isfinite(log_spectrum)]
    lo, hi = float(np.percentile(finite, 1)), float(finite.max())
    span = hi - lo if hi > lo else 1.0
    scaled = (np.clip((log_spectrum - lo) / span, 0.0, 1.0) * 255).astype(np.uint8)

    # PIL images are (width, height) = (ny, nx) for an (nx, ny) array
    pil = Image.fromarray(scaled, mode="L").convert("RGB")
    if k0 is not None:
        draw = ImageDraw.Draw(pil)
        grid = system.grid
        radius_x, radius_y = system.pupil_radius_samples
        for sign in (1.0, -1.0):
            row = system.nx // 2 + sign * k0[0] / grid.step_x
            col = system.ny // 2 + sign * k0[1] / grid.step_y
            draw.ellipse(
                [col - radius_y, row - radius_x, col + radius_y, row + radius_x],
                outline=(255, 0, 0),
            )
    buffer = io.BytesIO()
    pil.save(buffer, format="PNG")
    return buffer.getvalue()


def inspect_volume(
    volume: RIVolume,
    output_dir: Path,
    repository: ArtifactRepository,
    voxel: Optional[Sequence[int]] = None,
    profile_axis: Optional[str] = None,
    window: Optional[Tuple[float, float]] = None,
) -> List[Path]:
    """Write slice PNGs with a window sidecar and, optionally, a line-profile CSV."""
    output_dir = Path(output_dir)
    repository.create_directory(output_dir)
    written: List[Path] = []

    windows: Dict[str, Any] = {"voxel": list(_center(volume, voxel))}
    for name, image in orthogonal_slices(volume, voxel).items():
        data, used = to_png(image, window)
        target = output_dir / f"slice_{name}.png"
        repository.write_bytes(target, data)
        windows[name] = used
        written.append(target)
    repository.write_json(output_dir / "slices.json", windows)
    written.append(output_dir / "slices.json")

    if profile_axis is not None:
        positions, values = line_profile(volume, profile_axis, voxel)
        target = output_dir / f"profile_{profile_axis}.csv"
        repository.write_text(target, profile_csv(positions, values, profile_axis))
        written.append(target)

    logger.info("Volume inspected", extra={"output": str(output_dir), "files": len(written)})
    return written


def inspect_dataset(
    dataset: AcquisitionDataset,
    output_dir: Path,
    repository: ArtifactRepository,
    settings: Optional[CalibrationSettings] = None,
) -> Dict[str, Any]:
    """Write one spectrum PNG per angle and a JSON summary of per-angle energy ratios."""
    output_dir = Path(output_dir)
    repository.create_directory(output_dir)
    system = dataset.system
    angles = []

    for index, (illum, image) in enumerate(zip(dataset.illuminations, dataset.intensities)):
        estimate = estimate_wavevector(image, system, hint=illum.k0, settings=settings)
        repository.write_bytes(
            output_dir / f"spectrum_{index:04d}.png", spectrum_image(image, system, estimate.k0)
        )
        ratio = brightfield_energy_ratio(image, illum.k0, system)
        angles.append(
            {
                "index": index,
                "reported": list(illum.k0),
                "estimated": list(estimate.k0) if estimate.k0 is not None else None,
                "flag": estimate.flag,
                "confidence": estimate.confidence,
                "energy_ratio_reported": ratio if np.isfinite(ratio) else None,
            }
        )

    summary = {"angle_count": len(angles), "angles": angles}
    repository.write_json(output_dir / "spectra.json", summary)
    logger.info("Dataset inspected", extra={"output": str(output_dir), "angles": len(angles)})
    return summary
