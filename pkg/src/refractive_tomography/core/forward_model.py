"""Multi-slice beam propagation forward model.

The volume is treated as ``N`` thin layers. Starting from the incident plane
wave, the field is propagated by one layer spacing and then multiplied by the
layer transmittance, for every layer in order. The exit field is refocused by
``-z_hat``, filtered by the detection pupil and squared to form the image.
"""

import numpy as np

from refractive_tomography.config import get_logger
from refractive_tomography.core.grid_optics import apply_pupil, make_frequency_grid, propagate
from refractive_tomography.exceptions import GridMismatchError, OutOfBandIlluminationError
from refractive_tomography.models.optics import (
    ComplexField2D,
    FrequencyGrid,
    Illumination,
    OpticalSystem,
    RealImage,
)
from refractive_tomography.models.results import LayerFieldStack
from refractive_tomography.models.volume import RIVolume

logger = get_logger(__name__)


def transmittance(
    layer: np.ndarray, dz: float, wavelength: float, n_medium: float
) -> ComplexField2D:
    """Complex phase screen ``exp(j (2 pi / lambda) dz (n - n_medium))`` of one layer."""
    return np.exp(1j * (2.0 * np.pi / wavelength) * dz * (layer - n_medium))


def plane_wave(grid: FrequencyGrid, illum: Illumination, dtype=np.complex128) -> ComplexField2D:
    """Incident field ``amplitude * exp(j k0 . r)`` with ``k0`` snapped to the lattice.

    Snapping makes the field exactly periodic on the grid, so the circular FFT
    sees no seam.
    """
    kx, ky = grid.snap(illum.k0)
    x, y = grid.coordinates()
    field = illum.complex_amplitude * np.exp(1j * (kx * x + ky * y))
    return field.astype(dtype)


def check_in_band(illum: Illumination, wavelength: float) -> None:
    """Raise if the illumination is not a propagating plane wave in the medium."""
    k_medium = 2.0 * np.pi / wavelength
    if illum.radius >= k_medium:
        logger.error(
            "Illumination outside propagating band",
            extra={"k0": illum.k0, "k_medium": round(k_medium, 4)},
        )
        raise OutOfBandIlluminationError(
            f"|k0| = {illum.radius:.4g} rad/um is not below 2*pi/lambda = {k_medium:.4g}"
        )


def msbp_forward(
    volume: RIVolume, illum: Illumination, wavelength: float, pad_factor: int = 1
) -> LayerFieldStack:
    """Run the layer recursion and store the field after every layer.

    Args:
        volume: Complex refractive-index volume
        illum: Plane-wave illumination
        wavelength: In-medium wavelength (um)
        pad_factor: Zero-padding factor for each propagation step

    Returns:
        LayerFieldStack with the entrance field and all ``N`` layer fields

    Raises:
        OutOfBandIlluminationError: If ``|k0| >= 2*pi/lambda``
        GridError: If the lateral grid is invalid
    """
    check_in_band(illum, wavelength)
    n_layers, nx, ny = volume.shape
    grid = make_frequency_grid(nx, ny, volume.pixel_pitch)

    entrance = plane_wave(grid, illum, dtype=volume.n.dtype)
    fields = np.empty(volume.shape, dtype=volume.n.dtype)

    current = entrance
    for k in range(n_layers):
        t_k = transmittance(volume.n[k], volume.dz, wavelength, volume.n_medium)
        current = t_k * propagate(current, volume.dz, wavelength, volume.pixel_pitch, pad_factor)
        fields[k] = current

    return LayerFieldStack(
        entrance=entrance,
        fields=fields,
        wavelength=wavelength,
        dz=volume.dz,
        pixel_pitch=volume.pixel_pitch,
        pad_factor=pad_factor,
    )


def image_field(exit: ComplexField2D, system: OpticalSystem) -> ComplexField2D:
    """Camera field: refocus the exit field by ``-z_hat`` then apply the pupil.

    Raises:
        GridMismatchError: If the field is not on the system grid
    """
    if np.shape(exit) != (system.nx, system.ny):
        raise GridMismatchError(
            f"exit field shape {np.shape(exit)} does not match system grid "
            f"({system.nx}, {system.ny})"
        )
    refocused = propagate(
        exit, -system.focus_offset, system.wavelength_medium, system.pixel_pitch, system.pad_factor
    )
    return apply_pupil(refocused, system.pupil)


def check_volume_matches_system(volume: RIVolume, system: OpticalSystem) -> None:
    """Raise if the volume's lateral sampling differs from the system's."""
    _, nx, ny = volume.shape
    if (nx, ny) != (system.nx, system.ny) or not np.isclose(
        volume.pixel_pitch, system.pixel_pitch
    ):
        raise GridMismatchError(
            f"volume grid {nx}x{ny} @ {volume.pixel_pitch} um does not match system grid "
            f"{system.nx}x{system.ny} @ {system.pixel_pitch} um"
        )


def simulate_field(
    volume: RIVolume, illum: Illumination, system: OpticalSystem
) -> tuple[LayerFieldStack, ComplexField2D]:
    """Forward pass returning both the stored layer fields and the camera field."""
    check_volume_matches_system(volume, system)
    stack = msbp_forward(volume, illum, system.wavelength_medium, system.pad_factor)
    return stack, image_field(stack.exit_field, system)


def predict_intensity(
    volume: RIVolume, illum: Illumination, system: OpticalSystem
) -> RealImage:
    """Predicted camera intensity ``|E|^2`` for one illumination."""
    _, camera = simulate_field(volume, illum, system)
    return np.abs(camera) ** 2
