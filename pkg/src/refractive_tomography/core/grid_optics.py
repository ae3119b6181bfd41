"""FFT-grid wave optics shared by every pipeline stage.

Angular-spectrum propagation, pupil construction/application and the
centered intensity spectrum. All transforms use ``norm="ortho"`` so the
forward/inverse pair is unitary and Parseval holds without rescaling.

Propagating components have ``|k| <= 2*pi/lambda``; everything outside that
band is zeroed rather than damped, which keeps negative-distance propagation
stable and makes ``propagate(., -d)`` the exact adjoint and inverse of
``propagate(., d)`` in band.
"""

from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy import fft

from refractive_tomography.config import get_logger
from refractive_tomography.exceptions import (
    GridError,
    GridMismatchError,
    NegativeIntensityError,
    OpticsParameterError,
)
from refractive_tomography.models.optics import ComplexField2D, FrequencyGrid, Pupil, RealImage

logger = get_logger(__name__)


def make_frequency_grid(nx: int, ny: int, pixel_pitch: float) -> FrequencyGrid:
    """Build the angular frequency grid of an ``nx`` x ``ny`` field.

    Args:
        nx: Samples along x (even, >= 2)
        ny: Samples along y (even, >= 2)
        pixel_pitch: Sample spacing in um

    Returns:
        FrequencyGrid with DC at (0, 0) and step 2*pi/(n*pitch)

    Raises:
        GridError: If a dimension is odd or < 2, or the pitch is not positive
    """
    for name, n in (("nx", nx), ("ny", ny)):
        if int(n) != n or n < 2 or n % 2:
            logger.error("Invalid grid dimension", extra={"axis": name, "value": n})
            raise GridError(f"{name} must be an even integer >= 2, got {n}")
    if not pixel_pitch > 0 or not np.isfinite(pixel_pitch):
        raise GridError(f"pixel_pitch must be positive, got {pixel_pitch}")
    return FrequencyGrid(nx=int(nx), ny=int(ny), pixel_pitch=float(pixel_pitch))


@lru_cache(maxsize=32)
def make_pupil(grid: FrequencyGrid, na: float, wavelength: float) -> Pupil:
    """Ideal binary pupil of radius 2*pi*NA/lambda (inclusive).

    ``wavelength`` is the vacuum wavelength. When the cutoff exceeds the grid
    Nyquist frequency the disk is truncated by the grid and a warning is logged.

    Raises:
        OpticsParameterError: If NA or wavelength is not positive
    """
    if not na > 0:
        raise OpticsParameterError(f"na must be positive, got {na}")
    if not wavelength > 0:
        raise OpticsParameterError(f"wavelength must be positive, got {wavelength}")

    cutoff = 2.0 * np.pi * na / wavelength
    clipped = cutoff > grid.nyquist
    if clipped:
        logger.warning(
            "Pupil cutoff exceeds grid Nyquist, pupil clipped to the grid",
            extra={"cutoff": round(cutoff, 4), "nyquist": round(grid.nyquist, 4)},
        )

    # relative slack keeps lattice points that sit exactly on the rim
    inside = grid.k_squared <= cutoff**2 * (1.0 + 1e-12)
    transfer = inside.astype(np.complex128)
    transfer.setflags(write=False)

    logger.debug(
        "Pupil built",
        extra={"na": na, "cutoff": round(cutoff, 4), "passband": int(inside.sum())},
    )
    return Pupil(transfer=transfer, na=na, wavelength=wavelength, cutoff=cutoff, clipped=clipped)


@lru_cache(maxsize=128)
def _propagation_kernel(
    nx: int, ny: int, pixel_pitch: float, distance: float, wavelength: float, dtype: str
) -> NDArray[np.complexfloating]:
    grid = FrequencyGrid(nx=nx, ny=ny, pixel_pitch=pixel_pitch)
    k_medium_sq = (2.0 * np.pi / wavelength) ** 2
    k_sq = grid.k_squared
    band = k_sq <= k_medium_sq
    kz = np.sqrt(np.where(band, k_medium_sq - k_sq, 0.0))
    kernel = np.where(band, np.exp(-1j * distance * kz), 0.0).astype(dtype)
    kernel.setflags(write=False)
    return kernel


def _check_field(field: np.ndarray) -> np.ndarray:
    field = np.asarray(field)
    if field.ndim != 2:
        raise GridError(f"field must be 2D, got shape {field.shape}")
    if not np.iscomplexobj(field):
        field = field.astype(np.complex128)
    return field


def propagate(
    field: ComplexField2D,
    distance: float,
    wavelength: float,
    pixel_pitch: float,
    pad_factor: int = 1,
) -> ComplexField2D:
    """Angular-spectrum propagation over a signed distance.

    Args:
        field: Complex field sampled at ``pixel_pitch``
        distance: Signed propagation distance in um
        wavelength: Wavelength in the propagation medium (um)
        pixel_pitch: Lateral sample spacing (um)
        pad_factor: Zero-pad each axis by this factor before transforming;
            the result is cropped back to the input shape

    Returns:
        Propagated field with the same shape and dtype as ``field``

    Raises:
        OpticsParameterError: If the wavelength is not positive
    """
    if not wavelength > 0:
        raise OpticsParameterError(f"wavelength must be positive, got {wavelength}")
    field = _check_field(field)
    nx, ny = field.shape

    if pad_factor > 1:
        padded = np.zeros((nx * pad_factor, ny * pad_factor), dtype=field.dtype)
        padded[:nx, :ny] = field
        work = padded
    else:
        work = field

    kernel = _propagation_kernel(
        work.shape[0], work.shape[1], float(pixel_pitch), float(distance), float(wavelength),
        field.dtype.str,
    )
    out = fft.ifft2(kernel * fft.fft2(work, norm="ortho"), norm="ortho")
    return out[:nx, :ny] if pad_factor > 1 else out


def band_limit(
    field: ComplexField2D, wavelength: float, pixel_pitch: float, pad_factor: int = 1
) -> ComplexField2D:
    """Remove spectral content outside the propagating band."""
    return propagate(field, 0.0, wavelength, pixel_pitch, pad_factor)


def apply_pupil(field: ComplexField2D, pupil: Pupil, conjugate: bool = False) -> ComplexField2D:
    """Filter ``field`` by the pupil transfer function.

    Args:
        field: Complex field on the pupil's grid
        pupil: Pupil to apply
        conjugate: Apply ``conj(p)`` instead of ``p`` (the adjoint filter)

    Raises:
        GridMismatchError: If field and pupil shapes differ
    """
    field = _check_field(field)
    if field.shape != pupil.transfer.shape:
        raise GridMismatchError(
            f"field shape {field.shape} does not match pupil shape {pupil.transfer.shape}"
        )
    transfer = np.conj(pupil.transfer) if conjugate else pupil.transfer
    spectrum = fft.fft2(field, norm="ortho")
    return fft.ifft2(transfer.astype(field.dtype, copy=False) * spectrum, norm="ortho")


def intensity_spectrum(image: RealImage) -> NDArray[np.float64]:
    """DC-centered Fourier magnitude ``|F{image}|`` of an intensity image.

    Raises:
        NegativeIntensityError: If the image has negative samples
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise GridError(f"image must be 2D, got shape {image.shape}")
    if np.any(image < 0):
        raise NegativeIntensityError(
            f"intensity image has negative values (min {float(image.min()):.3g})"
        )
    return np.abs(fft.fftshift(fft.fft2(image, norm="ortho")))
