"""Error back-propagation for the multi-slice model.

The amplitude residual at the camera is mapped back through the pupil and the
refocus step, then carried down through the layers in reverse order. At each
layer the local gradient is

    s_k = -j (2 pi dz / lambda) conj(t_k) conj(P_dz y_{k-1}) q_{k+1}
    q_k = P_{-dz}(conj(t_k) q_{k+1})

``s_k`` equals dC/dRe(n_k) + j dC/dIm(n_k) for the cost
``C = 1/2 sum (|G| - sqrt(I))^2``. The conjugated propagated field keeps the
forward distance; a finite-difference check over every voxel of a small random
volume confirms this form.
"""

from typing import Optional, Sequence

import numpy as np

from refractive_tomography.config import get_logger
from refractive_tomography.core.forward_model import transmittance
from refractive_tomography.core.grid_optics import apply_pupil, propagate
from refractive_tomography.exceptions import (
    GridMismatchError,
    NegativeIntensityError,
    StackMismatchError,
    TomographyError,
)
from refractive_tomography.models.optics import ComplexField2D, OpticalSystem, RealImage
from refractive_tomography.models.results import LayerFieldStack
from refractive_tomography.models.volume import RIVolume

logger = get_logger(__name__)

CONSTRAINTS = ("none", "real_only", "nonneg_absorption")


def project_constraint(values: np.ndarray, constraint: str) -> np.ndarray:
    """Project index values onto the constraint set, keeping their dtype.

    Raises:
        TomographyError: On an unknown constraint
    """
    if constraint not in CONSTRAINTS:
        raise TomographyError(f"unknown constraint '{constraint}', expected one of {CONSTRAINTS}")
    if constraint == "real_only":
        return values.real.astype(values.dtype)
    if constraint == "nonneg_absorption":
        projected = values.real + 1j * np.maximum(values.imag, 0.0)
        return projected.astype(values.dtype, copy=False)
    return values


def _check_measurement(predicted: np.ndarray, measured: np.ndarray) -> np.ndarray:
    measured = np.asarray(measured)
    if measured.shape != np.shape(predicted):
        raise GridMismatchError(
            f"measured shape {measured.shape} does not match predicted {np.shape(predicted)}"
        )
    if np.any(measured < 0):
        raise NegativeIntensityError(
            f"measured intensity has negative values (min {float(measured.min()):.3g})"
        )
    return measured


def amplitude_residual(predicted: ComplexField2D, measured_intensity: RealImage) -> ComplexField2D:
    """Residual ``exp(j angle(G)) (|G| - sqrt(I))`` at the camera plane.

    Where ``|G| = 0`` the phase factor is taken as 1.

    Raises:
        NegativeIntensityError: If the measurement has negative samples
        GridMismatchError: If shapes differ
    """
    measured = _check_measurement(predicted, measured_intensity)
    amplitude = np.abs(predicted)
    safe = np.where(amplitude > 0, amplitude, 1.0)
    phase = np.where(amplitude > 0, predicted / safe, 1.0)
    return (phase * (amplitude - np.sqrt(measured))).astype(predicted.dtype, copy=False)


def cost_term(predicted: ComplexField2D, measured_intensity: RealImage) -> float:
    """Amplitude misfit ``sum (|G| - sqrt(I))^2`` for one image."""
    measured = _check_measurement(predicted, measured_intensity)
    diff = np.abs(predicted).astype(np.float64) - np.sqrt(measured.astype(np.float64))
    return float(np.sum(diff * diff))


def backproject_residual(q0: ComplexField2D, system: OpticalSystem) -> ComplexField2D:
    """Adjoint of the imaging step: conjugate pupil, then propagate by ``+z_hat``."""
    filtered = apply_pupil(q0, system.pupil, conjugate=True)
    return propagate(
        filtered, system.focus_offset, system.wavelength_medium, system.pixel_pitch,
        system.pad_factor,
    )


def accumulate_gradient(
    stack: LayerFieldStack, volume: RIVolume, q_top: ComplexField2D
) -> np.ndarray:
    """Layer gradients ``s`` with shape ``(N, nx, ny)`` from the top residual.

    Raises:
        StackMismatchError: If the stack was not produced for this volume
    """
    if stack.fields.shape != volume.shape:
        raise StackMismatchError(
            f"stack shape {stack.fields.shape} does not match volume shape {volume.shape}"
        )
    if not np.isclose(stack.dz, volume.dz) or not np.isclose(stack.pixel_pitch, volume.pixel_pitch):
        raise StackMismatchError("stack sampling does not match volume sampling")

    wavelength, dz, pitch, pad = stack.wavelength, stack.dz, stack.pixel_pitch, stack.pad_factor
    scale = -1j * 2.0 * np.pi * dz / wavelength

    grad = np.empty(volume.shape, dtype=np.result_type(volume.n.dtype, np.complex64))
    q = np.asarray(q_top)
    for k in range(volume.n_layers - 1, -1, -1):
        t_conj = np.conj(transmittance(volume.n[k], dz, wavelength, volume.n_medium))
        incoming = propagate(stack.previous(k), dz, wavelength, pitch, pad)
        grad[k] = scale * t_conj * np.conj(incoming) * q
        q = propagate(t_conj * q, -dz, wavelength, pitch, pad)
    return grad


def apply_update(
    volume: RIVolume,
    grad: np.ndarray,
    alpha: float,
    constraint: str = "none",
    layer_mask: Optional[Sequence[bool]] = None,
) -> RIVolume:
    """Gradient step ``n_k <- n_k - alpha s_k`` followed by the constraint projection.

    Args:
        volume: Current volume (not modified)
        grad: Layer gradients with the volume's shape
        alpha: Step size (>= 0)
        constraint: ``none``, ``real_only`` (Im n = 0) or ``nonneg_absorption`` (Im n >= 0)
        layer_mask: Layers allowed to change; None updates all layers

    Returns:
        New RIVolume

    Raises:
        TomographyError: On negative alpha, unknown constraint or shape mismatch
    """
    if alpha < 0:
        raise TomographyError(f"alpha must be non-negative, got {alpha}")
    if constraint not in CONSTRAINTS:
        raise TomographyError(f"unknown constraint '{constraint}', expected one of {CONSTRAINTS}")
    if np.shape(grad) != volume.shape:
        raise StackMismatchError(f"gradient shape {np.shape(grad)} != volume shape {volume.shape}")

    step = alpha * np.asarray(grad)
    if layer_mask is not None:
        mask = np.asarray(layer_mask, dtype=bool)
        if mask.shape != (volume.n_layers,):
            raise TomographyError(
                f"layer_mask needs {volume.n_layers} entries, got {mask.shape[0]}"
            )
        step = step * mask[:, None, None]

    updated = (volume.n - step).astype(volume.n.dtype, copy=False)
    return volume.with_values(project_constraint(updated, constraint))
