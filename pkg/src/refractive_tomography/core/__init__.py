"""Numerical core: optics, forward model, gradients, solver and utilities."""

from refractive_tomography.core.adjoint import (
    accumulate_gradient,
    amplitude_residual,
    apply_update,
    backproject_residual,
    cost_term,
    project_constraint,
)
from refractive_tomography.core.calibration import (
    brightfield_energy_ratio,
    calibrate_dataset,
    estimate_wavevector,
)
from refractive_tomography.core.forward_model import (
    image_field,
    msbp_forward,
    plane_wave,
    predict_intensity,
    simulate_field,
    transmittance,
)
from refractive_tomography.core.grid_optics import (
    apply_pupil,
    band_limit,
    intensity_spectrum,
    make_frequency_grid,
    make_pupil,
    propagate,
)
from refractive_tomography.core.inspector import inspect_dataset, inspect_volume, line_profile
from refractive_tomography.core.reconstructor import Reconstructor, reconstruct, resume
from refractive_tomography.core.simulator import (
    rasterize_phantom,
    simulate_dataset,
    spiral_illuminations,
)
from refractive_tomography.core.stitcher import (
    assemble,
    build_blend_masks,
    register_volumes,
    stitch,
)
from refractive_tomography.core.tv_regularizer import tv_norm, tv_prox

__all__ = [
    "Reconstructor",
    "accumulate_gradient",
    "amplitude_residual",
    "apply_pupil",
    "apply_update",
    "assemble",
    "backproject_residual",
    "band_limit",
    "brightfield_energy_ratio",
    "build_blend_masks",
    "calibrate_dataset",
    "cost_term",
    "estimate_wavevector",
    "image_field",
    "inspect_dataset",
    "inspect_volume",
    "intensity_spectrum",
    "line_profile",
    "make_frequency_grid",
    "make_pupil",
    "msbp_forward",
    "plane_wave",
    "predict_intensity",
    "project_constraint",
    "propagate",
    "rasterize_phantom",
    "reconstruct",
    "register_volumes",
    "resume",
    "simulate_dataset",
    "simulate_field",
    "spiral_illuminations",
    "stitch",
    "transmittance",
    "tv_norm",
    "tv_prox",
]
