"""Synthetic ground truth: illumination spirals, phantoms and simulated datasets."""

from typing import List, Optional

import numpy as np
from tqdm import tqdm

from refractive_tomography.config import get_logger
from refractive_tomography.config.settings import SimulationSettings
from refractive_tomography.core.forward_model import check_volume_matches_system, predict_intensity
from refractive_tomography.exceptions import OpticsParameterError
from refractive_tomography.models.acquisition import (
    AcquisitionDataset,
    AnglePerturbation,
    NoiseSpec,
)
from refractive_tomography.models.optics import (
    FrequencyGrid,
    Illumination,
    IlluminationSet,
    OpticalSystem,
)
from refractive_tomography.models.volume import Box, PhantomSpec, RIVolume, Shell, Sphere

logger = get_logger(__name__)

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


def _snap_within(grid: FrequencyGrid, kx: float, ky: float, radius: float) -> tuple[float, float]:
    """Nearest lattice point to (kx, ky) whose magnitude does not exceed ``radius``."""
    fx, fy = kx / grid.step_x, ky / grid.step_y
    best: Optional[tuple[float, float]] = None
    best_distance = np.inf
    for ix in {np.floor(fx), np.ceil(fx)}:
        for iy in {np.floor(fy), np.ceil(fy)}:
            cx, cy = ix * grid.step_x, iy * grid.step_y
            if np.hypot(cx, cy) > radius * (1.0 + 1e-12):
                continue
            distance = np.hypot(cx - kx, cy - ky)
            if distance < best_distance:
                best, best_distance = (float(cx), float(cy)), distance
    # the corner truncated toward zero is never farther out than (kx, ky)
    assert best is not None
    return best


def spiral_illuminations(
    count: int,
    na_illum: float,
    wavelength: float,
    grid: Optional[FrequencyGrid] = None,
) -> IlluminationSet:
    """Golden-angle Archimedean spiral of illumination wavevectors.

    Radii grow linearly from 0 to ``2*pi*na_illum/wavelength`` (``wavelength``
    is the vacuum value). With a grid, each point is snapped to the nearest
    lattice wavevector that stays inside that radius and the set is reordered
    by non-decreasing snapped radius.

    Raises:
        OpticsParameterError: If ``count < 1`` or a parameter is not positive
    """
    if count < 1:
        raise OpticsParameterError(f"count must be >= 1, got {count}")
    if not na_illum > 0 or not wavelength > 0:
        raise OpticsParameterError("na_illum and wavelength must be positive")

    k_max = 2.0 * np.pi * na_illum / wavelength
    index = np.arange(count)
    radii = k_max * index / (count - 1) if count > 1 else np.zeros(1)
    theta = index * GOLDEN_ANGLE
    points = np.stack([radii * np.cos(theta), radii * np.sin(theta)], axis=1)

    if grid is not None:
        points = np.array([_snap_within(grid, kx, ky, k_max) for kx, ky in points])
        order = np.argsort(np.hypot(points[:, 0], points[:, 1]), kind="stable")
        points = points[order]

    logger.debug(
        "Spiral illuminations generated",
        extra={"count": count, "k_max": round(k_max, 4), "snapped": grid is not None},
    )
    return IlluminationSet.from_wavevectors(points)


def rasterize_phantom(spec: PhantomSpec) -> RIVolume:
    """Voxelize primitives by testing voxel centers; later primitives overwrite earlier ones."""
    n = np.full((spec.n_layers, spec.nx, spec.ny), spec.n_medium, dtype=np.complex128)
    x, y, z = spec.voxel_centers()
    for primitive in spec.primitives:
        inside = np.broadcast_to(primitive.contains(x, y, z), n.shape)
        n[inside] = primitive.index
        logger.debug(
            "Primitive rasterized",
            extra={"kind": primitive.kind, "voxels": int(inside.sum())},
        )
    return RIVolume(n=n, dz=spec.dz, pixel_pitch=spec.pixel_pitch, n_medium=spec.n_medium)


def apply_noise(image: np.ndarray, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Add detector noise; Gaussian std is relative to the image mean."""
    if noise.model == "none" or (noise.model == "gaussian" and noise.parameter == 0.0):
        return image
    if noise.model == "gaussian":
        sigma = noise.parameter * float(np.mean(image))
        return np.maximum(image + sigma * rng.standard_normal(image.shape), 0.0)
    budget = noise.parameter
    return rng.poisson(image * budget) / budget


def perturb_illuminations(
    illums: IlluminationSet,
    grid: FrequencyGrid,
    perturbation: AnglePerturbation,
    rng: np.random.Generator,
) -> IlluminationSet:
    """Shift every wavevector by a uniform integer offset in ``[-m, m]`` samples per axis."""
    m = perturbation.max_samples
    offsets = rng.integers(-m, m + 1, size=(len(illums), 2))
    shifted = illums.wavevectors + offsets * np.array([grid.step_x, grid.step_y])
    return IlluminationSet.from_wavevectors(shifted)


def simulate_dataset(
    volume: RIVolume,
    illums: IlluminationSet,
    system: OpticalSystem,
    noise: Optional[NoiseSpec] = None,
    seed: int = 0,
    perturbation: Optional[AnglePerturbation] = None,
    show_progress: bool = False,
) -> AcquisitionDataset:
    """Forward-simulate one intensity image per illumination.

    Each angle draws noise from its own stream spawned from ``seed``, so the
    output does not depend on evaluation order. With a perturbation, the
    dataset's reported illuminations carry injected integer offsets and the
    exact ones are kept in ``true_illuminations``.

    Returns:
        AcquisitionDataset with float32 intensities
    """
    noise = noise or NoiseSpec()
    check_volume_matches_system(volume, system)
    grid = system.grid

    true_set = IlluminationSet(
        illuminations=[
            Illumination(k0=grid.snap(ill.k0), amplitude=ill.amplitude, phase=ill.phase)
            for ill in illums
        ]
    )
    streams = np.random.SeedSequence(seed).spawn(len(true_set) + 1)

    images: List[np.ndarray] = []
    for index, illum in enumerate(
        tqdm(true_set, desc="Simulating", unit="angle", disable=not show_progress)
    ):
        intensity = predict_intensity(volume, illum, system)
        intensity = apply_noise(intensity, noise, np.random.default_rng(streams[index]))
        images.append(intensity.astype(np.float32))

    reported = true_set
    truth: Optional[IlluminationSet] = None
    if perturbation is not None:
        reported = perturb_illuminations(
            true_set, grid, perturbation, np.random.default_rng(streams[-1])
        )
        truth = true_set

    logger.info(
        "Dataset simulated",
        extra={
            "angles": len(true_set),
            "noise": noise.model,
            "perturbed": perturbation is not None,
            "mean_intensity": round(float(np.mean(images)), 6),
        },
    )
    return AcquisitionDataset(
        system=system,
        illuminations=reported,
        intensities=np.stack(images),
        true_illuminations=truth,
    )


def system_from_settings(sim: SimulationSettings) -> OpticalSystem:
    """Optical system described by the simulation settings."""
    return OpticalSystem(
        wavelength_medium=sim.wavelength_medium_um,
        n_medium=sim.n_medium,
        na_detection=sim.na_detection,
        na_illumination=sim.na_illumination,
        nx=sim.nx,
        ny=sim.ny,
        n_layers=sim.n_layers,
        pixel_pitch=sim.pixel_pitch_um,
        dz=sim.dz_um,
        z_hat=sim.z_hat_um,
        pad_factor=sim.pad_factor,
    )


def phantom_from_settings(sim: SimulationSettings) -> PhantomSpec:
    """Phantom described by the simulation settings."""
    primitives = []
    for p in sim.primitives:
        index = complex(p.index_real, p.index_imag)
        if p.kind == "sphere":
            primitives.append(Sphere(center=p.center_um, radius=p.radius_um, index=index))
        elif p.kind == "shell":
            primitives.append(
                Shell(
                    center=p.center_um,
                    radius=p.radius_um,
                    inner_radius=p.inner_radius_um,
                    index=index,
                )
            )
        else:
            primitives.append(Box(center=p.center_um, size=p.size_um, index=index))
    return PhantomSpec(
        nx=sim.nx,
        ny=sim.ny,
        n_layers=sim.n_layers,
        pixel_pitch=sim.pixel_pitch_um,
        dz=sim.dz_um,
        n_medium=sim.n_medium,
        primitives=primitives,
    )


def simulate_from_settings(
    sim: SimulationSettings, seed: int = 0, show_progress: bool = False
) -> tuple[RIVolume, AcquisitionDataset]:
    """Rasterize the configured phantom and simulate its dataset."""
    system = system_from_settings(sim)
    volume = rasterize_phantom(phantom_from_settings(sim))
    illums = spiral_illuminations(
        sim.angle_count, sim.na_illumination, system.wavelength_vacuum, system.grid
    )
    perturbation = (
        AnglePerturbation(max_samples=sim.perturbation_samples)
        if sim.perturbation_samples > 0
        else None
    )
    dataset = simulate_dataset(
        volume,
        illums,
        system,
        NoiseSpec(model=sim.noise_model, parameter=sim.noise_parameter),
        seed=seed,
        perturbation=perturbation,
        show_progress=show_progress,
    )
    return volume, dataset
