"""Shared test fixtures for refractive-tomography-toolkit.

Provides reusable fixtures for unit and integration tests including:
- Small optical systems and grids
- Phantom volumes (bead, weak random scatterer)
- Simulated datasets
- Repositories and settings
"""

from pathlib import Path

import numpy as np
import pytest

from refractive_tomography.config.settings import (
    PrimitiveSettings,
    ReconstructionConfig,
    Settings,
    SimulationSettings,
    TVConfig,
    reset_settings,
)
from refractive_tomography.core.simulator import rasterize_phantom, simulate_dataset
from refractive_tomography.models.acquisition import AcquisitionDataset
from refractive_tomography.models.optics import IlluminationSet, OpticalSystem
from refractive_tomography.models.volume import PhantomSpec, RIVolume, Sphere
from refractive_tomography.storage.filesystem_repository import FileSystemRepository

N_MEDIUM = 1.552
WAVELENGTH_MEDIUM = 0.532 / N_MEDIUM
BEAD_INDEX = 1.598


# ============================================================================
# Optical System Fixtures
# ============================================================================


def make_system(nx: int = 16, ny: int = 16, n_layers: int = 4, **overrides) -> OpticalSystem:
    """Optical system with the bead-scenario optics on a small grid."""
    params = dict(
        wavelength_medium=WAVELENGTH_MEDIUM,
        n_medium=N_MEDIUM,
        na_detection=1.1,
        na_illumination=1.1,
        nx=nx,
        ny=ny,
        n_layers=n_layers,
        pixel_pitch=0.1,
        dz=0.2,
    )
    params.update(overrides)
    return OpticalSystem(**params)


def lattice_illuminations(system: OpticalSystem, samples) -> IlluminationSet:
    """Illuminations at integer frequency-sample positions."""
    grid = system.grid
    return IlluminationSet.from_wavevectors(
        [(ix * grid.step_x, iy * grid.step_y) for ix, iy in samples]
    )


@pytest.fixture
def small_system() -> OpticalSystem:
    """16 x 16 x 4 system, pitch 0.1 um, dz 0.2 um."""
    return make_system()


@pytest.fixture
def calibration_system() -> OpticalSystem:
    """32 x 32 x 4 system; the pupil spans about 6.6 frequency samples."""
    return make_system(nx=32, ny=32, n_layers=4)


# ============================================================================
# Volume Fixtures
# ============================================================================


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator so random tests are repeatable."""
    return np.random.default_rng(1234)


@pytest.fixture
def homogeneous_volume(small_system: OpticalSystem) -> RIVolume:
    """Background-only volume matching ``small_system``."""
    return RIVolume.homogeneous(
        (small_system.n_layers, small_system.nx, small_system.ny),
        dz=small_system.dz,
        pixel_pitch=small_system.pixel_pitch,
        n_medium=N_MEDIUM,
    )


@pytest.fixture
def bead_volume(small_system: OpticalSystem) -> RIVolume:
    """One polystyrene bead centered in ``small_system``'s volume."""
    spec = PhantomSpec(
        nx=small_system.nx,
        ny=small_system.ny,
        n_layers=small_system.n_layers,
        pixel_pitch=small_system.pixel_pitch,
        dz=small_system.dz,
        n_medium=N_MEDIUM,
        primitives=[Sphere(center=(0.0, 0.0, 0.0), radius=0.35, index=BEAD_INDEX)],
    )
    return rasterize_phantom(spec)


def weak_scatterer(system: OpticalSystem, contrast: float, seed: int = 7) -> RIVolume:
    """White-noise complex contrast of the given magnitude around the background."""
    generator = np.random.default_rng(seed)
    shape = (system.n_layers, system.nx, system.ny)
    values = N_MEDIUM + contrast * (
        generator.standard_normal(shape) + 1j * np.abs(generator.standard_normal(shape))
    )
    return RIVolume(n=values, dz=system.dz, pixel_pitch=system.pixel_pitch, n_medium=N_MEDIUM)


# ============================================================================
# Dataset Fixtures
# ============================================================================


@pytest.fixture
def bead_dataset(bead_volume: RIVolume, small_system: OpticalSystem) -> AcquisitionDataset:
    """Noise-free bead dataset with five brightfield angles."""
    illums = lattice_illuminations(small_system, [(0, 0), (1, 0), (0, 1), (-1, -1), (2, -1)])
    return simulate_dataset(bead_volume, illums, small_system)


@pytest.fixture
def fast_config() -> ReconstructionConfig:
    """Few-epoch configuration without early stopping."""
    return ReconstructionConfig(
        alpha=6e-4,
        tv=TVConfig(beta=4e-4, inner_iterations=10),
        epochs=3,
        seed=0,
        stop_tolerance=0.0,
    )


# ============================================================================
# Repository and Settings Fixtures
# ============================================================================


@pytest.fixture
def repository() -> FileSystemRepository:
    """Real FileSystemRepository (tests write under tmp_path)."""
    return FileSystemRepository()


@pytest.fixture
def small_simulation_settings() -> SimulationSettings:
    """Simulation settings for a 16 x 16 x 4 bead and six angles."""
    return SimulationSettings(
        nx=16,
        ny=16,
        n_layers=4,
        angle_count=6,
        primitives=[PrimitiveSettings(kind="sphere", radius_um=0.35, index_real=BEAD_INDEX)],
    )


@pytest.fixture
def test_settings(tmp_path: Path, small_simulation_settings: SimulationSettings) -> Settings:
    """Settings writing to a temporary output directory."""
    return Settings(output_dir=tmp_path / "output", simulation=small_simulation_settings)


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Remove configuration overrides from the environment and reset global settings."""
    for var in (
        "RECONSTRUCTION_ALPHA",
        "RECONSTRUCTION_BETA",
        "RECONSTRUCTION_EPOCHS",
        "RECONSTRUCTION_SEED",
        "RECONSTRUCTION_CONSTRAINT",
        "RECONSTRUCTION_PRECISION",
        "CALIBRATION_CONFIDENCE_THRESHOLD",
        "STITCHING_MIN_CONFIDENCE",
        "OUTPUT_DIR",
        "ODT_LOG_LEVEL",
    ):
        monkeypatch.delenv(var, raising=False)
    reset_settings()
    yield
    reset_settings()
