"""Unit tests for the multi-slice forward model.

Tests the layer recursion and image formation including:
- Transmittance values
- Plane-wave generation and lattice snapping
- Homogeneous-volume fixed points (brightfield and darkfield)
- Energy, lateral shift and low-contrast phase behavior
- Band and grid validation
"""

import numpy as np
import pytest

from refractive_tomography.core.forward_model import (
    check_volume_matches_system,
    image_field,
    msbp_forward,
    plane_wave,
    predict_intensity,
    simulate_field,
    transmittance,
)
from refractive_tomography.exceptions import GridMismatchError, OutOfBandIlluminationError
from refractive_tomography.models.optics import Illumination
from refractive_tomography.models.volume import RIVolume

from tests.conftest import N_MEDIUM, WAVELENGTH_MEDIUM, make_system


class TestTransmittance:
    """Test transmittance."""

    def test_background_is_transparent(self):
        """Test a layer at the background index transmits unchanged."""
        layer = np.full((8, 8), N_MEDIUM, dtype=complex)

        np.testing.assert_allclose(transmittance(layer, 0.2, WAVELENGTH_MEDIUM, N_MEDIUM), 1.0)

    def test_phase_delay(self):
        """Test the phase is (2*pi/lambda) dz dn."""
        layer = np.full((4, 4), N_MEDIUM + 0.05, dtype=complex)
        t = transmittance(layer, 0.2, WAVELENGTH_MEDIUM, N_MEDIUM)

        expected = 2 * np.pi / WAVELENGTH_MEDIUM * 0.2 * 0.05
        np.testing.assert_allclose(np.angle(t), expected)
        np.testing.assert_allclose(np.abs(t), 1.0)

    def test_absorption_attenuates(self):
        """Test a positive imaginary index reduces the amplitude."""
        layer = np.full((4, 4), N_MEDIUM + 0.01j)
        t = transmittance(layer, 0.2, WAVELENGTH_MEDIUM, N_MEDIUM)

        assert np.all(np.abs(t) < 1.0)


class TestPlaneWave:
    """Test plane_wave."""

    def test_on_axis_is_constant(self, small_system):
        """Test k0 = 0 gives the complex amplitude everywhere."""
        field = plane_wave(small_system.grid, Illumination(amplitude=2.0, phase=0.5))

        np.testing.assert_allclose(field, 2.0 * np.exp(0.5j))

    def test_off_lattice_k0_is_snapped(self, small_system):
        """Test an off-lattice wavevector produces the snapped plane wave."""
        grid = small_system.grid
        raw = plane_wave(grid, Illumination(k0=(1.2 * grid.step_x, -0.9 * grid.step_y)))
        snapped = plane_wave(grid, Illumination(k0=(grid.step_x, -grid.step_y)))

        np.testing.assert_allclose(raw, snapped)

    @pytest.mark.parametrize("k0_samples", [(1.2, -0.9), (2.6, 3.4)])
    def test_snapped_wave_wraps_without_seam(self, small_system, k0_samples):
        """Test the sample after the last column and row is the first one again."""
        grid = small_system.grid
        kx, ky = grid.snap((k0_samples[0] * grid.step_x, k0_samples[1] * grid.step_y))
        field = plane_wave(grid, Illumination(k0=(kx, ky)))
        pitch = grid.pixel_pitch

        np.testing.assert_allclose(field[-1] * np.exp(1j * kx * pitch), field[0], atol=1e-12)
        np.testing.assert_allclose(
            field[:, -1] * np.exp(1j * ky * pitch), field[:, 0], atol=1e-12
        )

    def test_dtype(self, small_system):
        """Test the requested dtype is honoured."""
        field = plane_wave(small_system.grid, Illumination(), dtype=np.complex64)

        assert field.dtype == np.complex64


class TestMultiSliceForward:
    """Test msbp_forward and image formation."""

    def test_stack_layout(self, bead_volume):
        """Test the stack stores the entrance and one field per layer."""
        stack = msbp_forward(bead_volume, Illumination(), WAVELENGTH_MEDIUM)

        assert stack.fields.shape == bead_volume.shape
        assert stack.n_layers == bead_volume.n_layers
        np.testing.assert_allclose(stack.previous(0), stack.entrance)
        np.testing.assert_allclose(stack.previous(2), stack.fields[1])
        assert stack.dz == bead_volume.dz
        assert stack.wavelength == WAVELENGTH_MEDIUM

    def test_homogeneous_volume_brightfield_is_uniform(self, small_system, homogeneous_volume):
        """Test an in-pupil plane wave through the background images as unit intensity."""
        grid = small_system.grid
        for samples in [(0, 0), (2, 1), (-1, 3)]:
            illum = Illumination(k0=(samples[0] * grid.step_x, samples[1] * grid.step_y))
            intensity = predict_intensity(homogeneous_volume, illum, small_system)

            np.testing.assert_allclose(intensity, 1.0, atol=1e-10)

    def test_homogeneous_volume_darkfield_is_dark(self, small_system, homogeneous_volume):
        """Test a plane wave outside the detection pupil images as zero."""
        grid = small_system.grid
        # 4 samples = 15.7 rad/um: past the 13.0 rad/um pupil, inside the 18.3 rad/um band
        illum = Illumination(k0=(4 * grid.step_x, 0.0))
        intensity = predict_intensity(homogeneous_volume, illum, small_system)

        assert np.max(intensity) < 1e-20

    def test_bead_scatters(self, small_system, bead_volume):
        """Test a bead produces a non-uniform image."""
        intensity = predict_intensity(bead_volume, Illumination(), small_system)

        assert np.std(intensity) > 1e-3

    def test_double_and_single_precision_agree(self, small_system, bead_volume):
        """Test the complex64 path matches the complex128 path closely."""
        single = bead_volume.with_values(bead_volume.n.astype(np.complex64))
        i64 = predict_intensity(bead_volume, Illumination(), small_system)
        i32 = predict_intensity(single, Illumination(), small_system)

        assert i32.dtype == np.float32
        np.testing.assert_allclose(i32, i64, atol=1e-4)

    def test_out_of_band_illumination_raises(self, bead_volume):
        """Test |k0| >= 2*pi/lambda is rejected."""
        k_medium = 2 * np.pi / WAVELENGTH_MEDIUM
        with pytest.raises(OutOfBandIlluminationError):
            msbp_forward(bead_volume, Illumination(k0=(k_medium, 0.0)), WAVELENGTH_MEDIUM)

    def test_simulate_field_returns_camera_field(self, small_system, bead_volume):
        """Test simulate_field equals image_field of the stored exit field."""
        stack, camera = simulate_field(bead_volume, Illumination(), small_system)

        np.testing.assert_allclose(camera, image_field(stack.exit_field, small_system))

    def test_focus_defaults_to_volume_center(self, small_system):
        """Test z_hat defaults to half the volume thickness."""
        assert small_system.focus_offset == pytest.approx(
            small_system.dz * small_system.n_layers / 2
        )


class TestGridChecks:
    """Test grid validation between volumes and systems."""

    def test_volume_grid_mismatch(self, small_system):
        """Test a volume on another lateral grid is rejected."""
        volume = RIVolume.homogeneous((4, 8, 8), dz=0.2, pixel_pitch=0.1, n_medium=N_MEDIUM)
        with pytest.raises(GridMismatchError):
            check_volume_matches_system(volume, small_system)

    def test_pitch_mismatch(self, small_system):
        """Test a volume with a different pitch is rejected."""
        volume = RIVolume.homogeneous((4, 16, 16), dz=0.2, pixel_pitch=0.2, n_medium=N_MEDIUM)
        with pytest.raises(GridMismatchError):
            predict_intensity(volume, Illumination(), small_system)

    def test_image_field_shape_mismatch(self):
        """Test image_field rejects fields off the system grid."""
        system = make_system()
        with pytest.raises(GridMismatchError):
            image_field(np.ones((8, 8), dtype=complex), system)


class TestPropagationInvariants:
    """Test energy, shift and low-contrast phase behavior of msbp_forward."""

    def test_real_volume_never_gains_energy(self, small_system, rng):
        """Test layer field norms are non-increasing through a lossless volume."""
        shape = (small_system.n_layers, small_system.nx, small_system.ny)
        volume = RIVolume(
            n=N_MEDIUM + 0.02 * rng.standard_normal(shape),
            dz=small_system.dz,
            pixel_pitch=small_system.pixel_pitch,
            n_medium=N_MEDIUM,
        )
        stack = msbp_forward(volume, Illumination(), WAVELENGTH_MEDIUM)

        norms = [np.linalg.norm(stack.entrance)] + [
            np.linalg.norm(field) for field in stack.fields
        ]
        assert all(after <= before * (1 + 1e-12) for before, after in zip(norms, norms[1:]))

    @pytest.mark.parametrize("samples", [(0, 0), (0, 2)])
    def test_smooth_real_volume_conserves_energy(self, small_system, samples):
        """Test a weak in-band phase grating keeps the exit energy equal to the input."""
        grid = small_system.grid
        x, _ = grid.coordinates()
        layer = N_MEDIUM + 0.01 * np.cos(grid.step_x * x) * np.ones((1, small_system.ny))
        volume = RIVolume(
            n=np.repeat(layer[None], small_system.n_layers, axis=0),
            dz=small_system.dz,
            pixel_pitch=small_system.pixel_pitch,
            n_medium=N_MEDIUM,
        )
        illum = Illumination(k0=(samples[0] * grid.step_x, samples[1] * grid.step_y))
        stack = msbp_forward(volume, illum, WAVELENGTH_MEDIUM)

        assert np.linalg.norm(stack.exit_field) == pytest.approx(
            np.linalg.norm(stack.entrance), rel=1e-10
        )

    @pytest.mark.parametrize("samples", [(0, 0), (2, -1)])
    def test_lateral_shift_covariance(self, small_system, bead_volume, samples):
        """Test rolling the volume rolls the exit field, up to the illumination phase."""
        grid = small_system.grid
        kx, ky = samples[0] * grid.step_x, samples[1] * grid.step_y
        illum = Illumination(k0=(kx, ky))
        shift = (3, -5)
        rolled = bead_volume.with_values(np.roll(bead_volume.n, shift, axis=(1, 2)))

        exit_field = msbp_forward(bead_volume, illum, WAVELENGTH_MEDIUM).exit_field
        rolled_exit = msbp_forward(rolled, illum, WAVELENGTH_MEDIUM).exit_field

        phase = np.exp(1j * (kx * shift[0] + ky * shift[1]) * small_system.pixel_pitch)
        np.testing.assert_allclose(
            rolled_exit, phase * np.roll(exit_field, shift, axis=(0, 1)), atol=1e-12
        )

    def test_low_contrast_matches_projected_phase(self, small_system, bead_volume):
        """Test a 1e-4 bead shifts the mean exit phase by its projected optical path."""
        delta_n = 1e-4
        faint = bead_volume.with_values(
            np.where(bead_volume.n.real > N_MEDIUM, N_MEDIUM + delta_n, N_MEDIUM)
        )
        background = RIVolume.homogeneous(
            bead_volume.shape, dz=bead_volume.dz, pixel_pitch=bead_volume.pixel_pitch,
            n_medium=N_MEDIUM,
        )

        exit_field = msbp_forward(faint, Illumination(), WAVELENGTH_MEDIUM).exit_field
        reference = msbp_forward(background, Illumination(), WAVELENGTH_MEDIUM).exit_field
        measured = np.angle(np.mean(exit_field) / np.mean(reference))

        k = 2 * np.pi / WAVELENGTH_MEDIUM
        projected = k * faint.dz * np.sum(faint.n.real - N_MEDIUM) / (
            small_system.nx * small_system.ny
        )
        assert projected > 0
        assert measured == pytest.approx(projected, rel=0.01)
