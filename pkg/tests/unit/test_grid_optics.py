"""Unit tests for FFT-grid optics.

Tests grid construction, pupils and angular-spectrum propagation including:
- Grid validation and frequency layout
- Pupil radius, inclusiveness and Nyquist clipping
- Unitarity and invertibility of propagation in band
- Evanescent cutoff
- Intensity spectrum centering
"""

import logging

import numpy as np
import pytest

from refractive_tomography.core.grid_optics import (
    apply_pupil,
    band_limit,
    intensity_spectrum,
    make_frequency_grid,
    make_pupil,
    propagate,
)
from refractive_tomography.exceptions import (
    GridError,
    GridMismatchError,
    NegativeIntensityError,
    OpticsParameterError,
)

from tests.conftest import WAVELENGTH_MEDIUM

PITCH = 0.1


def random_field(rng: np.random.Generator, shape=(16, 16)) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestFrequencyGrid:
    """Test make_frequency_grid."""

    def test_dc_at_origin_and_step(self):
        """Test DC sits at index 0 and the step is 2*pi/(n*pitch)."""
        grid = make_frequency_grid(16, 8, PITCH)

        assert grid.kx[0] == 0.0
        assert grid.ky[0] == 0.0
        assert grid.step_x == pytest.approx(2 * np.pi / (16 * PITCH))
        assert grid.step_y == pytest.approx(2 * np.pi / (8 * PITCH))
        assert grid.kx[1] == pytest.approx(grid.step_x)
        assert grid.shape == (16, 8)

    def test_nyquist_row_is_negative(self):
        """Test the Nyquist sample follows the fftfreq convention."""
        grid = make_frequency_grid(8, 8, PITCH)

        assert grid.kx[4] == pytest.approx(-np.pi / PITCH)

    @pytest.mark.parametrize(("nx", "ny"), [(15, 16), (16, 3), (0, 16), (1, 2)])
    def test_invalid_dimensions_raise(self, nx, ny):
        """Test odd or too-small dimensions are rejected."""
        with pytest.raises(GridError):
            make_frequency_grid(nx, ny, PITCH)

    @pytest.mark.parametrize("pitch", [0.0, -0.1, float("nan")])
    def test_invalid_pitch_raises(self, pitch):
        """Test non-positive pitch is rejected."""
        with pytest.raises(GridError):
            make_frequency_grid(16, 16, pitch)

    def test_snap_to_lattice(self):
        """Test snapping returns the nearest lattice wavevector."""
        grid = make_frequency_grid(16, 16, PITCH)
        kx, ky = grid.snap((1.4 * grid.step_x, -2.6 * grid.step_y))

        assert kx == pytest.approx(grid.step_x)
        assert ky == pytest.approx(-3 * grid.step_y)


class TestPupil:
    """Test make_pupil."""

    def test_radius_matches_cutoff(self):
        """Test only frequencies within 2*pi*NA/lambda pass."""
        grid = make_frequency_grid(32, 32, PITCH)
        wavelength = 0.532
        pupil = make_pupil(grid, 0.5, wavelength)

        cutoff = 2 * np.pi * 0.5 / wavelength
        inside = grid.k_squared <= cutoff**2
        assert pupil.cutoff == pytest.approx(cutoff)
        np.testing.assert_array_equal(pupil.transfer.real.astype(bool), inside)
        assert not pupil.clipped

    def test_rim_point_is_included(self):
        """Test a lattice point exactly on the rim passes."""
        grid = make_frequency_grid(16, 16, PITCH)
        # choose NA so the cutoff lands exactly on 3 samples
        wavelength = 0.5
        na = 3 * grid.step_x * wavelength / (2 * np.pi)
        pupil = make_pupil(grid, na, wavelength)

        assert pupil.transfer[3, 0] == 1
        assert pupil.transfer[4, 0] == 0

    def test_clipping_logs_warning(self, caplog):
        """Test a cutoff beyond Nyquist is flagged and logged."""
        grid = make_frequency_grid(8, 8, 1.0)
        with caplog.at_level(logging.WARNING):
            pupil = make_pupil(grid, 1.4, 0.4)

        assert pupil.clipped
        assert pupil.is_all_pass
        assert "Nyquist" in caplog.text

    def test_pupil_is_cached_and_read_only(self):
        """Test identical arguments return the same immutable pupil."""
        grid = make_frequency_grid(16, 16, PITCH)
        first = make_pupil(grid, 0.8, 0.532)
        second = make_pupil(grid, 0.8, 0.532)

        assert first is second
        with pytest.raises(ValueError):
            first.transfer[0, 0] = 0

    @pytest.mark.parametrize(("na", "wavelength"), [(0.0, 0.5), (-1.0, 0.5), (0.5, 0.0)])
    def test_invalid_parameters_raise(self, na, wavelength):
        """Test non-positive NA or wavelength is rejected."""
        grid = make_frequency_grid(16, 16, PITCH)
        with pytest.raises(OpticsParameterError):
            make_pupil(grid, na, wavelength)

    def test_apply_pupil_shape_mismatch(self):
        """Test applying a pupil on a different grid raises."""
        pupil = make_pupil(make_frequency_grid(16, 16, PITCH), 0.8, 0.532)
        with pytest.raises(GridMismatchError):
            apply_pupil(np.ones((8, 8), dtype=complex), pupil)

    def test_apply_pupil_identity_in_band(self, rng):
        """Test fields already inside the pupil pass unchanged and filtering is idempotent."""
        pupil = make_pupil(make_frequency_grid(16, 16, PITCH), 0.8, 0.532)
        for _ in range(20):
            filtered = apply_pupil(random_field(rng), pupil)

            np.testing.assert_allclose(apply_pupil(filtered, pupil), filtered, atol=1e-12)

    def test_apply_pupil_dc_only_gives_mean(self, rng):
        """Test a pupil passing only DC returns the field mean everywhere."""
        grid = make_frequency_grid(16, 16, PITCH)
        wavelength = 0.5
        # cutoff at half a sample keeps only the zero frequency
        na = 0.5 * grid.step_x * wavelength / (2 * np.pi)
        pupil = make_pupil(grid, na, wavelength)
        field = random_field(rng)

        out = apply_pupil(field, pupil)

        assert int(pupil.transfer.real.sum()) == 1
        np.testing.assert_allclose(out, np.full(field.shape, field.mean()), atol=1e-12)

    def test_apply_pupil_never_adds_energy(self, rng):
        """Test filtering never increases the field norm."""
        pupil = make_pupil(make_frequency_grid(16, 16, PITCH), 0.5, 0.532)
        for conjugate in (False, True):
            for _ in range(50):
                field = random_field(rng)
                out = apply_pupil(field, pupil, conjugate=conjugate)

                assert np.linalg.norm(out) <= np.linalg.norm(field) * (1 + 1e-12)


class TestPropagate:
    """Test angular-spectrum propagation."""

    def test_preserves_norm_in_band(self, rng):
        """Test propagation is unitary on band-limited fields."""
        for _ in range(100):
            field = band_limit(random_field(rng), WAVELENGTH_MEDIUM, PITCH)
            distance = rng.uniform(-5.0, 5.0)
            out = propagate(field, distance, WAVELENGTH_MEDIUM, PITCH)

            assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(field), rel=1e-10)

    def test_inverse_is_band_limit(self, rng):
        """Test propagating by d then -d returns the band-limited input."""
        for _ in range(100):
            field = random_field(rng)
            distance = rng.uniform(-5.0, 5.0)
            there = propagate(field, distance, WAVELENGTH_MEDIUM, PITCH)
            back = propagate(there, -distance, WAVELENGTH_MEDIUM, PITCH)
            expected = band_limit(field, WAVELENGTH_MEDIUM, PITCH)

            error = np.linalg.norm(back - expected) / np.linalg.norm(expected)
            assert error < 1e-10

    def test_distances_compose(self, rng):
        """Test propagating by a then b equals propagating by a + b."""
        for _ in range(50):
            field = random_field(rng)
            first, second = rng.uniform(-3.0, 3.0, size=2)
            stepped = propagate(
                propagate(field, first, WAVELENGTH_MEDIUM, PITCH),
                second, WAVELENGTH_MEDIUM, PITCH,
            )
            direct = propagate(field, first + second, WAVELENGTH_MEDIUM, PITCH)

            np.testing.assert_allclose(stepped, direct, atol=1e-10)

    def test_constant_field_stays_constant(self):
        """Test a uniform field keeps unit modulus after any distance."""
        field = np.full((16, 16), 2.0 + 0j)
        for distance in (-3.0, 0.25, 10.0):
            out = propagate(field, distance, WAVELENGTH_MEDIUM, PITCH)

            np.testing.assert_allclose(np.abs(out), 2.0, atol=1e-12)
            np.testing.assert_allclose(out, out[0, 0], atol=1e-12)

    def test_zero_distance_keeps_band_limited_field(self, rng):
        """Test propagate(., 0) is the identity on in-band fields."""
        field = band_limit(random_field(rng), WAVELENGTH_MEDIUM, PITCH)

        np.testing.assert_allclose(
            propagate(field, 0.0, WAVELENGTH_MEDIUM, PITCH), field, atol=1e-12
        )

    def test_evanescent_components_removed(self):
        """Test a component beyond 2*pi/lambda is zeroed."""
        grid = make_frequency_grid(16, 16, PITCH)
        x, _ = grid.coordinates()
        # 7 samples = 27.5 rad/um, well above 2*pi/lambda = 18.3 rad/um
        field = np.exp(1j * 7 * grid.step_x * x) * np.ones((16, 16))

        out = propagate(field, 1.0, WAVELENGTH_MEDIUM, PITCH)

        assert np.max(np.abs(out)) < 1e-12

    def test_plane_wave_gains_axial_phase(self):
        """Test an on-axis plane wave picks up exp(-j k d)."""
        field = np.ones((16, 16), dtype=complex)
        distance = 0.7
        out = propagate(field, distance, WAVELENGTH_MEDIUM, PITCH)

        expected = np.exp(-1j * 2 * np.pi / WAVELENGTH_MEDIUM * distance)
        np.testing.assert_allclose(out, expected * field, atol=1e-12)

    def test_padding_keeps_shape_and_dtype(self, rng):
        """Test padded propagation crops back to the input shape."""
        field = random_field(rng).astype(np.complex64)
        out = propagate(field, 0.5, WAVELENGTH_MEDIUM, PITCH, pad_factor=2)

        assert out.shape == field.shape
        assert out.dtype == np.complex64

    def test_real_input_promoted(self):
        """Test a real field is propagated as complex."""
        out = propagate(np.ones((8, 8)), 0.2, WAVELENGTH_MEDIUM, PITCH)

        assert np.iscomplexobj(out)

    def test_invalid_wavelength_raises(self):
        """Test non-positive wavelength is rejected."""
        with pytest.raises(OpticsParameterError):
            propagate(np.ones((8, 8), dtype=complex), 1.0, 0.0, PITCH)

    def test_non_2d_field_raises(self):
        """Test a 3D array is rejected."""
        with pytest.raises(GridError):
            propagate(np.ones((2, 8, 8), dtype=complex), 1.0, WAVELENGTH_MEDIUM, PITCH)


class TestIntensitySpectrum:
    """Test intensity_spectrum."""

    def test_dc_is_centered(self):
        """Test a uniform image concentrates its spectrum at the center."""
        spectrum = intensity_spectrum(np.ones((16, 16)))

        assert spectrum[8, 8] == pytest.approx(16.0)
        assert spectrum.sum() == pytest.approx(16.0)

    def test_cosine_gives_symmetric_peaks(self):
        """Test a cosine fringe puts equal energy at +-k."""
        grid = make_frequency_grid(16, 16, PITCH)
        x, _ = grid.coordinates()
        image = 1.0 + 0.5 * np.cos(3 * grid.step_x * x) * np.ones((16, 16))

        spectrum = intensity_spectrum(image)

        assert spectrum[11, 8] == pytest.approx(spectrum[5, 8])
        assert spectrum[11, 8] > 0.1 * spectrum[8, 8]

    def test_negative_intensity_raises(self):
        """Test negative samples are rejected."""
        image = np.ones((8, 8))
        image[0, 0] = -1e-3
        with pytest.raises(NegativeIntensityError):
            intensity_spectrum(image)
