"""Unit tests for the on-disk dataset and volume formats.

Tests reading and writing including:
- Dataset and volume directories
- Payload length, schema and finiteness checks
- Ground-truth sidecars
- Cost history and profile CSVs
- Stitch manifests
"""

import json
from pathlib import Path

import numpy as np
import pytest

from refractive_tomography.exceptions import (
    NonFinitePayloadError,
    PayloadLengthError,
    SchemaError,
)
from refractive_tomography.models.acquisition import AcquisitionDataset
from refractive_tomography.models.results import CostHistory
from refractive_tomography.models.volume import RIVolume
from refractive_tomography.storage.formats import (
    cost_history_csv,
    load_dataset,
    load_volume,
    load_volume_list,
    profile_csv,
    read_cost_history_csv,
    save_dataset,
    save_volume,
)

from tests.conftest import lattice_illuminations


@pytest.fixture
def saved_dataset(bead_dataset: AcquisitionDataset, tmp_path: Path) -> Path:
    return save_dataset(bead_dataset, tmp_path / "dataset")


class TestDatasetFormat:
    """Test save_dataset and load_dataset."""

    def test_layout(self, saved_dataset: Path, bead_dataset: AcquisitionDataset):
        """Test meta.json and one payload per angle are written."""
        meta = json.loads((saved_dataset / "meta.json").read_text())

        assert meta["intensity_files"][0] == "intensity_0000.raw"
        assert len(meta["intensity_files"]) == bead_dataset.angle_count
        assert meta["z_hat_um"] == pytest.approx(bead_dataset.system.focus_offset)
        payload = saved_dataset / "intensity_0000.raw"
        assert payload.stat().st_size == 16 * 16 * 4

    def test_round_trip(self, saved_dataset: Path, bead_dataset: AcquisitionDataset):
        """Test a saved dataset loads back with identical images and angles."""
        loaded = load_dataset(saved_dataset)

        np.testing.assert_array_equal(loaded.intensities, bead_dataset.intensities)
        np.testing.assert_allclose(
            loaded.illuminations.wavevectors, bead_dataset.illuminations.wavevectors
        )
        assert loaded.system.nx == bead_dataset.system.nx
        assert loaded.system.focus_offset == pytest.approx(bead_dataset.system.focus_offset)
        assert loaded.true_illuminations is None

    def test_ground_truth_sidecar(self, bead_dataset, small_system, tmp_path: Path):
        """Test true illuminations are written beside the dataset and read back."""
        truth = lattice_illuminations(small_system, [(1, 1)] * bead_dataset.angle_count)
        dataset = bead_dataset.model_copy(update={"true_illuminations": truth})
        path = save_dataset(dataset, tmp_path / "dataset")

        assert (path / "ground_truth.json").exists()
        loaded = load_dataset(path)
        np.testing.assert_allclose(loaded.true_illuminations.wavevectors, truth.wavevectors)

    def test_truncated_payload_names_file(self, saved_dataset: Path):
        """Test a short payload raises with the offending path."""
        payload = saved_dataset / "intensity_0002.raw"
        payload.write_bytes(payload.read_bytes()[:-4])

        with pytest.raises(PayloadLengthError) as excinfo:
            load_dataset(saved_dataset)

        assert excinfo.value.path == payload
        assert "intensity_0002.raw" in str(excinfo.value)

    def test_missing_payload(self, saved_dataset: Path):
        """Test a missing payload file is reported."""
        (saved_dataset / "intensity_0001.raw").unlink()

        with pytest.raises(PayloadLengthError):
            load_dataset(saved_dataset)

    def test_non_finite_payload(self, saved_dataset: Path):
        """Test NaN samples are rejected."""
        values = np.ones((16, 16), dtype="<f4")
        values[3, 3] = np.nan
        (saved_dataset / "intensity_0000.raw").write_bytes(values.tobytes())

        with pytest.raises(NonFinitePayloadError):
            load_dataset(saved_dataset)

    def test_missing_meta(self, tmp_path: Path):
        """Test a directory without meta.json is a schema error."""
        (tmp_path / "empty").mkdir()

        with pytest.raises(SchemaError, match="missing metadata"):
            load_dataset(tmp_path / "empty")

    def test_mismatched_lists(self, saved_dataset: Path):
        """Test meta.json with unequal angle and file lists is rejected."""
        meta_path = saved_dataset / "meta.json"
        meta = json.loads(meta_path.read_text())
        meta["illuminations"] = meta["illuminations"][:-1]
        meta_path.write_text(json.dumps(meta))

        with pytest.raises(SchemaError):
            load_dataset(saved_dataset)

    def test_malformed_meta(self, saved_dataset: Path):
        """Test unparsable meta.json is a schema error."""
        (saved_dataset / "meta.json").write_text("[1, 2, 3]")

        with pytest.raises(SchemaError):
            load_dataset(saved_dataset)


class TestVolumeFormat:
    """Test save_volume and load_volume."""

    def test_single_precision_round_trip(self, tmp_path: Path, rng):
        """Test a complex64 volume is reproduced exactly."""
        values = (1.55 + 0.01 * rng.standard_normal((3, 8, 6))).astype(np.complex64)
        values.imag = 0.001 * rng.random((3, 8, 6))
        volume = RIVolume(n=values, dz=0.25, pixel_pitch=0.1, n_medium=1.55)

        loaded = load_volume(save_volume(volume, tmp_path / "volume"))

        np.testing.assert_array_equal(loaded.n, values)
        assert loaded.shape == (3, 8, 6)
        assert loaded.dz == 0.25
        assert loaded.pixel_pitch == pytest.approx(0.1)
        assert loaded.n_medium == 1.55

    def test_real_volume_has_zero_imag_payload(self, tmp_path: Path, bead_volume: RIVolume):
        """Test both payloads exist and the imaginary one is zero."""
        path = save_volume(bead_volume, tmp_path / "volume")

        imag = np.frombuffer((path / "imag.raw").read_bytes(), dtype="<f4")
        assert imag.size == int(np.prod(bead_volume.shape))
        assert np.all(imag == 0)
        meta = json.loads((path / "meta.json").read_text())
        assert meta["dims"] == [4, 16, 16]
        assert meta["spacings"] == [0.2, 0.1, 0.1]

    def test_double_precision_exact(self, tmp_path: Path, rng):
        """Test double-precision volumes come back bit-identical as complex128."""
        shape = (3, 8, 8)
        values = 1.55 + 1e-3 * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        volume = RIVolume(n=values, dz=0.2, pixel_pitch=0.1, n_medium=1.55)

        path = save_volume(volume, tmp_path / "volume", precision="double")
        loaded = load_volume(path)

        assert loaded.n.dtype == np.complex128
        np.testing.assert_array_equal(loaded.n, values)
        assert len((path / "real.raw").read_bytes()) == 8 * values.size
        assert json.loads((path / "meta.json").read_text())["precision"] == "double"

    def test_single_precision_rounds(self, tmp_path: Path, rng):
        """Test the default float32 payloads round double values."""
        values = 1.55 + 1e-3 * rng.standard_normal((3, 8, 8)) + 0j
        volume = RIVolume(n=values, dz=0.2, pixel_pitch=0.1, n_medium=1.55)

        loaded = load_volume(save_volume(volume, tmp_path / "volume"))

        assert loaded.n.dtype == np.complex64
        np.testing.assert_allclose(loaded.n, values, rtol=1e-7)
        assert not np.array_equal(loaded.n.astype(np.complex128), values)

    def test_dims_payload_disagreement(self, tmp_path: Path, bead_volume: RIVolume):
        """Test dims that do not match the payload size are rejected."""
        path = save_volume(bead_volume, tmp_path / "volume")
        meta = json.loads((path / "meta.json").read_text())
        meta["dims"] = [4, 16, 8]
        (path / "meta.json").write_text(json.dumps(meta))

        with pytest.raises(PayloadLengthError):
            load_volume(path)

    def test_unequal_lateral_spacing_rejected(self, tmp_path: Path, bead_volume: RIVolume):
        """Test x and y spacings must match."""
        path = save_volume(bead_volume, tmp_path / "volume")
        meta = json.loads((path / "meta.json").read_text())
        meta["spacings"] = [0.2, 0.1, 0.2]
        (path / "meta.json").write_text(json.dumps(meta))

        with pytest.raises(SchemaError):
            load_volume(path)

    def test_volume_list_resolves_relative_paths(self, tmp_path: Path, bead_volume: RIVolume):
        """Test manifest entries are resolved against the manifest directory."""
        save_volume(bead_volume, tmp_path / "first")
        save_volume(bead_volume, tmp_path / "second")
        manifest = tmp_path / "stitch.json"
        manifest.write_text(json.dumps({"volumes": ["first", "second"]}))

        volumes = load_volume_list(manifest)

        assert len(volumes) == 2
        assert volumes[1].shape == bead_volume.shape

    @pytest.mark.parametrize("content", ['{"volumes": []}', '{"other": 1}', "not json"])
    def test_bad_volume_list(self, tmp_path: Path, content: str):
        """Test empty or malformed stitch manifests are rejected."""
        manifest = tmp_path / "stitch.json"
        manifest.write_text(content)

        with pytest.raises(SchemaError):
            load_volume_list(manifest)


class TestCsvFormats:
    """Test cost history and profile CSVs."""

    def test_cost_history_layout(self):
        """Test one epoch,cost row per completed epoch."""
        text = cost_history_csv(CostHistory(costs=[3.5, 1.25]))

        assert text.splitlines() == ["epoch,cost", "1,3.5", "2,1.25"]

    def test_cost_history_parse(self):
        """Test costs are read back at full precision."""
        history = CostHistory(costs=[0.1 + 0.2, 1e-17])

        assert read_cost_history_csv(cost_history_csv(history)).costs == history.costs

    def test_profile_layout(self):
        """Test profile rows carry position and both index parts."""
        text = profile_csv([-0.1, 0.0], np.array([1.55 + 0.01j, 1.6 + 0j]), "x")
        lines = text.splitlines()

        assert lines[0] == "x_um,n_real,n_imag"
        assert lines[1] == "-0.100000,1.55,0.01"
        assert lines[2] == "0.000000,1.6,0.0"
