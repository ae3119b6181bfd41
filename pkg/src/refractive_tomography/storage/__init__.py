"""Storage layer: artifact repositories and on-disk formats."""

from refractive_tomography.storage.artifact_repository import ArtifactRepository
from refractive_tomography.storage.filesystem_repository import FileSystemRepository
from refractive_tomography.storage.formats import (
    DatasetManifest,
    VolumeManifest,
    cost_history_csv,
    load_dataset,
    load_volume,
    load_volume_list,
    profile_csv,
    read_cost_history_csv,
    save_dataset,
    save_volume,
)

__all__ = [
    "ArtifactRepository",
    "FileSystemRepository",
    "DatasetManifest",
    "VolumeManifest",
    "save_dataset",
    "load_dataset",
    "save_volume",
    "load_volume",
    "load_volume_list",
    "cost_history_csv",
    "read_cost_history_csv",
    "profile_csv",
]
