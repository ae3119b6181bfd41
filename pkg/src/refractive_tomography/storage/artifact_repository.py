"""Abstract artifact repository interface.

Defines the storage operations used by the on-disk formats and the CLI so
that tests can substitute an in-memory implementation.
"""

import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any


class ArtifactRepository(ABC):
    """Abstract base class for artifact storage operations."""

    @abstractmethod
    def read_bytes(self, filepath: Path) -> bytes:
        """Read a binary payload.

        Raises:
            FileNotFoundError: If the file does not exist
        """

    @abstractmethod
    def write_bytes(self, filepath: Path, data: bytes) -> None:
        """Write a binary payload atomically (temp file then rename)."""

    @abstractmethod
    def read_text(self, filepath: Path) -> str:
        """Read a UTF-8 text file.

        Raises:
            FileNotFoundError: If the file does not exist
        """

    @abstractmethod
    def write_text(self, filepath: Path, content: str) -> None:
        """Write a UTF-8 text file atomically."""

    @abstractmethod
    def exists(self, filepath: Path) -> bool:
        """Check whether a file exists."""

    @abstractmethod
    def create_directory(self, dirpath: Path) -> None:
        """Create a directory (and parents) if it doesn't exist."""

    def read_json(self, filepath: Path) -> Any:
        """Read and parse a JSON document.

        Raises:
            ValueError: If the content is not valid JSON
        """
        return json.loads(self.read_text(filepath))

    def write_json(self, filepath: Path, data: Any) -> None:
        """Serialize ``data`` as indented JSON and write it atomically."""
        self.write_text(filepath, json.dumps(data, indent=2, sort_keys=False) + "\n")
