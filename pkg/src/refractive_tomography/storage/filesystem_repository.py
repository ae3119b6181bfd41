"""File system implementation of the artifact repository.

Writes go to a temporary file in the target directory and are moved into
place with ``os.replace`` so readers never observe a partial file.
"""

import os
import tempfile
from pathlib import Path

from refractive_tomography.config import get_logger
from refractive_tomography.storage.artifact_repository import ArtifactRepository

logger = get_logger(__name__)


class FileSystemRepository(ArtifactRepository):
    """Local file system artifact storage."""

    def __init__(self, encoding: str = "utf-8"):
        """Initialize repository.

        Args:
            encoding: Text encoding (default: utf-8)
        """
        self.encoding = encoding

    def read_bytes(self, filepath: Path) -> bytes:
        """Read a binary payload.

        Raises:
            FileNotFoundError: If file does not exist
            PermissionError: If file is not readable
        """
        filepath = Path(filepath)
        if not filepath.is_file():
            logger.error("Artifact not found", extra={"path": str(filepath)})
            raise FileNotFoundError(f"Artifact not found: {filepath}")

        try:
            data = filepath.read_bytes()
        except PermissionError as e:
            logger.error(
                "Permission denied reading file",
                extra={"path": str(filepath), "error": str(e)},
            )
            raise

        logger.debug("Artifact read", extra={"path": str(filepath), "size": len(data)})
        return data

    def write_bytes(self, filepath: Path, data: bytes) -> None:
        """Write a binary payload atomically.

        Raises:
            PermissionError: If the directory is not writable
            OSError: On any other write failure
        """
        filepath = Path(filepath)
        filepath.parent.mkdir(parents=True, exist_ok=True)

        fd, tmp_name = tempfile.mkstemp(prefix=f".{filepath.name}.", dir=filepath.parent)
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(data)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp_name, filepath)
        except OSError as e:
            logger.error(
                "OS error writing file",
                extra={"path": str(filepath), "error": str(e)},
            )
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise

        logger.debug("Artifact written", extra={"path": str(filepath), "size": len(data)})

    def read_text(self, filepath: Path) -> str:
        """Read a text file.

        Raises:
            FileNotFoundError: If file does not exist
            UnicodeDecodeError: If file encoding is invalid
        """
        try:
            return self.read_bytes(filepath).decode(self.encoding)
        except UnicodeDecodeError as e:
            logger.error(
                "Invalid file encoding",
                extra={"path": str(filepath), "encoding": self.encoding, "error": str(e)},
            )
            raise

    def write_text(self, filepath: Path, content: str) -> None:
        """Write a text file atomically."""
        self.write_bytes(filepath, content.encode(self.encoding))

    def exists(self, filepath: Path) -> bool:
        """Check if a file exists."""
        exists = Path(filepath).is_file()
        logger.debug("Artifact existence check", extra={"path": str(filepath), "exists": exists})
        return exists

    def create_directory(self, dirpath: Path) -> None:
        """Create directory if it doesn't exist.

        Raises:
            PermissionError: If directory cannot be created
        """
        try:
            Path(dirpath).mkdir(parents=True, exist_ok=True)
            logger.debug("Directory ensured", extra={"path": str(dirpath)})
        except OSError as e:
            logger.error(
                "OS error creating directory",
                extra={"path": str(dirpath), "error": str(e)},
            )
            raise
