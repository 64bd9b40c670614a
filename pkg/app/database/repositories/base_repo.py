"""Base repository module for dataset directory access.

This module provides the BaseRepository class which implements the repository
pattern over a dataset directory, offering the common lookup and read methods
that concrete repositories inherit and extend.
"""

import logging
from pathlib import Path
from typing import List, Optional, Union

logger = logging.getLogger(__name__)


class BaseRepository:
    """Base repository class for file-backed datasets.

    This class resolves names relative to a root directory and provides
    consistent lookup and read operations for all repositories in the
    application.

    Attributes:
        root: Directory holding the dataset files.
    """

    def __init__(self, root: Union[str, Path]):
        """Initialize the BaseRepository with its root directory.

        Args:
            root (Union[str, Path]): The dataset directory.
        """
        self.root = Path(root)

    def path_for(self, name: str) -> Path:
        """Resolve a file name relative to the root."""
        return self.root / name

    def find_one(self, name: str) -> Optional[Path]:
        """Find a single file by name.

        Args:
            name (str): File name relative to the root.

        Returns:
        -------
            Optional[Path]: The file path, or None if it does not exist.
        """
        path = self.path_for(name)
        return path if path.is_file() else None

    def find(self, pattern: str) -> List[Path]:
        """Find all files matching a glob pattern, sorted by name.

        Args:
            pattern (str): Glob pattern relative to the root.

        Returns:
        -------
            List[Path]: Matching files.
        """
        return sorted(p for p in self.root.glob(pattern) if p.is_file())

    def read_text(self, name: str) -> str:
        """Read a UTF-8 text file relative to the root.

        Raises:
        ------
            FileNotFoundError: If the file does not exist.
        """
        return self.path_for(name).read_text(encoding="utf-8")

    def read_bytes(self, name: str) -> bytes:
        """Read a binary file relative to the root."""
        return self.path_for(name).read_bytes()

    def write_text(self, name: str, text: str) -> Path:
        """Write a UTF-8 text file relative to the root, creating directories."""
        path = self.path_for(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        return path

    def write_bytes(self, name: str, data: bytes) -> Path:
        """Write a binary file relative to the root, creating directories."""
        path = self.path_for(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        return path
