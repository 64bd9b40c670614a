"""Record repository for PhysioNet EHG databases.

This module provides the RecordRepository class, which lists the records of a
database directory, loads them as ``Record`` objects with their delivery group
resolved, and reads the interval annotation manifest.
"""

import logging
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from app.core.exceptions import EhgValidationError
from app.database.models.record import (
    ChannelRole,
    Group,
    IntervalAnnotation,
    Record,
    RecordHeader,
)
from app.database.repositories.base_repo import BaseRepository
from app.utils.file_handling import (
    encode_signals,
    load_annotations,
    load_group_index,
    parse_header,
    read_signals,
    write_header,
)

logger = logging.getLogger(__name__)

PRETERM_WEEKS = 37.0


class RecordRepository(BaseRepository):
    """Repository for WFDB records stored in one directory.

    Group labels are resolved in order from a ``# Group <name>`` header
    comment, from the ``# Gestation <weeks>`` comment (delivery before 37
    weeks is preterm) and finally from the optional ``record,group`` index
    file.

    Attributes:
        annotations_file: Manifest file name relative to the root.
        index_file: Group index file name relative to the root (may be empty).
    """

    def __init__(
        self,
        root: Union[str, Path],
        annotations_file: str = "annotations.csv",
        index_file: str = "",
    ):
        """Initialize the repository.

        Args:
            root: Database directory.
            annotations_file: Annotation manifest name.
            index_file: Group index name, empty if the database has none.
        """
        super().__init__(root)
        self.annotations_file = annotations_file
        self.index_file = index_file

    def list_record_names(self) -> List[str]:
        """Names of all records with a header file, sorted."""
        return [p.stem for p in self.find("*.hea")]

    def read_header(self, name: str) -> RecordHeader:
        """Parse the header of one record."""
        return parse_header(self.read_text(f"{name}.hea"))

    @cached_property
    def group_index(self) -> Dict[str, Group]:
        """Group per record from the index file, empty if there is none."""
        if not self.index_file:
            return {}
        if self.find_one(self.index_file) is None:
            logger.warning(f"Group index {self.index_file} not found under {self.root}")
            return {}
        return load_group_index(self.read_text(self.index_file))

    def resolve_group(self, header: RecordHeader) -> Group:
        """Determine the delivery group of a record.

        Raises:
        ------
            EhgValidationError: If no source names the group.
        """
        explicit = header.metadata.get("group")
        if explicit:
            try:
                return Group(explicit.lower())
            except ValueError:
                logger.warning(f"{header.record_name}: unknown group comment '{explicit}'")
        if header.gestation_weeks is not None:
            return Group.PRETERM if header.gestation_weeks < PRETERM_WEEKS else Group.TERM
        if header.record_name in self.group_index:
            return self.group_index[header.record_name]
        raise EhgValidationError(
            f"{header.record_name}: group is neither in the header comments nor in the index"
        )

    def load_record(self, name: str) -> Record:
        """Load one record with physical-unit signals.

        Args:
            name: Record name (header file stem).

        Returns:
        -------
            Record: The record with its group and channel roles.
        """
        header = self.read_header(name)
        data = {f: self.read_bytes(f) for f in dict.fromkeys(c.file_name for c in header.channels)}
        signals = read_signals(header, data)
        record = Record(
            header=header,
            signals=signals,
            group=self.resolve_group(header),
            channel_roles=[ChannelRole.from_label(lab) for lab in header.channel_labels],
            gestation_at_delivery_weeks=header.gestation_weeks,
        )
        logger.debug(
            f"Loaded {name}: {header.n_channels} channels x {header.n_samples} samples, "
            f"group {record.group.value}"
        )
        return record

    def load_annotations(self) -> List[IntervalAnnotation]:
        """Read the annotation manifest; an absent manifest yields no intervals."""
        if self.find_one(self.annotations_file) is None:
            logger.warning(f"Annotation manifest {self.annotations_file} not found under {self.root}")
            return []
        return load_annotations(self.read_text(self.annotations_file))

    def annotations_by_record(self) -> Dict[str, List[IntervalAnnotation]]:
        """Annotations grouped by record name."""
        grouped: Dict[str, List[IntervalAnnotation]] = {}
        for annotation in self.load_annotations():
            grouped.setdefault(annotation.record_name, []).append(annotation)
        return grouped

    def save_record(
        self, header: RecordHeader, signals: np.ndarray, annotations: Optional[str] = None
    ) -> Path:
        """Write a record as header plus format-16 signal file(s).

        Args:
            header: Header to write.
            signals: Physical-unit signals of shape (n_channels, n_samples).
            annotations: Optional manifest text to write alongside.

        Returns:
        -------
            Path: Path of the written header.
        """
        for file_name, data in encode_signals(header, signals).items():
            self.write_bytes(file_name, data)
        if annotations is not None:
            self.write_text(self.annotations_file, annotations)
        return self.write_text(f"{header.record_name}.hea", write_header(header))
