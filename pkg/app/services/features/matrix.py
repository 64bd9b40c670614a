"""Feature matrix table: construction, CSV persistence and schema checks.

The on-disk format is a CSV whose first line is a schema marker, followed by
a header row ``record,segment,window_kind,<features>,label`` and one row per
segment ordered by (record, segment).
"""

import io
import logging
import re
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from app.core.exceptions import SchemaMismatchError
from app.database.models.features import FeatureRow
from app.database.models.learning import LabeledDataset, Provenance
from app.services.features.extractor import FeatureSettings, feature_names

logger = logging.getLogger(__name__)

SCHEMA_LINE = "# ehg-features v1"
PROVENANCE_COLUMNS = ["record", "segment", "window_kind"]
LABEL_COLUMN = "label"
FLOAT_FORMAT = "%.12g"

_CHANNEL_PATTERN = re.compile(r"^ch(\d+)_")


def build_feature_frame(rows: Sequence[FeatureRow], names: List[str]) -> pd.DataFrame:
    """Assemble feature rows into the canonical table.

    Rows are sorted by (record, segment) regardless of input order.
    """
    ordered = sorted(rows, key=lambda r: (r.record_name, r.segment_index))
    for row in ordered:
        if row.values.shape[0] != len(names):
            raise SchemaMismatchError(
                f"{row.record_name}#{row.segment_index}: {row.values.shape[0]} values "
                f"for {len(names)} columns"
            )
    values = np.vstack([r.values for r in ordered]) if ordered else np.empty((0, len(names)))
    frame = pd.DataFrame(values, columns=names)
    frame.insert(0, "record", [r.record_name for r in ordered])
    frame.insert(1, "segment", [r.segment_index for r in ordered])
    frame.insert(2, "window_kind", [r.window_kind for r in ordered])
    frame[LABEL_COLUMN] = np.array([r.label for r in ordered], dtype=np.int64)
    return frame


def feature_columns(frame: pd.DataFrame) -> List[str]:
    """Feature column names of a table, in order."""
    return [c for c in frame.columns if c not in PROVENANCE_COLUMNS and c != LABEL_COLUMN]


def write_feature_matrix(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Write the table with its schema line; output is byte-stable for equal input."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO()
    buffer.write(SCHEMA_LINE + "\n")
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    path.write_text(buffer.getvalue(), encoding="utf-8")
    logger.info(f"Wrote {len(frame)} feature rows x {len(feature_columns(frame))} features to {path}")
    return path


def read_feature_matrix(path: Union[str, Path]) -> pd.DataFrame:
    """Read a feature table written by ``write_feature_matrix``.

    Raises:
    ------
        SchemaMismatchError: If the schema line or required columns are missing.
    """
    path = Path(path)
    with path.open(encoding="utf-8") as handle:
        first = handle.readline().rstrip("\r\n")
    if first != SCHEMA_LINE:
        raise SchemaMismatchError(f"{path}: expected '{SCHEMA_LINE}', found '{first}'")
    frame = pd.read_csv(path, skiprows=1, dtype={"record": str, "window_kind": str})
    missing = [c for c in PROVENANCE_COLUMNS + [LABEL_COLUMN] if c not in frame.columns]
    if missing:
        raise SchemaMismatchError(f"{path}: missing columns {missing}")
    return frame


def channel_count(frame: pd.DataFrame) -> int:
    """Number of channel blocks in a table, from its ``ch<n>_`` prefixes."""
    channels = set()
    for name in feature_columns(frame):
        match = _CHANNEL_PATTERN.match(name)
        if match is None:
            raise SchemaMismatchError(f"unexpected feature column '{name}'")
        channels.add(int(match.group(1)))
    return len(channels)


def validate_schema(
    frame: pd.DataFrame,
    settings: FeatureSettings,
    n_channels: Optional[int] = None,
) -> None:
    """Check that a table's feature columns match the configured extractor.

    Args:
        frame: Feature table.
        settings: Extractor settings the table must correspond to.
        n_channels: Expected channel count; inferred from the table when None.

    Raises:
    ------
        SchemaMismatchError: On any column or value mismatch.
    """
    found = feature_columns(frame)
    channels = n_channels if n_channels is not None else channel_count(frame)
    expected = feature_names(channels, settings)
    if found != expected:
        extra = sorted(set(found) - set(expected))[:5]
        absent = sorted(set(expected) - set(found))[:5]
        raise SchemaMismatchError(
            f"feature columns do not match the configuration "
            f"({len(found)} found, {len(expected)} expected; "
            f"unexpected {extra}, missing {absent})"
        )
    if frame[found].isna().to_numpy().any():
        raise SchemaMismatchError("feature table contains empty cells")
    if not frame[LABEL_COLUMN].isin([0, 1]).all():
        raise SchemaMismatchError("labels must be 0 or 1")
    if frame.duplicated(subset=["record", "segment"]).any():
        raise SchemaMismatchError("duplicate (record, segment) rows")


def to_labeled_dataset(frame: pd.DataFrame) -> LabeledDataset:
    """Convert a feature table into a dataset with row provenance."""
    names = feature_columns(frame)
    return LabeledDataset(
        X=frame[names].to_numpy(dtype=np.float64),
        y=frame[LABEL_COLUMN].to_numpy(dtype=np.int64),
        provenance=[
            Provenance(record_name=str(r), segment_index=int(s))
            for r, s in zip(frame["record"], frame["segment"])
        ],
        feature_names=names,
    )
