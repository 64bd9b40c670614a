"""``ingest``: inventory a dataset directory and validate its annotations."""

import argparse
import io
import logging
from pathlib import Path
from typing import Dict

import pandas as pd

from app.core.config import PipelineConfig
from app.core.exceptions import AnnotationError
from app.database.models.record import RecordHeader
from app.database.repositories.record_repository import RecordRepository

logger = logging.getLogger(__name__)

NAME = "ingest"
HELP = "parse every record header, resolve groups and check the annotation manifest"
NEEDS_DATASET = True

RECORDS_SCHEMA = "# ehg-records v1"
RECORDS_FILE = "records.csv"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    """No verb-specific arguments."""


def validate_annotations(repository: RecordRepository, headers: Dict[str, RecordHeader]) -> int:
    """Check every annotated interval against its record.

    Returns:
    -------
        int: Number of intervals checked.

    Raises:
    ------
        AnnotationError: For an interval of an unknown record or past its end.
    """
    annotations = repository.load_annotations()
    for annotation in annotations:
        header = headers.get(annotation.record_name)
        if header is None:
            raise AnnotationError(f"annotation refers to unknown record {annotation.record_name}")
        if annotation.end_sample > header.n_samples:
            raise AnnotationError(
                f"{annotation.record_name}: interval [{annotation.start_sample}, "
                f"{annotation.end_sample}) exceeds {header.n_samples} samples"
            )
    return len(annotations)


def run(args: argparse.Namespace, config: PipelineConfig) -> int:
    """Write ``records.csv`` describing every record of the dataset."""
    repository = RecordRepository(
        config.dataset.root,
        annotations_file=config.dataset.annotations,
        index_file=config.dataset.index,
    )
    headers: Dict[str, RecordHeader] = {}
    rows = []
    for name in repository.list_record_names():
        header = repository.read_header(name)
        headers[name] = header
        rows.append(
            {
                "record": name,
                "group": repository.resolve_group(header).value,
                "gestation_weeks": header.gestation_weeks,
                "fs": header.sampling_rate_hz,
                "n_samples": header.n_samples,
                "channels": header.n_channels,
            }
        )
    n_intervals = validate_annotations(repository, headers)

    frame = pd.DataFrame(
        rows, columns=["record", "group", "gestation_weeks", "fs", "n_samples", "channels"]
    )
    out_dir = Path(config.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO()
    buffer.write(RECORDS_SCHEMA + "\n")
    frame.to_csv(buffer, index=False, float_format="%.12g", lineterminator="\n")
    path = out_dir / RECORDS_FILE
    path.write_text(buffer.getvalue(), encoding="utf-8")

    counts = frame["group"].value_counts().to_dict() if rows else {}
    logger.info(f"Wrote {path}")
    print(
        f"ingested {len(rows)} records ({', '.join(f'{k}: {v}' for k, v in sorted(counts.items()))}); "
        f"{n_intervals} annotated intervals valid"
    )
    return 0
