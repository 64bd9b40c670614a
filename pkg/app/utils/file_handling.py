"""File handling utilities for PhysioNet WFDB records.

This module provides functions for reading and writing WFDB headers (.hea),
format-16 binary signal files (.dat), the plain-text interval annotation
manifest and the optional record-to-group index. Everything here works on
text and bytes so it can be used without touching the filesystem; the
repositories in ``app.database.repositories`` do the file access.
"""

import io
import logging
import re
from typing import Dict, List, Mapping, Optional, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from app.core.exceptions import (
    AnnotationError,
    HeaderParseError,
    LengthMismatchError,
    UnsupportedFormatError,
)
from app.database.models.record import (
    DEFAULT_ADC_GAIN,
    SUPPORTED_FORMATS,
    AnnotationKind,
    ChannelSpec,
    Group,
    IntervalAnnotation,
    RecordHeader,
)

logger = logging.getLogger(__name__)

ANNOTATION_COLUMNS = ["record", "kind", "start_sample", "end_sample"]

_GAIN_PATTERN = re.compile(
    r"^(?P<gain>[-+]?[\d.]+(?:[eE][-+]?\d+)?)"
    r"(?:\((?P<baseline>[-+]?\d+)\))?"
    r"(?:/(?P<units>\S+))?$"
)
_FORMAT_PATTERN = re.compile(r"^(?P<fmt>\d+)")
_COMMENT_PATTERN = re.compile(
    r"^(?P<key>[A-Za-z][A-Za-z .\-_]*?)\s*[:=]?\s*(?P<value>\S+)$"
)


def _parse_comment(comment: str) -> Optional[tuple]:
    match = _COMMENT_PATTERN.match(comment.strip())
    if not match:
        return None
    return match.group("key").strip().lower(), match.group("value")


def _parse_record_line(line: str, line_number: int) -> Dict:
    tokens = line.split()
    if len(tokens) < 2:
        raise HeaderParseError(
            "record line needs at least a name and a signal count", line_number
        )
    name = tokens[0]
    if "/" in name:
        raise UnsupportedFormatError(
            f"multi-segment record '{name}' is not supported"
        )
    if len(tokens) < 4:
        raise HeaderParseError("record line is missing the sample count", line_number)
    try:
        n_sigs = int(tokens[1])
        fs = float(tokens[2].split("/")[0].split("(")[0])
        n_samples = int(tokens[3])
    except ValueError as e:
        raise HeaderParseError(f"malformed record line: {e}", line_number) from e
    return {
        "record_name": name,
        "n_channels": n_sigs,
        "sampling_rate_hz": fs,
        "n_samples": n_samples,
    }


def _parse_signal_line(line: str, line_number: int) -> ChannelSpec:
    tokens = line.split()
    if len(tokens) < 2:
        raise HeaderParseError(
            "signal line needs at least a file name and a format", line_number
        )
    fmt_match = _FORMAT_PATTERN.match(tokens[1])
    if not fmt_match:
        raise HeaderParseError(f"invalid format field '{tokens[1]}'", line_number)
    storage_format = int(fmt_match.group("fmt"))
    if storage_format not in SUPPORTED_FORMATS:
        raise UnsupportedFormatError(
            f"line {line_number}: storage format {storage_format} is not supported "
            f"(supported: {', '.join(str(f) for f in SUPPORTED_FORMATS)})"
        )

    fields: Dict = {"file_name": tokens[0], "storage_format": storage_format}
    explicit_baseline = None
    if len(tokens) > 2:
        gain_match = _GAIN_PATTERN.match(tokens[2])
        if not gain_match:
            raise HeaderParseError(f"invalid gain field '{tokens[2]}'", line_number)
        gain = float(gain_match.group("gain"))
        fields["adc_gain"] = gain if gain != 0 else DEFAULT_ADC_GAIN
        if gain_match.group("baseline") is not None:
            explicit_baseline = int(gain_match.group("baseline"))
        if gain_match.group("units"):
            fields["units"] = gain_match.group("units")

    integer_fields = ["adc_resolution", "adc_zero", "initial_value", "checksum", "block_size"]
    try:
        for offset, key in enumerate(integer_fields, start=3):
            if len(tokens) > offset:
                fields[key] = int(tokens[offset])
    except ValueError as e:
        raise HeaderParseError(f"malformed signal line: {e}", line_number) from e

    # WFDB: an omitted baseline equals the ADC zero, which itself defaults to 0
    fields["baseline"] = (
        explicit_baseline if explicit_baseline is not None else fields.get("adc_zero", 0)
    )
    if len(tokens) > 8:
        fields["channel_label"] = " ".join(tokens[8:])
    try:
        return ChannelSpec(**fields)
    except ValidationError as e:
        raise HeaderParseError(f"invalid signal line: {e.errors()[0]['msg']}", line_number) from e


def parse_header(text: str) -> RecordHeader:
    """Parse the contents of a WFDB header file.

    The first non-comment line is the record line
    (``name n_sigs fs n_samples``), followed by one line per signal. Lines
    starting with ``#`` are comments; ``key value`` comments such as
    ``# Gestation 33.7`` are captured as metadata.

    Args:
        text: Header file contents.

    Returns:
    -------
        RecordHeader: The parsed header.

    Raises:
    ------
        HeaderParseError: If the text is empty or a line is malformed.
        UnsupportedFormatError: If a signal uses a format other than 16.
    """
    record_fields: Optional[Dict] = None
    channels: List[ChannelSpec] = []
    comments: List[str] = []
    metadata: Dict[str, str] = {}
    last_line = 0

    for line_number, raw in enumerate(text.splitlines(), start=1):
        last_line = line_number
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            comment = line.lstrip("#").strip()
            if comment:
                comments.append(comment)
                parsed = _parse_comment(comment)
                if parsed:
                    metadata[parsed[0]] = parsed[1]
            continue
        if record_fields is None:
            record_fields = _parse_record_line(line, line_number)
        else:
            if len(channels) >= record_fields["n_channels"]:
                raise HeaderParseError(
                    f"more signal lines than the declared {record_fields['n_channels']}",
                    line_number,
                )
            channels.append(_parse_signal_line(line, line_number))

    if record_fields is None:
        raise HeaderParseError("empty header: no record line found", last_line or 1)
    if len(channels) != record_fields["n_channels"]:
        raise HeaderParseError(
            f"expected {record_fields['n_channels']} signal lines, found {len(channels)}",
            last_line,
        )

    try:
        return RecordHeader(
            **record_fields, channels=channels, comments=comments, metadata=metadata
        )
    except ValidationError as e:
        raise HeaderParseError(f"invalid header values: {e.errors()[0]['msg']}", 1) from e


def write_header(header: RecordHeader) -> str:
    """Render a header back to WFDB text.

    Args:
        header: Header to render.

    Returns:
    -------
        str: Header file contents ending with a newline.
    """
    lines = [
        f"{header.record_name} {header.n_channels} {header.sampling_rate_hz:g} "
        f"{header.n_samples}"
    ]
    for ch in header.channels:
        line = (
            f"{ch.file_name} {ch.storage_format} {ch.adc_gain:.10g}({ch.baseline})/{ch.units} "
            f"{ch.adc_resolution} {ch.adc_zero} {ch.initial_value} {ch.checksum} "
            f"{ch.block_size}"
        )
        if ch.channel_label:
            line += f" {ch.channel_label}"
        lines.append(line)
    lines.extend(f"# {comment}" for comment in header.comments)
    return "\n".join(lines) + "\n"


def _channels_by_file(header: RecordHeader) -> Dict[str, List[int]]:
    grouped: Dict[str, List[int]] = {}
    for index, ch in enumerate(header.channels):
        grouped.setdefault(ch.file_name, []).append(index)
    return grouped


def read_signals(
    header: RecordHeader, data: Union[bytes, Mapping[str, bytes]]
) -> np.ndarray:
    """Decode format-16 signal bytes into physical units.

    Samples are 16-bit two's-complement little-endian values; channels sharing
    a file are interleaved sample-major in header order. The physical value is
    ``(adc - baseline) / gain``.

    Args:
        header: Parsed header describing the signals.
        data: Contents of the single shared signal file, or a mapping from
            signal file name to contents.

    Returns:
    -------
        np.ndarray: Array of shape (n_channels, n_samples).

    Raises:
    ------
        UnsupportedFormatError: If a channel is not format 16.
        LengthMismatchError: If a file's byte count disagrees with the header.
    """
    grouped = _channels_by_file(header)
    if isinstance(data, (bytes, bytearray, memoryview)):
        if len(grouped) != 1:
            raise LengthMismatchError(
                f"record {header.record_name} spans {len(grouped)} signal files; "
                "pass a mapping of file name to bytes"
            )
        data = {next(iter(grouped)): bytes(data)}

    signals = np.empty((header.n_channels, header.n_samples), dtype=np.float64)
    for file_name, indices in grouped.items():
        for i in indices:
            if header.channels[i].storage_format not in SUPPORTED_FORMATS:
                raise UnsupportedFormatError(
                    f"channel {i} uses format {header.channels[i].storage_format}"
                )
        if file_name not in data:
            raise LengthMismatchError(f"missing signal file {file_name}")
        raw = data[file_name]
        expected = header.n_samples * len(indices) * 2
        if len(raw) != expected:
            raise LengthMismatchError(
                f"{file_name}: expected {expected} bytes "
                f"({header.n_samples} samples x {len(indices)} channels x 2), "
                f"got {len(raw)}"
            )
        adc = np.frombuffer(raw, dtype="<i2").reshape(header.n_samples, len(indices))
        for column, i in enumerate(indices):
            ch = header.channels[i]
            signals[i] = (adc[:, column].astype(np.float64) - ch.baseline) / ch.adc_gain
    return signals


def encode_signals(header: RecordHeader, signals: np.ndarray) -> Dict[str, bytes]:
    """Quantize physical signals to format-16 bytes.

    Args:
        header: Header describing gains, baselines and file layout.
        signals: Array of shape (n_channels, n_samples) in physical units.

    Returns:
    -------
        Dict[str, bytes]: Signal file contents keyed by file name.
    """
    signals = np.asarray(signals, dtype=np.float64)
    if signals.shape != (header.n_channels, header.n_samples):
        raise LengthMismatchError(
            f"signals shape {signals.shape} does not match header "
            f"({header.n_channels}, {header.n_samples})"
        )
    info = np.iinfo(np.int16)
    files: Dict[str, bytes] = {}
    for file_name, indices in _channels_by_file(header).items():
        block = np.empty((header.n_samples, len(indices)), dtype="<i2")
        for column, i in enumerate(indices):
            ch = header.channels[i]
            adc = np.rint(signals[i] * ch.adc_gain + ch.baseline)
            block[:, column] = np.clip(adc, info.min, info.max).astype("<i2")
        files[file_name] = block.tobytes()
    return files


def load_annotations(manifest: str) -> List[IntervalAnnotation]:
    """Parse the interval annotation manifest.

    The manifest is CSV with a header row ``record,kind,start_sample,end_sample``.
    Intervals of the same record must not overlap.

    Args:
        manifest: CSV text.

    Returns:
    -------
        List[IntervalAnnotation]: Annotations in file order.

    Raises:
    ------
        AnnotationError: On missing columns, unknown kinds, inverted or
            overlapping intervals; the message names the offending row.
    """
    if not manifest.strip():
        return []
    frame = pd.read_csv(io.StringIO(manifest), dtype=str, skipinitialspace=True)
    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in ANNOTATION_COLUMNS if c not in frame.columns]
    if missing:
        raise AnnotationError(f"annotation manifest is missing columns: {missing}")

    annotations: List[IntervalAnnotation] = []
    rows: List[int] = []
    for position, row in enumerate(frame.itertuples(index=False), start=2):
        values = {c: getattr(row, c) for c in ANNOTATION_COLUMNS}
        if any(pd.isna(v) for v in values.values()):
            raise AnnotationError(f"row {position}: empty cell in {values}")
        try:
            annotations.append(
                IntervalAnnotation(
                    record_name=str(values["record"]).strip(),
                    kind=AnnotationKind(str(values["kind"]).strip().lower()),
                    start_sample=int(values["start_sample"]),
                    end_sample=int(values["end_sample"]),
                )
            )
        except (ValueError, ValidationError) as e:
            raise AnnotationError(f"row {position}: invalid interval {values}: {e}") from e
        rows.append(position)

    by_record: Dict[str, List[tuple]] = {}
    for annotation, position in zip(annotations, rows):
        by_record.setdefault(annotation.record_name, []).append((annotation, position))
    for entries in by_record.values():
        entries.sort(key=lambda item: item[0].start_sample)
        for (prev, prev_row), (cur, cur_row) in zip(entries, entries[1:]):
            if cur.start_sample < prev.end_sample:
                raise AnnotationError(
                    f"row {cur_row} overlaps row {prev_row} in record {cur.record_name}: "
                    f"[{cur.start_sample}, {cur.end_sample}) vs "
                    f"[{prev.start_sample}, {prev.end_sample})"
                )
    logger.debug(f"Loaded {len(annotations)} annotations for {len(by_record)} records")
    return annotations


def dump_annotations(annotations: List[IntervalAnnotation]) -> str:
    """Render annotations as manifest CSV text."""
    frame = pd.DataFrame(
        [
            {
                "record": a.record_name,
                "kind": a.kind.value,
                "start_sample": a.start_sample,
                "end_sample": a.end_sample,
            }
            for a in annotations
        ],
        columns=ANNOTATION_COLUMNS,
    )
    return frame.to_csv(index=False, lineterminator="\n")


def load_group_index(text: str) -> Dict[str, Group]:
    """Parse a ``record,group`` CSV index.

    Args:
        text: CSV text with at least the columns ``record`` and ``group``.

    Returns:
    -------
        Dict[str, Group]: Group per record name.
    """
    frame = pd.read_csv(io.StringIO(text), dtype=str, skipinitialspace=True)
    if not {"record", "group"}.issubset(frame.columns):
        raise AnnotationError("group index must have 'record' and 'group' columns")
    index: Dict[str, Group] = {}
    for position, row in enumerate(frame.itertuples(index=False), start=2):
        try:
            index[str(row.record).strip()] = Group(str(row.group).strip().lower())
        except ValueError as e:
            raise AnnotationError(f"row {position}: unknown group '{row.group}'") from e
    return index
