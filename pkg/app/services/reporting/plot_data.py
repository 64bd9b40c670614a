"""Gnuplot data for the signal-conditioning figures.

Two whitespace-delimited files describe one channel of one record: its Welch
PSD before and after band-pass filtering, and the log-eigenvalue spectrum of
the filtered channel's autocorrelation matrix with the subspace cut the KLT
jump rule picks.
"""

import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from app.core.config import PipelineConfig
from app.core.exceptions import EhgValidationError, ShapeError
from app.database.models.features import PowerSpectrum
from app.database.models.record import ChannelRole, Record
from app.database.models.signal import EigenBasis, SubspaceSelection
from app.services.features.spectral import welch_psd
from app.services.signal.filtering import apply_zero_phase, design_butterworth_bandpass
from app.services.signal.klt import (
    autocorrelation,
    relative_log_changes,
    select_signal_subspace,
    symmetric_eigen,
    toeplitz,
)
from app.services.signal.segmentation import is_prefiltered

logger = logging.getLogger(__name__)

PSD_PLOT_FILE = "psd.dat"
EIGEN_PLOT_FILE = "klt_eigenvalues.dat"


def _write_lines(lines, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def write_psd_plot_data(
    before: PowerSpectrum, after: PowerSpectrum, path: Union[str, Path], title: str = ""
) -> Path:
    """Write ``freq_hz psd_raw psd_filtered`` rows.

    Raises:
    ------
        ShapeError: If the two spectra do not share their frequency grid.
    """
    if before.freqs_hz.shape != after.freqs_hz.shape or not np.allclose(
        before.freqs_hz, after.freqs_hz
    ):
        raise ShapeError("spectra before and after filtering use different frequency grids")
    lines = [
        f"# Welch PSD before and after band-pass filtering{': ' + title if title else ''}",
        "# freq_hz psd_raw psd_filtered",
    ]
    lines += [
        f"{f:.6f} {p:.6e} {q:.6e}" for f, p, q in zip(before.freqs_hz, before.psd, after.psd)
    ]
    return _write_lines(lines, Path(path))


def write_eigenvalue_plot_data(
    basis: EigenBasis, selection: SubspaceSelection, path: Union[str, Path], title: str = ""
) -> Path:
    """Write ``index eigenvalue log_eigenvalue relative_change retained`` rows.

    The relative change of the first row is undefined and written as ``nan``;
    ``retained`` is 1 from the cut index onwards.
    """
    logs = selection.clamped_log_eigenvalues
    changes = np.concatenate([[np.nan], relative_log_changes(logs)])
    lines = [
        f"# KLT log-eigenvalue spectrum{': ' + title if title else ''}",
        f"# lag {basis.size} threshold {selection.threshold:g} "
        f"retain_from {selection.retain_from_index} retained {selection.n_retained}",
        "# index eigenvalue log_eigenvalue relative_change retained",
    ]
    for i, (value, log_value, change) in enumerate(zip(basis.eigenvalues, logs, changes), start=1):
        kept = int(i >= selection.retain_from_index)
        lines.append(f"{i} {value:.6e} {log_value:.6f} {change:.6f} {kept}")
    return _write_lines(lines, Path(path))


def pick_raw_channel(record: Record, marker: str, label: Optional[str] = None) -> int:
    """Index of the raw channel to plot: ``label`` if given, else the first raw EHG channel.

    Raises:
    ------
        EhgValidationError: If no such channel exists.
    """
    labels = record.header.channel_labels
    if label is not None:
        if label not in labels:
            raise EhgValidationError(f"{record.name}: no channel labelled '{label}' in {labels}")
        return labels.index(label)
    for i, (lab, role) in enumerate(zip(labels, record.channel_roles)):
        if role == ChannelRole.EHG and not is_prefiltered(lab, marker):
            return i
    raise EhgValidationError(f"{record.name}: no raw EHG channel to plot")


def conditioning_curves(
    record: Record, config: PipelineConfig, channel: Optional[str] = None
) -> Tuple[str, PowerSpectrum, PowerSpectrum, EigenBasis, SubspaceSelection]:
    """PSDs before and after filtering and the KLT spectrum of the filtered channel."""
    index = pick_raw_channel(record, config.dataset.prefiltered_marker, channel)
    raw = record.signals[index]
    filt = design_butterworth_bandpass(
        config.filter.order,
        config.filter.low_cut_hz,
        config.filter.high_cut_hz,
        record.sampling_rate_hz,
    )
    filtered = apply_zero_phase(filt, raw)
    psd_args = (record.sampling_rate_hz, config.psd.seg_len, config.psd.overlap)
    before, after = welch_psd(raw, *psd_args), welch_psd(filtered, *psd_args)

    centred = filtered - np.mean(filtered)
    basis = symmetric_eigen(toeplitz(autocorrelation(centred, config.klt.lag)))
    selection = select_signal_subspace(basis.eigenvalues, config.klt.jump_threshold)
    logger.debug(
        f"{record.name}/{record.header.channel_labels[index]}: "
        f"KLT keeps {selection.n_retained} of {basis.size}"
    )
    return record.header.channel_labels[index], before, after, basis, selection


def write_conditioning_plot_data(
    record: Record,
    config: PipelineConfig,
    directory: Union[str, Path],
    channel: Optional[str] = None,
) -> Dict[str, Path]:
    """Write the PSD and eigenvalue plot data of one record channel."""
    directory = Path(directory)
    label, before, after, basis, selection = conditioning_curves(record, config, channel)
    title = f"{record.name} {label}"
    return {
        "psd": write_psd_plot_data(before, after, directory / PSD_PLOT_FILE, title),
        "eigenvalues": write_eigenvalue_plot_data(
            basis, selection, directory / EIGEN_PLOT_FILE, title
        ),
    }
