"""Shared fixtures: synthetic WFDB records and small labeled datasets."""

from pathlib import Path
from typing import List, Sequence

import numpy as np
import pytest

from app.core.config import build_config
from app.database.models.learning import LabeledDataset, Provenance
from app.database.models.record import ChannelSpec, RecordHeader
from app.database.repositories.record_repository import RecordRepository

FS = 20.0
LABELS = ("EHG1", "EHG2", "EHG3", "TOCO")


def make_header(
    name: str,
    n_samples: int,
    labels: Sequence[str] = LABELS,
    comments: Sequence[str] = (),
    fs: float = FS,
) -> RecordHeader:
    """Header of a record stored in one format-16 file."""
    return RecordHeader(
        record_name=name,
        n_channels=len(labels),
        sampling_rate_hz=fs,
        n_samples=n_samples,
        channels=[
            ChannelSpec(file_name=f"{name}.dat", storage_format=16, channel_label=label)
            for label in labels
        ],
        comments=list(comments),
    )


def synthetic_signals(preterm: bool, n_channels: int, n_samples: int, seed: int) -> np.ndarray:
    """Noisy sinusoids whose frequency and amplitude depend on the class."""
    rng = np.random.default_rng(seed)
    t = np.arange(n_samples) / FS
    freq = 0.6 if preterm else 1.6
    amplitude = 1.5 if preterm else 0.8
    rows = []
    for channel in range(n_channels):
        phase = rng.uniform(0, 2 * np.pi)
        clean = amplitude * np.sin(2 * np.pi * (freq + 0.05 * channel) * t + phase)
        rows.append(clean + 0.2 * rng.standard_normal(n_samples))
    return np.vstack(rows)


def write_dataset(
    root: Path,
    n_per_class: int = 6,
    n_samples: int = 4000,
    labels: Sequence[str] = LABELS,
    annotations: bool = True,
) -> List[str]:
    """Write preterm (p*) and term (t*) records plus an annotation manifest."""
    repository = RecordRepository(root)
    root.mkdir(parents=True, exist_ok=True)
    names = []
    manifest = ["record,kind,start_sample,end_sample"]
    for i in range(2 * n_per_class):
        preterm = i < n_per_class
        name = f"{'p' if preterm else 't'}{i:03d}"
        gestation = 33.0 if preterm else 39.5
        header = make_header(name, n_samples, labels, comments=[f"Gestation {gestation}"])
        repository.save_record(header, synthetic_signals(preterm, len(labels), n_samples, seed=i))
        manifest.append(f"{name},contraction,100,1300")
        manifest.append(f"{name},dummy,1500,2700")
        names.append(name)
    if annotations:
        repository.write_text("annotations.csv", "\n".join(manifest) + "\n")
    return names


@pytest.fixture
def dataset_dir(tmp_path: Path) -> Path:
    """Twelve four-channel records, half preterm, with two intervals each."""
    root = tmp_path / "data"
    write_dataset(root)
    return root


@pytest.fixture
def fast_config(dataset_dir: Path, tmp_path: Path):
    """Configuration small enough for end-to-end runs in tests."""
    return build_config(
        {
            "dataset": {"root": str(dataset_dir), "use_prefiltered": "false"},
            "segmentation": {"mode": "fixed", "window_seconds": "60"},
            "evaluation": {"iterations": "2", "folds": "3"},
            "models": {
                "kinds": "QDA,LR,DT,GB",
                "gb": {"n_estimators": "10"},
            },
            "output": {"directory": str(tmp_path / "out"), "jobs": "1"},
        }
    )


def blob_dataset(
    n_per_class: int = 40, n_features: int = 3, separation: float = 4.0, seed: int = 0
) -> LabeledDataset:
    """Two Gaussian blobs, class 1 shifted by ``separation`` on every feature."""
    rng = np.random.default_rng(seed)
    X0 = rng.standard_normal((n_per_class, n_features))
    X1 = rng.standard_normal((n_per_class, n_features)) + separation
    X = np.vstack([X0, X1])
    y = np.array([0] * n_per_class + [1] * n_per_class)
    provenance = [Provenance(record_name=f"r{i:03d}", segment_index=0) for i in range(len(y))]
    return LabeledDataset(X=X, y=y, provenance=provenance)


def dataset_from(X: np.ndarray, y: Sequence[int]) -> LabeledDataset:
    """Wrap arrays in a dataset with unique provenance."""
    y = np.asarray(y, dtype=np.int64)
    return LabeledDataset(
        X=np.asarray(X, dtype=np.float64),
        y=y,
        provenance=[Provenance(record_name=f"r{i:03d}", segment_index=0) for i in range(len(y))],
    )
