"""Seed derivation, balanced subsampling and stratified folds."""

import logging
from typing import List, Optional, Sequence

import numpy as np
from sklearn.model_selection import StratifiedGroupKFold, StratifiedKFold

from app.core.exceptions import DomainError

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Per-iteration seed from the master seed (splitmix64 finalizer).

    ``seed_i = mix(master_seed + (i + 1) * 0x9E3779B97F4A7C15 mod 2^64)``, so
    any implementation of splitmix64 reproduces the stream.
    """
    return _mix64((master_seed + (index + 1) * _GOLDEN_GAMMA) & _MASK64)


def balanced_subsample(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """All minority-class rows plus an equal-size uniform draw of the majority.

    Args:
        labels: Binary labels.
        rng: Random generator.

    Returns:
    -------
        np.ndarray: Sorted row indices with equal class counts.

    Raises:
    ------
        DomainError: If either class is empty.
    """
    labels = np.asarray(labels).ravel()
    positives = np.flatnonzero(labels == 1)
    negatives = np.flatnonzero(labels == 0)
    if positives.size == 0 or negatives.size == 0:
        raise DomainError("balanced subsampling needs both classes")
    if positives.size == negatives.size:
        return np.sort(np.concatenate([positives, negatives]))

    minority, majority = sorted((positives, negatives), key=lambda rows: rows.size)
    drawn = rng.choice(majority, size=minority.size, replace=False)
    return np.sort(np.concatenate([minority, drawn]))


def stratified_kfold(
    labels: np.ndarray,
    k: int,
    rng: np.random.Generator,
    groups: Optional[Sequence[str]] = None,
) -> List[np.ndarray]:
    """Partition rows into ``k`` class-stratified evaluation folds.

    With ``groups`` every group lands in a single fold (record-level folds).

    Returns:
    -------
        List[np.ndarray]: Sorted evaluation indices per fold.

    Raises:
    ------
        DomainError: If a class has fewer than ``k`` members.
    """
    labels = np.asarray(labels).ravel()
    if k < 2:
        raise DomainError(f"k must be at least 2, got {k}")
    counts = np.bincount(labels.astype(int), minlength=2)
    if np.any(counts < k):
        raise DomainError(f"each class needs at least {k} rows, got {counts.tolist()}")

    random_state = int(rng.integers(0, 2**32 - 1))
    placeholder = np.zeros((labels.shape[0], 1))
    if groups is None:
        splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=random_state)
        splits = splitter.split(placeholder, labels)
    else:
        splitter = StratifiedGroupKFold(n_splits=k, shuffle=True, random_state=random_state)
        splits = splitter.split(placeholder, labels, groups=np.asarray(groups))
    return [np.sort(eval_rows) for _, eval_rows in splits]
