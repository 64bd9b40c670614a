"""Trained-model container.

Layout: the magic bytes ``EHGM1``, one byte giving the length of the ASCII
kind tag, the tag itself, then a joblib payload holding the estimator and the
``TrainedModel`` metadata.
"""

import io
import logging
from pathlib import Path
from typing import Optional, Union

import joblib

from app.core.exceptions import SchemaMismatchError
from app.database.models.learning import ModelKind, TrainedModel

logger = logging.getLogger(__name__)

MAGIC = b"EHGM1"


def dumps_model(model: TrainedModel) -> bytes:
    """Serialize a trained model to the container format."""
    tag = model.kind.value.encode("ascii")
    buffer = io.BytesIO()
    joblib.dump(
        {
            "kind": model.kind.value,
            "estimator": model.estimator,
            "n_features": model.n_features,
            "score_threshold": model.score_threshold,
            "feature_standardization": model.feature_standardization,
            "prior_only": model.prior_only,
        },
        buffer,
    )
    return MAGIC + bytes([len(tag)]) + tag + buffer.getvalue()


def loads_model(data: bytes, expected_kind: Optional[ModelKind] = None) -> TrainedModel:
    """Deserialize a container produced by ``dumps_model``.

    Raises:
    ------
        SchemaMismatchError: On a bad magic, a kind mismatch or a corrupt payload.
    """
    if not data.startswith(MAGIC) or len(data) < len(MAGIC) + 1:
        raise SchemaMismatchError("not a model container (bad magic)")
    tag_length = data[len(MAGIC)]
    tag_end = len(MAGIC) + 1 + tag_length
    try:
        kind = ModelKind(data[len(MAGIC) + 1 : tag_end].decode("ascii"))
    except (UnicodeDecodeError, ValueError) as e:
        raise SchemaMismatchError(f"unknown model kind tag: {e}") from e
    if expected_kind is not None and kind != expected_kind:
        raise SchemaMismatchError(f"container holds {kind.value}, expected {expected_kind.value}")

    try:
        payload = joblib.load(io.BytesIO(data[tag_end:]))
    except Exception as e:
        raise SchemaMismatchError(f"corrupt model payload: {e}") from e
    if payload.get("kind") != kind.value:
        raise SchemaMismatchError("kind tag disagrees with the payload")
    return TrainedModel(
        kind=kind,
        estimator=payload["estimator"],
        n_features=payload["n_features"],
        score_threshold=payload["score_threshold"],
        feature_standardization=payload["feature_standardization"],
        prior_only=payload["prior_only"],
    )


def save_model(model: TrainedModel, path: Union[str, Path]) -> Path:
    """Write a model container to disk."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps_model(model))
    logger.info(f"Saved {model.kind.value} model to {path}")
    return path


def load_model(path: Union[str, Path], expected_kind: Optional[ModelKind] = None) -> TrainedModel:
    """Read a model container from disk."""
    return loads_model(Path(path).read_bytes(), expected_kind)
