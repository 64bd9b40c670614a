"""Helpers shared by the CLI verbs."""

import logging
from pathlib import Path
from typing import List

from app.core.config import PipelineConfig
from app.database.models.learning import ModelSpec

logger = logging.getLogger(__name__)

CONFIG_ECHO_FILE = "config.ini"


def model_specs(config: PipelineConfig) -> List[ModelSpec]:
    """One spec per configured model kind, in configuration order."""
    return [
        ModelSpec(
            kind=kind,
            hyperparameters=config.models.hyperparameters(kind),
            seed=config.evaluation.master_seed,
        )
        for kind in config.models.kinds
    ]


def write_config_echo(config: PipelineConfig, directory: Path) -> Path:
    """Store the effective configuration next to the outputs it produced."""
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / CONFIG_ECHO_FILE
    path.write_text(config.to_ini(), encoding="utf-8")
    logger.debug(f"Wrote effective configuration to {path}")
    return path
