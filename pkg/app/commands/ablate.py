"""``ablate``: extract and evaluate several regimes in one invocation."""

import argparse
import logging
from pathlib import Path
from typing import List, Tuple

from app.commands.evaluate import evaluate_file
from app.commands.features import FEATURES_FILE, extract_to
from app.core.config import PipelineConfig
from app.database.models.evaluation import (
    AblationCell,
    ChannelSet,
    DatasetKind,
    EvalReport,
    SegmentationMode,
)
from app.services.reporting.writers import COMPARISON_FILE, write_comparison_csv

logger = logging.getLogger(__name__)

NAME = "ablate"
HELP = "run the KLT x TOCO grid (or the benchmark regimes) and merge the results"
NEEDS_DATASET = True


def add_arguments(parser: argparse.ArgumentParser) -> None:
    """Add ``--preset``."""
    parser.add_argument(
        "--preset",
        choices=["grid", "benchmark"],
        default=None,
        help="override ablation.preset",
    )


def grid_cells(config: PipelineConfig) -> List[AblationCell]:
    """KLT x TOCO product for the configured segmentation, restricted by ``[ablation]``."""
    mode = config.segmentation.mode
    return [
        AblationCell(segmentation=mode, klt_enabled=klt == "on", toco=toco == "on")
        for klt in config.ablation.klt
        for toco in config.ablation.toco
    ]


def benchmark_cells(config: PipelineConfig) -> List[AblationCell]:
    """The regimes with published figures for the configured database."""
    if config.dataset.kind == DatasetKind.TPEHG:
        return [AblationCell(segmentation=SegmentationMode.FIXED, klt_enabled=True, toco=False)]
    toco = config.channels.set == ChannelSet.EHG_PLUS_TOCO
    return [
        AblationCell(segmentation=SegmentationMode.ANNOTATED, klt_enabled=False, toco=toco),
        AblationCell(segmentation=SegmentationMode.ANNOTATED, klt_enabled=True, toco=toco),
        AblationCell(segmentation=SegmentationMode.FIXED, klt_enabled=True, toco=True),
        AblationCell(segmentation=SegmentationMode.FIXED, klt_enabled=True, toco=False),
    ]


def cell_config(config: PipelineConfig, cell: AblationCell, out_dir: Path) -> PipelineConfig:
    """The configuration of one regime, writing into its own subdirectory."""
    return config.model_copy(
        update={
            "segmentation": config.segmentation.model_copy(update={"mode": cell.segmentation}),
            "klt": config.klt.model_copy(update={"enabled": cell.klt_enabled}),
            "channels": config.channels.model_copy(update={"set": cell.channel_set}),
            "output": config.output.model_copy(update={"directory": out_dir}),
        }
    )


def run(args: argparse.Namespace, config: PipelineConfig) -> int:
    """Evaluate every regime and write ``comparison.csv``."""
    preset = args.preset or config.ablation.preset
    cells = grid_cells(config) if preset == "grid" else benchmark_cells(config)
    out_root = Path(config.output.directory)
    logger.info(f"Ablation preset '{preset}': {len(cells)} regime(s)")

    results: List[Tuple[AblationCell, EvalReport]] = []
    for index, cell in enumerate(cells, start=1):
        cell_dir = out_root / cell.label
        variant = cell_config(config, cell, cell_dir)
        logger.info(f"[{index}/{len(cells)}] {cell.label}")
        extract_to(variant, cell_dir)
        report = evaluate_file(variant, cell_dir / FEATURES_FILE, cell_dir)
        results.append((cell, report))

    path = write_comparison_csv(results, out_root / COMPARISON_FILE)
    print(f"ablation over {len(cells)} regime(s) -> {path}")
    return 0
