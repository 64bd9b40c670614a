"""Evaluation result files.

Every CSV starts with a versioned ``#`` schema line. Floats are written with
``%.12g`` so equal reports produce byte-identical files.
"""

import io
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import pandas as pd

from app.core.exceptions import SchemaMismatchError
from app.database.models.evaluation import METRIC_NAMES, AblationCell, EvalReport

logger = logging.getLogger(__name__)

SUMMARY_SCHEMA = "# ehg-eval-summary v1"
CELLS_SCHEMA = "# ehg-eval-cells v1"
COMPARISON_SCHEMA = "# ehg-ablation-comparison v1"
FLOAT_FORMAT = "%.12g"

SUMMARY_FILE = "summary.csv"
CELLS_FILE = "cells.csv"
AUC_PLOT_FILE = "auc.dat"
REPORT_FILE = "report.json"
COMPARISON_FILE = "comparison.csv"


def _write_csv(frame: pd.DataFrame, schema: str, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO()
    buffer.write(schema + "\n")
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    path.write_text(buffer.getvalue(), encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def summary_frame(report: EvalReport) -> pd.DataFrame:
    """Mean and sd per (model, metric), in report order."""
    return pd.DataFrame(
        [(s.model, s.metric, s.mean, s.sd) for s in report.summaries],
        columns=["model", "metric", "mean", "sd"],
    )


def cells_frame(report: EvalReport) -> pd.DataFrame:
    """Long-format per-cell metric values."""
    rows = [
        (cell.iteration, cell.fold, cell.model, metric, value)
        for cell in report.cells
        for metric, value in cell.metrics.as_dict().items()
    ]
    return pd.DataFrame(rows, columns=["iteration", "fold", "model", "metric", "value"])


def write_summary_csv(report: EvalReport, path: Union[str, Path]) -> Path:
    """Write ``model,metric,mean,sd``."""
    return _write_csv(summary_frame(report), SUMMARY_SCHEMA, Path(path))


def write_cells_csv(report: EvalReport, path: Union[str, Path]) -> Path:
    """Write ``iteration,fold,model,metric,value``."""
    return _write_csv(cells_frame(report), CELLS_SCHEMA, Path(path))


def write_auc_plot_data(report: EvalReport, path: Union[str, Path]) -> Path:
    """Write per-model AUC mean and sd as whitespace-delimited gnuplot data."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        "# model-wise AUC over all iteration x fold cells",
        "# index model auc_mean auc_sd",
    ]
    index = 0
    for model in report.models:
        try:
            summary = report.summary_for(model, "auc")
        except KeyError:
            continue
        lines.append(f"{index} {model} {summary.mean:.6f} {summary.sd:.6f}")
        index += 1
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def write_report_json(report: EvalReport, path: Union[str, Path]) -> Path:
    """Write plan, summaries and notes as JSON; per-cell values live in the cells CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.model_dump_json(indent=2, exclude={"cells"}) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def read_report_json(path: Union[str, Path]) -> EvalReport:
    """Load a report written by ``write_report_json``.

    Raises:
    ------
        SchemaMismatchError: If the file is not a valid report.
    """
    path = Path(path)
    try:
        return EvalReport.model_validate_json(path.read_text(encoding="utf-8"))
    except ValueError as e:
        raise SchemaMismatchError(f"{path}: not an evaluation report ({e})") from e


def write_evaluation_outputs(report: EvalReport, directory: Union[str, Path]) -> Dict[str, Path]:
    """Write the summary CSV, cells CSV, AUC plot data and JSON report."""
    directory = Path(directory)
    return {
        "summary": write_summary_csv(report, directory / SUMMARY_FILE),
        "cells": write_cells_csv(report, directory / CELLS_FILE),
        "auc": write_auc_plot_data(report, directory / AUC_PLOT_FILE),
        "report": write_report_json(report, directory / REPORT_FILE),
    }


def comparison_frame(results: Sequence[Tuple[AblationCell, EvalReport]]) -> pd.DataFrame:
    """One row per (regime, klt, toco, model) with the mean of every metric."""
    rows: List[Dict[str, object]] = []
    for cell, report in results:
        for model in report.models:
            row: Dict[str, object] = {
                "regime": cell.segmentation.value,
                "klt": "on" if cell.klt_enabled else "off",
                "toco": "on" if cell.toco else "off",
                "model": model,
            }
            for metric in METRIC_NAMES:
                try:
                    row[metric] = report.summary_for(model, metric).mean
                except KeyError:
                    row[metric] = None
            rows.append(row)
    return pd.DataFrame(rows, columns=["regime", "klt", "toco", "model", *METRIC_NAMES])


def write_comparison_csv(
    results: Sequence[Tuple[AblationCell, EvalReport]], path: Union[str, Path]
) -> Path:
    """Write the merged ablation comparison."""
    return _write_csv(comparison_frame(results), COMPARISON_SCHEMA, Path(path))
