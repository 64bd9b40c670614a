"""Markdown results document.

This module provides the ResultsDocumentGenerator class, which collects
evaluation reports from one or more output directories and renders them,
together with the deviation from the published benchmark figures, into a
single markdown document through a Jinja2 template.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from app.core.exceptions import EhgValidationError
from app.database.models.evaluation import METRIC_NAMES, EvalReport
from app.services.reporting.benchmarks import compare, targets_for
from app.services.reporting.writers import REPORT_FILE, read_report_json

logger = logging.getLogger(__name__)

DEFAULT_TEMPLATE_DIR = Path(__file__).resolve().parents[2] / "templates"
DEFAULT_TEMPLATE = "results.md.j2"
RESULTS_FILE = "RESULTS.md"


class ResultsDocumentGenerator:
    """Render evaluation reports into a markdown results document.

    Attributes:
    ----------
        template_dir (Path): Directory containing the Jinja2 templates.
        env (jinja2.Environment): Environment with the number-formatting filters.
    """

    def __init__(self, template_dir: Optional[Union[str, Path]] = None):
        """Initialize the generator.

        Args:
            template_dir: Template directory; defaults to the packaged templates.
        """
        self.template_dir = Path(template_dir) if template_dir else DEFAULT_TEMPLATE_DIR
        self.env = None
        self.setup_jinja_environment()

    def setup_jinja_environment(self) -> None:
        """Set up the Jinja2 environment and register the formatting filters."""
        self.env = Environment(
            loader=FileSystemLoader(str(self.template_dir)),
            autoescape=False,
            undefined=StrictUndefined,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
        )
        self.env.filters["pct"] = self.format_percent_sd
        self.env.filters["auc"] = self.format_auc_sd
        self.env.filters["pct_plain"] = lambda v: f"{100 * v:.2f}"
        self.env.filters["auc_plain"] = lambda v: f"{v:.4f}"
        self.env.filters["points"] = lambda v: f"{100 * v:.0f} points / {v:.2f} AUC"
        self.env.filters["signed_points"] = lambda v: f"{100 * v:+.2f}"
        self.env.filters["signed_auc"] = lambda v: f"{v:+.4f}"

    @staticmethod
    def format_percent_sd(value: Optional[Dict[str, float]]) -> str:
        """Format a ``{mean, sd}`` fraction pair as ``94.00 (1.23)``."""
        if value is None:
            return "n/a"
        return f"{100 * value['mean']:.2f} ({100 * value['sd']:.2f})"

    @staticmethod
    def format_auc_sd(value: Optional[Dict[str, float]]) -> str:
        """Format an AUC ``{mean, sd}`` pair as ``0.9746 (0.0123)``."""
        if value is None:
            return "n/a"
        return f"{value['mean']:.4f} ({value['sd']:.4f})"

    @staticmethod
    def find_reports(directories: Sequence[Union[str, Path]]) -> List[Path]:
        """Report files under the given directories, searched recursively.

        Raises:
        ------
            EhgValidationError: If no report is found.
        """
        found: List[Path] = []
        for directory in directories:
            directory = Path(directory)
            if directory.is_file():
                found.append(directory)
                continue
            found.extend(sorted(directory.rglob(REPORT_FILE)))
        if not found:
            raise EhgValidationError(
                f"no {REPORT_FILE} found under {[str(d) for d in directories]}"
            )
        return found

    def build_section(self, report: EvalReport, source: Path) -> Dict[str, Any]:
        """Template context for one report."""
        rows = []
        for model in report.models:
            row: Dict[str, Any] = {"model": model}
            for metric in METRIC_NAMES:
                try:
                    summary = report.summary_for(model, metric)
                    row[metric] = {"mean": summary.mean, "sd": summary.sd}
                except KeyError:
                    row[metric] = None
            rows.append(row)

        benchmark = targets_for(report.plan)
        deviations = []
        if benchmark is not None:
            by_model: Dict[str, Dict[str, Any]] = {}
            for comparison in compare(report, benchmark):
                if comparison.metric in ("accuracy", "auc"):
                    by_model.setdefault(comparison.model, {})[comparison.metric] = comparison
            for model in report.models:
                entry = by_model.get(model, {})
                if "accuracy" in entry and "auc" in entry:
                    deviations.append(
                        {
                            "model": model,
                            "accuracy": entry["accuracy"],
                            "auc": entry["auc"],
                            "within": entry["accuracy"].within_tolerance
                            and entry["auc"].within_tolerance,
                        }
                    )

        title = benchmark.title if benchmark is not None else self._regime_title(report)
        return {
            "title": title,
            "source": str(source),
            "plan": report.plan,
            "class_counts": report.class_counts,
            "balanced_rows": report.balanced_rows,
            "rows": rows,
            "benchmark": benchmark,
            "deviations": deviations,
            "notes": report.notes,
        }

    @staticmethod
    def _regime_title(report: EvalReport) -> str:
        plan = report.plan
        klt = "with KLT" if plan.klt_enabled else "without KLT"
        return (
            f"{plan.dataset_kind.value}, {plan.segmentation.value} segmentation, "
            f"{plan.channel_set.value}, {klt}"
        )

    def render(
        self,
        directories: Sequence[Union[str, Path]],
        template_name: str = DEFAULT_TEMPLATE,
    ) -> str:
        """Render the document for every report found under ``directories``."""
        sections = [
            self.build_section(read_report_json(path), path)
            for path in self.find_reports(directories)
        ]
        template = self.env.get_template(template_name)
        return template.render(sections=sections)

    def generate(
        self,
        directories: Sequence[Union[str, Path]],
        output_dir: Union[str, Path],
        template_name: str = DEFAULT_TEMPLATE,
    ) -> Path:
        """Render and write ``RESULTS.md`` into ``output_dir``."""
        content = self.render(directories, template_name)
        output = Path(output_dir) / RESULTS_FILE
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(content, encoding="utf-8")
        logger.info(f"Wrote results document to {output}")
        return output
