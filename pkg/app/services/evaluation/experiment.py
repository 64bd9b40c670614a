"""Repeated balanced, stratified cross-validation.

For every iteration a seed is derived from the master seed, the majority class
is subsampled to the minority size, the balanced rows are split into k
stratified folds, and every model is trained on k-1 folds and scored on the
remaining one. Subsampling and splitting happen before any fitting, and each
cell checks that no training row appears in the scored fold.
"""

import logging
from collections import Counter
from typing import Dict, List, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from app.core.exceptions import EhgError, ExperimentError, LeakageError
from app.database.models.evaluation import (
    METRIC_NAMES,
    CellResult,
    DatasetKind,
    EvalReport,
    ExperimentPlan,
    MetricSummary,
    SegmentationMode,
)
from app.database.models.learning import (
    CB_SUBSTITUTE_LABEL,
    LabeledDataset,
    ModelKind,
    ModelSpec,
)
from app.services.evaluation.metrics import evaluate_scores
from app.services.evaluation.sampling import balanced_subsample, derive_seed, stratified_kfold
from app.services.ml import classifiers

logger = logging.getLogger(__name__)

# sklearn estimators accept 32-bit seeds
_SEED_MASK = (1 << 32) - 1


def assert_disjoint(train: LabeledDataset, scored: LabeledDataset) -> None:
    """Raise if any provenance row is shared between training and scored rows.

    Raises:
    ------
        LeakageError: On overlap.
    """
    shared = set(train.provenance) & set(scored.provenance)
    if shared:
        example = sorted(shared, key=lambda p: (p.record_name, p.segment_index))[0]
        raise LeakageError(
            f"{len(shared)} row(s) used for both training and scoring, "
            f"e.g. {example.record_name}#{example.segment_index}"
        )


def _cell_seed(iteration_seed: int, fold: int) -> int:
    return derive_seed(iteration_seed, fold) & _SEED_MASK


def run_iteration(
    iteration: int,
    plan: ExperimentPlan,
    dataset: LabeledDataset,
    specs: Sequence[ModelSpec],
) -> Tuple[int, List[CellResult]]:
    """Run every fold and model of one iteration.

    Returns:
    -------
        Tuple[int, List[CellResult]]: Balanced row count and the cell results.

    Raises:
    ------
        ExperimentError: If any cell fails; wraps the cause with its coordinates.
    """
    iteration_seed = derive_seed(plan.master_seed, iteration)
    rng = np.random.default_rng(iteration_seed)
    balanced = dataset.subset(balanced_subsample(dataset.y, rng))
    groups = (
        [p.record_name for p in balanced.provenance] if plan.grouped_by_record else None
    )
    folds = stratified_kfold(balanced.y, plan.k_folds, rng, groups=groups)

    cells: List[CellResult] = []
    all_rows = np.arange(balanced.n_samples)
    for fold, eval_rows in enumerate(folds):
        train = balanced.subset(np.setdiff1d(all_rows, eval_rows))
        scored = balanced.subset(eval_rows)
        assert_disjoint(train, scored)
        seed = _cell_seed(iteration_seed, fold)
        for spec in specs:
            try:
                model = classifiers.fit(spec.model_copy(update={"seed": seed}), train)
                scores = classifiers.predict_scores(model, scored.X)
                result = evaluate_scores(scored.y, scores, model.score_threshold)
            except EhgError as e:
                raise ExperimentError(str(e), iteration, fold, spec.kind.value) from e
            cells.append(
                CellResult(iteration=iteration, fold=fold, model=spec.kind.value, metrics=result)
            )
    logger.info(
        f"Iteration {iteration + 1}/{plan.n_iterations}: {balanced.n_samples} rows, "
        f"{len(folds)} folds, {len(specs)} models"
    )
    return balanced.n_samples, cells


def summarize(cells: Sequence[CellResult], models: Sequence[str]) -> List[MetricSummary]:
    """Mean, population sd, min and max of every metric over all cells of each model."""
    summaries: List[MetricSummary] = []
    for model in models:
        model_cells = [c for c in cells if c.model == model]
        for metric in METRIC_NAMES:
            values = np.array(
                [
                    c.metrics.as_dict()[metric]
                    for c in model_cells
                    if metric in c.metrics.as_dict()
                ]
            )
            if values.size == 0:
                continue
            summaries.append(
                MetricSummary(
                    model=model,
                    metric=metric,
                    mean=float(np.mean(values)),
                    sd=float(np.std(values)),
                    minimum=float(np.min(values)),
                    maximum=float(np.max(values)),
                )
            )
    return summaries


def _with_cb_substitute(summaries: List[MetricSummary]) -> List[MetricSummary]:
    duplicated = [
        s.model_copy(update={"model": CB_SUBSTITUTE_LABEL})
        for s in summaries
        if s.model == ModelKind.GB.value
    ]
    return summaries + duplicated


def _notes(plan: ExperimentPlan, balanced_rows: int, models: Sequence[str]) -> List[str]:
    notes = []
    if plan.dataset_kind == DatasetKind.TPEHG and plan.segmentation == SegmentationMode.FIXED:
        notes.append(
            f"Balanced fixed-window TPEHG corpus has {balanced_rows} rows. The published "
            f"count of 720 conflicts with its own 380 + 380 per-class figures; the balanced "
            f"rule (twice the minority count) is followed."
        )
    if CB_SUBSTITUTE_LABEL in models:
        notes.append(f"{CB_SUBSTITUTE_LABEL} repeats the GB results; CatBoost itself is not run.")
    if plan.grouped_by_record:
        notes.append("Folds are grouped by record; no record contributes to both sides of a split.")
    return notes


def run_experiment(
    plan: ExperimentPlan,
    dataset: LabeledDataset,
    specs: Sequence[ModelSpec],
    jobs: int = 1,
) -> EvalReport:
    """Run the repeated cross-validation protocol.

    Args:
        plan: Iterations, folds, master seed and regime echo.
        dataset: Feature rows of the regime under test.
        specs: Models to evaluate.
        jobs: Iterations evaluated concurrently.

    Returns:
    -------
        EvalReport: Per-model summaries over all iteration x fold cells, plus
        the raw cells sorted by (iteration, fold, model).

    Raises:
    ------
        ExperimentError: If any cell fails.
    """
    if not specs:
        raise ValueError("at least one model is required")
    counts = Counter(int(v) for v in dataset.y)
    logger.info(
        f"Running {plan.n_iterations} x {plan.k_folds}-fold evaluation of "
        f"{len(specs)} model(s) on {dataset.n_samples} rows "
        f"({counts.get(1, 0)} preterm, {counts.get(0, 0)} term)"
    )

    results = Parallel(n_jobs=jobs)(
        delayed(run_iteration)(i, plan, dataset, specs) for i in range(plan.n_iterations)
    )
    balanced_rows = results[0][0]
    order: Dict[str, int] = {spec.kind.value: i for i, spec in enumerate(specs)}
    cells = sorted(
        (cell for _, iteration_cells in results for cell in iteration_cells),
        key=lambda c: (c.iteration, c.fold, order[c.model]),
    )
    models = [spec.kind.value for spec in specs]
    summaries = summarize(cells, models)
    if ModelKind.GB.value in models:
        summaries = _with_cb_substitute(summaries)
        models = models + [CB_SUBSTITUTE_LABEL]

    return EvalReport(
        plan=plan,
        models=models,
        summaries=summaries,
        cells=cells,
        balanced_rows=balanced_rows,
        class_counts={"preterm": counts.get(1, 0), "term": counts.get(0, 0)},
        notes=_notes(plan, balanced_rows, models),
    )
