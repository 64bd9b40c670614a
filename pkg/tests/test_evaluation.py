import pickle
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.core.exceptions import (
    DomainError,
    ExperimentError,
    LeakageError,
    ShapeError,
    UndefinedMetricError,
)
from app.database.models.evaluation import (
    ConfusionCounts,
    DatasetKind,
    ExperimentPlan,
    SegmentationMode,
)
from app.database.models.learning import CB_SUBSTITUTE_LABEL, ModelKind, ModelSpec
from app.services.evaluation.experiment import assert_disjoint, run_experiment
from app.services.evaluation.metrics import confusion, evaluate_scores, metrics, roc_auc
from app.services.evaluation.sampling import balanced_subsample, derive_seed, stratified_kfold
from tests.conftest import blob_dataset, dataset_from


class TestConfusion:
    def test_counts(self):
        c = confusion(np.array([1, 1, 1, 1, 1, 0, 0, 0]), np.array([1, 1, 1, 0, 0, 0, 0, 1]))
        assert (c.tp, c.tn, c.fp, c.fn) == (3, 2, 1, 2)

    def test_all_correct(self):
        c = confusion(np.array([1, 0, 1]), np.array([1, 0, 1]))
        assert (c.tp, c.tn, c.fp, c.fn) == (2, 1, 0, 0)

    def test_empty(self):
        assert confusion(np.array([], dtype=int), np.array([], dtype=int)).total == 0

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            confusion(np.array([1, 0]), np.array([1]))

    def test_non_binary(self):
        with pytest.raises(DomainError):
            confusion(np.array([1, 2]), np.array([1, 0]))


class TestMetrics:
    def test_reference_counts(self):
        m = metrics(ConfusionCounts(tp=3, tn=2, fp=1, fn=2))
        assert m.accuracy == pytest.approx(0.625)
        assert m.precision == pytest.approx(0.75)
        assert m.recall == pytest.approx(0.6)
        assert m.f1 == pytest.approx(2 / 3)
        assert m.auc is None

    def test_no_positive_predictions(self):
        m = metrics(ConfusionCounts(tp=0, tn=5, fp=0, fn=5))
        assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)
        assert m.accuracy == 0.5

    def test_needs_samples(self):
        with pytest.raises(DomainError):
            metrics(ConfusionCounts(tp=0, tn=0, fp=0, fn=0))

    def test_evaluate_scores_uses_threshold(self):
        result = evaluate_scores(np.array([0, 0, 1, 1]), np.array([-1.0, 0.5, 0.2, 2.0]), 0.0)
        assert result.accuracy == 0.75
        assert result.auc == pytest.approx(0.75)


def pairwise_auc(scores, labels):
    positives = scores[labels == 1]
    negatives = scores[labels == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in product(positives, negatives))
    return wins / (positives.size * negatives.size)


class TestRocAuc:
    @pytest.mark.parametrize(
        "scores, labels, expected",
        [
            ([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1], 1.0),
            ([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1], 0.0),
            ([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1], 0.5),
            ([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1], 0.75),
        ],
    )
    def test_examples(self, scores, labels, expected):
        assert roc_auc(np.array(scores), np.array(labels)) == pytest.approx(expected)

    def test_single_class(self):
        with pytest.raises(UndefinedMetricError):
            roc_auc(np.array([0.1, 0.2]), np.array([1, 1]))

    @given(
        st.lists(
            st.tuples(st.integers(0, 5).map(float), st.integers(0, 1)), min_size=2, max_size=40
        )
    )
    @settings(max_examples=200)
    def test_matches_pairwise_count(self, pairs):
        scores = np.array([s for s, _ in pairs])
        labels = np.array([label for _, label in pairs])
        if np.unique(labels).size < 2:
            return
        assert roc_auc(scores, labels) == pytest.approx(pairwise_auc(scores, labels), abs=1e-12)


class TestSampling:
    def test_derive_seed_is_stable_and_spread(self):
        seeds = [derive_seed(0, i) for i in range(100)]
        assert seeds == [derive_seed(0, i) for i in range(100)]
        assert len(set(seeds)) == 100
        assert all(0 <= s < 2**64 for s in seeds)
        assert derive_seed(1, 0) != derive_seed(0, 0)

    def test_balanced_subsample(self):
        labels = np.array([1] * 94 + [0] * 106)
        rows = balanced_subsample(labels, np.random.default_rng(0))
        assert rows.size == 188
        assert np.sum(labels[rows] == 1) == 94
        assert np.all(np.diff(rows) > 0)
        assert set(np.flatnonzero(labels == 1)) <= set(rows)

    def test_balanced_input_is_kept_whole(self):
        labels = np.array([0, 1] * 5)
        np.testing.assert_array_equal(balanced_subsample(labels, np.random.default_rng(0)), np.arange(10))

    def test_single_class(self):
        with pytest.raises(DomainError):
            balanced_subsample(np.ones(5), np.random.default_rng(0))

    def test_smallest_folds(self):
        labels = np.array([1] * 5 + [0] * 5)
        folds = stratified_kfold(labels, 5, np.random.default_rng(0))
        assert all(np.bincount(labels[f], minlength=2).tolist() == [1, 1] for f in folds)

    def test_fold_sizes(self):
        labels = np.array([1] * 94 + [0] * 94)
        folds = stratified_kfold(labels, 5, np.random.default_rng(3))
        assert sorted(len(f) for f in folds) == [37, 37, 38, 38, 38]

    @given(st.integers(5, 40), st.integers(5, 40), st.integers(2, 5), st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_folds_partition_the_rows(self, n_pos, n_neg, k, seed):
        labels = np.array([1] * n_pos + [0] * n_neg)
        folds = stratified_kfold(labels, k, np.random.default_rng(seed))
        assert len(folds) == k
        np.testing.assert_array_equal(np.sort(np.concatenate(folds)), np.arange(labels.size))
        for fold in folds:
            assert abs(np.sum(labels[fold] == 1) - n_pos / k) < 1

    def test_too_few_rows(self):
        with pytest.raises(DomainError):
            stratified_kfold(np.array([1, 1, 0, 0, 0]), 3, np.random.default_rng(0))

    def test_grouped_folds_keep_records_together(self):
        labels = np.array([1] * 30 + [0] * 30)
        groups = [f"r{i // 3}" for i in range(60)]
        folds = stratified_kfold(labels, 5, np.random.default_rng(0), groups=groups)
        owners = {}
        for index, fold in enumerate(folds):
            for row in fold:
                assert owners.setdefault(groups[row], index) == index


def fast_specs(*kinds):
    params = {ModelKind.GB: {"n_estimators": 10}}
    return [ModelSpec(kind=k, hyperparameters=params.get(k, {})) for k in kinds]


class TestExperiment:
    def test_every_cell_is_reported(self):
        plan = ExperimentPlan(n_iterations=20, k_folds=5)
        report = run_experiment(plan, blob_dataset(n_per_class=20, separation=2.0), fast_specs(ModelKind.LR))
        assert len(report.cells) == 100
        assert report.balanced_rows == 40
        assert [(c.iteration, c.fold) for c in report.cells[:6]] == [
            (0, 0), (0, 1), (0, 2), (0, 3), (0, 4), (1, 0),
        ]
        summary = report.summary_for("LR", "auc")
        assert summary.minimum <= summary.mean <= summary.maximum

    def test_same_seed_same_report(self):
        plan = ExperimentPlan(n_iterations=3, k_folds=3, master_seed=11)
        data = blob_dataset(n_per_class=25, separation=1.0)
        specs = fast_specs(ModelKind.DT, ModelKind.RF)
        first = run_experiment(plan, data, specs)
        second = run_experiment(plan, data, specs, jobs=2)
        assert first.model_dump() == second.model_dump()

    def test_imbalanced_input_is_balanced(self):
        data = dataset_from(np.random.default_rng(0).standard_normal((50, 2)), [1] * 15 + [0] * 35)
        report = run_experiment(ExperimentPlan(n_iterations=2, k_folds=3), data, fast_specs(ModelKind.LR))
        assert report.balanced_rows == 30
        assert report.class_counts == {"preterm": 15, "term": 35}

    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_random_labels_score_near_chance(self, kind):
        rng = np.random.default_rng(5)
        data = dataset_from(rng.standard_normal((200, 4)), rng.permutation([0, 1] * 100))
        report = run_experiment(ExperimentPlan(n_iterations=5, k_folds=5), data, fast_specs(kind))
        assert 0.4 <= report.summary_for(kind.value, "auc").mean <= 0.6

    def test_gradient_boosting_is_repeated_as_substitute(self):
        report = run_experiment(ExperimentPlan(n_iterations=2, k_folds=3), blob_dataset(), fast_specs(ModelKind.GB))
        assert report.models == ["GB", CB_SUBSTITUTE_LABEL]
        assert report.summary_for(CB_SUBSTITUTE_LABEL, "f1").mean == report.summary_for("GB", "f1").mean
        assert any(CB_SUBSTITUTE_LABEL in note for note in report.notes)

    def test_fixed_window_tpehg_note(self):
        plan = ExperimentPlan(
            n_iterations=1, k_folds=2, dataset_kind=DatasetKind.TPEHG, segmentation=SegmentationMode.FIXED
        )
        report = run_experiment(plan, blob_dataset(n_per_class=10), fast_specs(ModelKind.LR))
        assert any("720" in note for note in report.notes)

    def test_failing_cell_carries_its_coordinates(self):
        # two rows per class leave a single training row of each class per fold
        data = dataset_from(np.random.default_rng(0).standard_normal((4, 2)), [1, 1, 0, 0])
        with pytest.raises(ExperimentError) as caught:
            run_experiment(ExperimentPlan(n_iterations=1, k_folds=2), data, fast_specs(ModelKind.QDA))
        error = caught.value
        assert (error.iteration, error.fold, error.model) == (0, 0, "QDA")
        restored = pickle.loads(pickle.dumps(error))
        assert (restored.iteration, restored.model) == (0, "QDA")

    def test_overlap_is_detected(self):
        data = blob_dataset(n_per_class=5)
        with pytest.raises(LeakageError):
            assert_disjoint(data.subset(np.arange(6)), data.subset(np.arange(5, 10)))
        assert_disjoint(data.subset(np.arange(5)), data.subset(np.arange(5, 10)))
