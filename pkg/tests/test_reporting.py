import numpy as np
import pytest

from app.core.exceptions import EhgValidationError, SchemaMismatchError, ShapeError
from app.database.models.evaluation import (
    AblationCell,
    CellResult,
    ChannelSet,
    DatasetKind,
    EvalReport,
    ExperimentPlan,
    MetricSet,
    MetricSummary,
    SegmentationMode,
)
from app.database.models.learning import CB_SUBSTITUTE_LABEL
from app.database.models.signal import EigenBasis
from app.database.repositories.record_repository import RecordRepository
from app.services.features.spectral import welch_psd
from app.services.reporting.benchmarks import BENCHMARK_TARGETS, ComparisonRow, compare, targets_for
from app.services.reporting.plot_data import (
    EIGEN_PLOT_FILE,
    PSD_PLOT_FILE,
    conditioning_curves,
    pick_raw_channel,
    write_conditioning_plot_data,
    write_eigenvalue_plot_data,
    write_psd_plot_data,
)
from app.services.reporting.results_document import RESULTS_FILE, ResultsDocumentGenerator
from app.services.reporting.writers import (
    CELLS_SCHEMA,
    COMPARISON_SCHEMA,
    SUMMARY_SCHEMA,
    comparison_frame,
    read_report_json,
    write_comparison_csv,
    write_evaluation_outputs,
)
from app.services.signal.klt import select_signal_subspace


def make_report(plan=None, accuracy=0.9, auc=0.95):
    plan = plan or ExperimentPlan(n_iterations=1, k_folds=2)
    metrics = MetricSet(accuracy=accuracy, precision=0.8, recall=0.75, f1=0.7741935483870968, auc=auc)
    cells = [
        CellResult(iteration=0, fold=fold, model=model, metrics=metrics)
        for fold in range(2)
        for model in ("QDA", "GB")
    ]
    summaries = [
        MetricSummary(model=model, metric=metric, mean=value, sd=0.0, minimum=value, maximum=value)
        for model in ("QDA", "GB", CB_SUBSTITUTE_LABEL)
        for metric, value in metrics.as_dict().items()
    ]
    return EvalReport(
        plan=plan,
        models=["QDA", "GB", CB_SUBSTITUTE_LABEL],
        summaries=summaries,
        cells=cells,
        balanced_rows=40,
        class_counts={"preterm": 20, "term": 26},
        notes=["a note"],
    )


class TestWriters:
    def test_evaluation_outputs(self, tmp_path):
        paths = write_evaluation_outputs(make_report(), tmp_path)
        summary = paths["summary"].read_text().splitlines()
        assert summary[0] == SUMMARY_SCHEMA
        assert summary[1] == "model,metric,mean,sd"
        assert summary[2] == "QDA,accuracy,0.9,0"
        assert len(summary) == 2 + 15

        cells = paths["cells"].read_text().splitlines()
        assert cells[0] == CELLS_SCHEMA
        assert cells[1] == "iteration,fold,model,metric,value"
        assert len(cells) == 2 + 4 * 5

        auc = paths["auc"].read_text().splitlines()
        assert auc[2] == "0 QDA 0.950000 0.000000"
        assert auc[-1].startswith(f"2 {CB_SUBSTITUTE_LABEL} ")

    def test_report_json_round_trip(self, tmp_path):
        report = make_report()
        paths = write_evaluation_outputs(report, tmp_path)
        loaded = read_report_json(paths["report"])
        assert loaded.cells == []
        assert loaded.summaries == report.summaries
        assert loaded.plan == report.plan
        assert loaded.notes == ["a note"]

    def test_not_a_report(self, tmp_path):
        path = tmp_path / "report.json"
        path.write_text('{"models": 3}')
        with pytest.raises(SchemaMismatchError):
            read_report_json(path)

    def test_comparison(self, tmp_path):
        cells = [
            (AblationCell(segmentation=SegmentationMode.FIXED, klt_enabled=True, toco=True), make_report()),
            (AblationCell(segmentation=SegmentationMode.FIXED, klt_enabled=False, toco=False), make_report(accuracy=0.6)),
        ]
        frame = comparison_frame(cells)
        assert len(frame) == 6
        assert list(frame.columns) == ["regime", "klt", "toco", "model", "accuracy", "precision", "recall", "f1", "auc"]
        assert frame.iloc[3][["regime", "klt", "toco", "model", "accuracy"]].tolist() == ["fixed", "off", "off", "QDA", 0.6]

        path = write_comparison_csv(cells, tmp_path / "comparison.csv")
        assert path.read_text().splitlines()[0] == COMPARISON_SCHEMA

    def test_ablation_cell_labels(self):
        cell = AblationCell(segmentation=SegmentationMode.ANNOTATED, klt_enabled=True, toco=False)
        assert cell.label == "annotated-klt_on-toco_off"
        assert cell.channel_set == ChannelSet.EHG_ONLY


class TestBenchmarks:
    def test_targets_are_fractions(self):
        for table in BENCHMARK_TARGETS:
            for values in table.rows.values():
                assert all(0.0 <= v <= 1.0 for v in values.values())
            assert CB_SUBSTITUTE_LABEL in table.rows

    @pytest.mark.parametrize(
        "plan, key",
        [
            (ExperimentPlan(klt_enabled=False), "tpehgt-annotated-raw"),
            (ExperimentPlan(channel_set=ChannelSet.EHG_ONLY), "tpehgt-annotated-klt"),
            (ExperimentPlan(segmentation=SegmentationMode.FIXED), "tpehgt-fixed-toco-klt"),
            (
                ExperimentPlan(segmentation=SegmentationMode.FIXED, channel_set=ChannelSet.EHG_ONLY),
                "tpehgt-fixed-ehg-klt",
            ),
            (
                ExperimentPlan(dataset_kind=DatasetKind.TPEHG, segmentation=SegmentationMode.FIXED),
                "tpehg-fixed-ehg-klt",
            ),
        ],
    )
    def test_regime_lookup(self, plan, key):
        assert targets_for(plan).key == key

    def test_unpublished_regime(self):
        plan = ExperimentPlan(segmentation=SegmentationMode.FIXED, klt_enabled=False)
        assert targets_for(plan) is None

    def test_compare(self):
        table = targets_for(ExperimentPlan(segmentation=SegmentationMode.FIXED))
        rows = {(r.model, r.metric): r for r in compare(make_report(accuracy=0.9581), table)}
        qda_accuracy = rows[("QDA", "accuracy")]
        assert qda_accuracy.target == pytest.approx(0.9581)
        assert qda_accuracy.within_tolerance
        assert rows[("QDA", "f1")].within_tolerance is None

    def test_tolerance_edges(self):
        row = ComparisonRow(model="LR", metric="auc", observed=0.90, target=0.94, tolerance=0.04)
        assert row.deviation == pytest.approx(-0.04)
        assert row.within_tolerance
        assert not row.model_copy(update={"observed": 0.89}).within_tolerance


class TestResultsDocument:
    def test_generate(self, tmp_path):
        write_evaluation_outputs(make_report(ExperimentPlan(segmentation=SegmentationMode.FIXED)), tmp_path / "a")
        write_evaluation_outputs(
            make_report(ExperimentPlan(segmentation=SegmentationMode.FIXED, klt_enabled=False)), tmp_path / "b"
        )
        path = ResultsDocumentGenerator().generate([tmp_path], tmp_path / "out")
        assert path.name == RESULTS_FILE
        text = path.read_text()
        assert "| QDA | 90.00 (0.00) |" in text
        assert "tpehgt-fixed-toco-klt" in text
        assert "No published figures exist for this regime." in text
        assert "- a note" in text

    def test_no_reports(self, tmp_path):
        with pytest.raises(EhgValidationError):
            ResultsDocumentGenerator().find_reports([tmp_path])


class TestPlotData:
    def test_eigenvalue_rows_mark_the_cut(self, tmp_path):
        eigenvalues = np.array([1e-3, 1.1e-3, 1.0, 2.0])
        basis = EigenBasis(eigenvalues=eigenvalues, eigenvectors=np.eye(4))
        selection = select_signal_subspace(eigenvalues)
        assert selection.retain_from_index == 3
        lines = write_eigenvalue_plot_data(basis, selection, tmp_path / "eig.dat").read_text().splitlines()
        assert lines[1] == "# lag 4 threshold 0.1 retain_from 3 retained 2"
        assert lines[2] == "# index eigenvalue log_eigenvalue relative_change retained"
        assert lines[3] == "1 1.000000e-03 -6.907755 nan 0"
        assert lines[5].split()[3] == "1.000000"
        assert [row.split()[-1] for row in lines[3:]] == ["0", "0", "1", "1"]

    def test_psd_rows(self, tmp_path):
        x = np.random.default_rng(0).standard_normal(2048)
        before = welch_psd(x, 20.0)
        lines = write_psd_plot_data(before, before, tmp_path / "psd.dat").read_text().splitlines()
        assert lines[1] == "# freq_hz psd_raw psd_filtered"
        assert len(lines) == 2 + before.freqs_hz.shape[0]

    def test_psd_grids_must_match(self, tmp_path):
        x = np.random.default_rng(0).standard_normal(2048)
        with pytest.raises(ShapeError):
            write_psd_plot_data(welch_psd(x, 20.0), welch_psd(x, 20.0, seg_len=128), tmp_path / "psd.dat")

    def test_filtering_removes_out_of_band_power(self, fast_config, dataset_dir):
        record = RecordRepository(dataset_dir).load_record("p000")
        label, before, after, basis, selection = conditioning_curves(record, fast_config)
        assert label == "EHG1"
        high = before.freqs_hz > 8.0
        assert np.mean(after.psd[high]) < 0.1 * np.mean(before.psd[high])
        assert np.argmax(after.psd) == np.argmax(before.psd)
        assert basis.size == fast_config.klt.lag
        assert 1 <= selection.retain_from_index <= basis.size

    def test_unknown_channel(self, fast_config, dataset_dir):
        record = RecordRepository(dataset_dir).load_record("p000")
        with pytest.raises(EhgValidationError):
            pick_raw_channel(record, "filt", "EHG9")

    def test_files_are_written(self, fast_config, dataset_dir, tmp_path):
        record = RecordRepository(dataset_dir).load_record("t006")
        paths = write_conditioning_plot_data(record, fast_config, tmp_path, channel="TOCO")
        assert paths["psd"].name == PSD_PLOT_FILE
        assert paths["eigenvalues"].name == EIGEN_PLOT_FILE
        assert "t006 TOCO" in paths["psd"].read_text().splitlines()[0]
