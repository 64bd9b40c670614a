import numpy as np
import pytest

from app.core.exceptions import (
    AnnotationError,
    EhgValidationError,
    HeaderParseError,
    LengthMismatchError,
    UnsupportedFormatError,
)
from app.database.models.record import AnnotationKind, Group
from app.database.repositories.record_repository import RecordRepository
from app.utils.file_handling import (
    dump_annotations,
    encode_signals,
    load_annotations,
    load_group_index,
    parse_header,
    read_signals,
    write_header,
)
from tests.conftest import make_header

HEADER = """rec 2 20 36000
rec.dat 16 13107(0)/mV 16 0 -1234 0 0 EHG1
rec.dat 16 13107/mV 16 0 77 0 0 TOCO
# Gestation 33.7
# Group preterm
"""


class TestParseHeader:
    def test_record_and_signal_fields(self):
        header = parse_header(HEADER)
        assert header.record_name == "rec"
        assert header.n_channels == 2
        assert header.sampling_rate_hz == 20.0
        assert header.n_samples == 36000
        assert header.channels[0].adc_gain == 13107.0
        assert header.channel_labels == ["EHG1", "TOCO"]

    def test_gestation_comment_is_captured(self):
        header = parse_header(HEADER)
        assert header.gestation_weeks == pytest.approx(33.7)
        assert header.metadata["group"] == "preterm"

    def test_missing_gain_and_baseline_use_wfdb_defaults(self):
        header = parse_header("r 1 20 10\nr.dat 16\n")
        assert header.channels[0].adc_gain == 200.0
        assert header.channels[0].baseline == 0

    def test_omitted_baseline_follows_adc_zero(self):
        header = parse_header("r 1 20 10\nr.dat 16 100/mV 12 5 0 0 0 EHG\n")
        assert header.channels[0].baseline == 5

    def test_empty_input(self):
        with pytest.raises(HeaderParseError):
            parse_header("")

    def test_malformed_line_reports_line_number(self):
        with pytest.raises(HeaderParseError) as excinfo:
            parse_header("r 1 20 10\nr.dat 16 notagain\n")
        assert excinfo.value.line_number == 2
        assert "line 2" in str(excinfo.value)

    def test_missing_signal_line(self):
        with pytest.raises(HeaderParseError):
            parse_header("r 2 20 10\nr.dat 16\n")

    def test_unsupported_format(self):
        with pytest.raises(UnsupportedFormatError):
            parse_header("r 1 20 10\nr.dat 212\n")

    def test_write_header_parses_back(self):
        header = make_header("x1", 1200, comments=["Gestation 38.1"])
        parsed = parse_header(write_header(header))
        assert parsed.channels == header.channels
        assert parsed.n_samples == 1200
        assert parsed.gestation_weeks == pytest.approx(38.1)


class TestReadSignals:
    def _header(self, gain=1.0, baseline=0, n_samples=1, labels=("EHG",)):
        text = f"r {len(labels)} 20 {n_samples}\n" + "".join(
            f"r.dat 16 {gain}({baseline})/mV 16 0 0 0 0 {label}\n" for label in labels
        )
        return parse_header(text)

    @pytest.mark.parametrize(
        "raw, expected",
        [(b"\x01\x00", 1.0), (b"\xff\xff", -1.0)],
    )
    def test_twos_complement_little_endian(self, raw, expected):
        signals = read_signals(self._header(), raw)
        assert signals.shape == (1, 1)
        assert signals[0, 0] == expected

    def test_gain_formula(self):
        raw = np.array([200], dtype="<i2").tobytes()
        assert read_signals(self._header(gain=200.0), raw)[0, 0] == 1.0

    def test_baseline_is_subtracted(self):
        raw = np.array([210], dtype="<i2").tobytes()
        assert read_signals(self._header(gain=200.0, baseline=10), raw)[0, 0] == 1.0

    def test_interleaved_channels(self):
        header = self._header(n_samples=3, labels=("EHG1", "EHG2"))
        raw = np.array([1, 10, 2, 20, 3, 30], dtype="<i2").tobytes()
        signals = read_signals(header, raw)
        np.testing.assert_array_equal(signals, [[1, 2, 3], [10, 20, 30]])

    def test_byte_count_mismatch(self):
        with pytest.raises(LengthMismatchError):
            read_signals(self._header(n_samples=2), b"\x01\x00")

    def test_encode_round_trip_within_quantization(self):
        header = make_header("q", 500)
        rng = np.random.default_rng(3)
        signals = rng.uniform(-5, 5, size=(header.n_channels, header.n_samples))
        decoded = read_signals(header, encode_signals(header, signals))
        assert decoded.shape == signals.shape
        assert np.max(np.abs(decoded - signals)) <= 0.5 / 200.0 + 1e-12


class TestAnnotations:
    def test_single_row(self):
        (annotation,) = load_annotations("record,kind,start_sample,end_sample\nr1,contraction,1200,3600\n")
        assert annotation.record_name == "r1"
        assert annotation.kind == AnnotationKind.CONTRACTION
        assert annotation.length == 2400

    def test_inverted_interval(self):
        with pytest.raises(AnnotationError, match="row 2"):
            load_annotations("record,kind,start_sample,end_sample\nr1,dummy,500,100\n")

    def test_overlap_names_both_rows(self):
        manifest = (
            "record,kind,start_sample,end_sample\n"
            "r1,contraction,0,100\n"
            "r2,dummy,0,100\n"
            "r1,dummy,50,150\n"
        )
        with pytest.raises(AnnotationError, match="row 4 overlaps row 2"):
            load_annotations(manifest)

    def test_unknown_kind(self):
        with pytest.raises(AnnotationError):
            load_annotations("record,kind,start_sample,end_sample\nr1,burst,0,10\n")

    def test_missing_column(self):
        with pytest.raises(AnnotationError, match="missing columns"):
            load_annotations("record,start_sample,end_sample\nr1,0,10\n")

    def test_dump_parses_back(self):
        manifest = "record,kind,start_sample,end_sample\nr1,contraction,0,10\nr1,dummy,20,30\n"
        assert dump_annotations(load_annotations(manifest)) == manifest

    def test_group_index(self):
        index = load_group_index("record,group\ntpehg1,Term\ntpehg2,preterm\n")
        assert index == {"tpehg1": Group.TERM, "tpehg2": Group.PRETERM}


class TestRecordRepository:
    def test_saved_record_loads_with_group_from_gestation(self, tmp_path):
        repository = RecordRepository(tmp_path)
        header = make_header("p1", 400, comments=["Gestation 31.0"])
        signals = np.linspace(-1, 1, 1600).reshape(4, 400)
        repository.save_record(header, signals)

        record = repository.load_record("p1")
        assert record.group == Group.PRETERM
        assert record.signals.shape == (4, 400)
        assert np.max(np.abs(record.signals - signals)) <= 0.5 / 200.0 + 1e-12
        assert [r.value for r in record.channel_roles] == ["EHG", "EHG", "EHG", "TOCO"]

    def test_group_comment_wins_over_gestation(self, tmp_path):
        repository = RecordRepository(tmp_path)
        header = make_header("n1", 100, comments=["Group nonpregnant", "Gestation 30"])
        assert repository.resolve_group(header) == Group.NONPREGNANT

    def test_index_fallback(self, tmp_path):
        (tmp_path / "groups.csv").write_text("record,group\nt1,term\n")
        repository = RecordRepository(tmp_path, index_file="groups.csv")
        assert repository.resolve_group(make_header("t1", 100)) == Group.TERM

    def test_unresolvable_group(self, tmp_path):
        with pytest.raises(EhgValidationError):
            RecordRepository(tmp_path).resolve_group(make_header("u1", 100))

    def test_absent_manifest_yields_no_annotations(self, tmp_path):
        assert RecordRepository(tmp_path).load_annotations() == []
