"""Pipeline configuration.

The pipeline is configured by a flat-sectioned INI file. Each section maps onto
a pydantic model that forbids unknown keys, so a typo is a hard error instead
of a silently ignored setting. Sub-sections such as ``[models.rf]`` nest under
their parent. Every key has a default; ``PipelineConfig.to_ini`` emits the
effective configuration so a run can be reproduced from a single file.

The environment variable ``EHG_DATA_ROOT`` (also read from a ``.env`` file)
overrides ``dataset.root``.
"""

import configparser
import io
import logging
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.core.exceptions import ConfigError
from app.database.models.evaluation import ChannelSet, DatasetKind, ExperimentPlan, SegmentationMode
from app.database.models.learning import ModelKind
from app.services.features.spectral import PA_BAND_PRESETS

logger = logging.getLogger(__name__)

DATA_ROOT_ENV = "EHG_DATA_ROOT"


class KltScope(str, Enum):
    """Where KLT denoising is applied."""

    SEGMENT = "segment"
    RECORD = "record"


class Section(BaseModel):
    """Base for configuration sections: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class DatasetSection(Section):
    """Where the PhysioNet database lives and how its channels are labeled."""

    root: Path = Path("data/tpehgt")
    kind: DatasetKind = DatasetKind.TPEHGT
    annotations: str = "annotations.csv"
    index: str = ""
    use_prefiltered: bool = True
    prefiltered_marker: str = "filt"

    @model_validator(mode="before")
    @classmethod
    def resolve_prefiltered(cls, data: Any) -> Any:
        """TPEHGT ships prefiltered channels; TPEHG channels are filtered here.

        An absent or empty ``use_prefiltered`` resolves from the dataset kind.
        """
        if isinstance(data, dict):
            value = data.get("use_prefiltered")
            if value is None or (isinstance(value, str) and not value.strip()):
                kind = data.get("kind", DatasetKind.TPEHGT)
                kind = kind.value if isinstance(kind, DatasetKind) else str(kind)
                data = {**data, "use_prefiltered": kind == DatasetKind.TPEHGT.value}
        return data


class SegmentationSection(Section):
    """Segmentation regime."""

    mode: SegmentationMode = SegmentationMode.ANNOTATED
    window_seconds: float = Field(default=180.0, gt=0)


class ChannelsSection(Section):
    """Channel set used for features."""

    set: ChannelSet = ChannelSet.EHG_PLUS_TOCO


class FilterSection(Section):
    """Band-pass filter for raw channels."""

    order: int = Field(default=4, ge=2)
    low_cut_hz: float = Field(default=0.08, gt=0)
    high_cut_hz: float = Field(default=5.0, gt=0)


class KltSection(Section):
    """Karhunen-Loeve denoising."""

    enabled: bool = True
    lag: int = Field(default=50, ge=2)
    jump_threshold: float = Field(default=0.10, gt=0)
    scope: KltScope = KltScope.SEGMENT


class PsdSection(Section):
    """Welch PSD estimation."""

    seg_len: int = Field(default=256, ge=8)
    overlap: float = Field(default=0.5, ge=0, lt=1)


class PaSection(Section):
    """Peak-amplitude band; a non-empty preset overrides the explicit edges."""

    f_low: float = Field(default=0.08, ge=0)
    f_high: float = Field(default=5.0, gt=0)
    preset: str = ""

    @field_validator("preset")
    @classmethod
    def known_preset(cls, v: str) -> str:
        """Only named presets are accepted."""
        v = v.strip()
        if v and v not in PA_BAND_PRESETS:
            raise ValueError(f"unknown pa preset '{v}' (known: {sorted(PA_BAND_PRESETS)})")
        return v

    @property
    def band(self) -> Tuple[float, float]:
        """Effective (low, high) band in Hz."""
        if self.preset:
            return PA_BAND_PRESETS[self.preset]
        return (self.f_low, self.f_high)


class MfccSection(Section):
    """MFCC framing and filterbank."""

    n_filters: int = Field(default=26, ge=20)
    frame: int = Field(default=256, ge=16)
    hop: int = Field(default=128, ge=1)


class WaveletSection(Section):
    """Wavelet decomposition depth."""

    levels: int = Field(default=5, ge=1, le=12)


class QdaParams(Section):
    """QDA ridge scale (relative to mean per-feature variance)."""

    ridge: float = Field(default=1e-6, ge=0)


class LrParams(Section):
    """L2-penalized logistic regression."""

    C: float = Field(default=1.0, gt=0)
    max_iter: int = Field(default=5000, ge=1)
    tol: float = Field(default=1e-6, gt=0)


class SvmParams(Section):
    """Linear support vector machine."""

    C: float = Field(default=1.0, gt=0)


class DtParams(Section):
    """CART decision tree."""

    max_depth: int = Field(default=100, ge=1)
    min_samples_split: int = Field(default=2, ge=2)


class RfParams(Section):
    """Random forest."""

    n_estimators: int = Field(default=100, ge=1)
    max_depth: int = Field(default=10, ge=1)
    max_features: Literal["sqrt", "log2"] = "sqrt"


class GbParams(Section):
    """Gradient boosting on logistic loss."""

    n_estimators: int = Field(default=100, ge=1)
    learning_rate: float = Field(default=0.1, gt=0, le=1)
    max_depth: int = Field(default=3, ge=1)


class MlpParams(Section):
    """One-hidden-layer perceptron trained with Adam."""

    hidden_units: int = Field(default=100, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0)
    max_iter: int = Field(default=200, ge=1)


class ModelsSection(Section):
    """Model suite and per-kind hyperparameters."""

    kinds: List[ModelKind] = Field(default_factory=lambda: list(ModelKind), min_length=1)
    qda: QdaParams = Field(default_factory=QdaParams)
    lr: LrParams = Field(default_factory=LrParams)
    svm: SvmParams = Field(default_factory=SvmParams)
    dt: DtParams = Field(default_factory=DtParams)
    rf: RfParams = Field(default_factory=RfParams)
    gb: GbParams = Field(default_factory=GbParams)
    mlp: MlpParams = Field(default_factory=MlpParams)

    @field_validator("kinds", mode="before")
    @classmethod
    def split_kinds(cls, v: Any) -> Any:
        """Accept a comma-separated list."""
        return _split_list(v)

    def hyperparameters(self, kind: ModelKind) -> Dict[str, Any]:
        """Hyperparameters of one model kind as a plain dict."""
        return getattr(self, kind.value.lower()).model_dump()


class EvaluationSection(Section):
    """Cross-validation protocol."""

    iterations: int = Field(default=20, ge=1)
    folds: int = Field(default=5, ge=2)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    grouped_by_record: bool = False


class OutputSection(Section):
    """Output location and worker pool size (0 = logical cores)."""

    directory: Path = Path("results")
    jobs: int = Field(default=0, ge=0)

    @property
    def effective_jobs(self) -> int:
        """Worker count with 0 resolved to the number of logical cores."""
        return self.jobs or (os.cpu_count() or 1)


class AblationSection(Section):
    """Ablation grid: ``grid`` crosses the klt and toco axes for the configured
    segmentation; ``benchmark`` runs the fixed set of benchmark regimes."""

    preset: Literal["grid", "benchmark"] = "grid"
    klt: List[Literal["on", "off"]] = Field(default_factory=lambda: ["on", "off"], min_length=1)
    toco: List[Literal["on", "off"]] = Field(default_factory=lambda: ["on", "off"], min_length=1)

    @field_validator("klt", "toco", mode="before")
    @classmethod
    def split_axes(cls, v: Any) -> Any:
        """Accept comma-separated lists."""
        return _split_list(v)


class PipelineConfig(Section):
    """Effective configuration of a pipeline run."""

    dataset: DatasetSection = Field(default_factory=DatasetSection)
    segmentation: SegmentationSection = Field(default_factory=SegmentationSection)
    channels: ChannelsSection = Field(default_factory=ChannelsSection)
    filter: FilterSection = Field(default_factory=FilterSection)
    klt: KltSection = Field(default_factory=KltSection)
    psd: PsdSection = Field(default_factory=PsdSection)
    pa: PaSection = Field(default_factory=PaSection)
    mfcc: MfccSection = Field(default_factory=MfccSection)
    wavelet: WaveletSection = Field(default_factory=WaveletSection)
    models: ModelsSection = Field(default_factory=ModelsSection)
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)
    output: OutputSection = Field(default_factory=OutputSection)
    ablation: AblationSection = Field(default_factory=AblationSection)

    @model_validator(mode="after")
    def validate_cross_section(self) -> "PipelineConfig":
        """Checks spanning several sections."""
        if self.filter.low_cut_hz >= self.filter.high_cut_hz:
            raise ValueError("filter.low_cut_hz must be below filter.high_cut_hz")
        low, high = self.pa.band
        if low >= high:
            raise ValueError("pa band must satisfy f_low < f_high")
        if self.mfcc.hop > self.mfcc.frame:
            raise ValueError("mfcc.hop must not exceed mfcc.frame")
        return self

    def experiment_plan(self) -> ExperimentPlan:
        """Experiment plan echoing this configuration."""
        return ExperimentPlan(
            n_iterations=self.evaluation.iterations,
            k_folds=self.evaluation.folds,
            master_seed=self.evaluation.master_seed,
            dataset_kind=self.dataset.kind,
            segmentation=self.segmentation.mode,
            channel_set=self.channels.set,
            klt_enabled=self.klt.enabled,
            grouped_by_record=self.evaluation.grouped_by_record,
        )

    def to_ini(self) -> str:
        """Render the effective configuration as INI text."""
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        for section_name in type(self).model_fields:
            section = getattr(self, section_name)
            flat: Dict[str, str] = {}
            for key in type(section).model_fields:
                value = getattr(section, key)
                if isinstance(value, Section):
                    parser[f"{section_name}.{key}"] = {
                        k: _format_value(getattr(value, k)) for k in type(value).model_fields
                    }
                else:
                    flat[key] = _format_value(value)
            parser[section_name] = flat
        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()


def _format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_ini(text: str) -> Dict[str, Any]:
    """Parse INI text into the nested dict consumed by ``PipelineConfig``.

    Raises:
    ------
        ConfigError: On INI syntax errors or sections nested more than one level.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"invalid configuration syntax: {e}") from e

    data: Dict[str, Any] = {}
    for section in parser.sections():
        items = dict(parser.items(section))
        parts = section.split(".")
        if len(parts) == 1:
            data.setdefault(section, {}).update(items)
        elif len(parts) == 2:
            data.setdefault(parts[0], {}).setdefault(parts[1], {}).update(items)
        else:
            raise ConfigError(f"section [{section}] is nested too deeply")
    return data


def build_config(
    data: Dict[str, Any],
    overrides: Optional[Dict[str, Dict[str, Any]]] = None,
    check_paths: bool = True,
) -> PipelineConfig:
    """Validate a nested dict, applying the environment and CLI overrides.

    Args:
        data: Section -> key -> value mapping (values may be strings).
        overrides: Values that win over both the file and the environment.
        check_paths: Require the dataset root to exist.

    Returns:
    -------
        PipelineConfig: The effective configuration.

    Raises:
    ------
        ConfigError: If validation fails or a referenced path is missing.
    """
    load_dotenv()
    data = {k: dict(v) if isinstance(v, dict) else v for k, v in data.items()}
    env_root = os.getenv(DATA_ROOT_ENV)
    if env_root:
        logger.info(f"Dataset root overridden by {DATA_ROOT_ENV}={env_root}")
        data.setdefault("dataset", {})["root"] = env_root
    for section, values in (overrides or {}).items():
        data.setdefault(section, {}).update({k: v for k, v in values.items() if v is not None})

    try:
        config = PipelineConfig.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}") from e

    if check_paths and not config.dataset.root.is_dir():
        raise ConfigError(f"dataset.root '{config.dataset.root}' does not exist")
    return config


def load_config(
    path: Optional[Path] = None,
    overrides: Optional[Dict[str, Dict[str, Any]]] = None,
    check_paths: bool = True,
) -> PipelineConfig:
    """Load the configuration file (or defaults when ``path`` is None).

    Raises:
    ------
        ConfigError: If the file is missing or invalid.
    """
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"configuration file '{path}' does not exist")
        data = parse_ini(path.read_text(encoding="utf-8"))
        logger.info(f"Loaded configuration from {path}")
    return build_config(data, overrides, check_paths)
