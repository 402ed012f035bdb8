"""Retrieval-augmented, case-based binary melanoma classification.

The pieces, in pipeline order: case records and their validation
(:mod:`.model`), metadata-to-text templates (:mod:`.serialize`), the
embedding bundle format (:mod:`.bundle`), exact top-k retrieval
(:mod:`.index`), few-shot prompt construction and answer parsing
(:mod:`.prompting`), completion backends (:mod:`.backend`), the
end-to-end classifier (:mod:`.pipeline`), and splitting/metrics/recovery
(:mod:`.evaluation`). The ``melrag`` CLI wires them into batch steps.
"""

from .bundle import (
    EmbeddingBundle,
    bundles_equal,
    concat_multimodal,
    l2_normalize,
    read_bundle,
    write_bundle,
)
from .backend import BackendConfig, HttpBackend, MockBackend, make_backend, mock_predict
from .errors import MelragError
from .evaluation import (
    MetricReport,
    RecoveryReport,
    SplitAssignment,
    confusion_from_predictions,
    evaluate_predictions,
    largest_remainder,
    load_split,
    metrics_from_confusion,
    recovery_between,
    recovery_to_dict,
    render_recovery_text,
    render_report_text,
    report_to_dict,
    save_split,
    stratified_split,
)
from .index import CaseIndex, RetrievedNeighbor, build_index, load_index, save_index
from .model import (
    CaseRecord,
    ClinicalMetadata,
    ConfusionCounts,
    Label,
    PredictionRecord,
    Sex,
    load_cases,
    load_predictions,
    save_cases,
    save_predictions,
    truth_from_cases,
    validate_case,
)
from .pipeline import RagCaseClassifier, classify_case, classify_cases
from .prompting import DEFAULT_INSTRUCTION, PromptBundle, build_prompt, parse_response
from .serialize import SerializationMode, serialize_metadata

__version__ = "0.1.0"

__all__ = [
    "BackendConfig",
    "CaseIndex",
    "CaseRecord",
    "ClinicalMetadata",
    "ConfusionCounts",
    "DEFAULT_INSTRUCTION",
    "EmbeddingBundle",
    "HttpBackend",
    "Label",
    "MelragError",
    "MetricReport",
    "MockBackend",
    "PredictionRecord",
    "PromptBundle",
    "RagCaseClassifier",
    "RecoveryReport",
    "RetrievedNeighbor",
    "SerializationMode",
    "Sex",
    "SplitAssignment",
    "build_index",
    "build_prompt",
    "bundles_equal",
    "classify_case",
    "classify_cases",
    "concat_multimodal",
    "confusion_from_predictions",
    "evaluate_predictions",
    "l2_normalize",
    "largest_remainder",
    "load_cases",
    "load_index",
    "load_predictions",
    "load_split",
    "make_backend",
    "metrics_from_confusion",
    "mock_predict",
    "parse_response",
    "read_bundle",
    "recovery_between",
    "recovery_to_dict",
    "render_recovery_text",
    "render_report_text",
    "report_to_dict",
    "save_cases",
    "save_index",
    "save_predictions",
    "save_split",
    "serialize_metadata",
    "stratified_split",
    "truth_from_cases",
    "validate_case",
    "write_bundle",
]
