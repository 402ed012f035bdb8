"""Core record types: clinical cases, predictions, confusion counts.

Cases and predictions travel between CLI stages as JSON Lines (UTF-8, LF,
one object per line, missing metadata encoded as ``null``). The dataclasses
here are frozen; validation returns the record unchanged so it can be
chained anywhere a record enters the system.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    CaseValidationError,
    DuplicateId,
    EmptyId,
    InvalidAge,
    InvalidAnatomicalSite,
    InvalidImageRef,
    InvalidLabel,
    InvalidSex,
)

MAX_AGE = 130


class Sex(str, Enum):
    MALE = "male"
    FEMALE = "female"


class Label(str, Enum):
    MALIGNANT = "malignant"
    BENIGN = "benign"

    @classmethod
    def from_string(cls, value: str) -> "Label":
        try:
            return cls(value)
        except ValueError:
            raise InvalidLabel(
                f"label must be 'malignant' or 'benign', got {value!r}"
            ) from None


@dataclass(frozen=True)
class ClinicalMetadata:
    """Optional demographics attached to a lesion image."""

    age: int | None = None
    sex: Sex | None = None
    anatomical_site: str | None = None


@dataclass(frozen=True)
class CaseRecord:
    id: str
    metadata: ClinicalMetadata
    label: Label
    image_ref: str | None = None


@dataclass(frozen=True)
class PredictionRecord:
    """One model answer for one case.

    ``predicted`` is None when the raw text contained no class token;
    ``error`` is set (and ``predicted`` is None) when the backend failed
    after retries, so downstream reports can count the two separately.
    """

    id: str
    predicted: Label | None
    raw_text: str
    neighbors_used: tuple[str, ...] = ()
    error: str | None = None


@dataclass(frozen=True)
class ConfusionCounts:
    tn: int
    tp: int
    fn: int
    fp: int

    def __post_init__(self) -> None:
        for name in ("tn", "tp", "fn", "fp"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ValueError(f"{name} must be a non-negative int, got {v!r}")

    @property
    def total(self) -> int:
        return self.tn + self.tp + self.fn + self.fp

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp


def _has_control_chars(s: str) -> bool:
    return any(ord(c) < 32 or ord(c) == 127 for c in s)


def validate_metadata(metadata: ClinicalMetadata) -> ClinicalMetadata:
    """Check field constraints; returns the input unchanged. Idempotent."""
    age = metadata.age
    if age is not None:
        if isinstance(age, bool) or not isinstance(age, int):
            raise InvalidAge(f"age must be an integer or None, got {age!r}")
        if not 0 <= age <= MAX_AGE:
            raise InvalidAge(f"age must be in [0, {MAX_AGE}], got {age}")
    if metadata.sex is not None and not isinstance(metadata.sex, Sex):
        raise InvalidSex(f"sex must be Sex or None, got {metadata.sex!r}")
    site = metadata.anatomical_site
    if site is not None:
        if not isinstance(site, str) or site == "":
            raise InvalidAnatomicalSite("anatomical_site must be a non-empty string or None")
        if _has_control_chars(site):
            raise InvalidAnatomicalSite(f"anatomical_site contains control characters: {site!r}")
    return metadata


def validate_case(case: CaseRecord) -> CaseRecord:
    """Full record check; returns the input unchanged. Idempotent."""
    if not isinstance(case.id, str) or case.id == "":
        raise EmptyId("case id must be a non-empty string")
    validate_metadata(case.metadata)
    if not isinstance(case.label, Label):
        raise InvalidLabel(f"label must be a Label, got {case.label!r}")
    if case.image_ref is not None and (not isinstance(case.image_ref, str) or case.image_ref == ""):
        raise InvalidImageRef("image_ref must be a non-empty string or None")
    return case


# --- JSON Lines serialization -----------------------------------------------

def case_to_dict(case: CaseRecord) -> dict:
    return {
        "id": case.id,
        "age": case.metadata.age,
        "sex": case.metadata.sex.value if case.metadata.sex is not None else None,
        "anatomical_site": case.metadata.anatomical_site,
        "label": case.label.value,
        "image_ref": case.image_ref,
    }


def case_from_dict(obj: Mapping) -> CaseRecord:
    sex_raw = obj.get("sex")
    if sex_raw is not None:
        try:
            sex = Sex(sex_raw)
        except ValueError:
            raise InvalidSex(f"sex must be 'male', 'female', or null, got {sex_raw!r}") from None
    else:
        sex = None
    case = CaseRecord(
        id=obj.get("id", ""),
        metadata=ClinicalMetadata(
            age=obj.get("age"),
            sex=sex,
            anatomical_site=obj.get("anatomical_site"),
        ),
        label=Label.from_string(obj.get("label", "")),
        image_ref=obj.get("image_ref"),
    )
    return validate_case(case)


def load_cases(path: str | Path) -> list[CaseRecord]:
    """Read cases.jsonl, validating every record and rejecting duplicate ids."""
    cases: list[CaseRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CaseValidationError(f"{path}:{lineno}: invalid JSON: {e}") from None
            case = case_from_dict(obj)
            if case.id in seen:
                raise DuplicateId(f"{path}:{lineno}: duplicate case id {case.id!r}")
            seen.add(case.id)
            cases.append(case)
    return cases


def save_cases(cases: Iterable[CaseRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for case in cases:
            f.write(json.dumps(case_to_dict(case), ensure_ascii=False) + "\n")


def prediction_to_dict(pred: PredictionRecord) -> dict:
    return {
        "id": pred.id,
        "predicted": pred.predicted.value if pred.predicted is not None else None,
        "raw_text": pred.raw_text,
        "neighbors_used": list(pred.neighbors_used),
        "error": pred.error,
    }


def prediction_from_dict(obj: Mapping) -> PredictionRecord:
    raw = obj.get("predicted")
    return PredictionRecord(
        id=obj["id"],
        predicted=Label.from_string(raw) if raw is not None else None,
        raw_text=obj.get("raw_text", ""),
        neighbors_used=tuple(obj.get("neighbors_used", ())),
        error=obj.get("error"),
    )


def load_predictions(path: str | Path) -> list[PredictionRecord]:
    preds: list[PredictionRecord] = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                preds.append(prediction_from_dict(json.loads(line)))
    return preds


def save_predictions(preds: Iterable[PredictionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for pred in preds:
            f.write(json.dumps(prediction_to_dict(pred), ensure_ascii=False) + "\n")


def truth_from_cases(cases: Sequence[CaseRecord]) -> dict[str, Label]:
    truth: dict[str, Label] = {}
    for case in cases:
        if case.id in truth:
            raise DuplicateId(f"duplicate case id {case.id!r}")
        truth[case.id] = case.label
    return truth
