"""Dataset splitting, confusion metrics, and error-recovery comparison.

The split is two-stage and stratified by label: first train-pool/test,
then train/validation within the pool. At each stage the train-side total
is floor(fraction x pool size) and is apportioned across the label strata
by largest remainder, so per-class proportions sit within one sample of
the targets and the stage totals are reproducible. Malignant is the
positive class everywhere. Unparsed or failed predictions count as benign
(the majority class) in the confusion matrix and are tallied separately.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyCounts, EmptyDataset, IdSetMismatch, UnknownCaseId
from .model import CaseRecord, ConfusionCounts, Label, PredictionRecord

_CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class SplitAssignment:
    train_ids: tuple[str, ...]
    val_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    seed: int

    def __post_init__(self) -> None:
        groups = (set(self.train_ids), set(self.val_ids), set(self.test_ids))
        if sum(len(g) for g in groups) != len(self.train_ids) + len(self.val_ids) + len(
            self.test_ids
        ):
            raise ValueError("split contains duplicate ids within a group")
        if groups[0] & groups[1] or groups[0] & groups[2] or groups[1] & groups[2]:
            raise ValueError("split groups overlap")

    def to_dict(self) -> dict:
        return {
            "train_ids": list(self.train_ids),
            "val_ids": list(self.val_ids),
            "test_ids": list(self.test_ids),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "SplitAssignment":
        return cls(
            train_ids=tuple(obj["train_ids"]),
            val_ids=tuple(obj["val_ids"]),
            test_ids=tuple(obj["test_ids"]),
            seed=int(obj["seed"]),
        )


def save_split(split: SplitAssignment, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(split.to_dict(), f, indent=2)
        f.write("\n")


def load_split(path: str | Path) -> SplitAssignment:
    with open(path, encoding="utf-8") as f:
        return SplitAssignment.from_dict(json.load(f))


def largest_remainder(sizes: Sequence[int], total_take: int) -> list[int]:
    """Apportion total_take across strata proportionally to sizes.

    Floor the exact quotas, then hand the leftover units to the largest
    fractional parts (ties: larger stratum first, then position). Each
    allocation never exceeds its stratum size.
    """
    n = sum(sizes)
    if total_take < 0 or total_take > n:
        raise ValueError(f"cannot take {total_take} from {n}")
    if n == 0:
        return [0] * len(sizes)
    quotas = [total_take * s / n for s in sizes]
    takes = [math.floor(q) for q in quotas]
    leftover = total_take - sum(takes)
    order = sorted(
        range(len(sizes)),
        key=lambda i: (-(quotas[i] - takes[i]), -sizes[i], i),
    )
    for i in order[:leftover]:
        takes[i] += 1
    assert all(t <= s for t, s in zip(takes, sizes))
    return takes


def _stratify(
    strata: dict[Label, list[str]], train_frac: float
) -> tuple[dict[Label, list[str]], dict[Label, list[str]]]:
    labels = sorted(strata, key=lambda lb: lb.value)
    sizes = [len(strata[lb]) for lb in labels]
    total_take = math.floor(train_frac * sum(sizes))
    takes = largest_remainder(sizes, total_take)
    kept = {lb: strata[lb][:t] for lb, t in zip(labels, takes)}
    rest = {lb: strata[lb][t:] for lb, t in zip(labels, takes)}
    return kept, rest


def stratified_split(
    cases: Sequence[CaseRecord],
    train_frac: float = 0.7,
    val_frac_of_train: float = 0.2,
    seed: int = 0,
) -> SplitAssignment:
    """Two-stage stratified split, deterministic for a given seed.

    Stage 1 keeps floor(train_frac x n) cases as the training pool and
    sends the rest to test; stage 2 keeps floor((1 - val_frac_of_train) x
    pool) as final train and sends the rest to validation. Input order
    never matters: ids are sorted before the seeded shuffle.
    """
    if not cases:
        raise EmptyDataset("cannot split zero cases")
    for name, frac in (("train_frac", train_frac), ("val_frac_of_train", val_frac_of_train)):
        if not 0.0 < frac < 1.0:
            raise ValueError(f"{name} must be in (0, 1), got {frac}")

    rng = np.random.default_rng(seed)
    strata: dict[Label, list[str]] = {}
    for case in cases:
        strata.setdefault(case.label, []).append(case.id)
    for label in sorted(strata, key=lambda lb: lb.value):
        ids = sorted(strata[label])
        strata[label] = [ids[i] for i in rng.permutation(len(ids))]

    pool, test = _stratify(strata, train_frac)
    train, val = _stratify(pool, 1.0 - val_frac_of_train)

    def flat(groups: dict[Label, list[str]]) -> tuple[str, ...]:
        out: list[str] = []
        for label in sorted(groups, key=lambda lb: lb.value):
            out.extend(groups[label])
        return tuple(sorted(out))

    return SplitAssignment(train_ids=flat(train), val_ids=flat(val), test_ids=flat(test), seed=seed)


# --- confusion and metrics ---------------------------------------------------

def effective_label(pred: PredictionRecord) -> Label:
    """The label a prediction contributes to the confusion matrix."""
    return pred.predicted if pred.predicted is not None else Label.BENIGN


def confusion_from_predictions(
    preds: Sequence[PredictionRecord], truth: Mapping[str, Label]
) -> ConfusionCounts:
    tn = tp = fn = fp = 0
    for pred in preds:
        try:
            actual = truth[pred.id]
        except KeyError:
            raise UnknownCaseId(f"prediction id {pred.id!r} has no ground truth") from None
        predicted = effective_label(pred)
        if actual is Label.MALIGNANT:
            if predicted is Label.MALIGNANT:
                tp += 1
            else:
                fn += 1
        else:
            if predicted is Label.MALIGNANT:
                fp += 1
            else:
                tn += 1
    return ConfusionCounts(tn=tn, tp=tp, fn=fn, fp=fp)


def _ratio(num: int, den: int, name: str, degenerate: list[str]) -> float:
    if den == 0:
        degenerate.append(name)
        return 0.0
    return num / den


def _expected_metrics(counts: ConfusionCounts) -> tuple[dict[str, float], tuple[str, ...]]:
    degenerate: list[str] = []
    sensitivity = _ratio(counts.tp, counts.tp + counts.fn, "sensitivity", degenerate)
    specificity = _ratio(counts.tn, counts.tn + counts.fp, "specificity", degenerate)
    precision = _ratio(counts.tp, counts.tp + counts.fp, "precision", degenerate)
    if precision + sensitivity == 0.0:
        degenerate.append("f1")
        f1 = 0.0
    else:
        f1 = 2.0 * precision * sensitivity / (precision + sensitivity)
    values = {
        "accuracy": (counts.tp + counts.tn) / counts.total,
        "balanced_accuracy": (sensitivity + specificity) / 2.0,
        "precision": precision,
        "sensitivity": sensitivity,
        "specificity": specificity,
        "f1": f1,
    }
    return values, tuple(degenerate)


@dataclass(frozen=True)
class MetricReport:
    counts: ConfusionCounts
    accuracy: float
    balanced_accuracy: float
    precision: float
    sensitivity: float
    specificity: float
    f1: float
    unparsed_count: int = 0
    backend_failures: int = 0
    degenerate_metrics: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.counts.total == 0:
            raise EmptyCounts("metric report over zero predictions")
        if self.unparsed_count < 0 or self.backend_failures < 0:
            raise ValueError("tallies must be non-negative")
        expected, degenerate = _expected_metrics(self.counts)
        for name, value in expected.items():
            got = getattr(self, name)
            if not 0.0 <= got <= 1.0 or abs(got - value) > _CONSISTENCY_TOL:
                raise ValueError(
                    f"{name}={got} inconsistent with counts (expected {value})"
                )
        if tuple(self.degenerate_metrics) != degenerate:
            raise ValueError(
                f"degenerate flags {self.degenerate_metrics} do not match counts "
                f"(expected {degenerate})"
            )


def metrics_from_confusion(
    counts: ConfusionCounts, *, unparsed_count: int = 0, backend_failures: int = 0
) -> MetricReport:
    if counts.total == 0:
        raise EmptyCounts("cannot compute metrics over zero predictions")
    values, degenerate = _expected_metrics(counts)
    return MetricReport(
        counts=counts,
        unparsed_count=unparsed_count,
        backend_failures=backend_failures,
        degenerate_metrics=degenerate,
        **values,
    )


def evaluate_predictions(
    preds: Sequence[PredictionRecord], truth: Mapping[str, Label]
) -> MetricReport:
    counts = confusion_from_predictions(preds, truth)
    unparsed = sum(1 for p in preds if p.predicted is None and p.error is None)
    failures = sum(1 for p in preds if p.error is not None)
    return metrics_from_confusion(
        counts, unparsed_count=unparsed, backend_failures=failures
    )


# --- recovery ----------------------------------------------------------------

@dataclass(frozen=True)
class RecoveryReport:
    fp_baseline: int
    fp_corrected: int
    fn_baseline: int
    fn_corrected: int
    fp_recovery_pct: float | None
    fn_recovery_pct: float | None

    def __post_init__(self) -> None:
        for kind in ("fp", "fn"):
            baseline = getattr(self, f"{kind}_baseline")
            corrected = getattr(self, f"{kind}_corrected")
            pct = getattr(self, f"{kind}_recovery_pct")
            if not 0 <= corrected <= baseline:
                raise ValueError(f"{kind}_corrected must be within [0, {kind}_baseline]")
            if baseline == 0:
                if pct is not None:
                    raise ValueError(f"{kind}_recovery_pct must be None when baseline is 0")
            else:
                expected = 100.0 * corrected / baseline
                if pct is None or abs(pct - expected) > _CONSISTENCY_TOL:
                    raise ValueError(f"{kind}_recovery_pct inconsistent with counts")


def recovery_between(
    baseline_preds: Sequence[PredictionRecord],
    ours_preds: Sequence[PredictionRecord],
    truth: Mapping[str, Label],
) -> RecoveryReport:
    """How many of the baseline's FP/FN cases the second set classifies right."""
    base_ids = sorted(p.id for p in baseline_preds)
    ours_ids = sorted(p.id for p in ours_preds)
    if base_ids != ours_ids:
        raise IdSetMismatch(
            f"prediction sets cover different ids "
            f"({len(base_ids)} baseline vs {len(ours_ids)} ours)"
        )
    ours_by_id = {p.id: p for p in ours_preds}
    fp_baseline = fp_corrected = fn_baseline = fn_corrected = 0
    for pred in baseline_preds:
        try:
            actual = truth[pred.id]
        except KeyError:
            raise UnknownCaseId(f"prediction id {pred.id!r} has no ground truth") from None
        base_label = effective_label(pred)
        ours_label = effective_label(ours_by_id[pred.id])
        if actual is Label.BENIGN and base_label is Label.MALIGNANT:
            fp_baseline += 1
            if ours_label is Label.BENIGN:
                fp_corrected += 1
        elif actual is Label.MALIGNANT and base_label is Label.BENIGN:
            fn_baseline += 1
            if ours_label is Label.MALIGNANT:
                fn_corrected += 1
    return RecoveryReport(
        fp_baseline=fp_baseline,
        fp_corrected=fp_corrected,
        fn_baseline=fn_baseline,
        fn_corrected=fn_corrected,
        fp_recovery_pct=100.0 * fp_corrected / fp_baseline if fp_baseline else None,
        fn_recovery_pct=100.0 * fn_corrected / fn_baseline if fn_baseline else None,
    )


# --- rendering ---------------------------------------------------------------

_GRID_COLUMNS = (
    ("Accuracy", "accuracy"),
    ("Balanced Accuracy", "balanced_accuracy"),
    ("Precision", "precision"),
    ("Sensitivity", "sensitivity"),
    ("F1-score", "f1"),
)


def render_report_text(report: MetricReport) -> str:
    """Aligned grid in the reference column order, then greppable flat lines."""
    headers = [name for name, _ in _GRID_COLUMNS] + ["TN", "TP", "FN", "FP"]
    values = [f"{getattr(report, attr):.4f}" for _, attr in _GRID_COLUMNS] + [
        str(report.counts.tn),
        str(report.counts.tp),
        str(report.counts.fn),
        str(report.counts.fp),
    ]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    grid_head = "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()
    grid_row = "  ".join(v.ljust(w) for v, w in zip(values, widths)).rstrip()

    lines = [
        grid_head,
        grid_row,
        "",
        f"Accuracy {report.accuracy:.4f}",
        f"Balanced accuracy {report.balanced_accuracy:.4f}",
        f"Precision {report.precision:.4f}",
        f"Sensitivity {report.sensitivity:.4f}",
        f"Specificity {report.specificity:.4f}",
        f"F1 {report.f1:.4f}",
        f"TN {report.counts.tn}",
        f"TP {report.counts.tp}",
        f"FN {report.counts.fn}",
        f"FP {report.counts.fp}",
        f"Total {report.counts.total}",
        f"Unparsed {report.unparsed_count}",
        f"Backend failures {report.backend_failures}",
    ]
    if report.degenerate_metrics:
        lines.append("Degenerate metrics: " + ", ".join(report.degenerate_metrics))
    return "\n".join(lines) + "\n"


def report_to_dict(report: MetricReport) -> dict:
    return {
        "accuracy": report.accuracy,
        "balanced_accuracy": report.balanced_accuracy,
        "precision": report.precision,
        "sensitivity": report.sensitivity,
        "specificity": report.specificity,
        "f1": report.f1,
        "counts": {
            "tn": report.counts.tn,
            "tp": report.counts.tp,
            "fn": report.counts.fn,
            "fp": report.counts.fp,
        },
        "total": report.counts.total,
        "unparsed_count": report.unparsed_count,
        "backend_failures": report.backend_failures,
        "degenerate_metrics": list(report.degenerate_metrics),
    }


def _pct_str(pct: float | None) -> str:
    return "n/a" if pct is None else f"{pct:.2f}%"


def render_recovery_text(recovery: RecoveryReport) -> str:
    return (
        f"FP baseline {recovery.fp_baseline}\n"
        f"FP corrected {recovery.fp_corrected}\n"
        f"FP recovery {_pct_str(recovery.fp_recovery_pct)}\n"
        f"FN baseline {recovery.fn_baseline}\n"
        f"FN corrected {recovery.fn_corrected}\n"
        f"FN recovery {_pct_str(recovery.fn_recovery_pct)}\n"
    )


def recovery_to_dict(recovery: RecoveryReport) -> dict:
    return {
        "fp_baseline": recovery.fp_baseline,
        "fp_corrected": recovery.fp_corrected,
        "fp_recovery_pct": recovery.fp_recovery_pct,
        "fn_baseline": recovery.fn_baseline,
        "fn_corrected": recovery.fn_corrected,
        "fn_recovery_pct": recovery.fn_recovery_pct,
    }
