"""Shared factories for synthetic cases, bundles, and clustered datasets."""

from __future__ import annotations

import numpy as np
import pytest

from melrag import (
    CaseRecord,
    ClinicalMetadata,
    EmbeddingBundle,
    Label,
    PredictionRecord,
    SerializationMode,
    Sex,
)

SITES = ("posterior torso", "anterior torso", "upper extremity", "lower extremity", "head/neck")


def make_metadata(age=45, sex=Sex.FEMALE, site="posterior torso") -> ClinicalMetadata:
    if isinstance(sex, str):
        sex = Sex(sex)
    return ClinicalMetadata(age=age, sex=sex, anatomical_site=site)


def make_case(case_id, label=Label.BENIGN, age=45, sex=Sex.FEMALE,
              site="posterior torso", image_ref=None) -> CaseRecord:
    if isinstance(label, str):
        label = Label.from_string(label)
    return CaseRecord(
        id=case_id,
        metadata=make_metadata(age=age, sex=sex, site=site),
        label=label,
        image_ref=image_ref,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)


def random_bundle(rng, count=8, image_dim=4, text_dim=3,
                  mode=SerializationMode.ATTRIBUTE_VALUE, prefix="c") -> EmbeddingBundle:
    return EmbeddingBundle(
        ids=tuple(f"{prefix}{i:04d}" for i in range(count)),
        image_vectors=rng.normal(size=(count, image_dim)).astype(np.float32),
        text_vectors=rng.normal(size=(count, text_dim)).astype(np.float32),
        serialization_mode=mode,
    )


def recovery_fixture(counts, fp_corrected, fn_corrected, prefix="r"):
    """Two id-level prediction sets realizing a baseline confusion matrix.

    The baseline set produces exactly counts = (tn, tp, fn, fp) against the
    returned truth; the second set corrects the first fp_corrected false
    positives and fn_corrected false negatives and leaves everything else
    unchanged. Returns (baseline_preds, ours_preds, truth).
    """
    tn, tp, fn, fp = counts
    truth: dict[str, Label] = {}
    baseline, ours = [], []

    def add(n, tag, actual, base_pred, ours_pred):
        for i in range(n):
            cid = f"{prefix}-{tag}{i:05d}"
            truth[cid] = actual
            baseline.append(PredictionRecord(cid, base_pred, base_pred.value))
            ours.append(PredictionRecord(cid, ours_pred, ours_pred.value))

    add(tn, "tn", Label.BENIGN, Label.BENIGN, Label.BENIGN)
    add(tp, "tp", Label.MALIGNANT, Label.MALIGNANT, Label.MALIGNANT)
    add(fn_corrected, "fnc", Label.MALIGNANT, Label.BENIGN, Label.MALIGNANT)
    add(fn - fn_corrected, "fnu", Label.MALIGNANT, Label.BENIGN, Label.BENIGN)
    add(fp_corrected, "fpc", Label.BENIGN, Label.MALIGNANT, Label.BENIGN)
    add(fp - fp_corrected, "fpu", Label.BENIGN, Label.MALIGNANT, Label.MALIGNANT)
    return baseline, ours, truth


def clustered_dataset(rng, n=400, image_dim=6, text_dim=3, separation=8.0,
                      malignant_frac=0.3, prefix="case"):
    """Cases drawn from two well-separated Gaussian clusters, one per label.

    Returns (cases, bundle): every malignant case sits near +separation/2,
    every benign case near -separation/2, so nearest neighbors share the
    query's label with overwhelming probability.
    """
    n_mal = int(round(n * malignant_frac))
    cases, imgs, txts, ids = [], [], [], []
    for i in range(n):
        malignant = i < n_mal
        center = separation / 2.0 if malignant else -separation / 2.0
        label = Label.MALIGNANT if malignant else Label.BENIGN
        cid = f"{prefix}{i:05d}"
        cases.append(CaseRecord(
            id=cid,
            metadata=ClinicalMetadata(
                age=int(rng.integers(18, 95)),
                sex=Sex.MALE if rng.integers(2) else Sex.FEMALE,
                anatomical_site=SITES[int(rng.integers(len(SITES)))],
            ),
            label=label,
        ))
        ids.append(cid)
        imgs.append(rng.normal(loc=center, scale=1.0, size=image_dim))
        txts.append(rng.normal(loc=center, scale=1.0, size=text_dim))
    bundle = EmbeddingBundle(
        ids=tuple(ids),
        image_vectors=np.asarray(imgs, dtype=np.float32),
        text_vectors=np.asarray(txts, dtype=np.float32),
        serialization_mode=SerializationMode.ATTRIBUTE_VALUE,
    )
    return cases, bundle
