"""End-to-end classification: retrieve, prompt, complete, parse.

``classify_case`` is the unit of work; ``classify_cases`` fans it out over
a bounded thread pool (backends are I/O bound) while keeping output order
equal to input order. ``RagCaseClassifier`` wraps the same flow in an
estimator so pipelines can treat it like any fitted model.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .backend import BackendConfig, MockBackend, make_backend
from .bundle import EmbeddingBundle
from .errors import BackendError, UnknownCaseId
from .index import CaseIndex, RetrievedNeighbor, build_index
from .model import CaseRecord, Label, PredictionRecord
from .prompting import build_prompt, parse_response
from .serialize import SerializationMode


def _neighbor_records(
    neighbors: Sequence[RetrievedNeighbor], cases: Mapping[str, CaseRecord]
) -> list[CaseRecord]:
    records = []
    for n in neighbors:
        try:
            records.append(cases[n.id])
        except KeyError:
            raise UnknownCaseId(f"retrieved id {n.id!r} has no case record") from None
    return records


def classify_case(
    query: CaseRecord,
    query_vector,
    index: CaseIndex,
    cases: Mapping[str, CaseRecord],
    backend,
    *,
    mode: SerializationMode,
    k: int,
    exclude_self: bool = True,
) -> PredictionRecord:
    """Classify one case; backend failures become error-marked records."""
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if k > 0 and len(index) > 0:
        exclude = {query.id} if exclude_self else ()
        retrieved = index.query_top_k(query_vector, k, exclude_ids=exclude)
    else:
        retrieved = []
    neighbors = _neighbor_records(retrieved, cases)
    prompt = build_prompt(query, neighbors, mode, k=len(neighbors))
    neighbor_ids = tuple(n.id for n in retrieved)
    try:
        text = backend.complete(prompt)
    except BackendError as e:
        return PredictionRecord(
            id=query.id,
            predicted=None,
            raw_text="",
            neighbors_used=neighbor_ids,
            error=str(e),
        )
    return PredictionRecord(
        id=query.id,
        predicted=parse_response(text),
        raw_text=text,
        neighbors_used=neighbor_ids,
    )


def classify_cases(
    queries: Sequence[tuple[CaseRecord, np.ndarray]],
    index: CaseIndex,
    cases: Mapping[str, CaseRecord],
    backend,
    *,
    mode: SerializationMode,
    k: int,
    exclude_self: bool = True,
    max_in_flight: int = 1,
) -> list[PredictionRecord]:
    """One record per query, in input order, regardless of completion order."""
    if max_in_flight < 1:
        raise ValueError("max_in_flight must be >= 1")

    def one(item: tuple[CaseRecord, np.ndarray]) -> PredictionRecord:
        query, vector = item
        return classify_case(
            query, vector, index, cases, backend,
            mode=mode, k=k, exclude_self=exclude_self,
        )

    if max_in_flight == 1 or len(queries) <= 1:
        return [one(item) for item in queries]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(one, queries))


class RagCaseClassifier(BaseEstimator):
    """Retrieval-augmented classifier over a fitted case index.

    Parameters mirror the experiment knobs: serialization mode, neighbor
    count k, score normalization, self-exclusion, and the backend config.
    ``fit`` takes the reference bundle plus the case records its ids
    refer to; ``predict`` takes query cases with their vectors.
    """

    def __init__(
        self,
        mode: str = SerializationMode.ATTRIBUTE_VALUE.value,
        k: int = 2,
        normalize: bool = False,
        exclude_self: bool = True,
        max_in_flight: int = 1,
        backend: object | None = None,
    ):
        self.mode = mode
        self.k = k
        self.normalize = normalize
        self.exclude_self = exclude_self
        self.max_in_flight = max_in_flight
        self.backend = backend

    def fit(self, bundle: EmbeddingBundle, cases: Sequence[CaseRecord]) -> "RagCaseClassifier":
        case_map = {c.id: c for c in cases}
        missing = [cid for cid in bundle.ids if cid not in case_map]
        if missing:
            raise UnknownCaseId(
                f"{len(missing)} bundle ids lack case records, e.g. {missing[0]!r}"
            )
        self.index_ = build_index(bundle, normalize=self.normalize)
        self.cases_ = case_map
        self.backend_ = self.backend if self.backend is not None else MockBackend()
        return self

    def predict_records(
        self, queries: Sequence[CaseRecord], vectors: Sequence
    ) -> list[PredictionRecord]:
        if len(queries) != len(vectors):
            raise ValueError("queries and vectors must align")
        return classify_cases(
            list(zip(queries, vectors)),
            self.index_,
            self.cases_,
            self.backend_,
            mode=SerializationMode(self.mode),
            k=self.k,
            exclude_self=self.exclude_self,
            max_in_flight=self.max_in_flight,
        )

    def predict(self, queries: Sequence[CaseRecord], vectors: Sequence) -> np.ndarray:
        """Label strings, unparsed and failed answers falling back to benign."""
        records = self.predict_records(queries, vectors)
        return np.array(
            [(r.predicted or Label.BENIGN).value for r in records], dtype=object
        )


def backend_from_config(config: BackendConfig):
    return make_backend(config)
