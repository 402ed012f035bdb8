"""Exact top-k retrieval over multimodal vectors by dot-product similarity.

A flat scan, not an approximate structure: at the target corpus size
(tens of thousands of rows) one matrix-vector product per query is fast,
and exactness removes recall as a confound. Scores accumulate in f64 over
the f32 storage so they are identical across platforms and parallelism
degrees; ties break by ascending insertion position.

Persistence wraps the bundle format with a small header:

    magic "MMIX" | version u32 LE (=1) | normalized u8 | embedded bundle
"""

from __future__ import annotations

import struct
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Collection, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .bundle import (
    EmbeddingBundle,
    read_bundle_stream,
    write_bundle_stream,
)
from .errors import (
    BadMagic,
    DimensionMismatch,
    EmptyBundleWarning,
    InvariantViolation,
    IoFailure,
    NonFiniteVector,
    TruncatedPayload,
    UnsupportedVersion,
)

INDEX_MAGIC = b"MMIX"
INDEX_VERSION = 1
_INDEX_HEADER = struct.Struct("<4sIB")


@dataclass(frozen=True)
class RetrievedNeighbor:
    id: str
    score: float


class CaseIndex(BaseEstimator):
    """Immutable-after-fit nearest-neighbor index.

    Parameters
    ----------
    normalize : bool, default False
        L2-normalize stored vectors at fit time and queries at query time,
        turning the dot product into cosine similarity. Off by default:
        the reference configuration ranks by raw inner product.
    """

    def __init__(self, normalize: bool = False):
        self.normalize = normalize

    def fit(self, bundle: EmbeddingBundle, y=None) -> "CaseIndex":
        bundle.check_structure()
        if not bundle.is_finite():
            raise NonFiniteVector("bundle contains non-finite values")
        vectors = np.hstack(
            [
                np.asarray(bundle.image_vectors, dtype=np.float32),
                np.asarray(bundle.text_vectors, dtype=np.float32),
            ]
        )
        if self.normalize and vectors.shape[0]:
            norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
            safe = norms.copy()
            safe[safe == 0.0] = 1.0  # zero rows pass through unchanged
            vectors = (vectors.astype(np.float64) / safe[:, None]).astype(np.float32)
        vectors = np.ascontiguousarray(vectors, dtype=np.float32)
        vectors.flags.writeable = False

        self.ids_ = bundle.ids
        self.vectors_ = vectors
        self.dim_ = int(vectors.shape[1])
        self.normalized_ = bool(self.normalize)
        self.serialization_mode_ = bundle.serialization_mode
        self._row_of = {cid: i for i, cid in enumerate(bundle.ids)}
        self._source_bundle = bundle
        self._vectors64 = None
        if len(bundle.ids) == 0:
            warnings.warn(
                "index built over an empty bundle; every query returns []",
                EmptyBundleWarning,
            )
        return self

    # sklearn-style fitted check without importing the full validation stack
    def _check_fitted(self) -> None:
        if not hasattr(self, "vectors_"):
            raise InvariantViolation("index is not fitted; call fit(bundle) first")

    @property
    def count(self) -> int:
        self._check_fitted()
        return len(self.ids_)

    def __len__(self) -> int:
        return self.count

    def _scores(self, query64: np.ndarray) -> np.ndarray:
        if self._vectors64 is None:
            self._vectors64 = self.vectors_.astype(np.float64)
        return self._vectors64 @ query64

    def _prepare_query(self, query) -> np.ndarray:
        q = np.asarray(query, dtype=np.float32).reshape(-1)
        if not np.isfinite(q).all():
            raise NonFiniteVector("query vector contains NaN or infinity")
        if q.shape[0] != self.dim_:
            raise DimensionMismatch(f"query has dim {q.shape[0]}, index has dim {self.dim_}")
        q64 = q.astype(np.float64)
        if self.normalized_:
            norm = float(np.linalg.norm(q64))
            if norm != 0.0:
                q64 = q64 / norm
        return q64

    def query_top_k(
        self, query, k: int, *, exclude_ids: Collection[str] = ()
    ) -> list[RetrievedNeighbor]:
        """Top min(k, count) neighbors, scores descending, stable ties."""
        self._check_fitted()
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            raise ValueError(f"k must be a positive integer, got {k!r}")
        if self.count == 0:
            return []
        q64 = self._prepare_query(query)
        scores = self._scores(q64)
        # Negating keeps equal scores in insertion order under a stable sort;
        # reversing an ascending argsort would invert tie order instead.
        order = np.argsort(-scores, kind="stable")
        excluded = set(exclude_ids) if exclude_ids else ()
        out: list[RetrievedNeighbor] = []
        for row in order:
            cid = self.ids_[row]
            if excluded and cid in excluded:
                continue
            out.append(RetrievedNeighbor(cid, float(scores[row])))
            if len(out) == k:
                break
        return out

    def batch_query(
        self,
        queries: Sequence,
        k: int,
        *,
        exclude_ids: Sequence[Collection[str]] | None = None,
        n_jobs: int = 1,
    ) -> list[list[RetrievedNeighbor]]:
        """Per-query results, order preserved, bitwise equal to sequential calls."""
        self._check_fitted()
        if exclude_ids is not None and len(exclude_ids) != len(queries):
            raise ValueError("exclude_ids must align with queries")
        for pos, q in enumerate(queries):
            arr = np.asarray(q, dtype=np.float32).reshape(-1)
            if self.count and arr.shape[0] != self.dim_:
                raise DimensionMismatch(
                    f"query {pos} has dim {arr.shape[0]}, index has dim {self.dim_}"
                )

        def one(pos: int) -> list[RetrievedNeighbor]:
            ex = exclude_ids[pos] if exclude_ids is not None else ()
            return self.query_top_k(queries[pos], k, exclude_ids=ex)

        if n_jobs == 1 or len(queries) <= 1:
            return [one(i) for i in range(len(queries))]
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(one, range(len(queries))))

    def kneighbors(self, X, n_neighbors: int = 2) -> tuple[np.ndarray, np.ndarray]:
        """Array facade over batch_query: (scores, row indices), one row per query."""
        self._check_fitted()
        X = np.asarray(X, dtype=np.float32)
        if X.ndim == 1:
            X = X[None, :]
        results = self.batch_query(list(X), n_neighbors)
        n = min(n_neighbors, self.count)
        scores = np.zeros((len(results), n), dtype=np.float64)
        rows = np.zeros((len(results), n), dtype=np.int64)
        for i, neighbors in enumerate(results):
            for j, nb in enumerate(neighbors):
                scores[i, j] = nb.score
                rows[i, j] = self._row_of[nb.id]
        return scores, rows

    @property
    def source_bundle(self) -> EmbeddingBundle:
        """The raw bundle the index was fitted on (pre-normalization)."""
        self._check_fitted()
        return self._source_bundle

    def vector_for(self, case_id: str) -> np.ndarray:
        """Stored (possibly normalized) row for an indexed case id."""
        self._check_fitted()
        try:
            return self.vectors_[self._row_of[case_id]]
        except KeyError:
            raise KeyError(case_id) from None

    def __contains__(self, case_id: str) -> bool:
        self._check_fitted()
        return case_id in self._row_of


def build_index(bundle: EmbeddingBundle, normalize: bool = False) -> CaseIndex:
    return CaseIndex(normalize=normalize).fit(bundle)


def save_index(index: CaseIndex, destination: str | Path) -> None:
    """Persist the source bundle plus the normalize flag.

    The raw bundle is written (not the normalized rows) so a save/load
    round-trip re-derives exactly what fit() computed.
    """
    index._check_fitted()
    if not hasattr(index, "_source_bundle"):
        raise InvariantViolation("index has no source bundle attached; use build_index")
    try:
        with open(destination, "wb") as f:
            f.write(_INDEX_HEADER.pack(INDEX_MAGIC, INDEX_VERSION, int(index.normalized_)))
            write_bundle_stream(index._source_bundle, f)
    except OSError as e:
        raise IoFailure(f"cannot write index to {destination}: {e}") from e


def load_index(source: str | Path) -> CaseIndex:
    try:
        with open(source, "rb") as f:
            header = f.read(_INDEX_HEADER.size)
            if len(header) != _INDEX_HEADER.size:
                raise TruncatedPayload("index header truncated")
            magic, version, normalized = _INDEX_HEADER.unpack(header)
            if magic != INDEX_MAGIC:
                raise BadMagic(f"bad index magic {magic!r}, expected {INDEX_MAGIC!r}")
            if version != INDEX_VERSION:
                raise UnsupportedVersion(f"unsupported index version {version}")
            if normalized not in (0, 1):
                raise InvariantViolation(f"normalized flag must be 0 or 1, got {normalized}")
            bundle = read_bundle_stream(f)
    except OSError as e:
        raise IoFailure(f"cannot read index from {source}: {e}") from e
    return build_index(bundle, normalize=bool(normalized))
