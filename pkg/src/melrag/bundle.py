"""Bit-exact embedding bundle format and multimodal vector helpers.

A bundle holds one image vector and one text vector per case, aligned by
row with an ordered id list. On disk (all little-endian):

    magic "MMEB" | version u32 (=1) | count u64 | image_dim u32 |
    text_dim u32 | serialization_mode u8 | reserved 3 zero bytes |
    per id: byte length u16 + UTF-8 | image payload f32 row-major |
    text payload f32 row-major

Round-trips preserve every float bit pattern. Bundles are immutable after
load (arrays are marked read-only); writers assume exclusive access.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO
import warnings

import numpy as np

from .errors import (
    BadMagic,
    DimensionMismatch,
    InvariantViolation,
    IoFailure,
    NonFiniteValue,
    NonFiniteVector,
    TruncatedPayload,
    UnsupportedVersion,
    ZeroVectorWarning,
)
from .serialize import SerializationMode

MAGIC = b"MMEB"
VERSION = 1
_HEADER = struct.Struct("<4sIQIIB3s")
_ID_LEN = struct.Struct("<H")

_MODE_TO_BYTE = {
    SerializationMode.SENTENCE: 0,
    SerializationMode.ATTRIBUTE_VALUE: 1,
    SerializationMode.HTML: 2,
}
_BYTE_TO_MODE = {v: k for k, v in _MODE_TO_BYTE.items()}


def _as_f32_matrix(arr, name: str) -> np.ndarray:
    out = np.asarray(arr, dtype=np.float32)
    if out.ndim != 2:
        raise InvariantViolation(f"{name} must be a 2-D array, got ndim={out.ndim}")
    return np.ascontiguousarray(out)


@dataclass(frozen=True, eq=False)
class EmbeddingBundle:
    """Aligned per-case image and text embeddings plus the text's mode."""

    ids: tuple[str, ...]
    image_vectors: np.ndarray
    text_vectors: np.ndarray
    serialization_mode: SerializationMode

    def __post_init__(self) -> None:
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(
            self, "image_vectors", _as_f32_matrix(self.image_vectors, "image_vectors")
        )
        object.__setattr__(
            self, "text_vectors", _as_f32_matrix(self.text_vectors, "text_vectors")
        )
        object.__setattr__(
            self, "serialization_mode", SerializationMode(self.serialization_mode)
        )

    @property
    def count(self) -> int:
        return len(self.ids)

    @property
    def image_dim(self) -> int:
        return int(self.image_vectors.shape[1])

    @property
    def text_dim(self) -> int:
        return int(self.text_vectors.shape[1])

    def __len__(self) -> int:
        return self.count

    def check_structure(self) -> None:
        """Raise InvariantViolation unless counts, ids, and shapes agree."""
        if self.image_vectors.shape[0] != self.count:
            raise InvariantViolation(
                f"{self.count} ids but {self.image_vectors.shape[0]} image rows"
            )
        if self.text_vectors.shape[0] != self.count:
            raise InvariantViolation(
                f"{self.count} ids but {self.text_vectors.shape[0]} text rows"
            )
        if len(set(self.ids)) != self.count:
            raise InvariantViolation("bundle ids are not unique")
        if any(not isinstance(i, str) or i == "" for i in self.ids):
            raise InvariantViolation("bundle ids must be non-empty strings")

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.image_vectors).all() and np.isfinite(self.text_vectors).all()
        )

    def row_index(self, case_id: str) -> int:
        # Lazily built lookup; linear scans would dominate batch classification.
        table = self.__dict__.get("_row_table")
        if table is None:
            table = {cid: i for i, cid in enumerate(self.ids)}
            object.__setattr__(self, "_row_table", table)
        try:
            return table[case_id]
        except KeyError:
            raise KeyError(case_id) from None

    def multimodal_vector(self, case_id: str) -> np.ndarray:
        """Concatenated image-then-text row for one case (f32 copy)."""
        i = self.row_index(case_id)
        return concat_multimodal(self.image_vectors[i], self.text_vectors[i])


def bundles_equal(a: EmbeddingBundle, b: EmbeddingBundle) -> bool:
    """Bit-exact equality: ids, mode, dims, and every float bit pattern."""
    return (
        a.ids == b.ids
        and a.serialization_mode == b.serialization_mode
        and a.image_vectors.shape == b.image_vectors.shape
        and a.text_vectors.shape == b.text_vectors.shape
        and a.image_vectors.tobytes() == b.image_vectors.tobytes()
        and a.text_vectors.tobytes() == b.text_vectors.tobytes()
    )


def write_bundle_stream(bundle: EmbeddingBundle, f: BinaryIO) -> None:
    """Serialize to an open binary stream (used by index persistence too)."""
    bundle.check_structure()
    if not bundle.is_finite():
        raise InvariantViolation("bundle contains non-finite values")
    f.write(
        _HEADER.pack(
            MAGIC,
            VERSION,
            bundle.count,
            bundle.image_dim,
            bundle.text_dim,
            _MODE_TO_BYTE[bundle.serialization_mode],
            b"\x00\x00\x00",
        )
    )
    for case_id in bundle.ids:
        encoded = case_id.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise InvariantViolation(f"id too long for format: {case_id[:32]!r}...")
        f.write(_ID_LEN.pack(len(encoded)))
        f.write(encoded)
    f.write(np.ascontiguousarray(bundle.image_vectors, dtype="<f4").tobytes())
    f.write(np.ascontiguousarray(bundle.text_vectors, dtype="<f4").tobytes())


def write_bundle(bundle: EmbeddingBundle, destination: str | Path) -> None:
    try:
        with open(destination, "wb") as f:
            write_bundle_stream(bundle, f)
    except OSError as e:
        raise IoFailure(f"cannot write bundle to {destination}: {e}") from e


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise TruncatedPayload(f"expected {n} bytes for {what}, got {len(data)}")
    return data


def read_bundle_stream(f: BinaryIO, *, expect_eof: bool = True) -> EmbeddingBundle:
    """Parse from an open binary stream, validating as it goes."""
    header = _read_exact(f, _HEADER.size, "header")
    magic, version, count, image_dim, text_dim, mode_byte, reserved = _HEADER.unpack(header)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"unsupported bundle version {version}")
    if mode_byte not in _BYTE_TO_MODE:
        raise InvariantViolation(f"unknown serialization mode byte {mode_byte}")
    if reserved != b"\x00\x00\x00":
        raise InvariantViolation("reserved header bytes must be zero")

    ids = []
    for i in range(count):
        (id_len,) = _ID_LEN.unpack(_read_exact(f, _ID_LEN.size, f"id length {i}"))
        try:
            ids.append(_read_exact(f, id_len, f"id {i}").decode("utf-8"))
        except UnicodeDecodeError as e:
            raise InvariantViolation(f"id {i} is not valid UTF-8: {e}") from e

    def _payload(dim: int, what: str) -> np.ndarray:
        raw = _read_exact(f, count * dim * 4, f"{what} payload")
        arr = np.frombuffer(raw, dtype="<f4").reshape(count, dim)
        arr.flags.writeable = False
        return arr

    image = _payload(image_dim, "image")
    text = _payload(text_dim, "text")
    if expect_eof and f.read(1) != b"":
        raise InvariantViolation("trailing bytes after bundle payload")

    bundle = EmbeddingBundle(tuple(ids), image, text, _BYTE_TO_MODE[mode_byte])
    bundle.check_structure()
    if not bundle.is_finite():
        raise NonFiniteValue("bundle payload contains NaN or infinity")
    return bundle


def read_bundle(source: str | Path) -> EmbeddingBundle:
    try:
        with open(source, "rb") as f:
            return read_bundle_stream(f)
    except OSError as e:
        raise IoFailure(f"cannot read bundle from {source}: {e}") from e


def concat_multimodal(
    image_vec,
    text_vec,
    *,
    image_dim: int | None = None,
    text_dim: int | None = None,
) -> np.ndarray:
    """Concatenate image-then-text into one f32 vector, values unmodified."""
    img = np.asarray(image_vec, dtype=np.float32).reshape(-1)
    txt = np.asarray(text_vec, dtype=np.float32).reshape(-1)
    for name, arr in (("image", img), ("text", txt)):
        if not np.isfinite(arr).all():
            raise NonFiniteVector(f"{name} vector contains NaN or infinity")
    if image_dim is not None and img.shape[0] != image_dim:
        raise DimensionMismatch(f"image vector has dim {img.shape[0]}, expected {image_dim}")
    if text_dim is not None and txt.shape[0] != text_dim:
        raise DimensionMismatch(f"text vector has dim {txt.shape[0]}, expected {text_dim}")
    return np.concatenate([img, txt])


def l2_normalize(vec) -> np.ndarray:
    """Scale to unit Euclidean norm; zero vectors pass through with a warning."""
    v = np.asarray(vec, dtype=np.float32).reshape(-1)
    if not np.isfinite(v).all():
        raise NonFiniteVector("cannot normalize a non-finite vector")
    norm = float(np.linalg.norm(v.astype(np.float64)))
    if norm == 0.0:
        warnings.warn("normalizing an all-zero vector leaves it unchanged", ZeroVectorWarning)
        return v.copy()
    return (v.astype(np.float64) / norm).astype(np.float32)
