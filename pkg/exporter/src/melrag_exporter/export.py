"""Run the encoders over a cases file and emit a bundle plus manifest.

The bundle is the primary package's binary format, written through its
own writer so conformance is by construction. The JSON manifest sits
next to the bundle and records everything needed to reproduce or audit
the export: encoder identities, the text layer tapped, the serialization
mode, the image geometry, skipped cases, and a checksum of the bundle
bytes.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from melrag import EmbeddingBundle, SerializationMode, load_cases, serialize_metadata, write_bundle

from .encoders import (
    IMAGE_SIZE,
    TEXT_ENCODER_NAME,
    TEXT_LAYER_INDEX,
    build_image_encoder,
    build_text_encoder,
    image_features,
    load_image_tensor,
    text_cls_features,
)


class MissingImageWarning(UserWarning):
    """A case's image file is absent; the case is skipped, not fatal."""


@dataclass(frozen=True)
class ExportManifest:
    backbone: str
    image_dim: int
    text_encoder: str
    text_dim: int
    text_layer_index: int
    serialization_mode: str
    image_size: int
    image_feature: str
    weights: str
    count: int
    skipped_count: int
    skipped_ids: tuple[str, ...] = field(default=())
    sha256: str = ""

    def __post_init__(self) -> None:
        if self.image_size != IMAGE_SIZE:
            raise ValueError(f"image size must be {IMAGE_SIZE}, got {self.image_size}")
        if self.skipped_count != len(self.skipped_ids):
            raise ValueError("skip count does not match the skipped id list")

    def to_dict(self) -> dict:
        return {
            "backbone": self.backbone,
            "image_dim": self.image_dim,
            "text_encoder": self.text_encoder,
            "text_dim": self.text_dim,
            "text_layer_index": self.text_layer_index,
            "serialization_mode": self.serialization_mode,
            "image_size": self.image_size,
            "image_feature": self.image_feature,
            "weights": self.weights,
            "count": self.count,
            "skipped_count": self.skipped_count,
            "skipped_ids": list(self.skipped_ids),
            "sha256": self.sha256,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExportManifest":
        return cls(
            backbone=obj["backbone"],
            image_dim=int(obj["image_dim"]),
            text_encoder=obj["text_encoder"],
            text_dim=int(obj["text_dim"]),
            text_layer_index=int(obj["text_layer_index"]),
            serialization_mode=obj["serialization_mode"],
            image_size=int(obj["image_size"]),
            image_feature=obj["image_feature"],
            weights=obj["weights"],
            count=int(obj["count"]),
            skipped_count=int(obj["skipped_count"]),
            skipped_ids=tuple(obj["skipped_ids"]),
            sha256=obj["sha256"],
        )


def manifest_path(out_bundle: str | Path) -> Path:
    return Path(str(out_bundle) + ".manifest.json")


def load_manifest(out_bundle: str | Path) -> ExportManifest:
    with open(manifest_path(out_bundle), encoding="utf-8") as f:
        return ExportManifest.from_dict(json.load(f))


def _image_file(case, images_dir: Path) -> Path:
    ref = case.image_ref or f"{case.id}.png"
    path = Path(ref)
    return path if path.is_absolute() else images_dir / path


def export_embeddings(
    cases_file: str | Path,
    images_dir: str | Path,
    backbone: str,
    mode: str | SerializationMode,
    out_bundle: str | Path,
    *,
    weights: str = "random",
    batch_size: int = 8,
) -> ExportManifest:
    """Encode every case's image and serialized metadata into a bundle.

    Row order follows the cases file; cases whose image file is missing
    are skipped with a warning and recorded in the manifest.
    """
    mode = SerializationMode(mode)
    images_dir = Path(images_dir)
    cases = load_cases(cases_file)

    kept, skipped, image_paths = [], [], []
    for case in cases:
        path = _image_file(case, images_dir)
        if not path.is_file():
            warnings.warn(f"{case.id}: image {path} not found, skipping", MissingImageWarning)
            skipped.append(case.id)
            continue
        kept.append(case)
        image_paths.append(path)

    image_model, image_dim = build_image_encoder(backbone, weights)
    text_model, tokenizer = build_text_encoder(weights)

    image_rows: list[np.ndarray] = []
    for start in range(0, len(image_paths), batch_size):
        chunk = image_paths[start : start + batch_size]
        batch = torch.stack([load_image_tensor(p) for p in chunk])
        image_rows.extend(image_features(image_model, batch).numpy())

    text_rows = [
        text_cls_features(text_model, tokenizer, serialize_metadata(case.metadata, mode)).numpy()
        for case in kept
    ]

    text_dim = 768
    bundle = EmbeddingBundle(
        ids=tuple(case.id for case in kept),
        image_vectors=np.asarray(image_rows, dtype=np.float32).reshape(len(kept), image_dim),
        text_vectors=np.asarray(text_rows, dtype=np.float32).reshape(len(kept), text_dim),
        serialization_mode=mode,
    )
    write_bundle(bundle, out_bundle)
    digest = hashlib.sha256(Path(out_bundle).read_bytes()).hexdigest()

    manifest = ExportManifest(
        backbone=backbone,
        image_dim=image_dim,
        text_encoder=TEXT_ENCODER_NAME,
        text_dim=text_dim,
        text_layer_index=TEXT_LAYER_INDEX,
        serialization_mode=mode.value,
        image_size=IMAGE_SIZE,
        image_feature="global_post_pooling",
        weights=weights,
        count=len(kept),
        skipped_count=len(skipped),
        skipped_ids=tuple(skipped),
        sha256=digest,
    )
    with open(manifest_path(out_bundle), "w", encoding="utf-8", newline="\n") as f:
        json.dump(manifest.to_dict(), f, indent=2)
        f.write("\n")
    return manifest
