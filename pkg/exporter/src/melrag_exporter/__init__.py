"""Offline encoder export producing embedding bundles for melrag."""

from .encoders import (
    BACKBONES,
    IMAGE_SIZE,
    TEXT_ENCODER_NAME,
    TEXT_LAYER_INDEX,
    WEIGHTS_MODES,
    build_image_encoder,
    build_text_encoder,
)
from .export import (
    ExportManifest,
    MissingImageWarning,
    export_embeddings,
    load_manifest,
    manifest_path,
)
from .tokenizer import CharTokenizer

__version__ = "0.1.0"

__all__ = [
    "BACKBONES",
    "CharTokenizer",
    "ExportManifest",
    "IMAGE_SIZE",
    "MissingImageWarning",
    "TEXT_ENCODER_NAME",
    "TEXT_LAYER_INDEX",
    "WEIGHTS_MODES",
    "build_image_encoder",
    "build_text_encoder",
    "export_embeddings",
    "load_manifest",
    "manifest_path",
]
