"""Encoder construction: shapes, dims, determinism, input validation."""

import pytest
import torch

from melrag_exporter import build_image_encoder, build_text_encoder
from melrag_exporter.encoders import (
    IMAGE_SIZE,
    TEXT_LAYER_INDEX,
    image_features,
    load_image_tensor,
    text_cls_features,
)


def test_resnext_feature_dim_and_shape():
    model, dim = build_image_encoder("resnext50")
    assert dim == 2048
    out = image_features(model, torch.zeros(2, 3, IMAGE_SIZE, IMAGE_SIZE))
    assert out.shape == (2, 2048)
    assert out.dtype == torch.float32


def test_efficientnet_feature_dim():
    model, dim = build_image_encoder("efficientnet_v2_m")
    assert dim == 1280
    out = image_features(model, torch.zeros(1, 3, IMAGE_SIZE, IMAGE_SIZE))
    assert out.shape == (1, 1280)


def test_unknown_backbone_rejected():
    with pytest.raises(ValueError, match="backbone"):
        build_image_encoder("vgg16")
    with pytest.raises(ValueError, match="weights"):
        build_image_encoder("resnext50", weights="imagenet")


def test_seeded_weights_repeat_exactly():
    a, _ = build_image_encoder("resnext50")
    b, _ = build_image_encoder("resnext50")
    x = torch.randn(1, 3, IMAGE_SIZE, IMAGE_SIZE)
    assert torch.equal(image_features(a, x), image_features(b, x))


def test_text_features_are_layer_tapped_cls():
    model, tokenizer = build_text_encoder()
    vec = text_cls_features(model, tokenizer, "Age: 35; Sex: Female")
    assert vec.shape == (768,)
    assert vec.dtype == torch.float32
    assert TEXT_LAYER_INDEX == 11
    # layer 11 differs from the final (layer 12) output
    ids, mask = tokenizer.encode("Age: 35; Sex: Female")
    with torch.no_grad():
        out = model(
            input_ids=torch.tensor([ids]), attention_mask=torch.tensor([mask])
        )
    assert not torch.equal(vec, out.last_hidden_state[0, 0, :])


def test_text_encoder_rebuild_is_deterministic():
    va = text_cls_features(*build_text_encoder(), "Anatomical site: back")
    vb = text_cls_features(*build_text_encoder(), "Anatomical site: back")
    assert torch.equal(va, vb)


def test_text_weights_mode_validated():
    with pytest.raises(ValueError, match="weights"):
        build_text_encoder("finetuned")


def test_image_loading_normalizes_geometry(workspace):
    for name in ("e0.png", "lesion_one.png", "e2.png"):
        tensor = load_image_tensor(workspace.images_dir / name)
        assert tensor.shape == (3, IMAGE_SIZE, IMAGE_SIZE)
