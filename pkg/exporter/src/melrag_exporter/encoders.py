"""Backbone construction and feature extraction.

Image features are the post-pooling global vector from the final CNN
stage (the classifier head replaced with identity); text features are
the classification-token hidden state after transformer layer 11. Both
encoders run in eval mode on CPU with gradients off. "random" weights
are seeded so repeated exports are byte-identical without any weight
files; "pretrained" pulls the published checkpoints when they are
available locally or downloadable.
"""

from __future__ import annotations

import torch
from PIL import Image
from torchvision import models, transforms
from transformers import BertConfig, BertModel

from .tokenizer import CharTokenizer

IMAGE_SIZE = 224
TEXT_LAYER_INDEX = 11
TEXT_ENCODER_NAME = "bert-base-uncased"
WEIGHT_SEED = 20240224

BACKBONES = ("resnext50", "efficientnet_v2_m")
WEIGHTS_MODES = ("random", "pretrained")

_PREPROCESS = transforms.Compose([
    transforms.Resize((IMAGE_SIZE, IMAGE_SIZE)),
    transforms.ToTensor(),
    transforms.Normalize(mean=[0.485, 0.456, 0.406], std=[0.229, 0.224, 0.225]),
])


def build_image_encoder(backbone: str, weights: str = "random") -> tuple[torch.nn.Module, int]:
    """Headless CNN plus its output feature dimension."""
    if backbone not in BACKBONES:
        raise ValueError(f"backbone must be one of {BACKBONES}, got {backbone!r}")
    if weights not in WEIGHTS_MODES:
        raise ValueError(f"weights must be one of {WEIGHTS_MODES}, got {weights!r}")
    torch.manual_seed(WEIGHT_SEED)
    if backbone == "resnext50":
        model = models.resnext50_32x4d(
            weights=models.ResNeXt50_32X4D_Weights.IMAGENET1K_V2 if weights == "pretrained" else None
        )
        dim = model.fc.in_features
        model.fc = torch.nn.Identity()
    else:
        model = models.efficientnet_v2_m(
            weights=models.EfficientNet_V2_M_Weights.IMAGENET1K_V1 if weights == "pretrained" else None
        )
        dim = model.classifier[1].in_features
        model.classifier = torch.nn.Identity()
    model.eval()
    return model, dim


class _SubwordTokenizer:
    """Adapter giving a checkpoint tokenizer the same encode() surface."""

    def __init__(self, inner) -> None:
        self._inner = inner

    def encode(self, text: str, max_length: int = 256) -> tuple[list[int], list[int]]:
        enc = self._inner(text, truncation=True, max_length=max_length)
        return enc["input_ids"], enc["attention_mask"]


def build_text_encoder(weights: str = "random"):
    """12-layer BERT-geometry encoder plus a matching tokenizer.

    The pretrained path keeps the checkpoint's own subword vocabulary;
    the random path pairs fresh seeded weights with the character
    vocabulary so no tokenizer asset is needed.
    """
    if weights not in WEIGHTS_MODES:
        raise ValueError(f"weights must be one of {WEIGHTS_MODES}, got {weights!r}")
    torch.manual_seed(WEIGHT_SEED)
    if weights == "pretrained":
        from transformers import AutoTokenizer

        model = BertModel.from_pretrained(TEXT_ENCODER_NAME, output_hidden_states=True)
        tokenizer = _SubwordTokenizer(AutoTokenizer.from_pretrained(TEXT_ENCODER_NAME))
    else:
        tokenizer = CharTokenizer()
        config = BertConfig(
            vocab_size=tokenizer.vocab_size,
            hidden_size=768,
            num_hidden_layers=12,
            num_attention_heads=12,
            intermediate_size=3072,
            max_position_embeddings=512,
            output_hidden_states=True,
        )
        model = BertModel(config)
    model.eval()
    return model, tokenizer


def load_image_tensor(path) -> torch.Tensor:
    with Image.open(path) as img:
        return _PREPROCESS(img.convert("RGB"))


@torch.no_grad()
def image_features(model: torch.nn.Module, batch: torch.Tensor) -> torch.Tensor:
    """(n, 3, 224, 224) -> (n, dim) float32."""
    return model(batch).to(torch.float32)


@torch.no_grad()
def text_cls_features(model: BertModel, tokenizer, text: str) -> torch.Tensor:
    """Hidden state of the leading classification token after layer 11."""
    ids, mask = tokenizer.encode(text)
    out = model(
        input_ids=torch.tensor([ids], dtype=torch.long),
        attention_mask=torch.tensor([mask], dtype=torch.long),
    )
    return out.hidden_states[TEXT_LAYER_INDEX][0, 0, :].to(torch.float32)
