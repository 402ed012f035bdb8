"""Self-contained character tokenizer for the offline text encoder.

The serialized metadata strings draw from a small, fixed character set,
so a character-level vocabulary is lossless for them. Building the vocab
from a hard-coded charset (rather than fitting it to data) keeps token
ids stable across runs and machines, which the byte-identical-bundle
contract depends on.
"""

from __future__ import annotations

import string

# order fixes the ids: specials first, then the printable charset
SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]")
CHARSET = string.ascii_letters + string.digits + string.punctuation + " "


class CharTokenizer:
    """Character-level encoder emitting BERT-style id/mask pairs."""

    def __init__(self) -> None:
        self._id_of = {tok: i for i, tok in enumerate(SPECIALS)}
        for ch in CHARSET:
            self._id_of[ch] = len(self._id_of)
        self.pad_id = self._id_of["[PAD]"]
        self.unk_id = self._id_of["[UNK]"]
        self.cls_id = self._id_of["[CLS]"]
        self.sep_id = self._id_of["[SEP]"]

    @property
    def vocab_size(self) -> int:
        return len(self._id_of)

    def encode(self, text: str, max_length: int = 256) -> tuple[list[int], list[int]]:
        """[CLS] chars... [SEP], truncated to max_length; returns (ids, mask)."""
        if max_length < 2:
            raise ValueError("max_length must fit [CLS] and [SEP]")
        body = [self._id_of.get(ch, self.unk_id) for ch in text]
        ids = [self.cls_id] + body[: max_length - 2] + [self.sep_id]
        return ids, [1] * len(ids)
