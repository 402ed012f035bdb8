"""Few-shot prompt assembly and answer parsing.

A prompt is an instruction, one block per retrieved example (image
placeholder, serialized metadata, ground-truth diagnosis), and a final
query block that ends with a bare "Diagnosis:". Blocks are separated by
blank lines; image placeholders appear in the same order as the attached
image references, neighbors first, query last.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .errors import NeighborCountMismatch
from .model import CaseRecord, Label
from .serialize import SerializationMode, serialize_metadata

DEFAULT_INSTRUCTION = (
    "You are a dermatology assistant. Based on the example cases, classify "
    "the final skin lesion as malignant or benign. Answer with exactly one "
    "word: malignant or benign."
)
IMAGE_PLACEHOLDER = "<image>"

_WORD_RE = re.compile(r"[a-z0-9']+")
_NEGATORS = frozenset({"no", "not"})
_NEGATION_WINDOW = 2


@dataclass(frozen=True)
class PromptBundle:
    """Prompt text plus the image references its placeholders stand for."""

    text: str
    image_refs: tuple[str | None, ...]
    k: int

    @property
    def placeholder_count(self) -> int:
        return self.text.count(IMAGE_PLACEHOLDER)


def build_prompt(
    query: CaseRecord,
    neighbors: Sequence[CaseRecord],
    mode: SerializationMode,
    k: int,
    *,
    instruction: str = DEFAULT_INSTRUCTION,
) -> PromptBundle:
    """Assemble the prompt for one query given its retrieved neighbors.

    The query's own label is never rendered; neighbor labels come from
    ground truth. Neighbor order is preserved verbatim.
    """
    if len(neighbors) != k:
        raise NeighborCountMismatch(f"expected {k} neighbors, got {len(neighbors)}")
    mode = SerializationMode(mode)
    blocks = [instruction]
    for i, neighbor in enumerate(neighbors, start=1):
        blocks.append(
            f"Example {i}:\n"
            f"{IMAGE_PLACEHOLDER}\n"
            f"{serialize_metadata(neighbor.metadata, mode)}\n"
            f"Diagnosis: {neighbor.label.value}"
        )
    blocks.append(
        f"Query:\n"
        f"{IMAGE_PLACEHOLDER}\n"
        f"{serialize_metadata(query.metadata, mode)}\n"
        f"Diagnosis:"
    )
    image_refs = tuple(n.image_ref for n in neighbors) + (query.image_ref,)
    return PromptBundle(text="\n\n".join(blocks), image_refs=image_refs, k=k)


def parse_response(raw: str) -> Label | None:
    """Extract the predicted class from free-form model text.

    Case-insensitive word scan; the first class token wins. "no"/"not"
    within the two preceding words flips the class. None means the text
    contains no class token (an unparsed answer, not an error).
    """
    words = _WORD_RE.findall(raw.lower())
    for pos, word in enumerate(words):
        if word == Label.MALIGNANT.value or word == Label.BENIGN.value:
            label = Label(word)
            window = words[max(0, pos - _NEGATION_WINDOW):pos]
            if any(w in _NEGATORS for w in window):
                return Label.BENIGN if label is Label.MALIGNANT else Label.MALIGNANT
            return label
    return None
