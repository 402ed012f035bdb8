"""Render clinical metadata as text for prompts and text encoders.

Three fixed templates. Output is byte-exact by contract: downstream
embeddings and prompt dumps are compared bitwise, so any change here is a
format break. Missing fields always render as "unknown"; field order is
always age, sex, anatomical site.
"""

from __future__ import annotations

from enum import Enum

from .model import ClinicalMetadata, validate_metadata

MISSING = "unknown"


class SerializationMode(str, Enum):
    SENTENCE = "sentence"
    ATTRIBUTE_VALUE = "attribute_value"
    HTML = "html"


def _age_str(metadata: ClinicalMetadata) -> str:
    return MISSING if metadata.age is None else str(metadata.age)


def _sex_str(metadata: ClinicalMetadata) -> str:
    return MISSING if metadata.sex is None else metadata.sex.value


def _site_str(metadata: ClinicalMetadata) -> str:
    return MISSING if metadata.anatomical_site is None else metadata.anatomical_site


def _capitalize(value: str) -> str:
    # str.capitalize() would lowercase the tail; only the first char moves.
    return value[:1].upper() + value[1:]


def _escape_html(value: str) -> str:
    # Only these three; &amp; first so it never double-escapes.
    return value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _sentence(metadata: ClinicalMetadata) -> str:
    return (
        f"Age is {_age_str(metadata)}, "
        f"Sex is {_sex_str(metadata)}, "
        f"Anatomical site is {_site_str(metadata)}."
    )


def _attribute_value(metadata: ClinicalMetadata) -> str:
    # Present values are capitalized in this mode; "unknown" stays lowercase.
    sex = MISSING if metadata.sex is None else _capitalize(metadata.sex.value)
    site = (
        MISSING
        if metadata.anatomical_site is None
        else _capitalize(metadata.anatomical_site)
    )
    return f"Age: {_age_str(metadata)}, Sex: {sex}, Anatomical site: {site}"


def _html(metadata: ClinicalMetadata) -> str:
    return (
        "<table>"
        "<tr><th>Age</th><th>Sex</th><th>Anatomical site</th></tr>"
        f"<tr><td>{_age_str(metadata)}</td>"
        f"<td>{_sex_str(metadata)}</td>"
        f"<td>{_escape_html(_site_str(metadata))}</td></tr>"
        "</table>"
    )


_RENDERERS = {
    SerializationMode.SENTENCE: _sentence,
    SerializationMode.ATTRIBUTE_VALUE: _attribute_value,
    SerializationMode.HTML: _html,
}


def serialize_metadata(metadata: ClinicalMetadata, mode: SerializationMode) -> str:
    """Render one metadata record under the given template.

    Raises the usual validation errors for out-of-range fields; the same
    metadata always yields the same bytes.
    """
    validate_metadata(metadata)
    mode = SerializationMode(mode)
    return _RENDERERS[mode](metadata)
