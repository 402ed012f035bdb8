"""Pluggable completion backends: a remote HTTP endpoint and an offline mock.

The wire protocol is a single POST of ``{"prompt": str, "images": [base64
...]}`` answered by ``{"text": str}``. An adapter maps the same request
onto a chat-completions schema when the serving side needs it. The mock
backend is pure and deterministic: it answers with the majority label of
the example blocks it finds in the prompt, so full-pipeline tests run
without a model.
"""

from __future__ import annotations

import base64
import logging
import re
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Sequence

import requests

from .errors import BackendError, BackendTimeout, BackendUnavailable
from .model import CaseRecord, Label
from .prompting import PromptBundle

logger = logging.getLogger("melrag.backend")

DEFAULT_TIMEOUT_S = 30.0


@dataclass
class BackendConfig:
    kind: str = "mock"
    endpoint: str | None = None
    timeout_s: float = DEFAULT_TIMEOUT_S
    max_in_flight: int = 1
    retries: int = 2
    backoff_s: float = 0.5
    schema: str = "simple"
    generation: dict[str, Any] = field(default_factory=dict)

    def validate(self) -> "BackendConfig":
        if self.kind not in ("mock", "http"):
            raise ValueError(f"backend kind must be 'mock' or 'http', got {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise ValueError("http backend requires an endpoint")
        if self.kind == "mock" and self.endpoint:
            raise ValueError("mock backend takes no endpoint")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.schema not in ("simple", "openai_chat"):
            raise ValueError(f"unknown backend schema {self.schema!r}")
        return self


@dataclass(frozen=True)
class BackendRequest:
    prompt_text: str
    images: tuple[str, ...]


def mock_predict(neighbors: Sequence[CaseRecord]) -> Label:
    """Majority of neighbor ground truths; ties and empty lists go benign."""
    counts = Counter(n.label for n in neighbors)
    if counts[Label.MALIGNANT] > counts[Label.BENIGN]:
        return Label.MALIGNANT
    return Label.BENIGN


_EXAMPLE_LABEL_RE = re.compile(r"Diagnosis:\s*(malignant|benign)\b", re.IGNORECASE)


class MockBackend:
    """Deterministic stand-in model.

    Reads the labeled example blocks out of the prompt text and answers
    with their majority label, phrased as a sentence so the response
    parser is exercised end to end. Pure; safe under any concurrency.
    """

    kind = "mock"

    def complete(self, prompt: PromptBundle) -> str:
        labels = [Label(m.group(1).lower()) for m in _EXAMPLE_LABEL_RE.finditer(prompt.text)]
        counts = Counter(labels)
        if counts[Label.MALIGNANT] > counts[Label.BENIGN]:
            answer = Label.MALIGNANT
        else:
            answer = Label.BENIGN
        return f"Based on the example cases, the lesion appears {answer.value}."


def _encode_image(ref: str | None) -> str:
    if not ref:
        return ""
    try:
        with open(ref, "rb") as f:
            return base64.b64encode(f.read()).decode("ascii")
    except OSError as e:
        raise BackendError(f"cannot read image {ref}: {e}") from e


def build_request(prompt: PromptBundle) -> BackendRequest:
    return BackendRequest(
        prompt_text=prompt.text,
        images=tuple(_encode_image(ref) for ref in prompt.image_refs),
    )


class HttpBackend:
    """Client for the POST protocol above, with retries and backoff."""

    kind = "http"

    def __init__(self, config: BackendConfig, session: requests.Session | None = None):
        self.config = config.validate()
        self._session = session if session is not None else requests.Session()

    def _body(self, req: BackendRequest) -> dict:
        if self.config.schema == "simple":
            return {
                "prompt": req.prompt_text,
                "images": list(req.images),
                **self.config.generation,
            }
        content: list[dict] = [{"type": "text", "text": req.prompt_text}]
        for img in req.images:
            if img:
                content.append(
                    {
                        "type": "image_url",
                        "image_url": {"url": f"data:image/png;base64,{img}"},
                    }
                )
        return {
            "messages": [{"role": "user", "content": content}],
            **self.config.generation,
        }

    def _text_of(self, payload: dict) -> str:
        try:
            if self.config.schema == "simple":
                text = payload["text"]
            else:
                text = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise BackendUnavailable(f"malformed backend response: {e}") from e
        if not isinstance(text, str):
            raise BackendUnavailable(f"backend response text is {type(text).__name__}")
        return text

    def complete(self, prompt: PromptBundle) -> str:
        req = build_request(prompt)
        body = self._body(req)
        logger.debug(
            "POST %s prompt=%r images=%d", self.config.endpoint,
            req.prompt_text[:120], len(req.images),
        )
        last: BackendError | None = None
        for attempt in range(1 + self.config.retries):
            if attempt:
                time.sleep(self.config.backoff_s * 2 ** (attempt - 1))
            try:
                response = self._session.post(
                    self.config.endpoint, json=body, timeout=self.config.timeout_s
                )
                response.raise_for_status()
                text = self._text_of(response.json())
                logger.debug("response text=%r", text[:120])
                return text
            except requests.Timeout as e:
                last = BackendTimeout(f"backend timed out after {self.config.timeout_s}s: {e}")
            except BackendUnavailable as e:
                last = e
            except (requests.RequestException, ValueError) as e:
                last = BackendUnavailable(f"backend request failed: {e}")
            logger.debug("attempt %d/%d failed: %s", attempt + 1, 1 + self.config.retries, last)
        assert last is not None
        raise last


def make_backend(config: BackendConfig):
    config.validate()
    if config.kind == "mock":
        return MockBackend()
    return HttpBackend(config)
