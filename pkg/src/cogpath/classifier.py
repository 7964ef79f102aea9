"""Sentence-classification backends.

The contract: a backend takes an ordered list of sentences and returns one
prediction per sentence in the same order. The mock backend answers from a
fixture; the remote backend speaks a small HTTP wire format to a model
served elsewhere. The LLM-driven implementation lives in llm_gateway.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Mapping, Sequence

import requests

from .corpus import Sentence
from .errors import (
    BackendUnavailable,
    InvalidPrediction,
    ProtocolError,
    UnknownCategory,
)
from .taxonomy import (
    CategoryScheme,
    SentenceLabel,
    canonical_scheme,
    resolve_label,
    validate_label,
)


@dataclass
class Prediction:
    """A backend's label for one sentence.

    Confidence is optional (per parent code, in [0,1]) and is display-only;
    metrics never read it. Provenance keeps the backend name and, when there
    is one, the raw payload the label was parsed from.
    """

    label: SentenceLabel
    confidence: dict[str, float] | None = None
    backend: str = ""
    raw: object = None


class ClassifierBackend(ABC):
    name: str = "backend"
    supports_batching: bool = True

    @abstractmethod
    def classify(
        self, sentences: Sequence[Sentence], scheme: CategoryScheme
    ) -> list[Prediction]:
        """One prediction per sentence, order preserved."""


class MockClassifier(ClassifierBackend):
    """Deterministic fixture lookup; unknown sentences get the default label.

    Fixture keys may be (post_id, index) pairs or sentence texts; the pair
    form wins when both are present.
    """

    name = "mock"

    def __init__(
        self,
        fixture: Mapping | None = None,
        default: SentenceLabel | None = None,
    ):
        self.fixture = dict(fixture or {})
        self.default = default if default is not None else SentenceLabel.empty()

    def classify(self, sentences, scheme):
        out = []
        for sentence in sentences:
            label = self.fixture.get((sentence.post_id, sentence.index))
            if label is None:
                label = self.fixture.get(sentence.text, self.default)
            out.append(Prediction(label=label, backend=self.name))
        return out


def mock_backend(
    fixture: Mapping | None = None, default: SentenceLabel | None = None
) -> MockClassifier:
    return MockClassifier(fixture, default)


class RemoteClassifier(ClassifierBackend):
    """HTTP client for a classification service.

    POSTs {scheme_version, sentences:[text...]} to <endpoint>/classify and
    expects {predictions:[{labels:[{parent, children[]}], confidence?}...]}.
    One retry on transport failure or a non-2xx status; a reply that does not
    fit the wire format is a ProtocolError, not retried.
    """

    def __init__(
        self,
        endpoint_url: str,
        auth_token: str | None = None,
        timeout: float = 10.0,
        session: requests.Session | None = None,
    ):
        self.endpoint_url = endpoint_url.rstrip("/")
        self.auth_token = auth_token
        self.timeout = timeout
        self.session = session or requests.Session()
        self.name = f"remote:{self.endpoint_url}"

    def _post(self, payload: dict) -> dict:
        headers = {}
        if self.auth_token:
            headers["Authorization"] = f"Bearer {self.auth_token}"
        last: object = None
        for _ in range(2):  # initial call + one retry
            try:
                resp = self.session.post(
                    self.endpoint_url + "/classify",
                    json=payload,
                    timeout=self.timeout,
                    headers=headers,
                )
            except requests.RequestException as exc:
                last = exc
                continue
            if 200 <= resp.status_code < 300:
                try:
                    data = resp.json()
                except ValueError as exc:
                    raise ProtocolError("classification reply is not JSON") from exc
                if not isinstance(data, dict):
                    raise ProtocolError("classification reply is not a JSON object")
                return data
            last = f"HTTP {resp.status_code}"
        raise BackendUnavailable(f"classification endpoint failed after retry: {last}")

    @staticmethod
    def _confidence(rec: Mapping, label: SentenceLabel) -> dict[str, float] | None:
        conf = rec.get("confidence")
        if conf is None:
            return None
        if isinstance(conf, (int, float)):
            value = float(conf)
            if not 0.0 <= value <= 1.0:
                raise ProtocolError(f"confidence {value} outside [0,1]")
            conf = {code: value for code in sorted(label.parents())}
        if not isinstance(conf, dict):
            raise ProtocolError(f"malformed confidence {conf!r}")
        out = {}
        for code, value in conf.items():
            value = float(value)
            if not 0.0 <= value <= 1.0:
                raise ProtocolError(f"confidence {value} outside [0,1]")
            out[str(code)] = value
        return out

    def classify(self, sentences, scheme):
        if not sentences:
            return []
        payload = {
            "scheme_version": scheme.version,
            "sentences": [s.text for s in sentences],
        }
        data = self._post(payload)
        preds = data.get("predictions")
        if not isinstance(preds, list) or len(preds) != len(sentences):
            got = len(preds) if isinstance(preds, list) else "no"
            raise ProtocolError(
                f"expected {len(sentences)} predictions, got {got}"
            )
        out = []
        for i, rec in enumerate(preds):
            if not isinstance(rec, dict) or not isinstance(rec.get("labels"), list):
                raise ProtocolError(f"prediction {i} is missing a labels array")
            try:
                label = resolve_label(rec["labels"], scheme)
            except UnknownCategory as exc:
                raise InvalidPrediction(str(exc), index=i) from exc
            out.append(
                Prediction(
                    label=label,
                    confidence=self._confidence(rec, label),
                    backend=self.name,
                    raw=rec,
                )
            )
        return out


def remote_backend(
    endpoint_url: str, auth_token: str | None = None, **kwargs
) -> RemoteClassifier:
    return RemoteClassifier(endpoint_url, auth_token, **kwargs)


def classify_post(
    sentences: Sequence[Sentence],
    backend: ClassifierBackend,
    scheme: CategoryScheme | None = None,
    batch_size: int = 32,
) -> list[Prediction]:
    """Run a backend over the segmented sentences of one post.

    Order is preserved and every returned label is checked against the
    scheme; a label the backend could not produce in valid form raises
    InvalidPrediction with the sentence index.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    scheme = scheme or canonical_scheme()
    step = batch_size if backend.supports_batching else 1
    predictions: list[Prediction] = []
    for start in range(0, len(sentences), step):
        chunk = list(sentences[start : start + step])
        got = backend.classify(chunk, scheme)
        if len(got) != len(chunk):
            raise ProtocolError(
                f"backend {backend.name} returned {len(got)} predictions for {len(chunk)} sentences"
            )
        predictions.extend(got)
    for i, pred in enumerate(predictions):
        violations = validate_label(pred.label, scheme)
        if violations:
            raise InvalidPrediction("; ".join(violations), index=i)
    return predictions


def prediction_records(
    sentences: Sequence[Sentence], predictions: Sequence[Prediction]
) -> list[dict]:
    """Predictions in the annotation-record file format."""
    return [
        {
            "post_id": s.post_id,
            "index": s.index,
            "text": s.text,
            "labels": p.label.to_records(),
        }
        for s, p in zip(sentences, predictions)
    ]
