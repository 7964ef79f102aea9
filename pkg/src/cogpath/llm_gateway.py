"""Chat-completion gateway: structured prompts, transport with retries, and
strict parsing of model replies into labels and summaries.

Prompts are built from four template sections (role, task, pathway
structure, output format); the structure section is rendered from the
category scheme. Template text ships as versioned JSON files per language
and is configuration, not code. Replies must be machine-checkable JSON; a
reply that fails the schema is retried with the identical prompt, never
accepted best-effort.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping, Sequence

import requests

from .classifier import ClassifierBackend, Prediction
from .errors import BackendUnavailable, MalformedReply, UnknownCategory
from .pathway import CompositeSentence, SummarizerBackend
from .taxonomy import (
    CategoryScheme,
    ParentCategory,
    SentenceLabel,
    canonical_scheme,
    normalize_category_name,
    resolve_label,
    validate_label,
)

MODES = ("classify", "summarize", "both")


@dataclass(frozen=True)
class PromptTemplate:
    version: str
    headers: Mapping[str, str]
    role: str
    task: Mapping[str, str]
    structure_intro: str
    definitions: Mapping[str, str]
    output_format: Mapping[str, str]

    @classmethod
    def from_json(cls, data: Mapping) -> "PromptTemplate":
        return cls(
            version=data["version"],
            headers=dict(data["headers"]),
            role=data["role"],
            task=dict(data["task"]),
            structure_intro=data["structure_intro"],
            definitions=dict(data["definitions"]),
            output_format=dict(data["output_format"]),
        )


@lru_cache(maxsize=None)
def load_template(language: str = "en") -> PromptTemplate:
    name = f"prompt_{language}.json"
    try:
        text = resources.files("cogpath.templates").joinpath(name).read_text("utf-8")
    except FileNotFoundError as exc:
        raise ValueError(f"no prompt template for language {language!r}") from exc
    return PromptTemplate.from_json(json.loads(text))


def load_template_file(path: str) -> PromptTemplate:
    with open(path, encoding="utf-8") as fh:
        return PromptTemplate.from_json(json.load(fh))


@dataclass(frozen=True)
class PromptSpec:
    """The four rendered prompt sections; each appears exactly once."""

    role_text: str
    task_text: str
    pathway_structure_text: str
    output_format_text: str


def render_structure(scheme: CategoryScheme, template: PromptTemplate) -> str:
    lines = [template.structure_intro]
    for parent in scheme.parents:
        definition = template.definitions.get(parent.code, "")
        children = ", ".join(c.display_name for c in scheme.children_of(parent))
        lines.append(f"({parent.code}) {parent.display_name}: {definition}")
        lines.append(f"    Child categories: {children}.")
    return "\n".join(lines)


def build_prompt_spec(
    scheme: CategoryScheme,
    mode: str,
    parent: ParentCategory | None = None,
    template: PromptTemplate | None = None,
) -> PromptSpec:
    template = template or load_template()
    if mode not in MODES:
        raise ValueError(f"unknown prompt mode {mode!r}")
    task_text = template.task[mode]
    output_text = template.output_format[mode]
    if mode == "summarize":
        if parent is None:
            raise ValueError("summarize mode needs a parent category")
        task_text = task_text.format(
            parent_name=parent.display_name,
            definition=template.definitions.get(parent.code, ""),
        )
        output_text = output_text.replace("{parent_code}", parent.code)
    spec = PromptSpec(
        role_text=template.role,
        task_text=task_text,
        pathway_structure_text=render_structure(scheme, template),
        output_format_text=output_text,
    )
    for section in (spec.role_text, spec.task_text, spec.pathway_structure_text, spec.output_format_text):
        if not section:
            raise ValueError("prompt template has an empty section")
    return spec


def build_prompt(
    scheme: CategoryScheme,
    sentences: Sequence[str],
    mode: str,
    parent: ParentCategory | None = None,
    template: PromptTemplate | None = None,
    language: str = "en",
) -> str:
    """Render the full prompt: the four sections plus the numbered sentences
    (classify/both) or the composite text (summarize). Deterministic for a
    given (scheme version, sentences, mode, template version)."""
    template = template or load_template(language)
    if mode in ("classify", "both") and not sentences:
        raise ValueError(f"{mode} mode needs at least one sentence")
    spec = build_prompt_spec(scheme, mode, parent, template)
    headers = template.headers
    if mode == "summarize":
        body_header = headers["text"]
        body = " ".join(sentences)
    else:
        body_header = headers["sentences"]
        body = "\n".join(f"{i}. {text}" for i, text in enumerate(sentences))
    parts = [
        f"{headers['role']}\n{spec.role_text}",
        f"{headers['task']}\n{spec.task_text}",
        f"{headers['structure']}\n{spec.pathway_structure_text}",
        f"{headers['output_format']}\n{spec.output_format_text}",
        f"{body_header}\n{body}",
    ]
    return "\n\n".join(parts)


@dataclass(frozen=True)
class LlmConfig:
    endpoint_url: str
    model_name: str = "gpt-4"
    temperature: float = 0.7
    max_retries: int = 2
    timeout: float = 30.0
    auth_env: str = "LLM_API_TOKEN"
    max_concurrency: int = 4

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")


@dataclass(frozen=True)
class ParsedExtraction:
    """Validated content of one model reply."""

    labels: tuple[SentenceLabel, ...]
    summaries: dict[str, str] | None
    raw_reply: str


_FENCE_RE = re.compile(r"```(?:[a-zA-Z0-9_-]+)?\s*(.*?)```", re.DOTALL)


def _strip_to_json(raw: str) -> str:
    text = raw.strip()
    fenced = _FENCE_RE.search(text)
    if fenced:
        text = fenced.group(1).strip()
    if not text.startswith("{"):
        start = text.find("{")
        end = text.rfind("}")
        if start == -1 or end <= start:
            raise MalformedReply("reply contains no JSON object")
        text = text[start : end + 1]
    return text


def parse_reply(
    raw: str,
    scheme: CategoryScheme | None = None,
    n_sentences: int | None = None,
    require_summary_for: str | None = None,
) -> ParsedExtraction:
    """Parse a model reply after stripping code fences and surrounding prose.

    Every category string goes through normalize_category_name; unknown
    categories and missing sentence indices are typed rejections. No label
    that violates the taxonomy ever escapes.
    """
    scheme = scheme or canonical_scheme()
    text = _strip_to_json(raw)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedReply(f"reply is not valid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise MalformedReply("reply is not a JSON object")

    labels: list[SentenceLabel] = []
    labels_obj = obj.get("labels")
    if labels_obj is None and n_sentences is not None:
        raise MalformedReply("reply is missing the labels object")
    if labels_obj is not None:
        if not isinstance(labels_obj, dict):
            raise MalformedReply("labels must be an object keyed by sentence index")
        by_index: dict[int, object] = {}
        for key, value in labels_obj.items():
            try:
                by_index[int(key)] = value
            except (TypeError, ValueError) as exc:
                raise MalformedReply(f"bad sentence index {key!r}") from exc
        count = n_sentences if n_sentences is not None else (max(by_index) + 1 if by_index else 0)
        for i in range(count):
            if i not in by_index:
                raise MalformedReply(f"missing sentence index {i}")
            entries = by_index[i]
            if not isinstance(entries, list):
                raise MalformedReply(f"sentence {i}: labels must be an array")
            try:
                label = resolve_label(entries, scheme)
            except UnknownCategory as exc:
                raise UnknownCategory(f"sentence {i}: {exc}") from exc
            violations = validate_label(label, scheme)
            if violations:
                raise MalformedReply(f"sentence {i}: " + "; ".join(violations))
            labels.append(label)

    summaries: dict[str, str] | None = None
    if "summaries" in obj:
        raw_summaries = obj["summaries"]
        if not isinstance(raw_summaries, dict):
            raise MalformedReply("summaries must be an object keyed by parent")
        summaries = {}
        for key, value in raw_summaries.items():
            category = normalize_category_name(str(key), scheme)
            if not isinstance(category, ParentCategory):
                raise UnknownCategory(f"summary key {key!r} is not a parent category")
            if not isinstance(value, str) or not value.strip():
                raise MalformedReply(f"summary for {category.code} is not text")
            summaries[category.code] = value
    if require_summary_for is not None:
        if summaries is None or require_summary_for not in summaries:
            raise MalformedReply(f"reply lacks a summary for parent {require_summary_for}")
    return ParsedExtraction(tuple(labels), summaries, raw)


_semaphore_lock = threading.Lock()
_semaphores: dict[str, threading.BoundedSemaphore] = {}


def _endpoint_semaphore(config: LlmConfig) -> threading.BoundedSemaphore:
    # Per-endpoint request cap; the first config for an endpoint sets the limit.
    with _semaphore_lock:
        sem = _semaphores.get(config.endpoint_url)
        if sem is None:
            sem = threading.BoundedSemaphore(config.max_concurrency)
            _semaphores[config.endpoint_url] = sem
        return sem


def _post_chat(
    config: LlmConfig, prompt: str, session: requests.Session | None = None
) -> str:
    """One chat-completion HTTP call; transport problems raise BackendUnavailable."""
    headers = {}
    token = os.environ.get(config.auth_env)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    body = {
        "model": config.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": config.temperature,
    }
    http = session or requests
    with _endpoint_semaphore(config):
        try:
            resp = http.post(
                config.endpoint_url, json=body, timeout=config.timeout, headers=headers
            )
        except requests.RequestException as exc:
            raise BackendUnavailable(f"chat endpoint unreachable: {exc}") from exc
    if not 200 <= resp.status_code < 300:
        raise BackendUnavailable(f"chat endpoint returned HTTP {resp.status_code}")
    try:
        data = resp.json()
        content = data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise BackendUnavailable(f"chat endpoint reply has no message content: {exc}") from exc
    if not isinstance(content, str):
        raise BackendUnavailable("chat endpoint message content is not text")
    return content


def complete(
    config: LlmConfig, prompt: str, session: requests.Session | None = None
) -> str:
    """Chat completion with the configured temperature; transport failures are
    retried with the identical prompt up to max_retries times."""
    last: BackendUnavailable | None = None
    for _ in range(config.max_retries + 1):
        try:
            return _post_chat(config, prompt, session)
        except BackendUnavailable as exc:
            last = exc
    raise BackendUnavailable(
        f"chat endpoint failed after {config.max_retries + 1} attempts: {last}"
    )


def run_extraction(
    config: LlmConfig,
    scheme: CategoryScheme,
    sentences: Sequence[str],
    mode: str,
    parent: ParentCategory | None = None,
    language: str = "en",
    template: PromptTemplate | None = None,
    session: requests.Session | None = None,
) -> ParsedExtraction:
    """Prompt the model and parse its reply, re-invoking with the identical
    prompt on transport failures and schema-failing replies. One retry budget
    covers both; the final error is whatever failed last."""
    prompt = build_prompt(scheme, sentences, mode, parent, template, language)
    n_sentences = len(sentences) if mode in ("classify", "both") else None
    require = parent.code if mode == "summarize" and parent else None
    last: Exception | None = None
    for _ in range(config.max_retries + 1):
        try:
            raw = _post_chat(config, prompt, session)
        except BackendUnavailable as exc:
            last = exc
            continue
        try:
            return parse_reply(raw, scheme, n_sentences, require)
        except (MalformedReply, UnknownCategory) as exc:
            last = exc
            continue
    assert last is not None
    raise last


class LlmClassifier(ClassifierBackend):
    """Sentence classification through a chat-completion endpoint."""

    def __init__(
        self,
        config: LlmConfig,
        language: str = "en",
        template: PromptTemplate | None = None,
        session: requests.Session | None = None,
    ):
        self.config = config
        self.language = language
        self.template = template
        self.session = session
        self.name = f"llm:{config.model_name}"

    def classify(self, sentences, scheme):
        if not sentences:
            return []
        extraction = run_extraction(
            self.config,
            scheme,
            [s.text for s in sentences],
            "classify",
            language=self.language,
            template=self.template,
            session=self.session,
        )
        return [
            Prediction(label=label, backend=self.name, raw=extraction.raw_reply)
            for label in extraction.labels
        ]


class LlmSummarizer(SummarizerBackend):
    """Per-category abstractive summarization through a chat-completion endpoint.

    The prompt carries the parent's display name and definition alongside the
    composite text.
    """

    def __init__(
        self,
        config: LlmConfig,
        language: str = "en",
        template: PromptTemplate | None = None,
        scheme: CategoryScheme | None = None,
        session: requests.Session | None = None,
    ):
        self.config = config
        self.language = language
        self.template = template
        self.scheme = scheme or canonical_scheme()
        self.session = session
        self.name = f"llm:{config.model_name}"

    def summarize(self, composite: CompositeSentence) -> str:
        extraction = run_extraction(
            self.config,
            self.scheme,
            [composite.text],
            "summarize",
            parent=composite.parent,
            language=self.language,
            template=self.template,
            session=self.session,
        )
        assert extraction.summaries is not None
        return extraction.summaries[composite.parent.code]
