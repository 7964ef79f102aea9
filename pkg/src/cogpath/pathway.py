"""Pathway assembly: group classified sentences into per-parent composite
sentences and summarize each composite into the final cognitive pathway."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .classifier import ClassifierBackend, Prediction, classify_post
from .corpus import Post, Sentence, segment
from .errors import (
    BackendUnavailable,
    CogpathError,
    ContractViolation,
    SummarizationFailed,
)
from .taxonomy import CategoryScheme, ParentCategory, canonical_scheme


@dataclass(frozen=True)
class CompositeSentence:
    """Document-order concatenation of the sentences labeled with one parent."""

    parent: ParentCategory
    text: str
    member_indices: tuple[int, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.member_indices, self.member_indices[1:])):
            raise ContractViolation("member indices must be strictly increasing")


class SummarizerBackend(ABC):
    name: str = "summarizer"

    @abstractmethod
    def summarize(self, composite: CompositeSentence) -> str:
        """Abstractive summary of one composite sentence."""


class IdentitySummarizer(SummarizerBackend):
    """Echoes the composite text; useful as a deterministic baseline."""

    name = "identity"

    def summarize(self, composite):
        return composite.text


@dataclass
class CognitivePathway:
    """Per-post output: per-parent composites and their summaries.

    Parents with no member sentences are absent from both maps, and the
    summaries' key set is always a subset of the composites'. Failed
    summarizations are recorded per parent instead of losing the rest.
    """

    post_id: str
    composites: dict[str, CompositeSentence]
    summaries: dict[str, str]
    failures: dict[str, str] = field(default_factory=dict)


def assemble(
    sentences: Sequence[Sentence],
    predictions: Sequence[Prediction],
    scheme: CategoryScheme | None = None,
    separator: str = " ",
) -> dict[str, CompositeSentence]:
    """Build the per-parent composites from aligned sentences and predictions.

    A sentence joins the composite of every parent in its label, in document
    order; child labels play no part. Parents with no members are absent.
    """
    if len(sentences) != len(predictions):
        raise ContractViolation(
            f"{len(sentences)} sentences but {len(predictions)} predictions"
        )
    scheme = scheme or canonical_scheme()
    texts: dict[str, list[str]] = {}
    indices: dict[str, list[int]] = {}
    for sentence, prediction in zip(sentences, predictions):
        for code in sorted(prediction.label.parents()):
            texts.setdefault(code, []).append(sentence.text)
            indices.setdefault(code, []).append(sentence.index)
    composites: dict[str, CompositeSentence] = {}
    for parent in scheme.parents:
        if parent.code in texts:
            composites[parent.code] = CompositeSentence(
                parent=parent,
                text=separator.join(texts[parent.code]),
                member_indices=tuple(indices[parent.code]),
            )
    return composites


def summarize_pathway(
    composites: Mapping[str, CompositeSentence], backend: SummarizerBackend
) -> tuple[dict[str, str], dict[str, str]]:
    """Summarize each composite independently.

    Failures are recorded per parent and the successful parents still come
    back; only when every parent fails is SummarizationFailed raised.
    """
    summaries: dict[str, str] = {}
    failures: dict[str, str] = {}
    for code, composite in composites.items():
        try:
            summaries[code] = backend.summarize(composite)
        except CogpathError as exc:
            failures[code] = str(exc)
    if composites and not summaries:
        raise SummarizationFailed(
            "all categories failed: " + "; ".join(f"{c}: {m}" for c, m in failures.items())
        )
    return summaries, failures


def extract_pathway(
    post: Post,
    classifier: ClassifierBackend,
    summarizer: SummarizerBackend,
    scheme: CategoryScheme | None = None,
    separator: str = " ",
    batch_size: int = 32,
) -> CognitivePathway:
    """The two-stage pipeline for one post: segment, classify each sentence,
    assemble per-parent composites, summarize each composite."""
    scheme = scheme or canonical_scheme()
    sentences = segment(post.text, post.language, post.id)
    try:
        predictions = classify_post(sentences, classifier, scheme, batch_size)
    except BackendUnavailable as exc:
        raise BackendUnavailable(str(exc), stage="classify") from exc
    composites = assemble(sentences, predictions, scheme, separator)
    summaries, failures = summarize_pathway(composites, summarizer)
    return CognitivePathway(post.id, composites, summaries, failures)


def pathway_to_json(pathway: CognitivePathway) -> dict:
    """Export shape: {"post_id", "pathway": {code: {composite, summary, member_indices}}}."""
    return {
        "post_id": pathway.post_id,
        "pathway": {
            code: {
                "composite": comp.text,
                "summary": pathway.summaries.get(code),
                "member_indices": list(comp.member_indices),
            }
            for code, comp in pathway.composites.items()
        },
    }
