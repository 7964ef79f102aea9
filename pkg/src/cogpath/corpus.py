"""Corpus handling: segmentation, preprocessing filters, splits, file IO,
and manifest arithmetic checks."""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import EmptyCorpus, LabelError, ParseError
from .taxonomy import (
    SCHEME_VERSION,
    CategoryScheme,
    SentenceLabel,
    canonical_scheme,
    label_from_records,
    validate_label,
)

POST_SOURCES = ("weibo", "reddit", "other")
LANGUAGES = ("zh", "en")
SPLITS = ("train", "val", "test")

SENTENCE_TERMINATORS = "。！？!?.;；"
_TERM = re.escape(SENTENCE_TERMINATORS)
_SENT_RE = re.compile(rf"[^{_TERM}]*[{_TERM}]+|[^{_TERM}]+")


@dataclass(frozen=True)
class Post:
    id: str
    source: str
    language: str
    text: str


@dataclass(frozen=True)
class Sentence:
    post_id: str
    index: int
    text: str


@dataclass(frozen=True)
class AnnotatedSentence:
    sentence: Sentence
    gold: SentenceLabel


@dataclass(frozen=True)
class SummaryPair:
    post_id: str
    parent: str
    source_text: str
    reference_summary: str


@dataclass
class Corpus:
    posts: list[Post] = field(default_factory=list)
    annotations: list[AnnotatedSentence] = field(default_factory=list)
    summary_pairs: list[SummaryPair] = field(default_factory=list)


def segment(text: str, language: str = "zh", post_id: str = "") -> list[Sentence]:
    """Split a post into sentences on terminal punctuation and newlines.

    Terminator runs stay attached to their sentence, so the concatenated
    output covers the input up to whitespace. Text without any terminator
    comes back as a single sentence; empty input gives an empty list.
    The language tag is accepted for interface symmetry; both scripts share
    the terminator set.
    """
    del language
    pieces: list[str] = []
    for line in text.split("\n"):
        for match in _SENT_RE.finditer(line):
            fragment = match.group().strip()
            if fragment:
                pieces.append(fragment)
    return [Sentence(post_id, i, piece) for i, piece in enumerate(pieces)]


def segment_post(post: Post) -> list[Sentence]:
    return segment(post.text, post.language, post.id)


def word_count(post: Post) -> int:
    """Whitespace tokens for English, non-space characters for Chinese."""
    if post.language == "zh":
        return sum(1 for ch in post.text if not ch.isspace())
    return len(post.text.split())


@dataclass(frozen=True)
class FilterConfig:
    min_words: int = 100
    ascii_filter: bool = False


@dataclass(frozen=True)
class Exclusion:
    post: Post
    reason: str


def filter_posts(
    posts: Sequence[Post], config: FilterConfig = FilterConfig()
) -> tuple[list[Post], list[Exclusion]]:
    """Apply the preprocessing filters; every drop is logged with its reason."""
    retained: list[Post] = []
    excluded: list[Exclusion] = []
    for post in posts:
        if word_count(post) < config.min_words:
            excluded.append(Exclusion(post, "below_min_words"))
        elif config.ascii_filter and not post.text.isascii():
            excluded.append(Exclusion(post, "non_ascii"))
        else:
            retained.append(post)
    return retained, excluded


@dataclass(frozen=True)
class SplitAssignment:
    assignment: Mapping[str, str]
    seed: int

    def counts(self) -> dict[str, int]:
        out = {name: 0 for name in SPLITS}
        for split_name in self.assignment.values():
            out[split_name] += 1
        return out

    def post_ids(self, split_name: str) -> list[str]:
        return sorted(pid for pid, s in self.assignment.items() if s == split_name)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "counts": self.counts(),
            "assignment": dict(sorted(self.assignment.items())),
        }


def split(
    posts: Sequence[Post],
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> SplitAssignment:
    """Deterministic post-level train/val/test split.

    Sizes are floor(r_train * n), floor(r_val * n) and the remainder, which
    reproduces 333/111/111 for 555 posts at the default 6:2:2 ratio.
    """
    if not posts:
        raise EmptyCorpus("cannot split an empty corpus")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {ratios}")
    ids = sorted(post.id for post in posts)
    rng = random.Random(seed)
    rng.shuffle(ids)
    n = len(ids)
    n_train = math.floor(ratios[0] * n)
    n_val = math.floor(ratios[1] * n)
    assignment: dict[str, str] = {}
    for i, post_id in enumerate(ids):
        if i < n_train:
            assignment[post_id] = "train"
        elif i < n_train + n_val:
            assignment[post_id] = "val"
        else:
            assignment[post_id] = "test"
    return SplitAssignment(assignment, seed)


def _parse_post(obj: Mapping, line_no: int, seen_ids: set[str]) -> Post:
    post_id = obj.get("id")
    text = obj.get("text")
    source = obj.get("source", "other")
    language = obj.get("language", "zh")
    if not isinstance(post_id, str) or not post_id:
        raise ParseError("post record needs a non-empty string 'id'", line_no)
    if post_id in seen_ids:
        raise ParseError(f"duplicate post id {post_id!r}", line_no)
    if not isinstance(text, str) or not text:
        raise ParseError(f"post {post_id!r} has empty text", line_no)
    if source not in POST_SOURCES:
        raise ParseError(f"post {post_id!r} has unknown source {source!r}", line_no)
    if language not in LANGUAGES:
        raise ParseError(f"post {post_id!r} has unknown language {language!r}", line_no)
    return Post(post_id, source, language, text)


def _parse_annotation(obj: Mapping, line_no: int, scheme: CategoryScheme) -> AnnotatedSentence:
    post_id = obj.get("post_id")
    index = obj.get("index")
    text = obj.get("text")
    if not isinstance(post_id, str) or not isinstance(index, int) or index < 0:
        raise ParseError("annotation record needs 'post_id' and a non-negative 'index'", line_no)
    if not isinstance(text, str) or not text:
        raise ParseError(f"annotation {post_id}:{index} has empty text", line_no)
    labels = obj.get("labels", [])
    if not isinstance(labels, list):
        raise ParseError(f"annotation {post_id}:{index} has malformed labels", line_no)
    sentence_ref = f"{post_id}:{index}"
    try:
        gold = label_from_records(labels, scheme)
    except Exception as exc:
        raise LabelError(f"{sentence_ref}: {exc}") from exc
    violations = validate_label(gold, scheme)
    if violations:
        raise LabelError(f"{sentence_ref}: " + "; ".join(violations))
    return AnnotatedSentence(Sentence(post_id, index, text), gold)


def _parse_summary_pair(obj: Mapping, line_no: int, scheme: CategoryScheme) -> SummaryPair:
    post_id = obj.get("post_id", "")
    parent = obj.get("parent")
    source_text = obj.get("source_text")
    reference = obj.get("reference_summary")
    try:
        scheme.parent_by_code(str(parent))
    except Exception as exc:
        raise ParseError(f"summary pair has unknown parent {parent!r}", line_no) from exc
    if not isinstance(source_text, str) or not source_text:
        raise ParseError("summary pair has empty source_text", line_no)
    if not isinstance(reference, str) or not reference:
        raise ParseError("summary pair has empty reference_summary", line_no)
    return SummaryPair(str(post_id), str(parent), source_text, reference)


def load_corpus(path: str | Path, scheme: CategoryScheme | None = None) -> Corpus:
    """Read a line-delimited corpus file (posts, annotations, summary pairs).

    Raises ParseError with the offending line number on malformed records and
    LabelError when an annotation violates the category hierarchy.
    """
    scheme = scheme or canonical_scheme()
    corpus = Corpus()
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line_no) from exc
            if not isinstance(obj, dict):
                raise ParseError("record is not a JSON object", line_no)
            if "reference_summary" in obj:
                corpus.summary_pairs.append(_parse_summary_pair(obj, line_no, scheme))
            elif "index" in obj:
                corpus.annotations.append(_parse_annotation(obj, line_no, scheme))
            elif "id" in obj:
                post = _parse_post(obj, line_no, seen_ids)
                seen_ids.add(post.id)
                corpus.posts.append(post)
            else:
                raise ParseError("unrecognized record shape", line_no)
    return corpus


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back out; save then load round-trips the data model."""
    with open(path, "w", encoding="utf-8") as fh:
        for post in corpus.posts:
            fh.write(_dumps({
                "id": post.id,
                "source": post.source,
                "language": post.language,
                "text": post.text,
            }) + "\n")
        for ann in corpus.annotations:
            fh.write(_dumps(annotation_record(ann)) + "\n")
        for pair in corpus.summary_pairs:
            fh.write(_dumps({
                "post_id": pair.post_id,
                "parent": pair.parent,
                "source_text": pair.source_text,
                "reference_summary": pair.reference_summary,
            }) + "\n")


def annotation_record(ann: AnnotatedSentence) -> dict:
    return {
        "post_id": ann.sentence.post_id,
        "index": ann.sentence.index,
        "text": ann.sentence.text,
        "labels": ann.gold.to_records(),
    }


def _dumps(obj: Mapping) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


@dataclass(frozen=True)
class ManifestCheck:
    name: str
    expected: object
    actual: object

    @property
    def ok(self) -> bool:
        return self.expected == self.actual


@dataclass
class ManifestReport:
    checks: list[ManifestCheck]

    @property
    def ok(self) -> bool:
        return all(check.ok for check in self.checks)

    def failures(self) -> list[ManifestCheck]:
        return [check for check in self.checks if not check.ok]

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [
                {"name": c.name, "expected": c.expected, "actual": c.actual, "ok": c.ok}
                for c in self.checks
            ],
        }


@dataclass(frozen=True)
class DatasetManifest:
    """Per-child, per-split sentence counts plus the declared totals."""

    child_counts: Mapping[str, Mapping[str, int]]
    parent_sums: Mapping[str, int]
    split_totals: Mapping[str, int]
    total_sentences: int
    summary_pairs: Mapping[str, int] | None = None
    scheme_version: str = SCHEME_VERSION

    @classmethod
    def from_json(cls, data: Mapping) -> "DatasetManifest":
        try:
            return cls(
                child_counts={k: dict(v) for k, v in data["child_counts"].items()},
                parent_sums=dict(data["parent_sums"]),
                split_totals=dict(data["split_totals"]),
                total_sentences=int(data["total_sentences"]),
                summary_pairs=dict(data["summary_pairs"]) if data.get("summary_pairs") else None,
                scheme_version=str(data.get("scheme_version", SCHEME_VERSION)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed manifest: {exc}") from exc

    def to_json(self) -> dict:
        out = {
            "scheme_version": self.scheme_version,
            "child_counts": {k: dict(v) for k, v in self.child_counts.items()},
            "parent_sums": dict(self.parent_sums),
            "split_totals": dict(self.split_totals),
            "total_sentences": self.total_sentences,
        }
        if self.summary_pairs is not None:
            out["summary_pairs"] = dict(self.summary_pairs)
        return out


def load_manifest(path: str | Path) -> DatasetManifest:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"manifest is not valid JSON: {exc.msg}") from exc
    return DatasetManifest.from_json(data)


def validate_manifest(
    manifest: DatasetManifest, scheme: CategoryScheme | None = None
) -> ManifestReport:
    """Check the manifest's arithmetic: per-parent sums, per-split column
    sums, the grand total, and (when present) the summary-pair splits.
    Failures are report entries, never exceptions."""
    scheme = scheme or canonical_scheme()
    checks: list[ManifestCheck] = []
    known_children = {c.id for c in scheme.children}
    for child_id in manifest.child_counts:
        if child_id not in known_children:
            checks.append(ManifestCheck(f"known child id: {child_id}", True, False))

    def cell(child_id: str, split_name: str) -> int:
        return int(manifest.child_counts.get(child_id, {}).get(split_name, 0))

    for parent in scheme.parents:
        actual = sum(
            cell(child.id, s) for child in scheme.children_of(parent) for s in SPLITS
        )
        expected = manifest.parent_sums.get(parent.code)
        checks.append(ManifestCheck(f"parent sum: {parent.code}", expected, actual))

    for split_name in SPLITS:
        actual = sum(cell(c.id, split_name) for c in scheme.children)
        expected = manifest.split_totals.get(split_name)
        checks.append(ManifestCheck(f"split total: {split_name}", expected, actual))

    grand = sum(cell(c.id, s) for c in scheme.children for s in SPLITS)
    checks.append(ManifestCheck("grand total: cells", manifest.total_sentences, grand))
    checks.append(
        ManifestCheck(
            "grand total: parent sums",
            manifest.total_sentences,
            sum(manifest.parent_sums.values()),
        )
    )
    checks.append(
        ManifestCheck(
            "grand total: split totals",
            manifest.total_sentences,
            sum(manifest.split_totals.values()),
        )
    )

    if manifest.summary_pairs is not None:
        declared = manifest.summary_pairs
        actual = sum(int(declared.get(s, 0)) for s in SPLITS)
        checks.append(
            ManifestCheck("summary pairs total", declared.get("total"), actual)
        )
    return ManifestReport(checks)
