"""Evaluation metrics.

Classification: micro-averaged precision/recall/F1 over label instances at
the parent level, the child level, and the pooled union of both, plus a
per-node table. Summarization: ROUGE-1/2/L and BLEU-4 averaged over
candidate/reference pairs.

Conventions pinned here: 0/0 precision and recall are 0; BLEU-4 is
unsmoothed and a candidate shorter than four tokens scores 0; Chinese text
is tokenized per character, English on word boundaries.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

from .errors import ContractViolation, EmptyInput
from .taxonomy import CategoryScheme, SentenceLabel, canonical_scheme

LEVELS = ("parent", "child", "pooled")

Tokenizer = Callable[[str], list[str]]

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def tokenize_english(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def tokenize_chinese(text: str) -> list[str]:
    return [ch for ch in text if not ch.isspace()]


def tokenizer_for(language: str) -> Tokenizer:
    return tokenize_chinese if language == "zh" else tokenize_english


class PRF(NamedTuple):
    precision: float
    recall: float
    f: float


def _prf(tp: int, fp: int, fn: int) -> PRF:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return PRF(p, r, f)


def _harmonic(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


def label_instances(label: SentenceLabel, level: str) -> frozenset[str]:
    """The category instances a label asserts at a level. Parent codes and
    child ids never collide, so the pooled level is a plain union."""
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    parents = label.parents()
    if level == "parent":
        return frozenset(parents)
    children = label.children()
    if level == "child":
        return frozenset(children)
    return frozenset(parents | children)


@dataclass
class ConfusionCounts:
    level: str
    tp: Counter = field(default_factory=Counter)
    fp: Counter = field(default_factory=Counter)
    fn: Counter = field(default_factory=Counter)

    def add(self, gold: frozenset[str], pred: frozenset[str]) -> None:
        for cat in gold & pred:
            self.tp[cat] += 1
        for cat in pred - gold:
            self.fp[cat] += 1
        for cat in gold - pred:
            self.fn[cat] += 1

    def totals(self) -> tuple[int, int, int]:
        return sum(self.tp.values()), sum(self.fp.values()), sum(self.fn.values())

    def for_category(self, cat: str) -> tuple[int, int, int]:
        return self.tp[cat], self.fp[cat], self.fn[cat]


def count_confusion(
    gold: Sequence[SentenceLabel], pred: Sequence[SentenceLabel], level: str
) -> ConfusionCounts:
    """Accumulate per-category tp/fp/fn from aligned gold/predicted labels."""
    if len(gold) != len(pred):
        raise ContractViolation(
            f"gold has {len(gold)} labels but predictions have {len(pred)}"
        )
    counts = ConfusionCounts(level)
    for g, p in zip(gold, pred):
        counts.add(label_instances(g, level), label_instances(p, level))
    return counts


@dataclass(frozen=True)
class LevelReport:
    precision: float
    recall: float
    f1: float


def micro_prf(counts: ConfusionCounts) -> LevelReport:
    """Micro-averaged precision/recall/F1 from pooled counts (0 on 0/0)."""
    tp, fp, fn = counts.totals()
    p, r, f = _prf(tp, fp, fn)
    return LevelReport(p, r, f)


@dataclass
class ClassificationReport:
    parent: LevelReport
    child: LevelReport
    overall: LevelReport
    per_node: dict[str, LevelReport]
    level_counts: dict[str, tuple[int, int, int]]
    n_sentences: int
    multi_parent_gold: int
    multi_parent_pred: int

    def to_json(self) -> dict:
        def level(rep: LevelReport) -> dict:
            return {"precision": rep.precision, "recall": rep.recall, "f1": rep.f1}

        return {
            "n_sentences": self.n_sentences,
            "levels": {
                "parent": level(self.parent),
                "child": level(self.child),
                "overall": level(self.overall),
            },
            "level_counts": {
                name: {"tp": tp, "fp": fp, "fn": fn}
                for name, (tp, fp, fn) in self.level_counts.items()
            },
            "per_node": {name: level(rep) for name, rep in self.per_node.items()},
            "multi_parent_sentences": {
                "gold": self.multi_parent_gold,
                "pred": self.multi_parent_pred,
            },
        }


def classification_report(
    gold: Sequence[SentenceLabel],
    pred: Sequence[SentenceLabel],
    scheme: CategoryScheme | None = None,
) -> ClassificationReport:
    """Parent/child levels computed separately; overall is micro over the
    pooled union of parent and child instances. The per-node table covers
    every scheme category in report row order. Sentences carrying more than
    one parent are counted and flagged, not rejected."""
    scheme = scheme or canonical_scheme()
    parent_counts = count_confusion(gold, pred, "parent")
    child_counts = count_confusion(gold, pred, "child")
    pooled_counts = count_confusion(gold, pred, "pooled")

    per_node: dict[str, LevelReport] = {}
    for node in scheme.node_order():
        source = parent_counts if len(node) == 1 else child_counts
        p, r, f = _prf(*source.for_category(node))
        per_node[node] = LevelReport(p, r, f)

    return ClassificationReport(
        parent=micro_prf(parent_counts),
        child=micro_prf(child_counts),
        overall=micro_prf(pooled_counts),
        per_node=per_node,
        level_counts={
            "parent": parent_counts.totals(),
            "child": child_counts.totals(),
            "overall": pooled_counts.totals(),
        },
        n_sentences=len(gold),
        multi_parent_gold=sum(1 for lab in gold if len(lab.parents()) > 1),
        multi_parent_pred=sum(1 for lab in pred if len(lab.parents()) > 1),
    )


def _ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def rouge_n(
    candidate: str, reference: str, n: int, tokenizer: Tokenizer = tokenize_english
) -> PRF:
    """Multiset n-gram overlap. Zero when either side has no n-grams."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cand = _ngrams(tokenizer(candidate), n)
    ref = _ngrams(tokenizer(reference), n)
    if not cand or not ref:
        return PRF(0.0, 0.0, 0.0)
    overlap = sum((Counter(cand) & Counter(ref)).values())
    p = overlap / len(cand)
    r = overlap / len(ref)
    return PRF(p, r, _harmonic(p, r))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for tok_a in a:
        cur = [0]
        for j, tok_b in enumerate(b, start=1):
            if tok_a == tok_b:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(
    candidate: str, reference: str, tokenizer: Tokenizer = tokenize_english
) -> PRF:
    """Longest-common-subsequence F-measure."""
    cand = tokenizer(candidate)
    ref = tokenizer(reference)
    if not cand or not ref:
        return PRF(0.0, 0.0, 0.0)
    lcs = _lcs_length(cand, ref)
    p = lcs / len(cand)
    r = lcs / len(ref)
    return PRF(p, r, _harmonic(p, r))


@dataclass(frozen=True)
class BleuScore:
    value: float
    precisions: tuple[float, float, float, float]
    brevity_penalty: float


def bleu4(
    candidate: str, reference: str, tokenizer: Tokenizer = tokenize_english
) -> BleuScore:
    """Unsmoothed BLEU-4 against a single reference.

    Geometric mean of clipped 1..4-gram precisions times the brevity penalty
    exp(1 - r/c) when the candidate is shorter than the reference. Candidates
    under four tokens score 0 by definition.
    """
    cand = tokenizer(candidate)
    ref = tokenizer(reference)
    precisions = []
    for n in range(1, 5):
        cand_ngrams = _ngrams(cand, n)
        if not cand_ngrams:
            precisions.append(0.0)
            continue
        overlap = sum((Counter(cand_ngrams) & Counter(_ngrams(ref, n))).values())
        precisions.append(overlap / len(cand_ngrams))
    c, r = len(cand), len(ref)
    if c == 0:
        return BleuScore(0.0, tuple(precisions), 0.0)
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    if c < 4 or any(p == 0.0 for p in precisions):
        return BleuScore(0.0, tuple(precisions), bp)
    log_mean = math.fsum(0.25 * math.log(p) for p in precisions)
    return BleuScore(bp * math.exp(log_mean), tuple(precisions), bp)


@dataclass(frozen=True)
class SummaryScores:
    rouge1: PRF
    rouge2: PRF
    rouge_l: PRF
    bleu4: float
    n_pairs: int

    def to_json(self) -> dict:
        def prf(v: PRF) -> dict:
            return {"precision": v.precision, "recall": v.recall, "f": v.f}

        return {
            "n_pairs": self.n_pairs,
            "rouge1": prf(self.rouge1),
            "rouge2": prf(self.rouge2),
            "rouge_l": prf(self.rouge_l),
            "bleu4": self.bleu4,
        }


def evaluate_summaries(
    pairs: Sequence[tuple[str, str]],
    tokenizer: Tokenizer | None = None,
    language: str = "en",
) -> SummaryScores:
    """Arithmetic mean of per-pair ROUGE-1/2/L and BLEU-4 over
    (candidate, reference) pairs. Display formatting multiplies by 100."""
    if not pairs:
        raise EmptyInput("no candidate/reference pairs to evaluate")
    tok = tokenizer or tokenizer_for(language)
    r1s, r2s, rls, bleus = [], [], [], []
    for candidate, reference in pairs:
        r1s.append(rouge_n(candidate, reference, 1, tok))
        r2s.append(rouge_n(candidate, reference, 2, tok))
        rls.append(rouge_l(candidate, reference, tok))
        bleus.append(bleu4(candidate, reference, tok).value)

    def mean_prf(values: list[PRF]) -> PRF:
        k = len(values)
        return PRF(
            sum(v.precision for v in values) / k,
            sum(v.recall for v in values) / k,
            sum(v.f for v in values) / k,
        )

    return SummaryScores(
        rouge1=mean_prf(r1s),
        rouge2=mean_prf(r2s),
        rouge_l=mean_prf(rls),
        bleu4=sum(bleus) / len(bleus),
        n_pairs=len(pairs),
    )


def percent(value: float) -> str:
    """Score in [0,1] rendered the way the tables print it: x100, 2 decimals."""
    return f"{value * 100:.2f}"


def render_level_table(report: ClassificationReport) -> str:
    """Three-row level summary (parent nodes / child nodes / overall)."""
    rows = [
        ("Parent nodes", report.parent),
        ("Child nodes", report.child),
        ("Overall", report.overall),
    ]
    lines = [f"{'Level':<14}{'Precision':>11}{'Recall':>9}{'F1':>9}"]
    for name, rep in rows:
        lines.append(
            f"{name:<14}{percent(rep.precision):>11}{percent(rep.recall):>9}{percent(rep.f1):>9}"
        )
    return "\n".join(lines)


def render_node_table(
    report: ClassificationReport, scheme: CategoryScheme | None = None
) -> str:
    """Per-node table: each parent row followed by its child rows."""
    scheme = scheme or canonical_scheme()
    lines = [f"{'Node':<36}{'Precision':>11}{'Recall':>9}{'F1':>9}"]
    for parent in scheme.parents:
        rep = report.per_node.get(parent.code, LevelReport(0.0, 0.0, 0.0))
        title = f"({parent.code}) {parent.display_name}"
        lines.append(
            f"{title:<36}{percent(rep.precision):>11}{percent(rep.recall):>9}{percent(rep.f1):>9}"
        )
        for child in scheme.children_of(parent):
            rep = report.per_node.get(child.id, LevelReport(0.0, 0.0, 0.0))
            name = f"  {child.display_name}"
            lines.append(
                f"{name:<36}{percent(rep.precision):>11}{percent(rep.recall):>9}{percent(rep.f1):>9}"
            )
    return "\n".join(lines)


def render_summary_table(scores: SummaryScores, name: str = "summaries") -> str:
    """Single-row summary-metric table (Rouge-1/2/L and BLEU-4)."""
    lines = [f"{'Model':<16}{'Rouge-1':>9}{'Rouge-2':>9}{'Rouge-L':>9}{'BLEU-4':>9}"]
    lines.append(
        f"{name:<16}{percent(scores.rouge1.f):>9}{percent(scores.rouge2.f):>9}"
        f"{percent(scores.rouge_l.f):>9}{percent(scores.bleu4):>9}"
    )
    return "\n".join(lines)
