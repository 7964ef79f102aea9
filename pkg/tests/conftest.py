from __future__ import annotations

import random

import pytest

from cogpath.corpus import AnnotatedSentence, Corpus, Post, Sentence
from cogpath.taxonomy import LabelEntry, SentenceLabel, canonical_scheme


@pytest.fixture(scope="session")
def scheme():
    return canonical_scheme()


def make_label(scheme, *entries):
    """entries: (parent_code, [child_id, ...]) pairs."""
    return SentenceLabel(
        tuple(
            LabelEntry(
                scheme.parent_by_code(code),
                tuple(scheme.child_by_id(c) for c in children),
            )
            for code, children in entries
        )
    )


def random_label(scheme, rng: random.Random, multi_parent_p: float = 0.25) -> SentenceLabel:
    """A random valid label: subset of parents, each with a child subset."""
    codes = [p.code for p in scheme.parents]
    k = 0 if rng.random() < 0.2 else (2 if rng.random() < multi_parent_p else 1)
    chosen = rng.sample(codes, k) if k else []
    entries = []
    for code in chosen:
        children = scheme.children_of(code)
        n = rng.randint(0, min(3, len(children)))
        entries.append((code, [c.id for c in rng.sample(children, n)]))
    return make_label(scheme, *entries)


_WORDS = "calm tired alone lost heavy quiet worth blame fault grey".split()

_LABEL_CYCLE = (
    (),
    (("A", ["social_relation"]),),
    (("B", ["jumping_to_conclusions", "emotional_reasoning"]),),
    (("C", ["emotional_effect"]),),
    (("D", ["habitual_disputation"]),),
    (("A", ["life"]), ("C", ["behavioral_effect"])),
    (("B", ["over_generalization"]),),
    (("D", ["effective_disputation"]),),
)


def synthetic_corpus(n_posts: int = 20, language: str = "en") -> Corpus:
    """Deterministic annotated corpus with unique sentence texts and labels
    drawn from a fixed cycle over all four parents."""
    scheme = canonical_scheme()
    corpus = Corpus()
    cycle = 0
    for p in range(n_posts):
        n_sentences = 3 + p % 4
        texts = []
        for i in range(n_sentences):
            word = _WORDS[(p + i) % len(_WORDS)]
            texts.append(f"post{p} line{i} feels {word} today.")
        post = Post(f"post{p}", "other", language, " ".join(texts))
        corpus.posts.append(post)
        for i, text in enumerate(texts):
            label = make_label(scheme, *_LABEL_CYCLE[cycle % len(_LABEL_CYCLE)])
            cycle += 1
            corpus.annotations.append(
                AnnotatedSentence(Sentence(post.id, i, text), label)
            )
    return corpus


def gold_fixture(corpus: Corpus) -> dict:
    """Mock-backend fixture echoing a corpus's gold labels."""
    fixture = {}
    for ann in corpus.annotations:
        fixture[(ann.sentence.post_id, ann.sentence.index)] = ann.gold
        fixture[ann.sentence.text] = ann.gold
    return fixture
