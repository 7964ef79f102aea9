from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from cogpath.errors import ContractViolation, EmptyInput
from cogpath.metrics import (
    ConfusionCounts,
    bleu4,
    classification_report,
    count_confusion,
    evaluate_summaries,
    label_instances,
    micro_prf,
    percent,
    render_level_table,
    render_node_table,
    render_summary_table,
    rouge_l,
    rouge_n,
    tokenize_chinese,
    tokenize_english,
)
from cogpath.taxonomy import SentenceLabel, canonical_scheme

import oracles
from conftest import make_label, random_label

_scheme = canonical_scheme()


def _tok(tokens):
    """Pre-tokenized input: joins with spaces, splits back on spaces."""
    return " ".join(tokens)


class TestTokenizers:
    def test_english_words(self):
        assert tokenize_english("The cat, sat!") == ["the", "cat", "sat"]

    def test_chinese_characters(self):
        assert tokenize_chinese("我很 累。") == ["我", "很", "累", "。"]


class TestMicro:
    def test_spec_counts_example(self):
        counts = ConfusionCounts("parent")
        counts.tp["A"] = 2
        counts.fp["B"] = 1
        report = micro_prf(counts)
        assert report.precision == pytest.approx(2 / 3)
        assert report.recall == 1.0
        assert report.f1 == pytest.approx(0.8)

    def test_all_zero_is_zero(self):
        report = micro_prf(ConfusionCounts("parent"))
        assert (report.precision, report.recall, report.f1) == (0.0, 0.0, 0.0)

    def test_perfect(self):
        counts = ConfusionCounts("parent")
        counts.tp["A"] = 10
        assert micro_prf(counts) == micro_prf(counts)
        assert micro_prf(counts).f1 == 1.0

    def test_count_confusion_example(self):
        gold = [make_label(_scheme, ("A", [])), make_label(_scheme, ("B", []))]
        pred = [make_label(_scheme, ("A", []), ("B", [])), make_label(_scheme, ("B", []))]
        counts = count_confusion(gold, pred, "parent")
        assert counts.totals() == (2, 1, 0)

    def test_empty_predictions(self):
        gold = [make_label(_scheme, ("A", ["life"]), ("B", []))] * 3
        pred = [SentenceLabel.empty()] * 3
        counts = count_confusion(gold, pred, "pooled")
        tp, fp, fn = counts.totals()
        assert (tp, fp) == (0, 0)
        assert fn == 9  # three instances (A, life, B) per sentence

    def test_length_mismatch(self):
        with pytest.raises(ContractViolation):
            count_confusion([SentenceLabel.empty()], [], "parent")

    def test_levels_are_disjoint_views(self):
        label = make_label(_scheme, ("B", ["mental_filter"]))
        assert label_instances(label, "parent") == {"B"}
        assert label_instances(label, "child") == {"mental_filter"}
        assert label_instances(label, "pooled") == {"B", "mental_filter"}

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=100, deadline=None)
    def test_property_matches_oracle(self, seed):
        rng = random.Random(seed)
        n = rng.randint(1, 8)
        gold = [random_label(_scheme, rng) for _ in range(n)]
        pred = [random_label(_scheme, rng) for _ in range(n)]
        for level in ("parent", "child", "pooled"):
            report = micro_prf(count_confusion(gold, pred, level))
            expected = oracles.micro_oracle(
                [label_instances(g, level) for g in gold],
                [label_instances(p, level) for p in pred],
            )
            assert (report.precision, report.recall, report.f1) == expected

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_property_pooled_decomposes(self, seed):
        rng = random.Random(seed)
        n = rng.randint(1, 8)
        gold = [random_label(_scheme, rng) for _ in range(n)]
        pred = [random_label(_scheme, rng) for _ in range(n)]
        parent = count_confusion(gold, pred, "parent").totals()
        child = count_confusion(gold, pred, "child").totals()
        pooled = count_confusion(gold, pred, "pooled").totals()
        assert pooled == tuple(a + b for a, b in zip(parent, child))

    @given(
        st.integers(min_value=0, max_value=20),
        st.integers(min_value=0, max_value=20),
        st.integers(min_value=0, max_value=20),
    )
    def test_property_f1_bounded_by_max(self, tp, fp, fn):
        counts = ConfusionCounts("parent")
        counts.tp["x"], counts.fp["x"], counts.fn["x"] = tp, fp, fn
        report = micro_prf(counts)
        assert report.f1 <= max(report.precision, report.recall) + 1e-12
        assert (report.f1 == 0.0) == (report.precision * report.recall == 0.0)


class TestRouge:
    def test_identical_unigrams(self):
        assert rouge_n("a b c", "a b c", 1) == (1.0, 1.0, 1.0)

    def test_spec_unigram_example(self):
        p, r, f = rouge_n(_tok("abc"), _tok("abd"), 1, tokenize_chinese)
        assert p == pytest.approx(2 / 3)
        assert r == pytest.approx(2 / 3)
        assert f == pytest.approx(2 / 3)

    def test_candidate_shorter_than_n(self):
        assert rouge_n("one two", "one two three", 3) == (0.0, 0.0, 0.0)

    def test_multiset_clipping(self):
        # candidate repeats a token the reference has once
        p, r, f = rouge_n("a a a", "a b c", 1)
        assert p == pytest.approx(1 / 3)
        assert r == pytest.approx(1 / 3)

    def test_rouge_l_identical(self):
        assert rouge_l("x y z", "x y z") == (1.0, 1.0, 1.0)

    def test_rouge_l_spec_example(self):
        p, r, f = rouge_l("a b c d", "a c b d")
        assert p == pytest.approx(3 / 4)
        assert r == pytest.approx(3 / 4)
        assert f == pytest.approx(0.75)

    def test_rouge_l_disjoint(self):
        assert rouge_l("a b", "c d") == (0.0, 0.0, 0.0)

    def test_empty_inputs_safe(self):
        assert rouge_n("", "a b", 1) == (0.0, 0.0, 0.0)
        assert rouge_l("", "") == (0.0, 0.0, 0.0)
        assert bleu4("", "a b c d").value == 0.0


class TestBleu:
    def test_identical(self):
        assert bleu4("a b c d e", "a b c d e").value == pytest.approx(1.0)

    def test_spec_example(self):
        score = bleu4("the cat sat on mat", "the cat sat on the mat")
        assert score.precisions == pytest.approx((1.0, 3 / 4, 2 / 3, 1 / 2))
        assert score.brevity_penalty == pytest.approx(math.exp(-0.2))
        expected = math.exp(-0.2) * (1.0 * (3 / 4) * (2 / 3) * (1 / 2)) ** 0.25
        assert score.value == pytest.approx(expected, abs=1e-12)
        assert round(score.value, 3) == 0.579

    def test_three_token_candidate_scores_zero(self):
        assert bleu4("a b c", "a b c").value == 0.0

    def test_no_overlap(self):
        assert bleu4("a b c d", "e f g h").value == 0.0

    def test_brevity_penalty_only_when_shorter(self):
        longer = bleu4("a b c d e f", "a b c d")
        assert longer.brevity_penalty == 1.0


_token = st.sampled_from(["a", "b", "c", "d", "e"])
_tokens = st.lists(_token, max_size=12)


class TestOracleEquivalence:
    @given(_tokens, _tokens, st.sampled_from([1, 2]))
    @settings(max_examples=200, deadline=None)
    def test_rouge_n_matches_oracle(self, cand, ref, n):
        got = rouge_n(_tok(cand), _tok(ref), n, str.split)
        expected = oracles.rouge_n_oracle(cand, ref, n)
        for a, b in zip(got, expected):
            assert abs(a - b) < 1e-9

    @given(_tokens, _tokens)
    @settings(max_examples=200, deadline=None)
    def test_rouge_l_matches_oracle(self, cand, ref):
        got = rouge_l(_tok(cand), _tok(ref), str.split)
        expected = oracles.rouge_l_oracle(cand, ref)
        for a, b in zip(got, expected):
            assert abs(a - b) < 1e-9

    @given(_tokens, _tokens)
    @settings(max_examples=200, deadline=None)
    def test_bleu_matches_oracle(self, cand, ref):
        got = bleu4(_tok(cand), _tok(ref), str.split).value
        expected = oracles.bleu4_oracle(cand, ref)
        assert abs(got - expected) < 1e-9
        assert 0.0 <= got <= 1.0 + 1e-12


class TestEvaluateSummaries:
    def test_identical_pairs_render_100(self):
        scores = evaluate_summaries([("same text here", "same text here")] * 3)
        assert percent(scores.rouge1.f) == "100.00"

    def test_spec_single_pair(self):
        scores = evaluate_summaries([(_tok("abc"), _tok("abd"))], tokenizer=tokenize_chinese)
        assert percent(scores.rouge1.f) == "66.67"

    def test_mean_of_extremes(self):
        pairs = [("a b c d", "a b c d"), ("x y z w", "q r s t")]
        scores = evaluate_summaries(pairs)
        assert percent(scores.rouge1.f) == "50.00"
        assert percent(scores.bleu4) == "50.00"

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            evaluate_summaries([])

    def test_language_selects_tokenizer(self):
        zh = evaluate_summaries([("我很累", "我很疲惫")], language="zh")
        assert zh.rouge1.f > 0  # character overlap on 我/很


class TestReport:
    def test_gold_echo_is_perfect(self):
        rng = random.Random(0)
        gold = [random_label(_scheme, rng) for _ in range(20)]
        report = classification_report(gold, gold, _scheme)
        assert report.parent.f1 == report.child.f1 == report.overall.f1 == 1.0
        present = {c for lab in gold for c in label_instances(lab, "pooled")}
        for node, rep in report.per_node.items():
            if node in present:
                assert rep == rep.__class__(1.0, 1.0, 1.0)

    def test_per_node_covers_scheme_in_row_order(self):
        report = classification_report([SentenceLabel.empty()], [SentenceLabel.empty()], _scheme)
        assert list(report.per_node) == _scheme.node_order()
        assert len(report.per_node) == 23

    def test_known_counts_fixture(self):
        gold = [
            make_label(_scheme, ("A", ["disease_symptom"])),
            make_label(_scheme, ("B", ["jumping_to_conclusions"])),
            SentenceLabel.empty(),
            make_label(_scheme, ("D", ["habitual_disputation"])),
        ]
        pred = [
            make_label(_scheme, ("A", ["disease_symptom"])),
            make_label(_scheme, ("B", ["emotional_reasoning"])),
            make_label(_scheme, ("C", [])),
            SentenceLabel.empty(),
        ]
        report = classification_report(gold, pred, _scheme)
        # parent: tp=2 (A,B), fp=1 (C), fn=1 (D)
        assert report.parent.precision == pytest.approx(2 / 3)
        assert report.parent.recall == pytest.approx(2 / 3)
        assert report.parent.f1 == pytest.approx(2 / 3)
        # child: tp=1, fp=1, fn=2
        assert report.child.precision == pytest.approx(1 / 2)
        assert report.child.recall == pytest.approx(1 / 3)
        assert report.child.f1 == pytest.approx(0.4)
        # pooled: tp=3, fp=2, fn=3
        assert report.overall.precision == pytest.approx(0.6)
        assert report.overall.recall == pytest.approx(0.5)
        assert report.overall.f1 == pytest.approx(6 / 11)
        assert report.level_counts["overall"] == (3, 2, 3)

    def test_multi_parent_sentences_flagged(self):
        gold = [make_label(_scheme, ("A", []), ("C", []))]
        report = classification_report(gold, [SentenceLabel.empty()], _scheme)
        assert report.multi_parent_gold == 1
        assert report.multi_parent_pred == 0

    def test_render_level_table(self):
        gold = [make_label(_scheme, ("A", []))]
        report = classification_report(gold, gold, _scheme)
        table = render_level_table(report)
        assert "Parent nodes" in table and "Child nodes" in table and "Overall" in table
        assert "100.00" in table

    def test_render_node_table_lists_every_node(self):
        report = classification_report([SentenceLabel.empty()], [SentenceLabel.empty()], _scheme)
        table = render_node_table(report, _scheme)
        assert "(A) Activating Event" in table
        assert "Jumping to conclusions" in table
        assert table.count("\n") == 23  # header + 23 node rows

    def test_render_summary_table(self):
        scores = evaluate_summaries([("a b c d", "a b c d")])
        table = render_summary_table(scores, "identity")
        assert "Rouge-1" in table and "BLEU-4" in table
        assert "100.00" in table
