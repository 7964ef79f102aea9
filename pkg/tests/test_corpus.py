from __future__ import annotations

import json

import pytest
from hypothesis import given, settings, strategies as st

from cogpath.corpus import (
    Corpus,
    FilterConfig,
    Post,
    filter_posts,
    load_corpus,
    load_manifest,
    save_corpus,
    segment,
    split,
    validate_manifest,
    word_count,
)
from cogpath.errors import EmptyCorpus, LabelError, ParseError

from conftest import synthetic_corpus


def _texts(sentences):
    return [s.text for s in sentences]


class TestSegment:
    def test_two_chinese_terminators(self):
        assert _texts(segment("我很累。我想消失。")) == ["我很累。", "我想消失。"]

    def test_no_terminator_falls_back_to_whole_text(self):
        assert _texts(segment("no terminal punctuation")) == ["no terminal punctuation"]

    def test_empty_input(self):
        assert segment("") == []

    def test_newline_splits(self):
        assert _texts(segment("first line\nsecond line")) == ["first line", "second line"]

    def test_terminator_runs_stay_together(self):
        assert _texts(segment("wait... what?! ok.")) == ["wait...", "what?!", "ok."]

    def test_mixed_scripts(self):
        got = _texts(segment("I am tired; 我想休息！then sleep."))
        assert got == ["I am tired;", "我想休息！", "then sleep."]

    def test_indices_and_post_id(self):
        sentences = segment("a. b. c.", post_id="p1")
        assert [(s.post_id, s.index) for s in sentences] == [("p1", 0), ("p1", 1), ("p1", 2)]

    @given(st.text(alphabet="a b。！？!?.;；\n我很累x ", max_size=60))
    @settings(max_examples=200)
    def test_property_coverage_and_contiguity(self, text):
        sentences = segment(text)
        assert all(s.text == s.text.strip() and s.text for s in sentences)
        assert [s.index for s in sentences] == list(range(len(sentences)))
        kept = "".join(ch for s in sentences for ch in s.text if not ch.isspace())
        expected = "".join(ch for ch in text if not ch.isspace())
        assert kept == expected


class TestFilter:
    @staticmethod
    def _en_post(n_words, post_id="p"):
        return Post(post_id, "reddit", "en", " ".join(["word"] * n_words))

    def test_word_boundary_is_strict(self):
        retained, excluded = filter_posts([self._en_post(99), self._en_post(100, "q")])
        assert [p.id for p in retained] == ["q"]
        assert [(e.post.id, e.reason) for e in excluded] == [("p", "below_min_words")]

    def test_chinese_counts_characters(self):
        post = Post("z", "weibo", "zh", "累" * 150)
        assert word_count(post) == 150
        retained, excluded = filter_posts([post])
        assert retained == [post] and excluded == []

    def test_ascii_filter_default_off(self):
        post = Post("z", "weibo", "zh", "累" * 150)
        retained, _ = filter_posts([post])
        assert retained == [post]

    def test_ascii_filter_opt_in(self):
        post = Post("z", "weibo", "zh", "累" * 150)
        retained, excluded = filter_posts([post], FilterConfig(ascii_filter=True))
        assert retained == []
        assert excluded[0].reason == "non_ascii"

    def test_no_silent_drops(self):
        posts = [self._en_post(50, "a"), self._en_post(150, "b"), self._en_post(100, "c")]
        retained, excluded = filter_posts(posts)
        assert {p.id for p in retained} | {e.post.id for e in excluded} == {"a", "b", "c"}
        assert len(retained) + len(excluded) == len(posts)


class TestSplit:
    @staticmethod
    def _posts(n):
        return [Post(f"p{i}", "other", "en", "text") for i in range(n)]

    def test_555_posts_split_333_111_111(self):
        assignment = split(self._posts(555), seed=7)
        assert assignment.counts() == {"train": 333, "val": 111, "test": 111}

    def test_floor_rule_for_five(self):
        assert split(self._posts(5), seed=1).counts() == {"train": 3, "val": 1, "test": 1}

    def test_deterministic_for_seed(self):
        posts = self._posts(100)
        assert split(posts, seed=42).assignment == split(posts, seed=42).assignment

    def test_different_seeds_differ(self):
        posts = self._posts(100)
        assert split(posts, seed=1).assignment != split(posts, seed=2).assignment

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            split([], seed=0)

    def test_bad_ratios(self):
        with pytest.raises(ValueError):
            split(self._posts(10), ratios=(0.5, 0.2, 0.2), seed=0)

    @given(st.integers(min_value=1, max_value=200), st.integers(min_value=0, max_value=2**32))
    @settings(max_examples=100)
    def test_property_partition(self, n, seed):
        posts = self._posts(n)
        assignment = split(posts, seed=seed)
        assert set(assignment.assignment) == {p.id for p in posts}
        counts = assignment.counts()
        assert counts["train"] + counts["val"] + counts["test"] == n


class TestCorpusIO:
    def test_roundtrip(self, tmp_path):
        corpus = synthetic_corpus(5)
        path = tmp_path / "corpus.jsonl"
        save_corpus(corpus, path)
        assert load_corpus(path) == corpus

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "text": "hello.", "source": "other", "language": "en"}\nnot json\n')
        with pytest.raises(ParseError, match="line 2"):
            load_corpus(path)

    def test_cross_parent_child_is_label_error(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        record = {
            "post_id": "a",
            "index": 0,
            "text": "hello.",
            "labels": [{"parent": "A", "children": ["emotional_effect"]}],
        }
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(LabelError, match="a:0"):
            load_corpus(path)

    def test_duplicate_post_id(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        rec = {"id": "a", "text": "x.", "source": "other", "language": "en"}
        path.write_text(json.dumps(rec) + "\n" + json.dumps(rec) + "\n")
        with pytest.raises(ParseError, match="duplicate"):
            load_corpus(path)

    def test_unknown_source_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps({"id": "a", "text": "x.", "source": "forum", "language": "en"}) + "\n")
        with pytest.raises(ParseError):
            load_corpus(path)

    def test_summary_pairs_roundtrip(self, tmp_path):
        path = tmp_path / "pairs.jsonl"
        record = {
            "post_id": "a",
            "parent": "B",
            "source_text": "I always fail.",
            "reference_summary": "Believes they always fail.",
        }
        path.write_text(json.dumps(record) + "\n")
        corpus = load_corpus(path)
        assert len(corpus.summary_pairs) == 1
        out = tmp_path / "out.jsonl"
        save_corpus(corpus, out)
        assert load_corpus(out) == corpus


class TestManifest:
    @pytest.fixture()
    def manifest(self):
        from importlib import resources

        path = resources.files("cogpath.data").joinpath("reference_manifest.json")
        return load_manifest(str(path))

    def test_reference_manifest_passes(self, manifest):
        report = validate_manifest(manifest)
        assert report.ok, report.failures()

    def test_parent_sums(self, manifest):
        report = validate_manifest(manifest)
        by_name = {c.name: c for c in report.checks}
        assert by_name["parent sum: A"].actual == 1590
        assert by_name["parent sum: B"].actual == 1803
        assert by_name["parent sum: C"].actual == 1071
        assert by_name["parent sum: D"].actual == 278

    def test_split_totals(self, manifest):
        report = validate_manifest(manifest)
        by_name = {c.name: c for c in report.checks}
        assert by_name["split total: train"].actual == 2835
        assert by_name["split total: val"].actual == 932
        assert by_name["split total: test"].actual == 975

    def test_grand_total(self, manifest):
        report = validate_manifest(manifest)
        by_name = {c.name: c for c in report.checks}
        assert by_name["grand total: cells"].expected == 4742
        assert by_name["grand total: cells"].ok

    def test_summary_pair_totals(self, manifest):
        report = validate_manifest(manifest)
        by_name = {c.name: c for c in report.checks}
        assert by_name["summary pairs total"].actual == 983 + 326 + 334 == 1643

    def test_corrupted_count_fails(self, manifest):
        data = manifest.to_json()
        data["child_counts"]["life"]["train"] += 1
        from cogpath.corpus import DatasetManifest

        report = validate_manifest(DatasetManifest.from_json(data))
        assert not report.ok
        failed = {c.name for c in report.failures()}
        assert "parent sum: A" in failed and "split total: train" in failed
