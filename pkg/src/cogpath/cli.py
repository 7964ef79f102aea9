"""Command-line surface for batch use.

Exit codes: 0 success, 1 data error, 2 usage error, 3 backend unavailable.
All randomness flows from --seed; machine output only goes to --out paths,
stdout carries human-readable tables. Endpoints and tokens live in a JSON
config file (flags override config; secrets are named by env var, never
passed on the command line).
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import corpus as corpus_mod
from .classifier import (
    ClassifierBackend,
    MockClassifier,
    classify_post,
    prediction_records,
    remote_backend,
)
from .errors import BackendUnavailable, CogpathError, ParseError
from .llm_gateway import LlmClassifier, LlmConfig, LlmSummarizer, load_template_file
from .metrics import (
    classification_report,
    evaluate_summaries,
    render_level_table,
    render_node_table,
    render_summary_table,
    tokenizer_for,
)
from .pathway import IdentitySummarizer, extract_pathway, pathway_to_json
from .taxonomy import canonical_scheme, label_from_records


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"config is not valid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ParseError("config must be a JSON object")
    return data


def _dump_json(obj, out: str) -> None:
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")


def _dump_jsonl(records, out: str) -> None:
    with open(out, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def _mock_fixture(fixture_path: str | None) -> dict:
    if not fixture_path:
        return {}
    gold = corpus_mod.load_corpus(fixture_path)
    fixture = {}
    for ann in gold.annotations:
        fixture[(ann.sentence.post_id, ann.sentence.index)] = ann.gold
        fixture[ann.sentence.text] = ann.gold
    return fixture


def _build_classifier(backend: str, fixture: str | None, config: dict) -> ClassifierBackend:
    if backend == "mock":
        return MockClassifier(_mock_fixture(fixture))
    if backend == "remote":
        endpoint = config.get("classifier_endpoint")
        if not endpoint:
            raise click.UsageError("remote backend needs classifier_endpoint in --config")
        token_env = config.get("classifier_token_env")
        token = os.environ.get(token_env) if token_env else None
        return remote_backend(endpoint, token)
    if backend == "llm":
        llm_config, language, template = _llm_settings(config)
        return LlmClassifier(llm_config, language=language, template=template)
    raise click.UsageError(f"unknown backend {backend!r}")


def _llm_settings(config: dict):
    llm = config.get("llm", {})
    if "endpoint_url" not in llm:
        raise click.UsageError("llm backend needs an llm.endpoint_url in --config")
    fields = {k: llm[k] for k in (
        "endpoint_url", "model_name", "temperature", "max_retries",
        "timeout", "auth_env", "max_concurrency",
    ) if k in llm}
    language = llm.get("language", "en")
    template = load_template_file(llm["template"]) if "template" in llm else None
    return LlmConfig(**fields), language, template


def _build_summarizer(name: str, config: dict):
    if name == "identity":
        return IdentitySummarizer()
    if name == "llm":
        llm_config, language, template = _llm_settings(config)
        return LlmSummarizer(llm_config, language=language, template=template)
    raise click.UsageError(f"unknown summarizer {name!r}")


@click.group()
def cli():
    """Extract and evaluate ABCD cognitive pathways."""


@cli.command()
@click.argument("posts_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def segment(posts_file, out):
    """Segment each post into sentence records."""
    corpus = corpus_mod.load_corpus(posts_file)
    records = []
    for post in corpus.posts:
        for sentence in corpus_mod.segment_post(post):
            records.append(
                {"post_id": sentence.post_id, "index": sentence.index, "text": sentence.text}
            )
    _dump_jsonl(records, out)
    click.echo(f"{len(records)} sentences from {len(corpus.posts)} posts -> {out}")


@cli.command()
@click.argument("posts_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--ratios", default="0.6,0.2,0.2", show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def split(posts_file, seed, ratios, out):
    """Assign posts to train/val/test deterministically."""
    try:
        parts = tuple(float(x) for x in ratios.split(","))
    except ValueError:
        raise click.UsageError(f"cannot parse ratios {ratios!r}")
    if len(parts) != 3:
        raise click.UsageError("ratios must be three comma-separated numbers")
    corpus = corpus_mod.load_corpus(posts_file)
    try:
        assignment = corpus_mod.split(corpus.posts, parts, seed)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    _dump_json(assignment.to_json(), out)
    counts = assignment.counts()
    click.echo(
        f"train/val/test = {counts['train']}/{counts['val']}/{counts['test']} (seed {seed}) -> {out}"
    )


@cli.command()
@click.argument("posts_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--backend", type=click.Choice(["mock", "remote", "llm"]), default="mock", show_default=True)
@click.option("--fixture", type=click.Path(exists=True, dir_okay=False), help="gold corpus for the mock backend")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def classify(posts_file, backend, fixture, config_path, batch_size, out):
    """Classify every sentence of every post; writes prediction records."""
    config = _load_config(config_path)
    classifier = _build_classifier(backend, fixture, config)
    corpus = corpus_mod.load_corpus(posts_file)
    scheme = canonical_scheme()
    records = []
    for post in corpus.posts:
        sentences = corpus_mod.segment_post(post)
        predictions = classify_post(sentences, classifier, scheme, batch_size)
        records.extend(prediction_records(sentences, predictions))
    _dump_jsonl(records, out)
    click.echo(f"{len(records)} predictions -> {out}")


@cli.command()
@click.argument("posts_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--backend", type=click.Choice(["mock", "remote", "llm"]), default="mock", show_default=True)
@click.option("--fixture", type=click.Path(exists=True, dir_okay=False))
@click.option("--summarizer", type=click.Choice(["identity", "llm"]), default="identity", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--separator", default=" ", show_default=False, help="composite sentence separator")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def extract(posts_file, backend, fixture, summarizer, config_path, separator, out):
    """Run the full pipeline per post; writes pathway JSON records."""
    config = _load_config(config_path)
    classifier = _build_classifier(backend, fixture, config)
    summarizer_backend = _build_summarizer(summarizer, config)
    corpus = corpus_mod.load_corpus(posts_file)
    scheme = canonical_scheme()
    records = []
    for post in corpus.posts:
        pathway = extract_pathway(post, classifier, summarizer_backend, scheme, separator)
        for code, message in pathway.failures.items():
            click.echo(f"warning: {post.id}: summarization failed for {code}: {message}", err=True)
        records.append(pathway_to_json(pathway))
    _dump_jsonl(records, out)
    click.echo(f"{len(records)} pathways -> {out}")


def _load_labelled(path: str) -> dict[tuple[str, int], object]:
    corpus = corpus_mod.load_corpus(path)
    return {
        (ann.sentence.post_id, ann.sentence.index): ann.gold
        for ann in corpus.annotations
    }


@cli.command("eval-cls")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False))
def eval_cls(pred_path, gold_path, out):
    """Micro P/R/F1 at parent, child and overall levels plus a per-node table.

    Gold sentences without a prediction count as predicted-empty; predictions
    without gold are ignored.
    """
    scheme = canonical_scheme()
    gold = _load_labelled(gold_path)
    pred = _load_labelled(pred_path)
    if not gold:
        raise ParseError(f"no annotation records in {gold_path}")
    keys = sorted(gold)
    from .taxonomy import SentenceLabel

    gold_labels = [gold[k] for k in keys]
    pred_labels = [pred.get(k, SentenceLabel.empty()) for k in keys]
    report = classification_report(gold_labels, pred_labels, scheme)
    click.echo(render_level_table(report))
    click.echo("")
    click.echo(render_node_table(report, scheme))
    if out:
        _dump_json(report.to_json(), out)


@cli.command("eval-sum")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--language", type=click.Choice(["zh", "en"]), default="en", show_default=True)
@click.option("--name", default="summaries", show_default=True, help="row label for the table")
@click.option("--out", type=click.Path(dir_okay=False))
def eval_sum(pred_path, gold_path, language, name, out):
    """ROUGE-1/2/L and BLEU-4 of generated summaries against references.

    Gold is a corpus file with summary-pair records; predictions are pathway
    records or {"post_id", "parent", "summary"} lines, joined on
    (post_id, parent).
    """
    gold = corpus_mod.load_corpus(gold_path)
    if not gold.summary_pairs:
        raise ParseError(f"no summary-pair records in {gold_path}")
    candidates: dict[tuple[str, str], str] = {}
    with open(pred_path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line_no) from exc
            if "pathway" in obj:
                for code, entry in obj["pathway"].items():
                    if entry.get("summary"):
                        candidates[(obj["post_id"], code)] = entry["summary"]
            elif "summary" in obj:
                candidates[(obj["post_id"], obj["parent"])] = obj["summary"]
            else:
                raise ParseError("unrecognized prediction record", line_no)
    pairs = []
    missing = 0
    for pair in gold.summary_pairs:
        candidate = candidates.get((pair.post_id, pair.parent))
        if candidate is None:
            missing += 1
            candidate = ""
        pairs.append((candidate, pair.reference_summary))
    scores = evaluate_summaries(pairs, tokenizer=tokenizer_for(language))
    if missing:
        click.echo(f"warning: {missing} reference pair(s) had no candidate summary", err=True)
    click.echo(render_summary_table(scores, name))
    if out:
        _dump_json(scores.to_json(), out)


@cli.command("validate-manifest")
@click.argument("manifest_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False))
def validate_manifest_cmd(manifest_file, out):
    """Check a dataset manifest's arithmetic; nonzero exit on failures."""
    manifest = corpus_mod.load_manifest(manifest_file)
    report = corpus_mod.validate_manifest(manifest)
    for check in report.checks:
        mark = "ok " if check.ok else "FAIL"
        click.echo(f"[{mark}] {check.name}: expected {check.expected}, got {check.actual}")
    if out:
        _dump_json(report.to_json(), out)
    if not report.ok:
        raise ParseError(f"{len(report.failures())} manifest check(s) failed")


@cli.command()
@click.argument("report_file", type=click.Path(exists=True, dir_okay=False))
def report(report_file):
    """Render a stored classification report as text tables."""
    with open(report_file, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"report is not valid JSON: {exc.msg}") from exc
    from .metrics import ClassificationReport, LevelReport

    try:
        levels = data["levels"]

        def lvl(name):
            d = levels[name]
            return LevelReport(d["precision"], d["recall"], d["f1"])

        rep = ClassificationReport(
            parent=lvl("parent"),
            child=lvl("child"),
            overall=lvl("overall"),
            per_node={
                k: LevelReport(v["precision"], v["recall"], v["f1"])
                for k, v in data.get("per_node", {}).items()
            },
            level_counts={},
            n_sentences=data.get("n_sentences", 0),
            multi_parent_gold=data.get("multi_parent_sentences", {}).get("gold", 0),
            multi_parent_pred=data.get("multi_parent_sentences", {}).get("pred", 0),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed report file: {exc}") from exc
    click.echo(render_level_table(rep))
    click.echo("")
    click.echo(render_node_table(rep))


@cli.command()
@click.option("--store", "store_path", required=True, type=click.Path(dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--fixture", type=click.Path(exists=True, dir_okay=False), help="gold corpus backing the mock backend")
def serve(store_path, host, port, config_path, fixture):
    """Run the annotation/review HTTP service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    config = _load_config(config_path)
    classifiers: dict[str, ClassifierBackend] = {"mock": MockClassifier(_mock_fixture(fixture))}
    if config.get("classifier_endpoint"):
        token_env = config.get("classifier_token_env")
        token = os.environ.get(token_env) if token_env else None
        classifiers["remote"] = remote_backend(config["classifier_endpoint"], token)
    summarizers = {"identity": IdentitySummarizer()}
    if config.get("llm", {}).get("endpoint_url"):
        llm_config, language, template = _llm_settings(config)
        classifiers["llm"] = LlmClassifier(llm_config, language=language, template=template)
        summarizers["llm"] = LlmSummarizer(llm_config, language=language, template=template)
    token_env = config.get("service_token_env")
    app = create_app(
        ServiceConfig(
            store_path=store_path,
            auth_token=os.environ.get(token_env) if token_env else None,
            cors_origins=tuple(config.get("cors_origins", ())),
            classifiers=classifiers,
            summarizers=summarizers,
        )
    )
    uvicorn.run(app, host=host, port=port)


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        return 130
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except BackendUnavailable as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except CogpathError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
