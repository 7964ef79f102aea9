"""HTTP service: pipeline endpoints plus the annotation and adjudication
workflow, persisted in a single append-only record log.

Storage model: every mutation appends one JSON line; the full state is
rebuilt by replaying the log at startup. A corrupt tail recovers up to the
last valid record with a warning. Mutations are serialized through one
lock (single writer); readers take the same lock briefly so they always
see a pre- or post-write state, never a torn one.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from .classifier import (
    ClassifierBackend,
    MockClassifier,
    classify_post,
    prediction_records,
)
from .corpus import LANGUAGES, POST_SOURCES, Post, segment
from .errors import BackendUnavailable, SummarizationFailed, UnknownCategory
from .metrics import classification_report
from .pathway import (
    CognitivePathway,
    IdentitySummarizer,
    SummarizerBackend,
    assemble,
    pathway_to_json,
    summarize_pathway,
)
from .taxonomy import (
    CategoryScheme,
    canonical_scheme,
    label_from_records,
    scheme_to_json,
    validate_label,
)

logger = logging.getLogger(__name__)


@dataclass
class ServiceConfig:
    store_path: str | Path
    auth_token: str | None = None
    cors_origins: tuple[str, ...] = ()
    classifiers: Mapping[str, ClassifierBackend] = field(default_factory=dict)
    summarizers: Mapping[str, SummarizerBackend] = field(default_factory=dict)
    scheme: CategoryScheme = field(default_factory=canonical_scheme)


class EventLog:
    """Append-only line-delimited JSON record log."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def replay(self) -> tuple[list[dict], bool]:
        """All valid records from the start of the log. Stops at the first
        unparseable line and reports the truncation."""
        if not self.path.exists():
            return [], False
        records: list[dict] = []
        truncated = False
        with open(self.path, encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    record = json.loads(raw)
                except json.JSONDecodeError:
                    truncated = True
                    break
                if not isinstance(record, dict):
                    truncated = True
                    break
                records.append(record)
        return records, truncated

    def append(self, record: dict) -> None:
        line = json.dumps(record, ensure_ascii=False, sort_keys=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())


class Store:
    """In-memory state over the event log. Replay is deterministic: the same
    log file always reconstructs the same state hash."""

    def __init__(self, path: str | Path):
        self.log = EventLog(path)
        self.lock = threading.RLock()
        self.posts: dict[str, dict] = {}
        self.annotations: dict[int, dict] = {}
        self.adjudications: dict[str, dict] = {}
        self.pathways: dict[str, dict] = {}
        self.next_seq = 1
        records, truncated = self.log.replay()
        for record in records:
            self._apply(record)
        self.recovered_truncated = truncated
        if truncated:
            logger.warning(
                "record log %s had a corrupt tail; recovered %d records",
                self.log.path,
                len(records),
            )

    @staticmethod
    def _sentence_key(post_id: str, index: int) -> str:
        return f"{post_id}:{index}"

    def _apply(self, record: dict) -> None:
        kind = record.get("kind")
        seq = int(record.get("seq", 0))
        self.next_seq = max(self.next_seq, seq + 1)
        if kind == "post":
            self.posts[record["post"]["id"]] = record["post"]
        elif kind == "annotation":
            self.annotations[seq] = record
        elif kind == "adjudication":
            key = self._sentence_key(record["post_id"], record["index"])
            self.adjudications[key] = record
        elif kind == "pathway":
            self.pathways[record["post_id"]] = {
                "post_id": record["post_id"],
                "backend": record["backend"],
                "pathway": record["pathway"],
                "predictions": record["predictions"],
                "approved": False,
                "editor_id": None,
            }
        elif kind == "pathway_update":
            stored = self.pathways.get(record["post_id"])
            if stored is None:
                return
            for code, text in record.get("summaries", {}).items():
                if code in stored["pathway"]:
                    stored["pathway"][code]["summary"] = text
            if record.get("approve"):
                stored["approved"] = True
            stored["editor_id"] = record.get("editor_id")

    def append(self, record: dict) -> dict:
        with self.lock:
            record = dict(record)
            record["seq"] = self.next_seq
            self.log.append(record)
            self._apply(record)
            return record

    def snapshot(self) -> dict:
        with self.lock:
            return {
                "posts": self.posts,
                "annotations": {str(k): v for k, v in sorted(self.annotations.items())},
                "adjudications": dict(sorted(self.adjudications.items())),
                "pathways": dict(sorted(self.pathways.items())),
            }

    def state_hash(self) -> str:
        payload = json.dumps(self.snapshot(), ensure_ascii=False, sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    # -- annotation/adjudication views ------------------------------------

    def latest_proposals(self, key: str) -> dict[str, dict]:
        """Latest proposal per annotator for one sentence."""
        out: dict[str, dict] = {}
        for seq in sorted(self.annotations):
            record = self.annotations[seq]
            if self._sentence_key(record["post_id"], record["index"]) == key:
                out[record["annotator_id"]] = record
        return out

    def sentence_keys(self) -> set[str]:
        return {
            self._sentence_key(r["post_id"], r["index"])
            for r in self.annotations.values()
        }

    def sentence_status(self, key: str) -> str:
        """'adjudicated' | 'agreed' | 'conflicting' | 'pending'."""
        if key in self.adjudications:
            return "adjudicated"
        proposals = self.latest_proposals(key)
        if len(proposals) < 2:
            return "pending"
        labels = {json.dumps(p["label"], sort_keys=True) for p in proposals.values()}
        return "agreed" if len(labels) == 1 else "conflicting"

    def disagreements(self) -> list[dict]:
        out = []
        for key in sorted(self.sentence_keys()):
            if self.sentence_status(key) != "conflicting":
                continue
            proposals = self.latest_proposals(key)
            post_id, index = key.rsplit(":", 1)
            out.append(
                {
                    "post_id": post_id,
                    "index": int(index),
                    "text": self._sentence_text(post_id, int(index)),
                    "proposals": [
                        {
                            "id": p["seq"],
                            "annotator_id": p["annotator_id"],
                            "label": p["label"],
                            "timestamp": p["timestamp"],
                        }
                        for p in sorted(proposals.values(), key=lambda r: r["seq"])
                    ],
                }
            )
        return out

    def gold_records(self) -> list[dict]:
        """Adjudicated labels plus agreed identical pairs; conflicting and
        single-annotator sentences are excluded."""
        out = []
        for key in sorted(self.sentence_keys() | set(self.adjudications)):
            status = self.sentence_status(key)
            post_id, index_str = key.rsplit(":", 1)
            index = int(index_str)
            if status == "adjudicated":
                label = self.adjudications[key]["label"]
            elif status == "agreed":
                proposals = self.latest_proposals(key)
                label = next(iter(proposals.values()))["label"]
            else:
                continue
            out.append(
                {
                    "post_id": post_id,
                    "index": index,
                    "text": self._sentence_text(post_id, index),
                    "labels": label,
                }
            )
        out.sort(key=lambda r: (r["post_id"], r["index"]))
        return out

    def _sentence_text(self, post_id: str, index: int) -> str | None:
        post = self.posts.get(post_id)
        if post is None:
            return None
        sentences = segment(post["text"], post["language"], post_id)
        if 0 <= index < len(sentences):
            return sentences[index].text
        return None


def _error(status: int, detail: str) -> JSONResponse:
    return JSONResponse({"detail": detail}, status_code=status)


def create_app(config: ServiceConfig) -> FastAPI:
    scheme = config.scheme
    store = Store(config.store_path)
    classifiers = dict(config.classifiers) or {"mock": MockClassifier()}
    summarizers = dict(config.summarizers)
    summarizers.setdefault("identity", IdentitySummarizer())

    app = FastAPI(title="cogpath service")
    app.state.store = store
    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    def unauthorized(request: Request) -> JSONResponse | None:
        if config.auth_token is None:
            return None
        header = request.headers.get("authorization", "")
        if header != f"Bearer {config.auth_token}":
            return _error(401, "missing or invalid bearer token")
        return None

    async def read_body(request: Request) -> dict | JSONResponse:
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body is not valid JSON")
        if not isinstance(body, dict):
            return _error(400, "request body must be a JSON object")
        return body

    @app.get("/v1/scheme")
    def get_scheme(request: Request):
        if (resp := unauthorized(request)) is not None:
            return resp
        return scheme_to_json(scheme)

    @app.get("/v1/posts")
    def list_posts(request: Request):
        if (resp := unauthorized(request)) is not None:
            return resp
        with store.lock:
            posts = sorted(store.posts.values(), key=lambda p: p["id"])
            return {
                "posts": [
                    {**post, "has_pathway": post["id"] in store.pathways}
                    for post in posts
                ]
            }

    @app.post("/v1/posts")
    async def ingest_post(request: Request):
        if (resp := unauthorized(request)) is not None:
            return resp
        body = await read_body(request)
        if isinstance(body, JSONResponse):
            return body
        post_id = body.get("id")
        text = body.get("text")
        source = body.get("source", "other")
        language = body.get("language", "zh")
        if not isinstance(post_id, str) or not post_id:
            return _error(400, "post needs a non-empty string id")
        if not isinstance(text, str) or not text:
            return _error(400, "post needs non-empty text")
        if source not in POST_SOURCES:
            return _error(400, f"unknown source {source!r}")
        if language not in LANGUAGES:
            return _error(400, f"unknown language {language!r}")
        with store.lock:
            if post_id in store.posts:
                return _error(409, f"post {post_id!r} already exists")
            record = store.append(
                {
                    "kind": "post",
                    "post": {"id": post_id, "source": source, "language": language, "text": text},
                    "timestamp": time.time(),
                }
            )
        n = len(segment(text, language, post_id))
        return JSONResponse({"id": post_id, "sentences": n, "seq": record["seq"]}, status_code=201)

    @app.get("/v1/posts/{post_id}")
    def get_post(post_id: str, request: Request):
        if (resp := unauthorized(request)) is not None:
            return resp
        with store.lock:
            post = store.posts.get(post_id)
            if post is None:
                return _error(404, f"unknown post {post_id!r}")
            sentences = segment(post["text"], post["language"], post_id)
            return {
                "post": post,
                "sentences": [{"index": s.index, "text": s.text} for s in sentences],
            }

    @app.post("/v1/extract")
    async def extract(request: Request):
        if (resp := unauthorized(request)) is not None:
            return resp
        body = await read_body(request)
        if isinstance(body, JSONResponse):
            return body
        post_id = body.get("post_id")
        backend_name = body.get("backend", "mock")
        summarizer_name = body.get("summarizer", "identity")
        with store.lock:
            post_data = store.posts.get(post_id)
        if post_data is None:
            return _error(404, f"unknown post {post_id!r}")
        backend = classifiers.get(backend_name)
        if backend is None:
            return _error(400, f"unknown classifier backend {backend_name!r}")
        summarizer = summarizers.get(summarizer_name)
        if summarizer is None:
            return _error(400, f"unknown summarizer {summarizer_name!r}")
        post = Post(**post_data)
        sentences = segment(post.text, post.language, post.id)
        try:
            predictions = classify_post(sentences, backend, scheme)
            composites = assemble(sentences, predictions, scheme)
            summaries, failures = summarize_pathway(composites, summarizer)
        except (BackendUnavailable, SummarizationFailed) as exc:
            return _error(503, str(exc))
        pathway = CognitivePathway(post.id, composites, summaries, failures)
        record = store.append(
            {
                "kind": "pathway",
                "post_id": post.id,
                "backend": backend_name,
                "pathway": pathway_to_json(pathway)["pathway"],
                "predictions": prediction_records(sentences, predictions),
                "timestamp": time.time(),
            }
        )
        with store.lock:
            return {"post_id": post.id, **store.pathways[post.id], "seq": record["seq"]}

    @app.get("/v1/pathways/{post_id}")
    def get_pathway(post_id: str, request: Request):
        if (resp := unauthorized(request)) is not None:
            return resp
        with store.lock:
            stored = store.pathways.get(post_id)
            if stored is None:
                return _error(404, f"no pathway for post {post_id!r}")
            return stored

    @app.put("/v1/pathways/{post_id}")
    async def update_pathway(post_id: str, request: Request):
        if (resp := unauthorized(request)) is not None:
            return resp
        body = await read_body(request)
        if isinstance(body, JSONResponse):
            return body
        summaries = body.get("summaries", {})
        approve = bool(body.get("approve", False))
        editor_id = body.get("editor_id")
        if not isinstance(summaries, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in summaries.items()
        ):
            return _error(400, "summaries must map parent codes to text")
        with store.lock:
            stored = store.pathways.get(post_id)
            if stored is None:
                return _error(404, f"no pathway for post {post_id!r}")
            if stored["approved"]:
                return _error(409, "pathway is approved and locked")
            unknown = [code for code in summaries if code not in stored["pathway"]]
            if unknown:
                return _error(400, f"no composite for parent(s) {unknown}")
            store.append(
                {
                    "kind": "pathway_update",
                    "post_id": post_id,
                    "summaries": summaries,
                    "approve": approve,
                    "editor_id": editor_id,
                    "timestamp": time.time(),
                }
            )
            return store.pathways[post_id]

    def _validated_label(body: dict) -> tuple[list, None] | tuple[None, JSONResponse]:
        labels = body.get("label", [])
        if not isinstance(labels, list):
            return None, _error(400, "label must be an array of {parent, children} entries")
        try:
            label = label_from_records(labels, scheme)
        except UnknownCategory as exc:
            return None, _error(400, str(exc))
        violations = validate_label(label, scheme)
        if violations:
            return None, _error(400, "; ".join(violations))
        return label.to_records(), None

    def _sentence_ref(body: dict) -> tuple[tuple[str, int] | None, JSONResponse | None]:
        post_id = body.get("post_id")
        index = body.get("index")
        if not isinstance(post_id, str) or not isinstance(index, int) or index < 0:
            return None, _error(400, "need post_id and a non-negative sentence index")
        with store.lock:
            post = store.posts.get(post_id)
        if post is None:
            return None, _error(404, f"unknown post {post_id!r}")
        n = len(segment(post["text"], post["language"], post_id))
        if index >= n:
            return None, _error(400, f"post {post_id!r} has {n} sentences; index {index} is out of range")
        return (post_id, index), None

    @app.put("/v1/annotations")
    async def put_annotation(request: Request):
        if (resp := unauthorized(request)) is not None:
            return resp
        body = await read_body(request)
        if isinstance(body, JSONResponse):
            return body
        ref, err = _sentence_ref(body)
        if err is not None:
            return err
        annotator_id = body.get("annotator_id")
        if not isinstance(annotator_id, str) or not annotator_id:
            return _error(400, "need a non-empty annotator_id")
        label_records, err = _validated_label(body)
        if err is not None:
            return err
        post_id, index = ref
        record = store.append(
            {
                "kind": "annotation",
                "post_id": post_id,
                "index": index,
                "annotator_id": annotator_id,
                "label": label_records,
                "status": "proposed",
                "timestamp": time.time(),
            }
        )
        key = Store._sentence_key(post_id, index)
        with store.lock:
            return {"id": record["seq"], "status": store.sentence_status(key)}

    @app.get("/v1/annotations")
    def list_annotations(request: Request, post_id: str | None = None):
        if (resp := unauthorized(request)) is not None:
            return resp
        with store.lock:
            records = [
                {
                    "id": r["seq"],
                    "post_id": r["post_id"],
                    "index": r["index"],
                    "annotator_id": r["annotator_id"],
                    "label": r["label"],
                    "status": store.sentence_status(
                        Store._sentence_key(r["post_id"], r["index"])
                    ),
                    "timestamp": r["timestamp"],
                }
                for r in store.annotations.values()
                if post_id is None or r["post_id"] == post_id
            ]
            adjudicated = [
                {
                    "post_id": r["post_id"],
                    "index": r["index"],
                    "adjudicator_id": r["adjudicator_id"],
                    "label": r["label"],
                }
                for key, r in sorted(store.adjudications.items())
                if post_id is None or r["post_id"] == post_id
            ]
        records.sort(key=lambda r: r["id"])
        return {"annotations": records, "adjudications": adjudicated}

    @app.post("/v1/adjudications")
    async def post_adjudication(request: Request):
        if (resp := unauthorized(request)) is not None:
            return resp
        body = await read_body(request)
        if isinstance(body, JSONResponse):
            return body
        ref, err = _sentence_ref(body)
        if err is not None:
            return err
        adjudicator_id = body.get("adjudicator_id")
        if not isinstance(adjudicator_id, str) or not adjudicator_id:
            return _error(400, "need a non-empty adjudicator_id")
        label_records, err = _validated_label(body)
        if err is not None:
            return err
        post_id, index = ref
        key = Store._sentence_key(post_id, index)
        with store.lock:
            status = store.sentence_status(key)
            if status != "conflicting":
                return _error(
                    409, f"sentence {key} is {status}, only conflicting sentences are adjudicated"
                )
            superseded = [p["seq"] for p in store.latest_proposals(key).values()]
            record = store.append(
                {
                    "kind": "adjudication",
                    "post_id": post_id,
                    "index": index,
                    "adjudicator_id": adjudicator_id,
                    "label": label_records,
                    "superseded": sorted(superseded),
                    "timestamp": time.time(),
                }
            )
        return {"id": record["seq"], "superseded": record["superseded"]}

    @app.get("/v1/disagreements")
    def get_disagreements(request: Request):
        if (resp := unauthorized(request)) is not None:
            return resp
        with store.lock:
            return {"disagreements": store.disagreements()}

    @app.get("/v1/export/gold")
    def export_gold(request: Request):
        if (resp := unauthorized(request)) is not None:
            return resp
        with store.lock:
            records = store.gold_records()
        body = "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records)
        return PlainTextResponse(body, media_type="application/x-ndjson")

    @app.get("/v1/reports/classification")
    def report_classification(request: Request):
        if (resp := unauthorized(request)) is not None:
            return resp
        with store.lock:
            gold = {
                (r["post_id"], r["index"]): r["labels"] for r in store.gold_records()
            }
            predicted: dict[tuple[str, int], list] = {}
            for stored in store.pathways.values():
                for rec in stored["predictions"]:
                    predicted[(rec["post_id"], rec["index"])] = rec["labels"]
        keys = sorted(set(gold) & set(predicted))
        gold_labels = [label_from_records(gold[k], scheme) for k in keys]
        pred_labels = [label_from_records(predicted[k], scheme) for k in keys]
        report = classification_report(gold_labels, pred_labels, scheme)
        return {"n_sentences": len(keys), "report": report.to_json()}

    @app.get("/v1/health")
    def health(request: Request):
        if (resp := unauthorized(request)) is not None:
            return resp
        return {
            "status": "ok",
            "recovered_truncated": store.recovered_truncated,
            "state_hash": store.state_hash(),
        }

    return app
