// In-memory stand-in for the review service, speaking the same /v1 wire
// contract (agreement/conflict semantics, approval locks, error codes).
// Tests drive the UI against this; the integration suite replays the same
// flows against the real service to keep the two honest.

import type { FetchLike } from "../src/api.js";
import { canonicalLabel } from "../src/scheme.js";
import type {
  LabelRecords,
  PostRecord,
  Scheme,
  StoredPathway,
} from "../src/types.js";
import schemeFixture from "./fixtures/scheme.json";

interface StoredAnnotation {
  id: number;
  post_id: string;
  index: number;
  annotator_id: string;
  label: LabelRecords;
  timestamp: number;
}

interface StoredAdjudication {
  post_id: string;
  index: number;
  adjudicator_id: string;
  label: LabelRecords;
  superseded: number[];
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function errorResponse(status: number, detail: string): Response {
  return jsonResponse({ detail }, status);
}

export function segmentText(text: string): string[] {
  const pieces: string[] = [];
  for (const line of text.split("\n")) {
    for (const raw of line.match(/[^。！？!?.;；]*[。！？!?.;；]+|[^。！？!?.;；]+/g) ?? []) {
      const fragment = raw.trim();
      if (fragment) pieces.push(fragment);
    }
  }
  return pieces;
}

export class FakeService {
  scheme: Scheme = schemeFixture as Scheme;
  posts = new Map<string, PostRecord>();
  annotations: StoredAnnotation[] = [];
  adjudications = new Map<string, StoredAdjudication>();
  pathways = new Map<string, StoredPathway>();
  nextSeq = 1;
  extractDown = false;
  requests: { method: string; path: string }[] = [];

  fetch: FetchLike = async (url, init) => {
    const parsed = new URL(url);
    const method = init?.method ?? "GET";
    this.requests.push({ method, path: parsed.pathname });
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    return this.route(method, parsed, body);
  };

  seedPost(post: PostRecord): void {
    this.posts.set(post.id, post);
  }

  seedPathway(pathway: StoredPathway): void {
    this.pathways.set(pathway.post_id, pathway);
  }

  seedProposal(postId: string, index: number, annotatorId: string, label: LabelRecords): void {
    this.annotations.push({
      id: this.nextSeq++,
      post_id: postId,
      index,
      annotator_id: annotatorId,
      label,
      timestamp: Date.now() / 1000,
    });
  }

  private sentenceKey(postId: string, index: number): string {
    return `${postId}:${index}`;
  }

  private latestProposals(postId: string, index: number): Map<string, StoredAnnotation> {
    const latest = new Map<string, StoredAnnotation>();
    for (const annotation of [...this.annotations].sort((a, b) => a.id - b.id)) {
      if (annotation.post_id === postId && annotation.index === index) {
        latest.set(annotation.annotator_id, annotation);
      }
    }
    return latest;
  }

  private sentenceStatus(postId: string, index: number): string {
    if (this.adjudications.has(this.sentenceKey(postId, index))) return "adjudicated";
    const latest = this.latestProposals(postId, index);
    if (latest.size < 2) return "pending";
    const labels = [...latest.values()].map((a) => canonicalLabel(a.label));
    return new Set(labels).size === 1 ? "agreed" : "conflicting";
  }

  private validateLabel(label: unknown): string | null {
    if (!Array.isArray(label)) return "label must be an array";
    const seen = new Set<string>();
    for (const entry of label) {
      const parent = entry?.parent;
      if (!this.scheme.parents.some((p) => p.code === parent)) {
        return `unknown parent '${parent}'`;
      }
      if (seen.has(parent)) return `duplicate parent '${parent}'`;
      seen.add(parent);
      for (const childId of entry.children ?? []) {
        const child = this.scheme.children.find((c) => c.id === childId);
        if (!child) return `unknown child '${childId}'`;
        if (child.parent !== parent) {
          return `child '${childId}' belongs to parent '${child.parent}', not '${parent}'`;
        }
      }
    }
    return null;
  }

  private route(method: string, url: URL, body: any): Response {
    const path = url.pathname;
    if (method === "GET" && path === "/v1/scheme") {
      return jsonResponse(this.scheme);
    }
    if (method === "GET" && path === "/v1/posts") {
      const posts = [...this.posts.values()]
        .sort((a, b) => a.id.localeCompare(b.id))
        .map((post) => ({ ...post, has_pathway: this.pathways.has(post.id) }));
      return jsonResponse({ posts });
    }
    if (method === "POST" && path === "/v1/posts") {
      if (!body?.id || !body?.text) return errorResponse(400, "post needs id and text");
      if (this.posts.has(body.id)) return errorResponse(409, `post '${body.id}' already exists`);
      this.posts.set(body.id, body);
      return jsonResponse({ id: body.id, sentences: segmentText(body.text).length }, 201);
    }
    const postMatch = path.match(/^\/v1\/posts\/([^/]+)$/);
    if (method === "GET" && postMatch) {
      const post = this.posts.get(decodeURIComponent(postMatch[1]));
      if (!post) return errorResponse(404, "unknown post");
      const sentences = segmentText(post.text).map((text, index) => ({ index, text }));
      return jsonResponse({ post, sentences });
    }
    if (method === "POST" && path === "/v1/extract") {
      if (this.extractDown) return errorResponse(503, "backend unavailable");
      const pathway = this.pathways.get(body?.post_id);
      if (!this.posts.has(body?.post_id)) return errorResponse(404, "unknown post");
      if (!pathway) return errorResponse(400, "no seeded pathway in fake");
      return jsonResponse(pathway);
    }
    const pathwayMatch = path.match(/^\/v1\/pathways\/([^/]+)$/);
    if (pathwayMatch) {
      const postId = decodeURIComponent(pathwayMatch[1]);
      const stored = this.pathways.get(postId);
      if (!stored) return errorResponse(404, "no pathway for post");
      if (method === "GET") return jsonResponse(stored);
      if (method === "PUT") {
        if (stored.approved) return errorResponse(409, "pathway is approved and locked");
        for (const [code, text] of Object.entries(body?.summaries ?? {})) {
          if (!(code in stored.pathway)) return errorResponse(400, `no composite for parent ${code}`);
          stored.pathway[code].summary = text as string;
        }
        if (body?.approve) stored.approved = true;
        stored.editor_id = body?.editor_id ?? null;
        return jsonResponse(stored);
      }
    }
    if (method === "PUT" && path === "/v1/annotations") {
      const post = this.posts.get(body?.post_id);
      if (!post) return errorResponse(404, "unknown post");
      const n = segmentText(post.text).length;
      if (typeof body.index !== "number" || body.index < 0 || body.index >= n) {
        return errorResponse(400, "sentence index out of range");
      }
      const violation = this.validateLabel(body.label);
      if (violation) return errorResponse(400, violation);
      const record: StoredAnnotation = {
        id: this.nextSeq++,
        post_id: body.post_id,
        index: body.index,
        annotator_id: body.annotator_id,
        label: body.label,
        timestamp: Date.now() / 1000,
      };
      this.annotations.push(record);
      return jsonResponse({ id: record.id, status: this.sentenceStatus(body.post_id, body.index) });
    }
    if (method === "GET" && path === "/v1/annotations") {
      const filter = url.searchParams.get("post_id");
      const annotations = this.annotations
        .filter((a) => !filter || a.post_id === filter)
        .map((a) => ({ ...a, status: this.sentenceStatus(a.post_id, a.index) }));
      const adjudications = [...this.adjudications.values()].filter(
        (a) => !filter || a.post_id === filter,
      );
      return jsonResponse({ annotations, adjudications });
    }
    if (method === "POST" && path === "/v1/adjudications") {
      const status = this.sentenceStatus(body?.post_id, body?.index);
      if (status !== "conflicting") {
        return errorResponse(409, `sentence is ${status}, only conflicting sentences are adjudicated`);
      }
      const violation = this.validateLabel(body.label);
      if (violation) return errorResponse(400, violation);
      const superseded = [...this.latestProposals(body.post_id, body.index).values()].map(
        (a) => a.id,
      );
      this.adjudications.set(this.sentenceKey(body.post_id, body.index), {
        post_id: body.post_id,
        index: body.index,
        adjudicator_id: body.adjudicator_id,
        label: body.label,
        superseded,
      });
      return jsonResponse({ id: this.nextSeq++, superseded });
    }
    if (method === "GET" && path === "/v1/disagreements") {
      const keys = new Set(this.annotations.map((a) => this.sentenceKey(a.post_id, a.index)));
      const disagreements = [...keys]
        .sort()
        .map((key) => {
          const [postId, indexStr] = key.split(/:(?=\d+$)/);
          const index = Number(indexStr);
          if (this.sentenceStatus(postId, index) !== "conflicting") return null;
          const post = this.posts.get(postId);
          const text = post ? (segmentText(post.text)[index] ?? null) : null;
          return {
            post_id: postId,
            index,
            text,
            proposals: [...this.latestProposals(postId, index).values()].map((a) => ({
              id: a.id,
              annotator_id: a.annotator_id,
              label: a.label,
              timestamp: a.timestamp,
            })),
          };
        })
        .filter((d) => d !== null);
      return jsonResponse({ disagreements });
    }
    if (method === "GET" && path === "/v1/export/gold") {
      const keys = new Set(this.annotations.map((a) => this.sentenceKey(a.post_id, a.index)));
      for (const key of this.adjudications.keys()) keys.add(key);
      const lines: string[] = [];
      for (const key of [...keys].sort()) {
        const [postId, indexStr] = key.split(/:(?=\d+$)/);
        const index = Number(indexStr);
        const status = this.sentenceStatus(postId, index);
        let label: LabelRecords | null = null;
        if (status === "adjudicated") label = this.adjudications.get(key)!.label;
        else if (status === "agreed") {
          label = [...this.latestProposals(postId, index).values()][0].label;
        }
        if (label === null) continue;
        const post = this.posts.get(postId);
        const text = post ? (segmentText(post.text)[index] ?? null) : null;
        lines.push(JSON.stringify({ post_id: postId, index, text, labels: label }));
      }
      return new Response(lines.map((l) => l + "\n").join(""), {
        status: 200,
        headers: { "Content-Type": "application/x-ndjson" },
      });
    }
    return errorResponse(404, `no route for ${method} ${path}`);
  }
}
