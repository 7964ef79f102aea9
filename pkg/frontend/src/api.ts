// Thin typed client for the review service's /v1 endpoints. The fetch
// implementation is injectable so tests can run against an in-memory server.

import type {
  AnnotationsResponse,
  Disagreement,
  LabelRecords,
  PostDetail,
  PostListItem,
  Scheme,
  StoredPathway,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
    private authToken: string | null = null,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.authToken) headers["Authorization"] = `Bearer ${this.authToken}`;
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = `HTTP ${response.status}`;
      try {
        const data = await response.json();
        if (data && typeof data.detail === "string") detail = data.detail;
      } catch {
        // keep the bare status line
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private async requestText(path: string): Promise<string> {
    const headers: Record<string, string> = {};
    if (this.authToken) headers["Authorization"] = `Bearer ${this.authToken}`;
    const response = await this.fetchImpl(this.baseUrl + path, { headers });
    if (!response.ok) throw new ApiError(response.status, `HTTP ${response.status}`);
    return response.text();
  }

  getScheme(): Promise<Scheme> {
    return this.request("GET", "/v1/scheme");
  }

  listPosts(): Promise<{ posts: PostListItem[] }> {
    return this.request("GET", "/v1/posts");
  }

  getPost(postId: string): Promise<PostDetail> {
    return this.request("GET", `/v1/posts/${encodeURIComponent(postId)}`);
  }

  ingestPost(post: { id: string; source: string; language: string; text: string }) {
    return this.request<{ id: string; sentences: number }>("POST", "/v1/posts", post);
  }

  extract(postId: string, backend = "mock", summarizer = "identity"): Promise<StoredPathway> {
    return this.request("POST", "/v1/extract", {
      post_id: postId,
      backend,
      summarizer,
    });
  }

  getPathway(postId: string): Promise<StoredPathway> {
    return this.request("GET", `/v1/pathways/${encodeURIComponent(postId)}`);
  }

  updatePathway(
    postId: string,
    update: { summaries?: Record<string, string>; approve?: boolean; editor_id: string },
  ): Promise<StoredPathway> {
    return this.request("PUT", `/v1/pathways/${encodeURIComponent(postId)}`, update);
  }

  putAnnotation(body: {
    post_id: string;
    index: number;
    annotator_id: string;
    label: LabelRecords;
  }): Promise<{ id: number; status: string }> {
    return this.request("PUT", "/v1/annotations", body);
  }

  listAnnotations(postId?: string): Promise<AnnotationsResponse> {
    const query = postId ? `?post_id=${encodeURIComponent(postId)}` : "";
    return this.request("GET", `/v1/annotations${query}`);
  }

  postAdjudication(body: {
    post_id: string;
    index: number;
    adjudicator_id: string;
    label: LabelRecords;
  }): Promise<{ id: number; superseded: number[] }> {
    return this.request("POST", "/v1/adjudications", body);
  }

  getDisagreements(): Promise<{ disagreements: Disagreement[] }> {
    return this.request("GET", "/v1/disagreements");
  }

  exportGold(): Promise<string> {
    return this.requestText("/v1/export/gold");
  }
}
