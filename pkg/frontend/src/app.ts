// Application state and actions. All durable state lives server-side; this
// object only caches the latest fetches and re-renders after every mutation,
// so a hard refresh loses nothing but an unsaved edit. Conflicts (409) are
// surfaced as notices, never merged silently.

import { ApiClient, ApiError } from "./api.js";
import {
  renderDisagreementQueue,
  renderLabelEditor,
  renderNotice,
  renderPathwayPanel,
  renderPostList,
  renderSentences,
} from "./render.js";
import { SchemeIndex, labelsEqual } from "./scheme.js";
import type {
  AnnotationsResponse,
  Disagreement,
  LabelRecords,
  PostDetail,
  PostListItem,
  StoredPathway,
} from "./types.js";

export interface RenderSink {
  postList(html: string): void;
  postView(html: string): void;
  editor(html: string): void;
  pathway(html: string): void;
  queue(html: string): void;
  notice(html: string): void;
}

export class ReviewApp {
  scheme: SchemeIndex | null = null;
  posts: PostListItem[] = [];
  currentPost: PostDetail | null = null;
  annotations: AnnotationsResponse = { annotations: [], adjudications: [] };
  pathway: StoredPathway | null = null;
  disagreements: Disagreement[] = [];
  notice: string | null = null;

  editingIndex: number | null = null;
  editingParent: string | null = null;

  constructor(
    private client: ApiClient,
    private sink: RenderSink,
    public annotatorId: string = "reviewer",
  ) {}

  async start(): Promise<void> {
    this.scheme = new SchemeIndex(await this.client.getScheme());
    await this.refreshPosts();
    await this.refreshQueue();
    this.renderAll();
  }

  async refreshPosts(): Promise<void> {
    this.posts = (await this.client.listPosts()).posts;
  }

  async refreshQueue(): Promise<void> {
    this.disagreements = (await this.client.getDisagreements()).disagreements;
  }

  async openPost(postId: string): Promise<void> {
    this.currentPost = await this.client.getPost(postId);
    this.annotations = await this.client.listAnnotations(postId);
    try {
      this.pathway = await this.client.getPathway(postId);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.pathway = null;
      } else {
        throw error;
      }
    }
    this.editingIndex = null;
    this.editingParent = null;
    this.renderAll();
  }

  /** Latest label to show for a sentence: the reviewer's own latest
   * proposal wins, then any adjudication, then the model prediction. */
  labelFor(index: number): LabelRecords {
    const mine = this.annotations.annotations
      .filter((a) => a.index === index && a.annotator_id === this.annotatorId)
      .sort((x, y) => y.id - x.id);
    if (mine.length > 0) return mine[0].label;
    const adjudicated = this.annotations.adjudications.find((a) => a.index === index);
    if (adjudicated) return adjudicated.label;
    const predicted = this.pathway?.predictions.find((p) => p.index === index);
    return predicted?.labels ?? [];
  }

  startEdit(index: number): void {
    this.editingIndex = index;
    const current = this.labelFor(index);
    this.editingParent = current.length > 0 ? current[0].parent : null;
    this.renderEditor();
  }

  pickParent(parentCode: string | null): void {
    this.editingParent = parentCode;
    this.renderEditor();
  }

  cancelEdit(): void {
    this.editingIndex = null;
    this.editingParent = null;
    this.renderEditor();
    this.renderPostView();
  }

  async saveLabel(index: number, label: LabelRecords): Promise<void> {
    if (!this.currentPost) return;
    const postId = this.currentPost.post.id;
    try {
      await this.client.putAnnotation({
        post_id: postId,
        index,
        annotator_id: this.annotatorId,
        label,
      });
      this.notice = null;
    } catch (error) {
      if (error instanceof ApiError) {
        this.notice = error.message;
        this.renderNotice();
        return;
      }
      throw error;
    }
    // round-trip: re-render from server state, not from the form
    this.annotations = await this.client.listAnnotations(postId);
    await this.refreshQueue();
    this.editingIndex = null;
    this.editingParent = null;
    this.renderAll();
  }

  async adjudicate(disagreement: Disagreement, label: LabelRecords): Promise<void> {
    try {
      await this.client.postAdjudication({
        post_id: disagreement.post_id,
        index: disagreement.index,
        adjudicator_id: this.annotatorId,
        label,
      });
      this.notice = null;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.notice = "already resolved";
      } else if (error instanceof ApiError) {
        this.notice = error.message;
      } else {
        throw error;
      }
    }
    await this.refreshQueue();
    if (this.currentPost) {
      this.annotations = await this.client.listAnnotations(this.currentPost.post.id);
    }
    this.renderAll();
  }

  async adjudicateByProposal(postId: string, index: number, proposalId: number): Promise<void> {
    const disagreement = this.disagreements.find(
      (d) => d.post_id === postId && d.index === index,
    );
    if (!disagreement) return;
    const proposal = disagreement.proposals.find((p) => p.id === proposalId);
    if (!proposal) return;
    await this.adjudicate(disagreement, proposal.label);
  }

  async extractPathway(backend = "mock"): Promise<void> {
    if (!this.currentPost) return;
    try {
      this.pathway = await this.client.extract(this.currentPost.post.id, backend);
      this.notice = null;
    } catch (error) {
      if (error instanceof ApiError && error.status === 503) {
        this.notice = "extraction backend unavailable";
        this.renderNotice();
        return;
      }
      throw error;
    }
    await this.refreshPosts();
    this.renderAll();
  }

  async saveSummary(parentCode: string, text: string): Promise<void> {
    if (!this.currentPost) return;
    const postId = this.currentPost.post.id;
    try {
      this.pathway = await this.client.updatePathway(postId, {
        summaries: { [parentCode]: text },
        editor_id: this.annotatorId,
      });
      this.notice = null;
    } catch (error) {
      if (error instanceof ApiError) {
        this.notice = error.message;
        this.renderNotice();
        return;
      }
      throw error;
    }
    this.renderPathway();
  }

  async approvePathway(): Promise<void> {
    if (!this.currentPost) return;
    try {
      this.pathway = await this.client.updatePathway(this.currentPost.post.id, {
        approve: true,
        editor_id: this.annotatorId,
      });
      this.notice = null;
    } catch (error) {
      if (error instanceof ApiError) {
        this.notice = error.message;
        this.renderNotice();
        return;
      }
      throw error;
    }
    this.renderPathway();
  }

  /** Labels agreed by both annotators or adjudicated, for re-render checks. */
  goldLabelFor(index: number): LabelRecords | null {
    const adjudicated = this.annotations.adjudications.find((a) => a.index === index);
    if (adjudicated) return adjudicated.label;
    const latest = new Map<string, LabelRecords>();
    for (const annotation of [...this.annotations.annotations].sort((x, y) => x.id - y.id)) {
      if (annotation.index === index) latest.set(annotation.annotator_id, annotation.label);
    }
    const labels = [...latest.values()];
    if (labels.length >= 2 && labels.every((l) => labelsEqual(l, labels[0]))) {
      return labels[0];
    }
    return null;
  }

  renderAll(): void {
    this.renderPostList();
    this.renderPostView();
    this.renderEditor();
    this.renderPathway();
    this.renderQueue();
    this.renderNotice();
  }

  renderPostList(): void {
    this.sink.postList(renderPostList(this.posts, this.currentPost?.post.id ?? null));
  }

  renderPostView(): void {
    if (!this.scheme || !this.currentPost) {
      this.sink.postView('<p class="empty">Select a post.</p>');
      return;
    }
    const labels = new Map<number, LabelRecords>();
    for (const sentence of this.currentPost.sentences) {
      labels.set(sentence.index, this.labelFor(sentence.index));
    }
    this.sink.postView(
      renderSentences(this.currentPost.sentences, labels, this.scheme, this.editingIndex),
    );
  }

  renderEditor(): void {
    if (!this.scheme || !this.currentPost || this.editingIndex === null) {
      this.sink.editor("");
      return;
    }
    const sentence = this.currentPost.sentences[this.editingIndex];
    this.sink.editor(
      renderLabelEditor(
        sentence,
        this.labelFor(this.editingIndex),
        this.scheme,
        this.editingParent,
      ),
    );
  }

  renderPathway(): void {
    if (!this.scheme) return;
    this.sink.pathway(renderPathwayPanel(this.pathway, this.scheme));
  }

  renderQueue(): void {
    if (!this.scheme) return;
    this.sink.queue(renderDisagreementQueue(this.disagreements, this.scheme));
  }

  renderNotice(): void {
    this.sink.notice(renderNotice(this.notice));
  }
}
