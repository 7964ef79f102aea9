// Wire types for the /v1 JSON API.

export interface SchemeParent {
  code: string;
  name: string;
}

export interface SchemeChild {
  id: string;
  name: string;
  parent: string;
}

export interface Scheme {
  version: string;
  parents: SchemeParent[];
  children: SchemeChild[];
  aliases: Record<string, string>;
}

export interface LabelEntry {
  parent: string;
  children: string[];
}

export type LabelRecords = LabelEntry[];

export interface PostRecord {
  id: string;
  source: string;
  language: string;
  text: string;
}

export interface PostListItem extends PostRecord {
  has_pathway: boolean;
}

export interface SentenceInfo {
  index: number;
  text: string;
}

export interface PostDetail {
  post: PostRecord;
  sentences: SentenceInfo[];
}

export interface Proposal {
  id: number;
  annotator_id: string;
  label: LabelRecords;
  timestamp: number;
}

export interface Disagreement {
  post_id: string;
  index: number;
  text: string | null;
  proposals: Proposal[];
}

export interface PathwayEntry {
  composite: string;
  summary: string | null;
  member_indices: number[];
}

export interface PredictionRecord {
  post_id: string;
  index: number;
  text: string;
  labels: LabelRecords;
}

export interface StoredPathway {
  post_id: string;
  backend: string;
  pathway: Record<string, PathwayEntry>;
  predictions: PredictionRecord[];
  approved: boolean;
  editor_id: string | null;
}

export interface AnnotationView {
  id: number;
  post_id: string;
  index: number;
  annotator_id: string;
  label: LabelRecords;
  status: string;
  timestamp: number;
}

export interface AdjudicationView {
  post_id: string;
  index: number;
  adjudicator_id: string;
  label: LabelRecords;
}

export interface AnnotationsResponse {
  annotations: AnnotationView[];
  adjudications: AdjudicationView[];
}
