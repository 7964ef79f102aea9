// Pure HTML renderers. Everything here is a function of server state plus
// the scheme; event wiring happens in main.ts via data-* attributes.

import { PARENT_COLORS, SchemeIndex } from "./scheme.js";
import type {
  Disagreement,
  LabelRecords,
  PostListItem,
  SentenceInfo,
  StoredPathway,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function renderPostList(posts: PostListItem[], selectedId: string | null): string {
  if (posts.length === 0) {
    return '<p class="empty">No posts ingested yet.</p>';
  }
  const items = posts
    .map((post) => {
      const cls = post.id === selectedId ? "post-item selected" : "post-item";
      const badge = post.has_pathway ? '<span class="badge">pathway</span>' : "";
      return `<li class="${cls}" data-action="open-post" data-post-id="${escapeHtml(post.id)}">
        <span class="post-id">${escapeHtml(post.id)}</span>${badge}
      </li>`;
    })
    .join("\n");
  return `<ul class="post-list">${items}</ul>`;
}

function labelChips(label: LabelRecords, index: SchemeIndex): string {
  if (label.length === 0) return '<span class="chip chip-none">–</span>';
  return label
    .map((entry) => {
      const color = PARENT_COLORS[entry.parent] ?? "#374151";
      const children = entry.children
        .map((c) => `<span class="chip chip-child">${escapeHtml(index.childName(c))}</span>`)
        .join("");
      return `<span class="chip chip-parent" style="background:${color}">(${entry.parent}) ${escapeHtml(
        index.parentName(entry.parent),
      )}</span>${children}`;
    })
    .join(" ");
}

export function renderSentences(
  sentences: SentenceInfo[],
  labels: Map<number, LabelRecords>,
  index: SchemeIndex,
  editingIndex: number | null,
): string {
  const rows = sentences
    .map((sentence) => {
      const label = labels.get(sentence.index) ?? [];
      const editing = sentence.index === editingIndex ? " editing" : "";
      return `<div class="sentence${editing}" data-index="${sentence.index}">
        <div class="sentence-text">${sentence.index}. ${escapeHtml(sentence.text)}</div>
        <div class="sentence-labels">${labelChips(label, index)}</div>
        <button data-action="edit-label" data-index="${sentence.index}">edit label</button>
      </div>`;
    })
    .join("\n");
  return `<div class="sentences">${rows}</div>`;
}

export function renderParentSelect(index: SchemeIndex, selected: string | null): string {
  const options = index.scheme.parents
    .map(
      (parent) =>
        `<option value="${parent.code}"${parent.code === selected ? " selected" : ""}>(${parent.code}) ${escapeHtml(parent.name)}</option>`,
    )
    .join("\n");
  return `<select data-role="parent-select">
<option value=""${selected ? "" : " selected"}>irrelevant</option>
${options}
</select>`;
}

export function renderChildPicker(
  index: SchemeIndex,
  parentCode: string,
  selected: Set<string>,
): string {
  const boxes = index
    .childrenOf(parentCode)
    .map(
      (child) => `<label class="child-option">
  <input type="checkbox" data-role="child-option" value="${child.id}"${selected.has(child.id) ? " checked" : ""}>
  ${escapeHtml(child.name)}
</label>`,
    )
    .join("\n");
  return `<fieldset class="child-picker" data-parent="${parentCode}">${boxes}</fieldset>`;
}

export function renderLabelEditor(
  sentence: SentenceInfo,
  current: LabelRecords,
  index: SchemeIndex,
  selectedParent: string | null,
): string {
  const entry = current.find((e) => e.parent === selectedParent);
  const selectedChildren = new Set(entry?.children ?? []);
  const picker = selectedParent
    ? renderChildPicker(index, selectedParent, selectedChildren)
    : '<p class="hint">Pick a parent category to see its child categories.</p>';
  return `<div class="label-editor" data-index="${sentence.index}">
  <p class="editor-sentence">${sentence.index}. ${escapeHtml(sentence.text)}</p>
  ${renderParentSelect(index, selectedParent)}
  ${picker}
  <button data-action="save-label" data-index="${sentence.index}">save</button>
  <button data-action="cancel-edit">cancel</button>
</div>`;
}

export function renderDisagreementQueue(
  disagreements: Disagreement[],
  index: SchemeIndex,
): string {
  if (disagreements.length === 0) {
    return '<p class="empty" data-role="queue-empty">No open disagreements.</p>';
  }
  const items = disagreements
    .map((item) => {
      const proposals = item.proposals
        .map(
          (proposal) => `<div class="proposal">
    <div class="proposal-meta">${escapeHtml(proposal.annotator_id)}</div>
    <div class="proposal-label">${labelChips(proposal.label, index)}</div>
    <button data-action="adjudicate"
            data-post-id="${escapeHtml(item.post_id)}"
            data-index="${item.index}"
            data-proposal-id="${proposal.id}">choose this</button>
  </div>`,
        )
        .join("\n");
      return `<div class="disagreement" data-post-id="${escapeHtml(item.post_id)}" data-index="${item.index}">
  <div class="disagreement-text">${escapeHtml(item.text ?? "(sentence unavailable)")}</div>
  <div class="proposal-row">${proposals}</div>
</div>`;
    })
    .join("\n");
  return `<div class="disagreements">${items}</div>`;
}

export function renderPathwayPanel(
  pathway: StoredPathway | null,
  index: SchemeIndex,
): string {
  if (pathway === null) {
    return '<p class="empty">No pathway extracted for this post yet.</p>';
  }
  const locked = pathway.approved;
  const cards = index
    .parentCodes()
    .map((code) => {
      const name = index.parentName(code);
      const color = PARENT_COLORS[code] ?? "#374151";
      const entry = pathway.pathway[code];
      if (!entry) {
        return `<div class="card card-empty" data-parent="${code}">
  <h3 style="color:${color}">(${code}) ${escapeHtml(name)}</h3>
  <p class="empty">no ${escapeHtml(name.toLowerCase())} found</p>
</div>`;
      }
      const summary = entry.summary ?? "";
      const editor = locked
        ? `<p class="summary-locked">${escapeHtml(summary)}</p>`
        : `<textarea data-role="summary" data-parent="${code}">${escapeHtml(summary)}</textarea>
<button data-action="save-summary" data-parent="${code}">save summary</button>`;
      return `<div class="card" data-parent="${code}">
  <h3 style="color:${color}">(${code}) ${escapeHtml(name)}</h3>
  <p class="composite">${escapeHtml(entry.composite)}</p>
  ${editor}
</div>`;
    })
    .join("\n");
  const approval = locked
    ? '<p class="approved" data-role="approved">Approved and locked.</p>'
    : '<button data-action="approve">approve pathway</button>';
  return `<div class="pathway${locked ? " locked" : ""}">${cards}\n${approval}</div>`;
}

export function renderNotice(notice: string | null): string {
  return notice ? `<div class="notice">${escapeHtml(notice)}</div>` : "";
}
