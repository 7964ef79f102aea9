// Browser bootstrap: binds the app to the page and wires events through
// data-* attributes so the render functions stay pure.

import { ApiClient } from "./api.js";
import { ReviewApp, RenderSink } from "./app.js";
import type { LabelRecords } from "./types.js";

function sinkFor(id: string): (html: string) => void {
  const element = document.getElementById(id);
  if (!element) throw new Error(`missing #${id}`);
  return (html) => {
    element.innerHTML = html;
  };
}

function readEditorLabel(): LabelRecords {
  const select = document.querySelector<HTMLSelectElement>('[data-role="parent-select"]');
  const parent = select?.value ?? "";
  if (!parent) return [];
  const children = [
    ...document.querySelectorAll<HTMLInputElement>('[data-role="child-option"]:checked'),
  ].map((input) => input.value);
  return [{ parent, children }];
}

export function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("service") ?? window.location.origin;
  const annotator = params.get("annotator") ?? "reviewer";
  const client = new ApiClient(baseUrl);
  const sink: RenderSink = {
    postList: sinkFor("post-list"),
    postView: sinkFor("post-view"),
    editor: sinkFor("label-editor"),
    pathway: sinkFor("pathway-panel"),
    queue: sinkFor("disagreement-queue"),
    notice: sinkFor("notice"),
  };
  const app = new ReviewApp(client, sink, annotator);

  document.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target) return;
    const action = target.dataset.action;
    if (action === "open-post") {
      void app.openPost(target.dataset.postId ?? "");
    } else if (action === "edit-label") {
      app.startEdit(Number(target.dataset.index));
    } else if (action === "cancel-edit") {
      app.cancelEdit();
    } else if (action === "save-label") {
      void app.saveLabel(Number(target.dataset.index), readEditorLabel());
    } else if (action === "adjudicate") {
      void app.adjudicateByProposal(
        target.dataset.postId ?? "",
        Number(target.dataset.index),
        Number(target.dataset.proposalId),
      );
    } else if (action === "save-summary") {
      const parent = target.dataset.parent ?? "";
      const area = document.querySelector<HTMLTextAreaElement>(
        `[data-role="summary"][data-parent="${parent}"]`,
      );
      if (area) void app.saveSummary(parent, area.value);
    } else if (action === "approve") {
      void app.approvePathway();
    } else if (action === "extract") {
      void app.extractPathway();
    }
  });

  document.addEventListener("change", (event) => {
    const target = event.target as HTMLElement;
    if (target.matches('[data-role="parent-select"]')) {
      const value = (target as HTMLSelectElement).value;
      app.pickParent(value || null);
    }
  });

  void app.start();
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  boot();
}
