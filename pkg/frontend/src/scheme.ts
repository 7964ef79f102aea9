// Scheme helpers: every picker and chip is driven by the scheme the service
// serves, so the UI cannot build a label the taxonomy would reject.

import type { LabelRecords, Scheme, SchemeChild } from "./types.js";

// Fixed parent hues, kept in sync with exported reports: A amber, B red,
// C blue, D green.
export const PARENT_COLORS: Record<string, string> = {
  A: "#b45309",
  B: "#b91c1c",
  C: "#1d4ed8",
  D: "#047857",
};

export class SchemeIndex {
  readonly parentsByCode = new Map<string, string>();
  readonly childrenById = new Map<string, SchemeChild>();
  private childrenByParent = new Map<string, SchemeChild[]>();

  constructor(readonly scheme: Scheme) {
    for (const parent of scheme.parents) {
      this.parentsByCode.set(parent.code, parent.name);
      this.childrenByParent.set(parent.code, []);
    }
    for (const child of scheme.children) {
      this.childrenById.set(child.id, child);
      this.childrenByParent.get(child.parent)?.push(child);
    }
  }

  parentName(code: string): string {
    return this.parentsByCode.get(code) ?? code;
  }

  childName(id: string): string {
    return this.childrenById.get(id)?.name ?? id;
  }

  childrenOf(parentCode: string): SchemeChild[] {
    return this.childrenByParent.get(parentCode) ?? [];
  }

  parentCodes(): string[] {
    return this.scheme.parents.map((p) => p.code);
  }
}

export function labelsEqual(a: LabelRecords, b: LabelRecords): boolean {
  return canonicalLabel(a) === canonicalLabel(b);
}

export function canonicalLabel(label: LabelRecords): string {
  const entries = label
    .map((entry) => ({
      parent: entry.parent,
      children: [...entry.children].sort(),
    }))
    .sort((x, y) => x.parent.localeCompare(y.parent));
  return JSON.stringify(entries);
}

export function labelSummary(label: LabelRecords, index: SchemeIndex): string {
  if (label.length === 0) return "irrelevant";
  return label
    .map((entry) => {
      const children = entry.children.map((c) => index.childName(c)).join(", ");
      const name = `(${entry.parent}) ${index.parentName(entry.parent)}`;
      return children ? `${name}: ${children}` : name;
    })
    .join(" · ");
}
