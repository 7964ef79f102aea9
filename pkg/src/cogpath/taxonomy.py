"""The ABCD category scheme: four parent nodes, nineteen child nodes.

The scheme is fixed. Child identifiers are stable snake-case slugs; display
names keep the exact reporting strings so rendered tables read the same as
the published category names. An alias table absorbs the near-miss surface
forms that model backends tend to emit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

from .errors import ParseError, UnknownCategory

SCHEME_VERSION = "abcd-v1"

_PARENTS = (
    ("A", "Activating Event"),
    ("B", "Belief"),
    ("C", "Consequence"),
    ("D", "Disputation"),
)

_CHILDREN = (
    ("A", "Disease symptom"),
    ("A", "Social relation"),
    ("A", "Life"),
    ("A", "Study and work"),
    ("A", "Emotional"),
    ("B", "All-or-nothing thinking"),
    ("B", "Over-generalization"),
    ("B", "Mental filter"),
    ("B", "Disqualifying the positive"),
    ("B", "Jumping to conclusions"),
    ("B", "Magnification and minimization"),
    ("B", "Emotional reasoning"),
    ("B", "Should statements"),
    ("B", "Labeling and mislabeling"),
    ("B", "Blaming oneself/others"),
    ("C", "Emotional effect"),
    ("C", "Behavioral effect"),
    ("D", "Habitual disputation"),
    ("D", "Effective disputation"),
)

# Surface variants seen in model output that are unambiguous enough to accept.
_EXTRA_ALIASES = {
    "black-and-white thinking": "all_or_nothing_thinking",
    "black and white thinking": "all_or_nothing_thinking",
    "blaming others": "blaming_oneself_others",
    "blaming oneself": "blaming_oneself_others",
    "overgeneralization": "over_generalization",
    "magnification or minimization": "magnification_and_minimization",
}


def slugify(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


@dataclass(frozen=True)
class ParentCategory:
    code: str
    display_name: str


@dataclass(frozen=True)
class ChildCategory:
    id: str
    display_name: str
    parent: ParentCategory


Category = Union[ParentCategory, ChildCategory]


@dataclass(frozen=True)
class LabelEntry:
    """One (parent, child subset) pair of a sentence label."""

    parent: ParentCategory
    children: tuple[ChildCategory, ...] = ()

    def __post_init__(self):
        seen: set[str] = set()
        ordered = []
        for child in self.children:
            if child.id not in seen:
                seen.add(child.id)
                ordered.append(child)
        ordered.sort(key=lambda c: c.id)
        object.__setattr__(self, "children", tuple(ordered))


@dataclass(frozen=True)
class SentenceLabel:
    """Hierarchical multi-label assignment for one sentence.

    Empty entries mean the sentence is irrelevant to every node, which is a
    legal label. Entries are canonically ordered so equal content compares
    equal; structural violations (duplicate parents, cross-parent children)
    are representable and surfaced by validate_label, not by construction.
    """

    entries: tuple[LabelEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "entries", tuple(sorted(self.entries, key=lambda e: e.parent.code))
        )

    @classmethod
    def empty(cls) -> "SentenceLabel":
        return cls(())

    def is_empty(self) -> bool:
        return not self.entries

    def parents(self) -> set[str]:
        return {entry.parent.code for entry in self.entries}

    def children(self) -> set[str]:
        return {child.id for entry in self.entries for child in entry.children}

    def to_records(self) -> list[dict]:
        return [
            {"parent": entry.parent.code, "children": [c.id for c in entry.children]}
            for entry in self.entries
        ]


@dataclass(frozen=True)
class CategoryScheme:
    """Immutable category scheme; safe for unrestricted concurrent reads."""

    version: str
    parents: tuple[ParentCategory, ...]
    children: tuple[ChildCategory, ...]
    alias_table: Mapping[str, str]

    def parent_by_code(self, code: str) -> ParentCategory:
        for parent in self.parents:
            if parent.code == code:
                return parent
        raise UnknownCategory(f"unknown parent code {code!r}")

    def child_by_id(self, child_id: str) -> ChildCategory:
        for child in self.children:
            if child.id == child_id:
                return child
        raise UnknownCategory(f"unknown child id {child_id!r}")

    def category_by_id(self, ident: str) -> Category:
        for parent in self.parents:
            if parent.code == ident:
                return parent
        return self.child_by_id(ident)

    def children_of(self, parent: ParentCategory | str) -> tuple[ChildCategory, ...]:
        code = parent if isinstance(parent, str) else parent.code
        self.parent_by_code(code)
        return tuple(c for c in self.children if c.parent.code == code)

    def node_order(self) -> list[str]:
        """Parent codes and child ids in report row order."""
        order: list[str] = []
        for parent in self.parents:
            order.append(parent.code)
            order.extend(c.id for c in self.children_of(parent))
        return order

    def with_aliases(self, extra: Mapping[str, str]) -> "CategoryScheme":
        merged = dict(self.alias_table)
        for surface, ident in extra.items():
            self.category_by_id(ident)  # target must exist
            merged[_normalize_surface(surface)] = ident
        return replace(self, alias_table=merged)


def _build_scheme() -> CategoryScheme:
    parents = tuple(ParentCategory(code, name) for code, name in _PARENTS)
    by_code = {p.code: p for p in parents}
    children = tuple(
        ChildCategory(slugify(name), name, by_code[code]) for code, name in _CHILDREN
    )
    aliases: dict[str, str] = {}
    for parent in parents:
        aliases[parent.code.casefold()] = parent.code
        aliases[parent.display_name.casefold()] = parent.code
    for child in children:
        aliases[child.id] = child.id
        aliases[child.display_name.casefold()] = child.id
    aliases.update(_EXTRA_ALIASES)
    return CategoryScheme(SCHEME_VERSION, parents, children, aliases)


@lru_cache(maxsize=1)
def canonical_scheme() -> CategoryScheme:
    """The fixed 4-parent / 19-child scheme."""
    return _build_scheme()


def parent_of(child: ChildCategory | str, scheme: CategoryScheme | None = None) -> ParentCategory:
    """Unique parent of a child category; raises UnknownCategory otherwise."""
    scheme = scheme or canonical_scheme()
    child_id = child if isinstance(child, str) else child.id
    return scheme.child_by_id(child_id).parent


_PREFIX_RE = re.compile(r"^\(\s*([A-Da-d])\s*\)\s*(.*)$", re.DOTALL)


def _normalize_surface(surface: str) -> str:
    s = surface.strip()
    m = _PREFIX_RE.match(s)
    if m:
        s = m.group(2).strip() or m.group(1)
    return re.sub(r"\s+", " ", s.casefold())


def normalize_category_name(surface: str, scheme: CategoryScheme | None = None) -> Category:
    """Resolve a surface string (case-folded, trimmed, letter-prefix stripped)
    against the alias table. Raises UnknownCategory when nothing matches."""
    scheme = scheme or canonical_scheme()
    ident = scheme.alias_table.get(_normalize_surface(surface))
    if ident is None:
        raise UnknownCategory(f"no category matches {surface!r}")
    return scheme.category_by_id(ident)


def validate_label(label: SentenceLabel, scheme: CategoryScheme | None = None) -> list[str]:
    """All hierarchy violations in a label; an empty list means the label is ok."""
    scheme = scheme or canonical_scheme()
    violations: list[str] = []
    seen_parents: set[str] = set()
    for entry in label.entries:
        code = entry.parent.code
        try:
            scheme.parent_by_code(code)
        except UnknownCategory:
            violations.append(f"unknown parent {code!r}")
        if code in seen_parents:
            violations.append(f"duplicate parent {code!r}")
        seen_parents.add(code)
        for child in entry.children:
            try:
                known = scheme.child_by_id(child.id)
            except UnknownCategory:
                violations.append(f"unknown child {child.id!r}")
                continue
            if known.parent.code != code:
                violations.append(
                    f"child {child.id!r} belongs to parent {known.parent.code!r}, not {code!r}"
                )
    return violations


def label_from_records(records: Iterable[Mapping], scheme: CategoryScheme | None = None) -> SentenceLabel:
    """Build a label from stored records, strict about ids.

    Parent must be a parent code, children must be child ids. Cross-parent
    placements survive construction so validate_label can report them.
    """
    scheme = scheme or canonical_scheme()
    entries = []
    for rec in records:
        parent = scheme.parent_by_code(str(rec.get("parent", "")))
        children = tuple(scheme.child_by_id(str(c)) for c in rec.get("children", ()))
        entries.append(LabelEntry(parent, children))
    return SentenceLabel(tuple(entries))


def resolve_label(records: Iterable[Mapping], scheme: CategoryScheme | None = None) -> SentenceLabel:
    """Build a label from backend output, lenient about surface forms.

    Every category string goes through normalize_category_name once; entries
    that resolve to the same parent are merged. A string that resolves to the
    wrong kind of node raises UnknownCategory.
    """
    scheme = scheme or canonical_scheme()
    merged: dict[str, list[ChildCategory]] = {}
    for rec in records:
        parent_raw = rec.get("parent", "")
        parent = normalize_category_name(str(parent_raw), scheme)
        if not isinstance(parent, ParentCategory):
            raise UnknownCategory(f"{parent_raw!r} is not a parent category")
        bucket = merged.setdefault(parent.code, [])
        for child_raw in rec.get("children", ()):
            child = normalize_category_name(str(child_raw), scheme)
            if not isinstance(child, ChildCategory):
                raise UnknownCategory(f"{child_raw!r} is not a child category")
            bucket.append(child)
    entries = tuple(
        LabelEntry(scheme.parent_by_code(code), tuple(children))
        for code, children in merged.items()
    )
    return SentenceLabel(entries)


def scheme_to_json(scheme: CategoryScheme) -> dict:
    return {
        "version": scheme.version,
        "parents": [{"code": p.code, "name": p.display_name} for p in scheme.parents],
        "children": [
            {"id": c.id, "name": c.display_name, "parent": c.parent.code}
            for c in scheme.children
        ],
        "aliases": dict(scheme.alias_table),
    }


def scheme_from_json(data: Mapping) -> CategoryScheme:
    try:
        parents = tuple(
            ParentCategory(p["code"], p["name"]) for p in data["parents"]
        )
        by_code = {p.code: p for p in parents}
        children = []
        for c in data["children"]:
            if c["parent"] not in by_code:
                raise ParseError(f"child {c['id']!r} references unknown parent {c['parent']!r}")
            children.append(ChildCategory(c["id"], c["name"], by_code[c["parent"]]))
        scheme = CategoryScheme(
            str(data["version"]), parents, tuple(children), dict(data.get("aliases", {}))
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed scheme document: {exc}") from exc
    known = {p.code for p in scheme.parents} | {c.id for c in scheme.children}
    for surface, ident in scheme.alias_table.items():
        if ident not in known:
            raise ParseError(f"alias {surface!r} targets unknown category {ident!r}")
    return scheme
