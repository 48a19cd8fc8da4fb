"""Quantitative filtering of an over-generated concept list into candidate headings.

The rules applied, in order:

* coverage threshold (default 20% of the work), with critical named entities exempt;
* rule of three: four or more subtopics of one broader subject collapse to it;
* depth dedup: drop a heading when a narrower kept heading is subsumed by it,
  unless either side is flagged as a distinct facet;
* routing of each kind to its 6xx tag (genre/form to 655, never a form subdivision);
* ordering by predominance, with 655 fields last.

Coverage is an input, never estimated here.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable

from .authority_store import AuthorityStore

DEFAULT_THRESHOLD = 0.20
DEFAULT_BT_DEPTH = 3
RULE_OF_THREE_MIN = 4


class ConfigurationError(ValueError):
    """The concept list violates a precondition of a filtering rule."""


class ConceptKind(str, enum.Enum):
    TOPICAL = "topical"
    GEOGRAPHIC = "geographic"
    PERSONAL_NAME = "personal_name"
    CORPORATE_NAME = "corporate_name"
    GENRE_FORM = "genre_form"
    NAME_TITLE = "name_title"


class SubdivisionType(str, enum.Enum):
    TOPICAL = "topical"
    GEOGRAPHIC = "geographic"
    CHRONOLOGICAL = "chronological"
    FORM = "form"  # exists only so it can be refused


KIND_TAGS = {
    ConceptKind.PERSONAL_NAME: "600",
    ConceptKind.NAME_TITLE: "600",
    ConceptKind.CORPORATE_NAME: "610",
    ConceptKind.TOPICAL: "650",
    ConceptKind.GEOGRAPHIC: "651",
    ConceptKind.GENRE_FORM: "655",
}
NAME_KINDS = frozenset({ConceptKind.PERSONAL_NAME, ConceptKind.CORPORATE_NAME, ConceptKind.NAME_TITLE})
SUBJECT_KINDS = frozenset({ConceptKind.TOPICAL, ConceptKind.GEOGRAPHIC})


@dataclass(frozen=True)
class WorkDescription:
    title: str
    abstract: str = ""
    table_of_contents: tuple[str, ...] = ()
    identifier: str | None = None

    def __post_init__(self) -> None:
        if not self.title.strip():
            raise ValueError("work title is empty")

    def to_json(self) -> dict:
        out: dict[str, Any] = {"title": self.title, "abstract": self.abstract,
                               "toc": list(self.table_of_contents)}
        if self.identifier:
            out["identifier"] = self.identifier
        return out


@dataclass(frozen=True)
class SubdivisionHint:
    type: SubdivisionType
    value: str
    # Geographic only: places from local to largest, e.g. ("Toracari", "Bolivia").
    place_path: tuple[str, ...] = ()

    def to_json(self) -> dict:
        out: dict[str, Any] = {"type": self.type.value, "value": self.value}
        if self.place_path:
            out["place_path"] = list(self.place_path)
        return out


@dataclass(frozen=True)
class BroaderGroup:
    key: str
    broader_label: str


@dataclass(frozen=True)
class Concept:
    label: str
    kind: ConceptKind
    coverage: float
    predominance_rank: int
    critical_entity: bool = False
    facet_distinct: bool = False
    broader_group: BroaderGroup | None = None
    subdivision_hints: tuple[SubdivisionHint, ...] = ()
    justification: str = ""
    work_title: str | None = None  # name-title headings only
    subdivision_order: str | None = None  # "given" keeps hints in stated order
    tag: str | None = None  # optional explicit intended tag, checked against kind

    def __post_init__(self) -> None:
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError(f"{self.label!r}: coverage {self.coverage} outside [0, 1]")
        if self.predominance_rank < 1:
            raise ValueError(f"{self.label!r}: predominance rank must be positive")
        if not self.label.strip():
            raise ValueError("concept label is empty")
        if self.subdivision_order not in (None, "canonical", "given"):
            raise ValueError(f"{self.label!r}: subdivision order must be 'canonical' or 'given'")
        if self.kind is ConceptKind.NAME_TITLE and not self.work_title:
            raise ValueError(f"{self.label!r}: name-title concept without a work title")
        for hint in self.subdivision_hints:
            if hint.type is SubdivisionType.FORM:
                raise ValueError(
                    f"{self.label!r}: form subdivision {hint.value!r} is discontinued; "
                    "use a genre/form concept (655) instead")

    @classmethod
    def from_json(cls, obj: dict) -> "Concept":
        group = obj.get("broader_group")
        hints = []
        work_title = obj.get("work_title")
        for h in obj.get("subdivision_hints") or []:
            if h.get("type") == "title":
                work_title = work_title or h["value"]
                continue
            hints.append(SubdivisionHint(SubdivisionType(h["type"]), h["value"],
                                         tuple(h.get("place_path") or ())))
        kind = ConceptKind(obj["kind"])
        label = obj["label"]
        if kind is ConceptKind.NAME_TITLE and not work_title and ". " in label:
            label, work_title = (part.strip() for part in label.split(". ", 1))
        return cls(
            label=label,
            kind=kind,
            coverage=float(obj["coverage"]),
            predominance_rank=int(obj["predominance_rank"]),
            critical_entity=bool(obj.get("critical_entity", False)),
            facet_distinct=bool(obj.get("facet_distinct", False)),
            broader_group=BroaderGroup(group["key"], group["broader_label"]) if group else None,
            subdivision_hints=tuple(hints),
            justification=obj.get("justification", ""),
            work_title=work_title,
            subdivision_order=obj.get("subdivision_order"),
            tag=obj.get("tag"),
        )

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "label": self.label,
            "kind": self.kind.value,
            "coverage": self.coverage,
            "predominance_rank": self.predominance_rank,
            "critical_entity": self.critical_entity,
            "facet_distinct": self.facet_distinct,
            "broader_group": ({"key": self.broader_group.key,
                               "broader_label": self.broader_group.broader_label}
                              if self.broader_group else None),
            "subdivision_hints": [h.to_json() for h in self.subdivision_hints],
            "justification": self.justification,
        }
        if self.work_title:
            out["work_title"] = self.work_title
        if self.subdivision_order:
            out["subdivision_order"] = self.subdivision_order
        if self.tag:
            out["tag"] = self.tag
        return out


@dataclass(frozen=True)
class ConceptList:
    work: WorkDescription | None
    aboutness: str
    concepts: tuple[Concept, ...]

    @classmethod
    def from_json(cls, doc: dict) -> "ConceptList":
        work = doc.get("work")
        return cls(
            work=WorkDescription(work["title"], work.get("abstract", ""), tuple(work.get("toc") or ()),
                                 work.get("identifier")) if work else None,
            aboutness=doc.get("aboutness", ""),
            concepts=tuple(Concept.from_json(c) for c in doc.get("concepts") or ()),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ConceptList":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> dict:
        return {"work": self.work.to_json() if self.work else None,
                "aboutness": self.aboutness,
                "concepts": [c.to_json() for c in self.concepts]}


@dataclass(frozen=True)
class CandidateHeading:
    concept: Concept
    intended_tag: str
    order_position: int = 0

    def to_json(self) -> dict:
        return {"position": self.order_position, "tag": self.intended_tag,
                "concept": self.concept.to_json()}


@dataclass
class FilterReport:
    dropped_coverage: list[dict] = field(default_factory=list)
    collapsed_groups: list[dict] = field(default_factory=list)
    dropped_broader: list[dict] = field(default_factory=list)
    rejected: list[dict] = field(default_factory=list)
    narrower_suggestions: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "dropped_coverage": self.dropped_coverage,
            "collapsed_groups": self.collapsed_groups,
            "dropped_broader": self.dropped_broader,
            "rejected": self.rejected,
            "narrower_suggestions": self.narrower_suggestions,
        }


# -- rules -----------------------------------------------------------------


def apply_twenty_percent(concepts: Iterable[Concept], threshold: float = DEFAULT_THRESHOLD,
                         report: FilterReport | None = None) -> list[Concept]:
    kept = []
    for c in concepts:
        if c.coverage >= threshold or c.critical_entity:
            kept.append(c)
        elif report is not None:
            report.dropped_coverage.append(
                {"label": c.label, "coverage": c.coverage, "threshold": threshold})
    return kept


def apply_rule_of_three(concepts: Iterable[Concept], report: FilterReport | None = None) -> list[Concept]:
    """Replace every broader group of four or more members by its broader heading.

    The replacement takes the first member's place in the list.
    """
    concepts = list(concepts)
    groups: dict[str, list[Concept]] = {}
    for c in concepts:
        if c.broader_group is not None:
            groups.setdefault(c.broader_group.key, []).append(c)
    for key, members in groups.items():
        labels = {m.broader_group.broader_label for m in members}
        if len(labels) > 1:
            raise ConfigurationError(f"group {key!r} names several broader labels: {sorted(labels)}")

    out: list[Concept] = []
    emitted: set[str] = set()
    for c in concepts:
        group = c.broader_group
        if group is None or len(groups[group.key]) < RULE_OF_THREE_MIN:
            out.append(c)
            continue
        if group.key in emitted:
            continue
        emitted.add(group.key)
        members = groups[group.key]
        kinds = {m.kind for m in members}
        out.append(Concept(
            label=group.broader_label,
            kind=kinds.pop() if len(kinds) == 1 else ConceptKind.TOPICAL,
            coverage=min(1.0, sum(m.coverage for m in members)),
            predominance_rank=min(m.predominance_rank for m in members),
            # Keeps a group of critical entities from failing the threshold on a rerun.
            critical_entity=any(m.critical_entity for m in members),
            justification=f"broader heading for {len(members)} subtopics: "
                          + "; ".join(m.label for m in members),
        ))
        if report is not None:
            report.collapsed_groups.append(
                {"group": group.key, "broader_label": group.broader_label,
                 "members": [m.label for m in members]})
    return out


def apply_depth_dedup(concepts: Iterable[Concept], store: AuthorityStore,
                      max_depth: int = DEFAULT_BT_DEPTH,
                      report: FilterReport | None = None) -> list[Concept]:
    """Drop concepts that sit on the broader chain of another kept concept.

    Labels that do not resolve in *store* (or resolve ambiguously) are never
    removed and never cause removals.
    """
    concepts = list(concepts)
    resolved = []
    for c in concepts:
        rec = store.resolve(c.label) if c.kind in SUBJECT_KINDS else None
        resolved.append(rec.id if rec else None)
    ancestors = [store.ancestors(rid, max_depth) if rid else set() for rid in resolved]

    removed: set[int] = set()
    for i, x in enumerate(concepts):
        if resolved[i] is None or x.facet_distinct:
            continue
        for j, y in enumerate(concepts):
            if j == i or j in removed or y.facet_distinct:
                continue
            if resolved[i] in ancestors[j]:
                removed.add(i)
                if report is not None:
                    report.dropped_broader.append({"label": x.label, "subsumed_by": y.label})
                break
    return [c for i, c in enumerate(concepts) if i not in removed]


def narrower_suggestions(concepts: Iterable[Concept], store: AuthorityStore) -> list[dict]:
    """Narrower terms of each resolvable concept, offered for review only."""
    out = []
    for c in concepts:
        if c.kind not in SUBJECT_KINDS:
            continue
        rec = store.resolve(c.label)
        if rec is None:
            continue
        labels = [store.get(n).authorized_label for n in store.narrower(rec.id) if n in store]
        if labels:
            out.append({"label": c.label, "narrower": sorted(labels)})
    return out


def route_genre_form(concepts: Iterable[Concept],
                     report: FilterReport | None = None) -> list[CandidateHeading]:
    """Assign each concept its 6xx tag; an explicit tag that contradicts the kind is rejected."""
    out = []
    for c in concepts:
        tag = KIND_TAGS[c.kind]
        if c.tag is not None and str(c.tag) != tag:
            if report is not None:
                report.rejected.append(
                    {"label": c.label, "reason": f"kind {c.kind.value} requires tag {tag}, not {c.tag}"})
            continue
        out.append(CandidateHeading(c, tag))
    return out


def order_by_predominance(candidates: Iterable[CandidateHeading]) -> list[CandidateHeading]:
    candidates = list(candidates)
    ranks = [c.concept.predominance_rank for c in candidates]
    if len(set(ranks)) != len(ranks):
        dupes = sorted({r for r in ranks if ranks.count(r) > 1})
        raise ConfigurationError(f"duplicate predominance ranks: {dupes}")
    ordered = sorted(candidates, key=lambda c: (c.intended_tag == "655", c.concept.predominance_rank))
    return [replace(c, order_position=i) for i, c in enumerate(ordered, start=1)]


@dataclass(frozen=True)
class FilterConfig:
    threshold: float = DEFAULT_THRESHOLD
    bt_depth: int = DEFAULT_BT_DEPTH


def run_filters(concepts: Iterable[Concept], store: AuthorityStore,
                config: FilterConfig = FilterConfig()) -> tuple[list[CandidateHeading], FilterReport]:
    """The whole filtering stage: threshold, rule of three, dedup, routing, ordering."""
    report = FilterReport()
    kept = apply_twenty_percent(concepts, config.threshold, report)
    kept = apply_rule_of_three(kept, report)
    kept = apply_depth_dedup(kept, store, config.bt_depth, report)
    report.narrower_suggestions = narrower_suggestions(kept, store)
    candidates = order_by_predominance(route_genre_form(kept, report))
    return candidates, report
