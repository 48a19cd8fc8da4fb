"""Scoring agent subject fields against baseline catalog headings.

Four scores per work, each in [0, 1]:

conceptual_recall
    baseline headings (form-only ones excluded) matched at SameConcept or better.
heading_precision
    agent non-655 fields matched Exact.
subdivision_accuracy
    mean multiset Jaccard of typed subdivisions over matched pairs.
genre_form_score
    share of baseline form segments covered by an agent 655, times the
    share of agent fields without a form subdivision.

An empty denominator scores 1 and is flagged ``vacuous`` in the report.
"""

from __future__ import annotations

import enum
import statistics
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .authority_store import AuthorityRecord, AuthorityStore, label_key, normalize
from .marc_io import BaselineHeading, SegmentType, TypedSegment, field_to_baseline, strip_terminal
from .marc_synth import SubjectField, render
from .places import form_subdivisions

NAME_TAGS = ("600", "610")


class MatchLevel(enum.IntEnum):
    NO_MATCH = 0
    RELATED = 1
    SAME_CONCEPT = 2
    EXACT = 3


@dataclass(frozen=True)
class HeadingMatch:
    agent_field: SubjectField
    baseline_heading: BaselineHeading
    level: MatchLevel
    evidence: str

    def to_json(self) -> dict:
        return {"agent": render(self.agent_field), "baseline": self.baseline_heading.text(),
                "level": self.level.name.lower(), "evidence": self.evidence}


@dataclass
class ComparisonReport:
    work_id: str
    conceptual_recall: float
    heading_precision: float
    subdivision_accuracy: float
    genre_form_score: float
    matches: list[HeadingMatch]
    unmatched_baseline: list[BaselineHeading]
    unmatched_agent: list[SubjectField]
    agent_fields: list[SubjectField] = field(default_factory=list)
    baseline_headings: list[BaselineHeading] = field(default_factory=list)
    agent_overlap: float = 1.0
    notes: list[str] = field(default_factory=list)

    def scores(self) -> dict[str, float]:
        return {
            "conceptual_recall": self.conceptual_recall,
            "heading_precision": self.heading_precision,
            "subdivision_accuracy": self.subdivision_accuracy,
            "genre_form_score": self.genre_form_score,
        }

    def to_json(self) -> dict:
        return {
            "work_id": self.work_id,
            **self.scores(),
            "agent_overlap": self.agent_overlap,
            "matches": [m.to_json() for m in self.matches],
            "unmatched_baseline": [b.text() for b in self.unmatched_baseline],
            "unmatched_agent": [render(f) for f in self.unmatched_agent],
            "notes": self.notes,
        }


@dataclass
class _Side:
    """Store-resolved view of one heading."""

    base_key: str
    record: AuthorityRecord | None
    subdivisions: tuple[TypedSegment, ...]


class Comparer:
    def __init__(self, lcsh: AuthorityStore | None, lcgft: AuthorityStore | None,
                 same_radius: int = 1, related_radius: int = 2):
        self.lcsh = lcsh
        self.lcgft = lcgft
        self.same_radius = same_radius
        self.related_radius = related_radius
        self._dist_cache: dict[tuple[str, str], int | None] = {}

    # -- resolution helpers -------------------------------------------------

    def _resolve(self, label: str, prefer_gf: bool = False) -> AuthorityRecord | None:
        stores = [self.lcgft, self.lcsh] if prefer_gf else [self.lcsh, self.lcgft]
        for store in stores:
            if store is not None:
                rec = store.resolve(label)
                if rec is not None:
                    return rec
        return None

    def _distance(self, a: AuthorityRecord, b: AuthorityRecord) -> int | None:
        """BT/NT steps between two records of one scheme, up to the related radius."""
        if a.scheme is not b.scheme:
            return None
        if a.id == b.id:
            return 0
        key = (a.id, b.id)
        if key not in self._dist_cache:
            store = self.lcsh if a.scheme.value == "lcsh" else self.lcgft
            self._dist_cache[key] = _bfs(store, a.id, b.id, self.related_radius)
        return self._dist_cache[key]

    def is_form_only(self, b: BaselineHeading) -> bool:
        if b.tag == "655":
            return True
        if b.subdivisions:
            return False
        if self.lcgft is not None and self.lcgft.resolve(b.base) is not None:
            return True
        return label_key(b.base) in form_subdivisions()

    def side_of_field(self, f: SubjectField) -> _Side:
        view = field_to_baseline(f)
        rec = None if f.tag in NAME_TAGS else self._resolve(view.base, prefer_gf=f.tag == "655")
        return _Side(label_key(view.base), rec, view.subdivisions)

    def side_of_baseline(self, b: BaselineHeading) -> _Side:
        return _Side(label_key(strip_terminal(b.base)), self._resolve(b.base), b.subdivisions)

    # -- levels ----------------------------------------------------------------

    def level(self, a: _Side, b: _Side) -> tuple[MatchLevel, str]:
        if a.base_key == b.base_key:
            if _same_subdivisions(a.subdivisions, b.subdivisions):
                return MatchLevel.EXACT, "identical base and subdivisions"
            return MatchLevel.SAME_CONCEPT, "same base heading, different subdivisions"
        if a.record is not None and b.record is not None:
            dist = self._distance(a.record, b.record)
            if dist == 0:
                return MatchLevel.SAME_CONCEPT, f"both resolve to {a.record.id} (variant form)"
            if dist is not None and dist <= self.same_radius:
                return MatchLevel.SAME_CONCEPT, f"{dist} BT/NT step(s) apart"
            if dist is not None and dist <= self.related_radius:
                return MatchLevel.RELATED, f"{dist} BT/NT steps apart"
        return MatchLevel.NO_MATCH, ""

    def form_covered(self, segment: str, agent_655: Sequence[_Side]) -> bool:
        seg_tokens = set(normalize(segment))
        seg_rec = self._resolve(segment, prefer_gf=True)
        for side in agent_655:
            tokens = set(side.base_key.split())
            if seg_tokens and (seg_tokens <= tokens or tokens <= seg_tokens):
                return True
            if seg_rec is not None and side.record is not None:
                dist = self._distance(seg_rec, side.record)
                if dist is not None and dist <= self.same_radius:
                    return True
        return False


def _bfs(store: AuthorityStore | None, start: str, goal: str, radius: int) -> int | None:
    if store is None:
        return None
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        node, dist = frontier.popleft()
        if dist == radius:
            continue
        for nxt in (*store.broader(node), *store.narrower(node)):
            if nxt == goal:
                return dist + 1
            if nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, dist + 1))
    return None


def _types_compatible(agent: SegmentType, base: TypedSegment) -> bool:
    if base.type is SegmentType.UNKNOWN or base.type is agent:
        return True
    # A topical guess without authority support may be any non-form type.
    return (base.type is SegmentType.TOPICAL and base.confidence < 1.0
            and agent in (SegmentType.TOPICAL, SegmentType.GEOGRAPHIC))


def _pair(agent: TypedSegment, base: TypedSegment) -> bool:
    return label_key(agent.value) == label_key(base.value) and _types_compatible(agent.type, base)


def _same_subdivisions(a: Sequence[TypedSegment], b: Sequence[TypedSegment]) -> bool:
    return len(a) == len(b) and all(_pair(x, y) for x, y in zip(a, b))


def subdivision_overlap(a: Sequence[TypedSegment], b: Sequence[TypedSegment]) -> float:
    """|A ∩ B| / |A ∪ B| over typed multisets; two empty lists score 1."""
    if not a and not b:
        return 1.0
    unused = list(b)
    common = 0
    for seg in a:
        for i, other in enumerate(unused):
            if _pair(seg, other):
                del unused[i]
                common += 1
                break
    return common / (len(a) + len(b) - common)


def compare_title(agent_fields: Sequence[SubjectField], baseline_headings: Sequence[BaselineHeading],
                  store_lcsh: AuthorityStore | None = None, store_lcgft: AuthorityStore | None = None,
                  work_id: str = "", same_radius: int = 1, related_radius: int = 2
                  ) -> ComparisonReport:
    cmp = Comparer(store_lcsh, store_lcgft, same_radius, related_radius)
    notes: list[str] = []
    agent_fields = list(agent_fields)
    baseline_headings = list(baseline_headings)

    topical = [f for f in agent_fields if f.tag != "655"]
    genre = [f for f in agent_fields if f.tag == "655"]
    headings = [b for b in baseline_headings if not cmp.is_form_only(b)]
    form_only = [b for b in baseline_headings if cmp.is_form_only(b)]

    a_sides = [cmp.side_of_field(f) for f in topical]
    b_sides = [cmp.side_of_baseline(b) for b in headings]
    pairs = []
    for bi, bs in enumerate(b_sides):
        for ai, as_ in enumerate(a_sides):
            level, why = cmp.level(as_, bs)
            if level > MatchLevel.NO_MATCH:
                pairs.append((-level, bi, ai, level, why))
    pairs.sort()
    used_a: set[int] = set()
    used_b: set[int] = set()
    matches: list[HeadingMatch] = []
    for _, bi, ai, level, why in pairs:
        if ai in used_a or bi in used_b:
            continue
        used_a.add(ai)
        used_b.add(bi)
        matches.append(HeadingMatch(topical[ai], headings[bi], level, why))
    matches.sort(key=lambda m: headings.index(m.baseline_heading))

    def ratio(num: int, den: int, what: str) -> float:
        if den == 0:
            notes.append(f"{what}: vacuous (no items)")
            return 1.0
        return num / den

    strong = [m for m in matches if m.level >= MatchLevel.SAME_CONCEPT]
    recall = ratio(len(strong), len(headings), "conceptual_recall")
    precision = ratio(sum(m.level is MatchLevel.EXACT for m in matches), len(topical), "heading_precision")
    agent_overlap = ratio(len(strong), len(topical), "agent_overlap")
    if strong:
        sub_acc = statistics.fmean(
            subdivision_overlap(cmp.side_of_field(m.agent_field).subdivisions,
                                m.baseline_heading.subdivisions) for m in strong)
    else:
        sub_acc = ratio(0, 0, "subdivision_accuracy")

    form_segments = [s.value for b in baseline_headings for s in b.subdivisions
                     if s.type is SegmentType.FORM]
    form_segments += [b.base for b in form_only]
    g_sides = [cmp.side_of_field(f) for f in genre]
    covered = sum(cmp.form_covered(seg, g_sides) for seg in form_segments)
    coverage = ratio(covered, len(form_segments), "genre_form coverage")
    with_v = sum(1 for f in agent_fields if f.get("v"))
    compliance = ratio(len(agent_fields) - with_v, len(agent_fields), "genre_form compliance")

    matched_b = {id(m.baseline_heading) for m in matches}
    matched_a = {id(m.agent_field) for m in matches}
    return ComparisonReport(
        work_id=work_id,
        conceptual_recall=recall,
        heading_precision=precision,
        subdivision_accuracy=sub_acc,
        genre_form_score=coverage * compliance,
        matches=matches,
        unmatched_baseline=[b for b in baseline_headings if id(b) not in matched_b],
        unmatched_agent=[f for f in agent_fields if id(f) not in matched_a],
        agent_fields=agent_fields,
        baseline_headings=baseline_headings,
        agent_overlap=agent_overlap,
        notes=notes,
    )


@dataclass
class CorpusSummary:
    works: int
    means: dict[str, float]
    per_work: list[dict]
    agent_name_works: int
    agent_name_fields: int
    baseline_name_works: int
    baseline_name_fields: int
    agent_v_count: int
    baseline_form_subdivisions: int
    overlap_per_baseline: float
    overlap_per_agent: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def aggregate(reports: Iterable[ComparisonReport]) -> CorpusSummary:
    reports = list(reports)
    if not reports:
        raise ValueError("nothing to aggregate")
    keys = list(reports[0].scores())
    means = {k: statistics.fmean(r.scores()[k] for r in reports) for k in keys}

    def has_names_agent(r):
        return sum(f.tag in NAME_TAGS for f in r.agent_fields)

    def has_names_base(r):
        return sum(b.tag in NAME_TAGS for b in r.baseline_headings)

    strong_b = sum(sum(m.level >= MatchLevel.SAME_CONCEPT for m in r.matches) for r in reports)
    total_b = sum(len(r.baseline_headings) for r in reports)
    total_a = sum(sum(f.tag != "655" for f in r.agent_fields) for r in reports)
    return CorpusSummary(
        works=len(reports),
        means=means,
        per_work=[{"work_id": r.work_id, **r.scores()} for r in reports],
        agent_name_works=sum(has_names_agent(r) > 0 for r in reports),
        agent_name_fields=sum(has_names_agent(r) for r in reports),
        baseline_name_works=sum(has_names_base(r) > 0 for r in reports),
        baseline_name_fields=sum(has_names_base(r) for r in reports),
        agent_v_count=sum(len(f.get("v")) for r in reports for f in r.agent_fields),
        baseline_form_subdivisions=sum(
            1 for r in reports for b in r.baseline_headings for s in b.subdivisions
            if s.type is SegmentType.FORM),
        overlap_per_baseline=strong_b / total_b if total_b else 1.0,
        overlap_per_agent=strong_b / total_a if total_a else 1.0,
    )


def side_by_side(report: ComparisonReport, title: str = "", width: int = 72) -> str:
    """Two-column text table: agent fields left, baseline headings right."""
    left = [render(f) for f in report.agent_fields]
    right = [b.text() for b in report.baseline_headings]
    rows = max(len(left), len(right))
    left += ["---"] * (rows - len(left))
    right += ["---"] * (rows - len(right))
    head = f"{report.work_id} {title}".strip()
    lines = [head, "-" * (width + 40), f"{'Agent output':<{width}}  Baseline headings"]
    lines += [f"{a:<{width}}  {b}" for a, b in zip(left, right)]
    scores = "  ".join(f"{k}={v:.2f}" for k, v in report.scores().items())
    lines.append(scores)
    return "\n".join(lines) + "\n"
