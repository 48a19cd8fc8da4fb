"""Authority validation of candidate headings.

Topical and geographic bases are checked against the LCSH index, genre/form
terms against LCGFT, and names against the name-suggestion service. Geographic
subdivisions are authorized with the indirect method: the containing country
(or, for the exception countries, the first-order division) comes before the
local place.
"""

from __future__ import annotations

import enum
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable

from .authority_store import AmbiguityError, AuthorityRecord, AuthorityStore
from .filter_engine import (
    CandidateHeading, ConceptKind, NAME_KINDS, SubdivisionHint, SubdivisionType,
)
from .lcnaf_client import NameClient, accept_name, split_dates
from .places import Gazetteer, default_gazetteer
from .term_index import (
    DEFAULT_FUZZY_THRESHOLD, DEFAULT_K, Authorized, Fuzzy, MatchClass, TermIndex,
    VariantOf, classify,
)


class Status(str, enum.Enum):
    AUTHORIZED = "authorized"
    VARIANT_REDIRECTED = "variant_redirected"
    NAME_CONFIRMED = "name_confirmed"


class HeadingRejected(Exception):
    """A candidate (or one of its subdivisions) failed authority validation."""

    def __init__(self, label: str, reason: str, evidence: Any = None):
        self.label = label
        self.reason = reason
        self.evidence = evidence
        super().__init__(f"{label}: {reason}")

    def to_json(self) -> dict:
        ev = self.evidence
        if hasattr(ev, "to_json"):
            ev = ev.to_json()
        return {"label": self.label, "reason": self.reason, "evidence": ev}


@dataclass(frozen=True)
class ResolvedSubdivision:
    type: SubdivisionType
    value: str
    authority_id: str | None = None

    def to_json(self) -> dict:
        return {"type": self.type.value, "value": self.value, "authority_id": self.authority_id}


@dataclass(frozen=True)
class NameComponents:
    name: str
    dates: str | None = None
    work_title: str | None = None


@dataclass(frozen=True)
class ValidatedHeading:
    candidate: CandidateHeading
    authorized_base: str
    status: Status
    authority_id: str | None = None
    resolved_subdivisions: tuple[ResolvedSubdivision, ...] = ()
    name_components: NameComponents | None = None
    subdivision_order: str = "canonical"
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.authorized_base.strip():
            raise ValueError("authorized base is empty")
        if any(s.type is SubdivisionType.FORM for s in self.resolved_subdivisions):
            raise ValueError("form subdivisions are discontinued; use a 655 genre/form field")
        if self.candidate.intended_tag == "655" and not self.authority_id:
            raise ValueError("a 655 heading needs an LCGFT authority id")

    @property
    def tag(self) -> str:
        return self.candidate.intended_tag

    def to_json(self) -> dict:
        nc = self.name_components
        return {
            "position": self.candidate.order_position,
            "tag": self.tag,
            "label": self.candidate.concept.label,
            "status": self.status.value,
            "authorized_base": self.authorized_base,
            "authority_id": self.authority_id,
            "subdivisions": [s.to_json() for s in self.resolved_subdivisions],
            "subdivision_order": self.subdivision_order,
            "name": ({"name": nc.name, "dates": nc.dates, "work_title": nc.work_title}
                     if nc else None),
            "notes": list(self.notes),
        }


# Years, centuries and open or closed date ranges, optionally after a period name.
_CHRONO = re.compile(
    r"^(?:[A-Z][\w'’ -]*,\s*)?"
    r"(?:(?:To|Ca\.|Approximately)\s+)?"
    r"(?:\d{1,4}(?:\s*B\.C\.|\s*A\.D\.)?(?:\s*-\s*(?:\d{1,4}(?:\s*B\.C\.|\s*A\.D\.)?)?)?"
    r"|\d{1,2}(?:st|nd|rd|th)\s+century(?:\s*B\.C\.)?)$"
)


def is_chronological(value: str) -> bool:
    return bool(_CHRONO.match(value.strip()))


def authorize_geo_subdivision(store: AuthorityStore | None, base_record: AuthorityRecord,
                              place_path: Iterable[str],
                              gazetteer: Gazetteer | None = None) -> list[str]:
    """Indirect geographic subdivision values for *place_path* (local place first).

    ``["Toracari", "Bolivia"]`` becomes ``["Bolivia", "Toracari"]``. A place
    inside one of the exception countries is entered under its first-order
    division instead (``["Detroit", "Michigan"]`` -> ``["Michigan", "Detroit"]``).
    """
    gaz = gazetteer or default_gazetteer()
    path = [p.strip() for p in place_path if p and p.strip()]
    if not path:
        raise HeadingRejected(base_record.authorized_label, "empty place path")
    if not base_record.geo_subdividable:
        raise HeadingRejected(
            base_record.authorized_label,
            "heading may not be subdivided geographically (no geographic subdivision authorization)",
            {"place_path": path})
    local = path[0]
    # A country or first-order division is entered directly.
    if gaz.is_country(local) or gaz.first_order_parent(local):
        return [local]
    containers = path[1:]
    for place in containers:
        if gaz.first_order_parent(place):
            return [place, local]
    for place in containers:
        if gaz.is_exception_country(place):
            raise HeadingRejected(
                base_record.authorized_label,
                f"{local!r} lies in {place}, which is subdivided through its first-order divisions; "
                "give the state, province or constituent country in the place path",
                {"place_path": path})
        if gaz.is_country(place):
            return [place, local]
    raise HeadingRejected(
        base_record.authorized_label,
        f"no containing jurisdiction known for {local!r}; supply an explicit place path "
        "ending in a country",
        {"place_path": path})


@dataclass
class Validator:
    lcsh: AuthorityStore
    lcgft: AuthorityStore
    lcsh_index: TermIndex
    lcgft_index: TermIndex
    names: NameClient | None = None
    fuzzy_threshold: float = DEFAULT_FUZZY_THRESHOLD
    k: int = DEFAULT_K
    gazetteer: Gazetteer = field(default_factory=default_gazetteer)
    default_order: str = "canonical"

    def validate(self, candidate: CandidateHeading) -> ValidatedHeading:
        concept = candidate.concept
        notes: list[str] = []
        if concept.kind in NAME_KINDS:
            base, authority_id, status, name_parts, record = self._validate_name(candidate, notes)
        else:
            is_form = concept.kind is ConceptKind.GENRE_FORM
            store, index = (self.lcgft, self.lcgft_index) if is_form else (self.lcsh, self.lcsh_index)
            record, status = self._lookup(concept.label, store, index, notes)
            base, authority_id, name_parts = record.authorized_label, record.id, None

        subdivisions = []
        for hint in concept.subdivision_hints:
            subdivisions.extend(self._subdivision(hint, record, concept.label, notes))
        return ValidatedHeading(
            candidate=candidate,
            authorized_base=base,
            status=status,
            authority_id=authority_id,
            resolved_subdivisions=tuple(subdivisions),
            name_components=name_parts,
            subdivision_order=concept.subdivision_order or self.default_order,
            notes=tuple(notes),
        )

    def validate_all(self, candidates: Iterable[CandidateHeading], workers: int = 1
                     ) -> tuple[list[ValidatedHeading], list[HeadingRejected]]:
        """Validate a batch; results keep candidate order whatever the worker count."""
        candidates = list(candidates)

        def one(c: CandidateHeading) -> ValidatedHeading | HeadingRejected:
            try:
                return self.validate(c)
            except HeadingRejected as exc:
                return exc

        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                results = list(pool.map(one, candidates))
        else:
            results = [one(c) for c in candidates]
        accepted = [r for r in results if isinstance(r, ValidatedHeading)]
        rejected = [r for r in results if isinstance(r, HeadingRejected)]
        return accepted, rejected

    # -- helpers -------------------------------------------------------

    def _classify(self, label: str, store: AuthorityStore, index: TermIndex) -> MatchClass:
        try:
            return classify(store, index, label, self.fuzzy_threshold, self.k)
        except AmbiguityError as exc:
            raise HeadingRejected(label, str(exc), {"ambiguous": exc.ids}) from exc

    def _lookup(self, label: str, store: AuthorityStore, index: TermIndex,
                notes: list[str]) -> tuple[AuthorityRecord, Status]:
        match = self._classify(label, store, index)
        if isinstance(match, Authorized):
            return store.get(match.record_id), Status.AUTHORIZED
        if isinstance(match, VariantOf):
            record = store.get(match.record_id)
            notes.append(f"{label!r} is a variant ({match.matched_variant!r}); "
                         f"redirected to {record.authorized_label!r}")
            return record, Status.VARIANT_REDIRECTED
        vocab = "LCGFT" if store is self.lcgft else "LCSH"
        if isinstance(match, Fuzzy):
            raise HeadingRejected(label, f"not an authorized {vocab} heading; see suggestions", match)
        raise HeadingRejected(label, f"not found in {vocab}", match)

    def _validate_name(self, candidate: CandidateHeading, notes: list[str]):
        concept = candidate.concept
        if self.names is None:
            raise HeadingRejected(concept.label, "no name authority client configured")
        query, _ = split_dates(concept.label)
        hits = self.names.suggest_names(query)
        match = accept_name(concept.label, hits)
        if match is None:
            raise HeadingRejected(concept.label, "no matching name authority",
                                  {"hits": [{"uri": h.uri, "label": h.label} for h in hits]})
        if match.other_hits:
            notes.append(f"{match.other_hits + 1} name authorities match {query!r}; took the first")
        dates = match.dates
        if candidate.intended_tag != "600" and dates:
            # Corporate bodies carry no $d; keep the hit's full form as the name.
            name, dates = match.hit.label, None
        else:
            name = match.name
        parts = NameComponents(name, dates, concept.work_title)
        return name, match.hit.uri, Status.NAME_CONFIRMED, parts, None

    def _subdivision(self, hint: SubdivisionHint, base_record: AuthorityRecord | None,
                     label: str, notes: list[str]) -> list[ResolvedSubdivision]:
        if hint.type is SubdivisionType.FORM:
            raise HeadingRejected(label, f"form subdivision {hint.value!r} is discontinued")
        if hint.type is SubdivisionType.CHRONOLOGICAL:
            if not is_chronological(hint.value):
                raise HeadingRejected(label, f"{hint.value!r} is not a chronological subdivision")
            return [ResolvedSubdivision(hint.type, hint.value)]
        if hint.type is SubdivisionType.GEOGRAPHIC:
            path = hint.place_path or (hint.value,)
            if base_record is None:
                notes.append(f"geographic subdivision {hint.value!r} under a name heading "
                             "was not checked against an authority record")
                return [ResolvedSubdivision(hint.type, hint.value)]
            values = authorize_geo_subdivision(self.lcsh, base_record, path, self.gazetteer)
            out = []
            for v in values:
                rec = self.lcsh.resolve(v)
                out.append(ResolvedSubdivision(hint.type, v, rec.id if rec else None))
            return out
        try:
            rec = self.lcsh.lookup_exact(hint.value)
            if rec is None:
                redirect = self.lcsh.resolve_variant(hint.value)
                if redirect is not None:
                    rec = redirect[0]
                    notes.append(f"subdivision {hint.value!r} redirected to {rec.authorized_label!r}")
        except AmbiguityError as exc:
            notes.append(f"subdivision {hint.value!r} is ambiguous ({', '.join(exc.ids)}); kept as given")
            rec = None
        if rec is None:
            notes.append(f"subdivision {hint.value!r} not found in LCSH; kept as given")
            return [ResolvedSubdivision(hint.type, hint.value)]
        return [ResolvedSubdivision(hint.type, rec.authorized_label, rec.id)]


def validate_candidate(candidate: CandidateHeading, store_lcsh: AuthorityStore,
                       store_lcgft: AuthorityStore, index_lcsh: TermIndex,
                       index_lcgft: TermIndex, name_client: NameClient | None) -> ValidatedHeading:
    """Validate one candidate; raises :class:`HeadingRejected` on failure.

    Name-service transport errors propagate unchanged.
    """
    return Validator(store_lcsh, store_lcgft, index_lcsh, index_lcgft, name_client).validate(candidate)
