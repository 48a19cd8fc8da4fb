"""In-memory store of LCSH / LCGFT authority records loaded from canonical NDJSON.

Each input line is one flat JSON object::

    {"id": "sh85085906", "scheme": "lcsh", "kind": "topical",
     "authorized": "Microfinance", "variants": ["Micro-credit"],
     "broader": [...], "narrower": [...], "geo_subdividable": true}

Raw id.loc.gov MADS/RDF dumps must be flattened first (see
``scripts/convert_idloc.py``).
"""

from __future__ import annotations

import enum
import json
import logging
import re
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

log = logging.getLogger(__name__)


class Scheme(str, enum.Enum):
    LCSH = "lcsh"
    LCGFT = "lcgft"


class Kind(str, enum.Enum):
    TOPICAL = "topical"
    GEOGRAPHIC = "geographic"
    GENRE_FORM = "genre_form"


class AuthorityError(Exception):
    """Base class for store failures."""


class AuthorityLoadError(AuthorityError):
    """The authority file could not be read at all."""


class AmbiguityError(AuthorityError):
    def __init__(self, label: str, ids: Iterable[str]):
        self.label = label
        self.ids = sorted(set(ids))
        super().__init__(f"{label!r} is ambiguous between records {', '.join(self.ids)}")


class RecordNotFound(AuthorityError, KeyError):
    def __str__(self) -> str:
        return f"no authority record with id {self.args[0]!r}"


# Letters that survive NFKD decomposition but have a conventional ASCII spelling.
_FOLD = str.maketrans({
    "æ": "ae", "œ": "oe", "ß": "ss", "ø": "o", "đ": "d", "ð": "d",
    "þ": "th", "ł": "l", "ı": "i", "ŀ": "l", "ħ": "h", "ŧ": "t",
})
_TOKEN = re.compile(r"[^\W_]+")


def _fold(text: str) -> str:
    text = unicodedata.normalize("NFKD", text.lower())
    text = "".join(c for c in text if not unicodedata.combining(c))
    return text.lower().translate(_FOLD)


def normalize(label: str) -> tuple[str, ...]:
    """Tokenize *label* into lowercase, diacritic-free letter/digit runs.

    >>> normalize("Methodus theologiæ Christianæ")
    ('methodus', 'theologiae', 'christianae')
    """
    text = label
    # A few compatibility characters only settle after a second pass
    # (e.g. a ligature that decomposes into a letter with a mark).
    for _ in range(4):
        folded = _fold(text)
        if folded == text:
            break
        text = folded
    return tuple(_TOKEN.findall(text))


def label_key(label: str) -> str:
    """Normalized label rendered back to a single string (the lookup key)."""
    return " ".join(normalize(label))


@dataclass(frozen=True)
class AuthorityRecord:
    id: str
    scheme: Scheme
    kind: Kind
    authorized_label: str
    variant_labels: tuple[str, ...] = ()
    broader_ids: tuple[str, ...] = ()
    narrower_ids: tuple[str, ...] = ()
    geo_subdividable: bool = False

    def __post_init__(self) -> None:
        if not self.authorized_label.strip():
            raise ValueError(f"{self.id}: authorized label is empty")
        if self.id in self.broader_ids:
            raise ValueError(f"{self.id}: record lists itself as broader")
        if (self.scheme is Scheme.LCGFT) != (self.kind is Kind.GENRE_FORM):
            raise ValueError(f"{self.id}: kind {self.kind.value} is not allowed in {self.scheme.value}")

    @classmethod
    def from_json(cls, obj: dict) -> "AuthorityRecord":
        for key in ("id", "scheme", "kind", "authorized"):
            if key not in obj:
                raise ValueError(f"missing required field {key!r}")
        if not isinstance(obj["id"], str) or not obj["id"]:
            raise ValueError("id must be a non-empty string")
        if not isinstance(obj["authorized"], str):
            raise ValueError("authorized must be a string")
        lists = {}
        for key in ("variants", "broader", "narrower"):
            value = obj.get(key) or []
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise ValueError(f"{key} must be an array of strings")
            lists[key] = tuple(value)
        geo = obj.get("geo_subdividable", False)
        if not isinstance(geo, bool):
            raise ValueError("geo_subdividable must be a boolean")
        return cls(
            id=obj["id"],
            scheme=Scheme(obj["scheme"]),
            kind=Kind(obj["kind"]),
            authorized_label=obj["authorized"],
            variant_labels=lists["variants"],
            broader_ids=lists["broader"],
            narrower_ids=lists["narrower"],
            geo_subdividable=geo,
        )

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "scheme": self.scheme.value,
            "kind": self.kind.value,
            "authorized": self.authorized_label,
            "variants": list(self.variant_labels),
            "broader": list(self.broader_ids),
            "narrower": list(self.narrower_ids),
            "geo_subdividable": self.geo_subdividable,
        }


@dataclass
class LoadReport:
    path: str | None = None
    loaded: int = 0
    skipped: list[tuple[int, str]] = field(default_factory=list)  # (line number, reason)
    duplicates: list[tuple[int, str]] = field(default_factory=list)  # (line number, id)
    dangling: list[tuple[str, str, str]] = field(default_factory=list)  # (id, relation, target)

    def summary(self) -> str:
        return (f"{self.loaded} records, {len(self.skipped)} skipped, "
                f"{len(self.duplicates)} duplicate ids, {len(self.dangling)} dangling links")

    def to_json(self) -> dict:
        return {
            "path": self.path,
            "loaded": self.loaded,
            "skipped": [{"line": n, "reason": r} for n, r in self.skipped],
            "duplicates": [{"line": n, "id": i} for n, i in self.duplicates],
            "dangling": [{"id": i, "relation": rel, "target": t} for i, rel, t in self.dangling],
        }


@dataclass(frozen=True)
class Collision:
    """A normalized label claimed by more than one record."""

    key: str
    role: str  # "authorized" or "variant"
    ids: tuple[str, ...]


class AuthorityStore:
    """Immutable, read-only view over a set of authority records."""

    def __init__(self, records: Iterable[AuthorityRecord], report: LoadReport | None = None):
        self._records: dict[str, AuthorityRecord] = {}
        for rec in records:
            if rec.id in self._records:
                raise ValueError(f"duplicate record id {rec.id}")
            self._records[rec.id] = rec
        self.report = report or LoadReport(loaded=len(self._records))

        self._by_label: dict[str, list[str]] = defaultdict(list)
        self._by_variant: dict[str, list[tuple[str, str]]] = defaultdict(list)
        # Inverse NT links count as BT links, so one-sided dumps still form a hierarchy.
        inferred: dict[str, set[str]] = defaultdict(set)
        for rec in self._records.values():
            self._by_label[label_key(rec.authorized_label)].append(rec.id)
            for variant in rec.variant_labels:
                self._by_variant[label_key(variant)].append((rec.id, variant))
            for nt in rec.narrower_ids:
                if nt != rec.id:
                    inferred[nt].add(rec.id)
        self._broader: dict[str, tuple[str, ...]] = {}
        for rec in self._records.values():
            extra = sorted(inferred.get(rec.id, set()) - set(rec.broader_ids))
            self._broader[rec.id] = rec.broader_ids + tuple(extra)
        self._narrower: dict[str, list[str]] = defaultdict(list)
        for rid, parents in self._broader.items():
            for parent in parents:
                self._narrower[parent].append(rid)

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, record_id: object) -> bool:
        return record_id in self._records

    def __iter__(self) -> Iterator[AuthorityRecord]:
        return iter(self._records.values())

    def get(self, record_id: str) -> AuthorityRecord:
        try:
            return self._records[record_id]
        except KeyError:
            raise RecordNotFound(record_id) from None

    def lookup_exact(self, label: str) -> AuthorityRecord | None:
        ids = self._by_label.get(label_key(label), [])
        if len(ids) > 1:
            raise AmbiguityError(label, ids)
        return self._records[ids[0]] if ids else None

    def resolve_variant(self, label: str) -> tuple[AuthorityRecord, str] | None:
        """Return ``(owner, matched_variant)`` for a UF reference matching *label*.

        A record whose own authorized label normalizes to the same key is not
        reported here; callers try :meth:`lookup_exact` first.
        """
        key = label_key(label)
        owners: dict[str, str] = {}
        for rid, variant in self._by_variant.get(key, []):
            if label_key(self._records[rid].authorized_label) != key:
                owners.setdefault(rid, variant)
        if len(owners) > 1:
            raise AmbiguityError(label, owners)
        if not owners:
            return None
        rid, variant = next(iter(owners.items()))
        return self._records[rid], variant

    def resolve(self, label: str) -> AuthorityRecord | None:
        """Exact match, falling back to a variant redirect; ambiguity yields None."""
        try:
            rec = self.lookup_exact(label)
            if rec is None:
                hit = self.resolve_variant(label)
                rec = hit[0] if hit else None
        except AmbiguityError:
            return None
        return rec

    def broader(self, record_id: str) -> tuple[str, ...]:
        return self._broader.get(record_id, ())

    def narrower(self, record_id: str) -> tuple[str, ...]:
        return tuple(self._narrower.get(record_id, ()))

    def broader_chain(self, record_id: str, max_depth: int) -> list[list[str]]:
        """Every ancestor path of length 1..max_depth, depth-first.

        Ids outside the store end a path rather than raising. No id is
        visited twice on one path, and the start id never reappears.
        """
        if record_id not in self._records:
            raise RecordNotFound(record_id)
        if max_depth < 1:
            raise ValueError("max_depth must be positive")
        paths: list[list[str]] = []

        def walk(current: str, path: list[str]) -> None:
            if len(path) == max_depth:
                return
            for parent in self._broader.get(current, ()):
                if parent == record_id or parent in path:
                    continue
                nxt = path + [parent]
                paths.append(nxt)
                walk(parent, nxt)

        walk(record_id, [])
        return paths

    def ancestors(self, record_id: str, max_depth: int) -> set[str]:
        return {rid for path in self.broader_chain(record_id, max_depth) for rid in path}

    def collisions(self) -> list[Collision]:
        """Normalized labels that cannot resolve to a single record."""
        found: list[Collision] = []
        for key, ids in sorted(self._by_label.items()):
            if len(ids) > 1:
                found.append(Collision(key, "authorized", tuple(sorted(ids))))
        for key, entries in sorted(self._by_variant.items()):
            owners = {rid for rid, _ in entries}
            clash = set(self._by_label.get(key, ())) - owners
            if len(owners) > 1 or clash:
                found.append(Collision(key, "variant", tuple(sorted(owners | clash))))
        return found

    def is_unique_variant(self, variant: str) -> bool:
        """True when *variant* collides with no authorized label and no other record's variant."""
        key = label_key(variant)
        if key in self._by_label:
            return False
        return len({rid for rid, _ in self._by_variant.get(key, [])}) == 1


def iter_ndjson(path: str | Path) -> Iterator[tuple[int, str]]:
    """Yield ``(line_number, text)`` for each non-blank line, streaming."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise AuthorityLoadError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                yield lineno, line


def load_authorities(path: str | Path, scheme: Scheme | str) -> AuthorityStore:
    """Load one canonical NDJSON authority file into a store.

    Malformed lines and records of the wrong scheme are skipped; a repeated id
    keeps the first occurrence. Both are listed on ``store.report``, as are
    broader/narrower links that point outside the file.
    """
    scheme = Scheme(scheme)
    report = LoadReport(path=str(path))
    records: dict[str, AuthorityRecord] = {}
    try:
        lines = list(iter_ndjson(path))
    except UnicodeDecodeError as exc:
        raise AuthorityLoadError(f"cannot decode {path}: {exc}") from exc
    for lineno, line in lines:
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("line is not a JSON object")
            rec = AuthorityRecord.from_json(obj)
            if rec.scheme is not scheme:
                raise ValueError(f"scheme {rec.scheme.value} in a {scheme.value} file")
        except ValueError as exc:  # JSONDecodeError is a ValueError
            report.skipped.append((lineno, str(exc)))
            continue
        if rec.id in records:
            report.duplicates.append((lineno, rec.id))
            continue
        records[rec.id] = rec

    for rec in records.values():
        for relation, targets in (("broader", rec.broader_ids), ("narrower", rec.narrower_ids)):
            for target in targets:
                if target not in records:
                    report.dangling.append((rec.id, relation, target))
    report.dangling.sort()
    report.loaded = len(records)
    if report.skipped or report.duplicates or report.dangling:
        log.warning("%s: %s", path, report.summary())
    return AuthorityStore(records.values(), report)


def write_ndjson(records: Iterable[AuthorityRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), ensure_ascii=False) + "\n")
