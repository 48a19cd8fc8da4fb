"""Reading and writing subject headings as text.

Two notations are handled: canonical field lines (``650 _0 $aPoverty.``) and
catalog display strings with ``--`` separated subdivisions
(``Microfinance -- Bangladesh -- History``).
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .authority_store import AuthorityStore, Kind, label_key
from .marc_synth import SUBFIELD_CODES, SubjectField, render
from .places import Gazetteer, default_gazetteer, form_subdivisions
from .validator import is_chronological


class ParseError(ValueError):
    def __init__(self, message: str, column: int | None = None):
        self.column = column
        super().__init__(message if column is None else f"column {column}: {message}")


class SegmentType(str, enum.Enum):
    BASE = "base"
    TOPICAL = "topical"
    GEOGRAPHIC = "geographic"
    CHRONOLOGICAL = "chronological"
    FORM = "form"
    UNKNOWN = "unknown"


CODE_TYPES = {code: SegmentType(t.value) for t, code in SUBFIELD_CODES.items()}
CODE_TYPES["v"] = SegmentType.FORM

UNKNOWN_FLOOR = 0.25
_CONFIDENCE = {"authority": 1.0, "pattern": 0.9, "default": 0.5, "weak": 0.1}


@dataclass(frozen=True)
class TypedSegment:
    type: SegmentType
    value: str
    confidence: float


@dataclass(frozen=True)
class BaselineHeading:
    segments: tuple[str, ...]
    typed_segments: tuple[TypedSegment, ...]
    tag: str | None = None  # known only when the source recorded it

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("baseline heading has no segments")
        if len(self.segments) != len(self.typed_segments):
            raise ValueError("typed segments do not line up with segments")
        if self.typed_segments[0].type is not SegmentType.BASE:
            raise ValueError("first segment must be the base")

    @property
    def base(self) -> str:
        return self.segments[0]

    @property
    def subdivisions(self) -> tuple[TypedSegment, ...]:
        return self.typed_segments[1:]

    def text(self) -> str:
        return " -- ".join(self.segments)


# "--" anywhere; em dash anywhere; en dash only with a space on either side,
# since date ranges such as 1500-1700 are often typeset with one.
DELIMITER = re.compile(r"\s*--\s*|\s*\u2014\s*|\s+\u2013\s*|\s*\u2013\s+")


@dataclass
class SegmentClassifier:
    lcsh: AuthorityStore | None = None
    lcgft: AuthorityStore | None = None
    gazetteer: Gazetteer | None = None
    floor: float = UNKNOWN_FLOOR

    def classify(self, segment: str) -> TypedSegment:
        gaz = self.gazetteer or default_gazetteer()
        if is_chronological(segment):
            return TypedSegment(SegmentType.CHRONOLOGICAL, segment, _CONFIDENCE["pattern"])
        rec = self.lcsh.resolve(segment) if self.lcsh is not None else None
        if rec is not None and rec.kind is Kind.GEOGRAPHIC:
            return TypedSegment(SegmentType.GEOGRAPHIC, segment, _CONFIDENCE["authority"])
        if gaz.is_place(segment):
            return TypedSegment(SegmentType.GEOGRAPHIC, segment, _CONFIDENCE["pattern"])
        if self.lcgft is not None and self.lcgft.resolve(segment) is not None:
            return TypedSegment(SegmentType.FORM, segment, _CONFIDENCE["authority"])
        if label_key(segment) in form_subdivisions():
            return TypedSegment(SegmentType.FORM, segment, _CONFIDENCE["pattern"])
        if rec is not None:
            return TypedSegment(SegmentType.TOPICAL, segment, _CONFIDENCE["authority"])
        confidence = _CONFIDENCE["default"] if re.search(r"[^\W\d_]{2}", segment) else _CONFIDENCE["weak"]
        kind = SegmentType.TOPICAL if confidence >= self.floor else SegmentType.UNKNOWN
        return TypedSegment(kind, segment, confidence)


def split_baseline(line: str) -> list[str]:
    if not line.strip():
        raise ParseError("empty heading")
    segments = [s.strip() for s in DELIMITER.split(line.strip())]
    for i, s in enumerate(segments):
        if not s:
            raise ParseError(f"empty segment {i + 1} in {line!r}")
    return segments


def parse_baseline(line: str, classifier: SegmentClassifier | None = None,
                   tag: str | None = None) -> BaselineHeading:
    classifier = classifier or SegmentClassifier()
    segments = split_baseline(line)
    typed = [TypedSegment(SegmentType.BASE, segments[0], 1.0)]
    typed.extend(classifier.classify(s) for s in segments[1:])
    return BaselineHeading(tuple(segments), tuple(typed), tag)


def strip_terminal(value: str) -> str:
    """Drop a closing period added by punctuation rules (but not from "etc.")."""
    value = value.strip()
    if value.endswith(".") and not value.endswith("etc."):
        return value[:-1].rstrip()
    return value


def field_to_baseline(f: SubjectField) -> BaselineHeading:
    """Display form of a field with subdivision types taken from its codes."""
    base = strip_terminal(" ".join(v for c, v in f.subfields if c in "adt"))
    segs = [base]
    typed = [TypedSegment(SegmentType.BASE, base, 1.0)]
    for code, value in f.subfields:
        if code in CODE_TYPES:
            value = strip_terminal(value)
            segs.append(value)
            typed.append(TypedSegment(CODE_TYPES[code], value, 1.0))
    return BaselineHeading(tuple(segs), tuple(typed), f.tag)


# -- canonical field lines ------------------------------------------------------

_SUBFIELD_START = re.compile(r"\$([a-z0-9])")


def parse_field_line(line: str) -> SubjectField:
    """Inverse of :func:`render`; errors carry a 1-based column."""
    line = line.rstrip("\n")
    if len(line) < 3 or not (line[:3].isascii() and line[:3].isdigit()):
        raise ParseError("expected a three-digit tag", 1)
    if len(line) < 4 or line[3] != " ":
        raise ParseError("expected a space after the tag", 4)
    inds = line[4:6]
    for offset, ch in enumerate(inds):
        if not (ch == "_" or ch.isascii() and ch.isdigit()):
            raise ParseError(f"bad indicator {ch!r}", 5 + offset)
    if len(inds) != 2:
        raise ParseError("expected two indicators", 5 + len(inds))
    if len(line) < 7 or line[6] != " ":
        raise ParseError("expected a space after the indicators", 7)
    body = line[7:]
    if not body.startswith("$"):
        raise ParseError("expected a subfield delimiter", 8)
    subfields = []
    pos = 0
    while pos < len(body):
        m = _SUBFIELD_START.match(body, pos)
        if not m:
            raise ParseError("bad subfield code", 8 + pos)
        end = body.find("$", m.end())
        end = len(body) if end < 0 else end
        subfields.append((m.group(1), body[m.end():end]))
        pos = end
    ind1, ind2 = (" " if c == "_" else c for c in inds)
    return SubjectField(line[:3], ind1, ind2, tuple(subfields))


def emit(fields: Iterable[SubjectField], fmt: str = "text") -> str:
    fields = list(fields)
    if fmt == "text":
        return "".join(render(f) + "\n" for f in fields)
    if fmt == "json":
        return json.dumps([f.to_json() for f in fields], ensure_ascii=False, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def parse_document(text: str, fmt: str = "text") -> list[SubjectField]:
    if fmt == "text":
        return [parse_field_line(line) for line in text.splitlines() if line.strip()]
    if fmt == "json":
        return [SubjectField.from_json(obj) for obj in json.loads(text)]
    raise ValueError(f"unknown format {fmt!r}")


# -- typeset notation -----------------------------------------------------------

def display_to_canonical(line: str) -> str:
    """Map a typeset field line (``650 #0 ...`` or ``650  0 ...``) to canonical form.

    ``#`` and a space both mean a blank indicator.
    """
    if len(line) < 7 or line[3] != " " or line[6] != " ":
        raise ParseError(f"not a tag/indicator line: {line!r}")
    inds = "".join("_" if c in "# " else c for c in line[4:6])
    return f"{line[:3]} {inds} {line[7:]}"


# -- corpora ----------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusEntry:
    work_id: str
    title: str
    items: tuple


def _read_records(path: str | Path) -> list[dict]:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        return json.loads(text)
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def load_agent_corpus(path: str | Path) -> list[CorpusEntry]:
    """Works with canonical field lines under ``fields``."""
    out = []
    for obj in _read_records(path):
        lines = obj.get("fields", obj.get("baseline", []))
        out.append(CorpusEntry(str(obj["work_id"]), obj.get("title", ""),
                               tuple(parse_field_line(line) for line in lines)))
    return out


def load_baseline_corpus(path: str | Path, classifier: SegmentClassifier | None = None
                         ) -> list[CorpusEntry]:
    """Works with ``--`` heading strings under ``baseline``.

    An item may also be ``{"heading": ..., "tag": ...}``, or a canonical field
    line, in which case its subfield codes supply the segment types.
    """
    out = []
    for obj in _read_records(path):
        items = []
        for item in obj.get("baseline", obj.get("fields", [])):
            if isinstance(item, dict):
                items.append(parse_baseline(item["heading"], classifier, item.get("tag")))
                continue
            try:
                items.append(field_to_baseline(parse_field_line(item)))
            except ParseError:
                items.append(parse_baseline(item, classifier))
        out.append(CorpusEntry(str(obj["work_id"]), obj.get("title", ""), tuple(items)))
    return out
