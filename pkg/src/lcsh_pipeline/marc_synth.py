"""Construction of MARC 21 6xx subject fields from validated headings.

Canonical text form of a field::

    650 _0 $aRace discrimination$zUnited States$xHistory$y20th century.

Blank indicators are written ``_``. Form subdivisions (``$v``) are never
produced; genre/form terms go to 655 fields coded with ``$2lcgft``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .filter_engine import SubdivisionType
from .validator import ResolvedSubdivision, ValidatedHeading

SUBJECT_TAGS = ("600", "610", "611", "650", "651", "655")
BLANK = " "
CONTROL_CODES = frozenset("0123456789")
SUBFIELD_CODES = {
    SubdivisionType.GEOGRAPHIC: "z",
    SubdivisionType.TOPICAL: "x",
    SubdivisionType.CHRONOLOGICAL: "y",
}
_BLOCK_ORDER = (SubdivisionType.GEOGRAPHIC, SubdivisionType.TOPICAL, SubdivisionType.CHRONOLOGICAL)


class SynthesisError(ValueError):
    pass


class FormSubdivisionError(SynthesisError):
    def __init__(self, value: str):
        super().__init__(f"form subdivision {value!r} refused: $v form subdivisions are "
                         "discontinued (2026 LC policy); assign a 655 LCGFT term instead")


class OrderMode(str, enum.Enum):
    CANONICAL = "canonical"
    PRESERVE_GIVEN = "given"


@dataclass(frozen=True)
class SubjectField:
    tag: str
    ind1: str
    ind2: str
    subfields: tuple[tuple[str, str], ...]

    def codes(self) -> str:
        return "".join(code for code, _ in self.subfields)

    def get(self, code: str) -> list[str]:
        return [v for c, v in self.subfields if c == code]

    def to_json(self) -> dict:
        return {"tag": self.tag, "ind1": self.ind1, "ind2": self.ind2,
                "subfields": [{"code": c, "value": v} for c, v in self.subfields]}

    @classmethod
    def from_json(cls, obj: dict) -> "SubjectField":
        return cls(obj["tag"], obj["ind1"], obj["ind2"],
                   tuple((sf["code"], sf["value"]) for sf in obj["subfields"]))


def check_field(f: SubjectField) -> None:
    """Raise :class:`SynthesisError` naming the first rule *f* breaks."""
    if f.tag not in SUBJECT_TAGS:
        raise SynthesisError(f"tag {f.tag!r} is not a subject access tag")
    for ind in (f.ind1, f.ind2):
        if len(ind) != 1 or not (ind == BLANK or ind.isdigit() and ind.isascii()):
            raise SynthesisError(f"indicator {ind!r} must be a digit or blank")
    if not f.subfields or f.subfields[0][0] != "a":
        raise SynthesisError("first subfield must be $a")
    for code, value in f.subfields:
        if len(code) != 1 or not (code.isascii() and (code.islower() or code.isdigit())):
            raise SynthesisError(f"bad subfield code {code!r}")
        if code == "v":
            raise FormSubdivisionError(value)
        if not value or "$" in value or "\t" in value or len(f"_{value}_".splitlines()) > 1:
            raise SynthesisError(f"${code} value {value!r} is empty or contains a delimiter")
    if f.tag == "655":
        if f.ind2 != "7" or f.subfields[-1] != ("2", "lcgft"):
            raise SynthesisError("655 needs second indicator 7 and a final $2lcgft")
    elif f.ind2 != "0":
        raise SynthesisError(f"{f.tag} needs second indicator 0 (LCSH)")
    if f.tag == "600" and f.ind1 not in "01":
        raise SynthesisError("600 first indicator must be 0 (forename) or 1 (surname)")
    if f.tag in ("610", "611") and f.ind1 != "2":
        raise SynthesisError(f"{f.tag} first indicator must be 2 (direct order)")


def order_subdivisions(subdivs: Iterable[ResolvedSubdivision],
                       mode: OrderMode | str = OrderMode.CANONICAL) -> list[ResolvedSubdivision]:
    """Geographic, then topical, then chronological, each block keeping input order.

    ``PRESERVE_GIVEN`` returns the input unchanged, for established patterns
    such as ``$yEarly modern, 1500-1700$xHistory and criticism``.
    """
    subdivs = list(subdivs)
    for s in subdivs:
        if s.type is SubdivisionType.FORM:
            raise FormSubdivisionError(s.value)
    if OrderMode(mode) is OrderMode.PRESERVE_GIVEN:
        return subdivs
    return [s for block in _BLOCK_ORDER for s in subdivs if s.type is block]


def _ends_closed(value: str) -> bool:
    return value.rstrip().endswith((".", ")", "-"))


def apply_punctuation(f: SubjectField) -> SubjectField:
    """Add the terminal period to the last data subfield.

    Values already ending in a period, closing parenthesis or hyphen (an
    open date) are left alone; control subfields such as ``$2`` follow the
    period.
    """
    subfields = list(f.subfields)
    for i in range(len(subfields) - 1, -1, -1):
        code, value = subfields[i]
        if code in CONTROL_CODES:
            continue
        if not _ends_closed(value):
            subfields[i] = (code, value + ".")
        break
    return replace(f, subfields=tuple(subfields))


def _name_subfields(v: ValidatedHeading) -> list[tuple[str, str]]:
    nc = v.name_components
    name = nc.name if nc else v.authorized_base
    out = []
    if nc and nc.dates:
        out.append(("a", name.rstrip(",") + ","))
        out.append(("d", nc.dates))
    else:
        out.append(("a", name))
    if nc and nc.work_title:
        code, value = out[-1]
        if not _ends_closed(value):
            out[-1] = (code, value.rstrip(",") + ".")
        out.append(("t", nc.work_title))
    return out


def synthesize(v: ValidatedHeading, mode: OrderMode | str | None = None) -> SubjectField:
    tag = v.tag
    if tag in ("600", "610", "611"):
        subfields = _name_subfields(v)
    else:
        subfields = [("a", v.authorized_base)]
    for s in order_subdivisions(v.resolved_subdivisions, mode or v.subdivision_order):
        subfields.append((SUBFIELD_CODES[s.type], s.value))
    if tag == "655":
        subfields.append(("2", "lcgft"))
    ind1 = {"600": "1", "610": "2", "611": "2"}.get(tag, BLANK)
    ind2 = "7" if tag == "655" else "0"
    field = apply_punctuation(SubjectField(tag, ind1, ind2, tuple(subfields)))
    check_field(field)
    return field


def render_indicator(ind: str) -> str:
    return "_" if ind == BLANK else ind


def render(f: SubjectField) -> str:
    return f"{f.tag} {render_indicator(f.ind1)}{render_indicator(f.ind2)} " + \
        "".join(f"${code}{value}" for code, value in f.subfields)


def synthesize_all(headings: Sequence[ValidatedHeading]) -> list[SubjectField]:
    return [synthesize(h) for h in headings]
