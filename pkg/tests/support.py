"""Helpers shared by the test modules."""

from __future__ import annotations

import json
from pathlib import Path

from lcsh_pipeline.filter_engine import (CandidateHeading, Concept, ConceptKind,
                                         SubdivisionType)
from lcsh_pipeline.validator import NameComponents, ResolvedSubdivision, Status, ValidatedHeading

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = FIXTURES / "golden" / "agent_rows.json"

TAG_KINDS = {"600": ConceptKind.PERSONAL_NAME, "610": ConceptKind.CORPORATE_NAME,
             "650": ConceptKind.TOPICAL, "651": ConceptKind.GEOGRAPHIC,
             "655": ConceptKind.GENRE_FORM}


def golden() -> dict:
    return json.loads(GOLDEN.read_text(encoding="utf-8"))


def heading_from_input(inp: dict, position: int = 1) -> ValidatedHeading:
    """Build the synthesis input described by a golden-corpus row."""
    tag = inp["tag"]
    name = inp.get("name")
    kind = TAG_KINDS[tag]
    if name and name.get("work_title"):
        kind = ConceptKind.NAME_TITLE
    concept = Concept(inp["base"], kind, 1.0, position,
                      work_title=name.get("work_title") if name else None)
    subs = tuple(ResolvedSubdivision(SubdivisionType(s["type"]), s["value"])
                 for s in inp["subdivisions"])
    return ValidatedHeading(
        candidate=CandidateHeading(concept, tag, position),
        authorized_base=inp["base"],
        status=Status.NAME_CONFIRMED if name else Status.AUTHORIZED,
        authority_id=f"fx-{tag}-{position}",
        resolved_subdivisions=subs,
        name_components=NameComponents(name["name"], name.get("dates"), name.get("work_title"))
        if name else None,
        subdivision_order=inp.get("order", "canonical"),
    )


def random_concepts(rng, labels, n_max: int = 12) -> list[Concept]:
    """A random but valid concept list; labels are drawn from *labels* to hit BT links."""
    from lcsh_pipeline.filter_engine import BroaderGroup

    n = rng.randint(0, n_max)
    ranks = rng.sample(range(1, 3 * n + 2), n)
    groups = [BroaderGroup(f"g{i}", f"Broader {i}") for i in range(3)]
    kinds = list(ConceptKind)
    out = []
    for i in range(n):
        kind = rng.choice(kinds + [ConceptKind.TOPICAL] * 4)
        label = rng.choice(labels) if rng.random() < 0.7 else f"Concept {rng.randrange(1000)}"
        out.append(Concept(
            label=label,
            kind=kind,
            coverage=round(rng.random(), 3),
            predominance_rank=ranks[i],
            critical_entity=rng.random() < 0.15,
            facet_distinct=rng.random() < 0.15,
            broader_group=rng.choice(groups) if rng.random() < 0.5 else None,
            work_title="A title" if kind is ConceptKind.NAME_TITLE else None,
        ))
    return out


# -- field and heading generators ------------------------------------------------

from hypothesis import strategies as st  # noqa: E402

_VALUE_ALPHABET = st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp"), blacklist_characters="$")
field_values = st.text(_VALUE_ALPHABET, min_size=1, max_size=24)


@st.composite
def subject_fields(draw):
    """Any field that passes check_field."""
    from lcsh_pipeline.marc_synth import SubjectField

    tag = draw(st.sampled_from(["600", "610", "611", "650", "651", "655"]))
    ind1 = {"600": draw(st.sampled_from("01")), "610": "2", "611": "2"}.get(
        tag, draw(st.sampled_from(" 0123456789")))
    ind2 = "7" if tag == "655" else "0"
    rest = draw(st.lists(st.tuples(st.sampled_from("abcdtxyz0123456789"), field_values), max_size=6))
    subfields = [("a", draw(field_values))] + rest
    if tag == "655":
        subfields.append(("2", "lcgft"))
    return SubjectField(tag, ind1, ind2, tuple(subfields))


def random_heading(rng, position: int = 1) -> ValidatedHeading:
    """A random synthesis input covering every tag and subdivision type."""
    words = ["Poverty", "Rural poor", "Black holes (Astronomy)", "Stand-up comedy", "Bolivia",
             "History", "20th century", "2006-", "Fiction?", "Etc.", "Rites and ceremonies"]
    kind = rng.choice(list(TAG_KINDS.values()) + [ConceptKind.NAME_TITLE])
    tag = next(t for t, k in TAG_KINDS.items() if k is kind) if kind is not ConceptKind.NAME_TITLE else "600"
    label = rng.choice(words) + ("" if rng.random() < 0.7 else f" {rng.randrange(100)}")
    name = None
    if tag in ("600", "610"):
        dates = rng.choice([None, "1940-", "1615-1691", "ca. 1500"]) if tag == "600" else None
        title = "Methodus theologiæ Christianæ" if kind is ConceptKind.NAME_TITLE else None
        name = NameComponents(label, dates, title)
    types = [SubdivisionType.TOPICAL, SubdivisionType.GEOGRAPHIC, SubdivisionType.CHRONOLOGICAL]
    subs = tuple(ResolvedSubdivision(rng.choice(types), rng.choice(words))
                 for _ in range(rng.randint(0, 4)))
    concept = Concept(label, kind, 1.0, position, work_title=name.work_title if name else None)
    return ValidatedHeading(
        candidate=CandidateHeading(concept, tag, position),
        authorized_base=label,
        status=Status.NAME_CONFIRMED if name else Status.AUTHORIZED,
        authority_id=f"fx-{position}",
        resolved_subdivisions=subs,
        name_components=name,
        subdivision_order=rng.choice(["canonical", "given"]),
    )


DELIMITERS = (" -- ", "--", "  --   ", " \u2014 ", "\u2014", " \u2013 ", "\u2013 ", " \u2013")
SEGMENT_POOL = ("English poetry", "Early modern, 1500-1700", "1500\u20131700", "Stand-up comedy",
                "History and criticism", "Bolivia", "Fiction", "20th century", "Toracari",
                "Black holes (Astronomy)", "Hist. and criticism", "Theology", "Mercury (Planet)")


def random_baseline(rng) -> tuple[str, int]:
    """A display heading and its delimiter count."""
    n = rng.randint(1, 6)
    parts = [rng.choice(SEGMENT_POOL) for _ in range(n)]
    out = parts[0]
    for p in parts[1:]:
        out += rng.choice(DELIMITERS) + p
    return out, n - 1
