import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from lcsh_pipeline.filter_engine import (BroaderGroup, CandidateHeading, Concept, ConceptKind,
                                         ConceptList, ConfigurationError, FilterReport,
                                         SubdivisionHint, SubdivisionType, apply_depth_dedup,
                                         apply_rule_of_three, apply_twenty_percent,
                                         order_by_predominance, route_genre_form, run_filters)

from support import FIXTURES, random_concepts


def c(label, coverage=0.5, rank=1, kind=ConceptKind.TOPICAL, **kw):
    return Concept(label, kind, coverage, rank, **kw)


def test_twenty_percent_examples():
    kept = apply_twenty_percent([c("A", 0.25, 1), c("B", 0.10, 2), c("C", 0.10, 3, critical_entity=True)])
    assert [k.label for k in kept] == ["A", "C"]


def test_twenty_percent_boundary_and_report():
    report = FilterReport()
    kept = apply_twenty_percent([c("A", 0.2, 1), c("B", 0.1999, 2)], report=report)
    assert [k.label for k in kept] == ["A"]
    assert report.dropped_coverage == [{"label": "B", "coverage": 0.1999, "threshold": 0.2}]


def test_rule_of_three_keeps_three():
    g = BroaderGroup("G", "Economics")
    members = [c(f"m{i}", rank=i, broader_group=g) for i in range(1, 4)]
    assert apply_rule_of_three(members) == members


def test_rule_of_three_collapses_four():
    g = BroaderGroup("G", "Economics")
    members = [c(f"m{i}", 0.3, rank=i + 2, broader_group=g) for i in range(4)]
    out = apply_rule_of_three(members + [c("x", rank=1), c("y", rank=10)])
    assert [o.label for o in out] == ["Economics", "x", "y"]
    econ = out[0]
    assert econ.coverage == 1.0
    assert econ.predominance_rank == 2
    assert econ.broader_group is None and not econ.facet_distinct


def test_rule_of_three_rejects_inconsistent_labels():
    with pytest.raises(ConfigurationError):
        apply_rule_of_three([c("a", broader_group=BroaderGroup("G", "One")),
                             c("b", rank=2, broader_group=BroaderGroup("G", "Two"))])


def test_depth_dedup_examples(lcsh):
    out = apply_depth_dedup([c("Poverty", rank=1), c("Rural poor", rank=2)], lcsh)
    assert [o.label for o in out] == ["Rural poor"]
    out = apply_depth_dedup([c("Poverty", rank=1, facet_distinct=True), c("Rural poor", rank=2)], lcsh)
    assert len(out) == 2
    out = apply_depth_dedup([c("Trinity", rank=1), c("Prices", rank=2)], lcsh)
    assert len(out) == 2


def test_depth_dedup_uses_variants_and_ignores_unknown_labels(lcsh):
    out = apply_depth_dedup([c("Exchange rates", rank=1), c("Foreign exchange", rank=2),
                             c("Unheard of", rank=3)], lcsh)
    assert [o.label for o in out] == ["Exchange rates", "Unheard of"]


def test_depth_dedup_respects_depth_limit(lcsh):
    # Purchasing power parity -> Foreign exchange rates -> Foreign exchange
    pair = [c("Foreign exchange", rank=1), c("Purchasing power parity", rank=2)]
    assert len(apply_depth_dedup(pair, lcsh, max_depth=1)) == 2
    assert len(apply_depth_dedup(pair, lcsh, max_depth=2)) == 1


def test_routing_examples():
    out = route_genre_form([c("Short stories", kind=ConceptKind.GENRE_FORM),
                            c("Microfinance", rank=2),
                            c("Grameen Bank", rank=3, kind=ConceptKind.CORPORATE_NAME),
                            c("Yunus, Muhammad", rank=4, kind=ConceptKind.PERSONAL_NAME),
                            c("Bolivia", rank=5, kind=ConceptKind.GEOGRAPHIC),
                            c("Baxter, Richard", rank=6, kind=ConceptKind.NAME_TITLE, work_title="Methodus")])
    assert [h.intended_tag for h in out] == ["655", "650", "610", "600", "651", "600"]


def test_routing_rejects_contradicting_tag():
    report = FilterReport()
    out = route_genre_form([c("Essays", kind=ConceptKind.GENRE_FORM, tag="650")], report)
    assert out == []
    assert "requires tag 655" in report.rejected[0]["reason"]


def test_form_subdivision_hint_is_refused():
    with pytest.raises(ValueError, match="discontinued"):
        c("Trauma centers", subdivision_hints=(SubdivisionHint(SubdivisionType.FORM, "Fiction"),))


def test_concept_validation():
    with pytest.raises(ValueError):
        c("A", coverage=1.5)
    with pytest.raises(ValueError):
        c("A", rank=0)
    with pytest.raises(ValueError):
        c("Baxter, Richard", kind=ConceptKind.NAME_TITLE)
    with pytest.raises(ValueError):
        c("A", subdivision_order="sideways")


def test_ordering_examples():
    def cand(rank, tag="650"):
        kind = ConceptKind.GENRE_FORM if tag == "655" else ConceptKind.TOPICAL
        return CandidateHeading(c(f"r{rank}", rank=rank, kind=kind), tag)

    out = order_by_predominance([cand(2), cand(1), cand(3)])
    assert [o.concept.predominance_rank for o in out] == [1, 2, 3]
    assert [o.order_position for o in out] == [1, 2, 3]
    out = order_by_predominance([cand(1, "655"), cand(5)])
    assert [o.intended_tag for o in out] == ["650", "655"]
    assert order_by_predominance([cand(7)])[0].order_position == 1
    with pytest.raises(ConfigurationError):
        order_by_predominance([cand(1), cand(1)])


def test_concept_list_json_round_trip():
    doc = ConceptList.load(FIXTURES / "concepts" / "t04_banker_to_the_poor.json")
    assert ConceptList.from_json(doc.to_json()) == doc


def test_name_title_split_from_label():
    concept = Concept.from_json({"label": "Baxter, Richard, 1615-1691. Methodus theologiæ Christianæ",
                                 "kind": "name_title", "coverage": 0.5, "predominance_rank": 1})
    assert concept.work_title == "Methodus theologiæ Christianæ"
    concept = Concept.from_json({"label": "Baxter, Richard", "kind": "name_title", "coverage": 0.5,
                                 "predominance_rank": 1,
                                 "subdivision_hints": [{"type": "title", "value": "Methodus"}]})
    assert concept.work_title == "Methodus" and concept.subdivision_hints == ()


def test_run_filters_title_four(lcsh):
    doc = ConceptList.load(FIXTURES / "concepts" / "t04_banker_to_the_poor.json")
    candidates, report = run_filters(doc.concepts, lcsh)
    assert [(h.intended_tag, h.concept.label) for h in candidates] == [
        ("600", "Yunus, Muhammad"), ("610", "Grameen Bank"), ("650", "Micro-credit"),
        ("650", "Poverty"), ("655", "Autobiographies")]
    assert [d["label"] for d in report.dropped_coverage] == ["Bangladesh"]


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_filter_pipeline_is_idempotent(lcsh, seed):
    labels = [r.authorized_label for r in lcsh]
    concepts = random_concepts(random.Random(seed), labels)
    first, _ = run_filters(concepts, lcsh)
    second, _ = run_filters([h.concept for h in first], lcsh)
    assert first == second


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ordering_is_a_permutation_with_655_suffix(lcsh, seed):
    concepts = random_concepts(random.Random(seed), [r.authorized_label for r in lcsh])
    routed = route_genre_form(concepts)
    ordered = order_by_predominance(routed)
    assert Counter(h.concept for h in ordered) == Counter(h.concept for h in routed)
    tags = [h.intended_tag == "655" for h in ordered]
    assert tags == sorted(tags)
