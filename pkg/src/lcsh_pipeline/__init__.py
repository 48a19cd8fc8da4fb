"""Rule-driven LCSH subject indexing.

Filters a concept list, validates candidate headings against LCSH, LCGFT and
LCNAF, synthesizes MARC 21 6xx fields and compares them with catalog headings.
"""

__version__ = "0.1.0"

from .authority_store import (AuthorityRecord, AuthorityStore, Kind, Scheme, label_key,
                              load_authorities, normalize)
from .eval_harness import ComparisonReport, MatchLevel, aggregate, compare_title
from .filter_engine import Concept, ConceptKind, ConceptList, FilterConfig, run_filters
from .lcnaf_client import ClientConfig, Mode, NameClient
from .marc_io import emit, parse_baseline, parse_document, parse_field_line
from .marc_synth import OrderMode, SubjectField, render, synthesize
from .term_index import TermIndex, build_index, classify
from .validator import HeadingRejected, ValidatedHeading, Validator

__all__ = [
    "AuthorityRecord", "AuthorityStore", "Kind", "Scheme", "label_key", "load_authorities",
    "normalize", "ComparisonReport", "MatchLevel", "aggregate", "compare_title", "Concept",
    "ConceptKind", "ConceptList", "FilterConfig", "run_filters", "ClientConfig", "Mode",
    "NameClient", "emit", "parse_baseline", "parse_document", "parse_field_line", "OrderMode",
    "SubjectField", "render", "synthesize", "TermIndex", "build_index", "classify",
    "HeadingRejected", "ValidatedHeading", "Validator",
]
