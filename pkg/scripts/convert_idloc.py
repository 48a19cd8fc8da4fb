#!/usr/bin/env python3
"""Convert id.loc.gov MADS/RDF JSON-LD bulk exports to canonical authority NDJSON.

Each input line is one JSON-LD document (an object with ``@graph``, or a bare
node list). Output records carry ids taken from the last path segment of the
authority URI.

    python3 scripts/convert_idloc.py subjects.madsrdf.jsonld lcsh lcsh.ndjson
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Iterable, Iterator

from lcsh_pipeline.authority_store import AuthorityRecord, Kind, Scheme

MADS = "http://www.loc.gov/mads/rdf/v1#"
SUBDIVIDE_GEO = "collection_SubdivideGeographically"

_KINDS = {
    "Topic": Kind.TOPICAL,
    "ComplexSubject": Kind.TOPICAL,
    "Geographic": Kind.GEOGRAPHIC,
    "HierarchicalGeographic": Kind.GEOGRAPHIC,
    "GenreForm": Kind.GENRE_FORM,
}


def _local(term: str) -> str:
    for prefix in ("madsrdf:", MADS):
        if term.startswith(prefix):
            return term[len(prefix):]
    return term


def _prop(node: dict, name: str) -> list:
    for key in (f"madsrdf:{name}", MADS + name):
        if key in node:
            value = node[key]
            return value if isinstance(value, list) else [value]
    return []


def _text(value) -> str | None:
    if isinstance(value, str):
        return value
    if isinstance(value, dict):
        return value.get("@value")
    return None


def _ref(value) -> str | None:
    return value.get("@id") if isinstance(value, dict) else value if isinstance(value, str) else None


def _record_id(uri: str) -> str:
    return uri.rstrip("/").rsplit("/", 1)[-1]


def convert_document(doc, scheme: Scheme) -> Iterator[AuthorityRecord]:
    nodes = doc.get("@graph", [doc]) if isinstance(doc, dict) else doc
    by_id = {n.get("@id"): n for n in nodes if isinstance(n, dict)}
    for node in by_id.values():
        types = node.get("@type", [])
        types = {_local(t) for t in (types if isinstance(types, list) else [types])}
        if "Authority" not in types or "DeprecatedAuthority" in types:
            continue
        kinds = [k for t, k in _KINDS.items() if t in types]
        if not kinds:
            continue
        kind = Kind.GENRE_FORM if scheme is Scheme.LCGFT else kinds[0]
        if scheme is Scheme.LCSH and kind is Kind.GENRE_FORM:
            continue
        labels = [_text(v) for v in _prop(node, "authoritativeLabel")]
        label = next((l for l in labels if l), None)
        if not label:
            continue
        variants = []
        for ref in _prop(node, "hasVariant"):
            target = by_id.get(_ref(ref), ref if isinstance(ref, dict) else {})
            variants.extend(t for t in map(_text, _prop(target, "variantLabel")) if t)
        collections = {_ref(c) or "" for c in _prop(node, "isMemberOfMADSCollection")}
        yield AuthorityRecord(
            id=_record_id(node["@id"]),
            scheme=scheme,
            kind=kind,
            authorized_label=label,
            variant_labels=tuple(dict.fromkeys(variants)),
            broader_ids=tuple(_record_id(r) for r in map(_ref, _prop(node, "hasBroaderAuthority")) if r),
            narrower_ids=tuple(_record_id(r) for r in map(_ref, _prop(node, "hasNarrowerAuthority")) if r),
            geo_subdividable=any(c.endswith(SUBDIVIDE_GEO) for c in collections),
        )


def convert_lines(lines: Iterable[str], scheme: Scheme, errors=sys.stderr) -> Iterator[dict]:
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            yield from (r.to_json() for r in convert_document(doc, scheme))
        except (ValueError, KeyError, TypeError) as exc:
            print(f"line {number}: skipped ({exc})", file=errors)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("source")
    parser.add_argument("scheme", choices=[s.value for s in Scheme])
    parser.add_argument("output")
    args = parser.parse_args(argv)
    count = 0
    with open(args.source, encoding="utf-8") as src, open(args.output, "w", encoding="utf-8") as out:
        for obj in convert_lines(src, Scheme(args.scheme)):
            out.write(json.dumps(obj, ensure_ascii=False) + "\n")
            count += 1
    print(f"{count} records written to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
