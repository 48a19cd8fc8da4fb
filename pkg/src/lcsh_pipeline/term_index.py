"""TF-IDF retrieval over authorized and variant authority labels.

Weights are raw term frequency times smoothed idf, ``ln((N+1)/(df+1)) + 1``,
and hits are ranked by cosine similarity. Every label (authorized or UF
variant) is its own document, so a variant can be found by a fuzzy query even
when it shares no tokens with the authorized form.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
import zlib
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from .authority_store import AuthorityStore, normalize

AUTHORIZED = "authorized"
VARIANT = "variant"
_ROLE_ORDER = {AUTHORIZED: 0, VARIANT: 1}

DEFAULT_FUZZY_THRESHOLD = 0.60
DEFAULT_K = 5

# Scores equal to 12 decimal places are treated as ties, so that floating
# point summation order never decides the ranking.
_TIE_DIGITS = 12


@dataclass(frozen=True)
class Document:
    record_id: str
    label: str
    role: str


@dataclass(frozen=True)
class SearchHit:
    record_id: str
    matched_label: str
    label_role: str
    score: float

    def to_json(self) -> dict:
        return {"record_id": self.record_id, "label": self.matched_label,
                "role": self.label_role, "score": self.score}


def rank_key(score: float, doc: Document) -> tuple:
    return (-round(score, _TIE_DIGITS), doc.record_id, _ROLE_ORDER[doc.role], doc.label)


def idf_weight(n_docs: int, df: int) -> float:
    return math.log((n_docs + 1) / (df + 1)) + 1.0


class TermIndex:
    def __init__(self, documents: list[Document], postings: dict[str, list[tuple[int, int]]]):
        self.documents = documents
        self.postings = postings
        n = len(documents)
        self.idf = {tok: idf_weight(n, len(plist)) for tok, plist in postings.items()}
        sq = [0.0] * n
        for tok, plist in postings.items():
            w = self.idf[tok]
            for doc, tf in plist:
                sq[doc] += (tf * w) ** 2
        self.norms = [math.sqrt(s) for s in sq]

    def __len__(self) -> int:
        return len(self.documents)

    @property
    def vocabulary(self) -> dict[str, int]:
        return {tok: len(plist) for tok, plist in self.postings.items()}

    def search(self, query: str, k: int = DEFAULT_K) -> list[SearchHit]:
        if k < 1:
            raise ValueError("k must be positive")
        qtf = Counter(normalize(query))
        qweights = {t: c * self.idf[t] for t, c in qtf.items() if t in self.idf}
        if not qweights:
            return []
        qnorm = math.sqrt(sum(w * w for w in qweights.values()))
        dots: dict[int, float] = {}
        for tok in sorted(qweights):
            qw = qweights[tok]
            w = self.idf[tok]
            for doc, tf in self.postings[tok]:
                dots[doc] = dots.get(doc, 0.0) + qw * tf * w
        scored = []
        for doc, dot in dots.items():
            score = min(1.0, dot / (qnorm * self.norms[doc]))
            scored.append((rank_key(score, self.documents[doc]), doc, score))
        scored.sort()
        return [
            SearchHit(self.documents[d].record_id, self.documents[d].label, self.documents[d].role, s)
            for _, d, s in scored[:k]
        ]

    # -- cache ---------------------------------------------------------

    def to_payload(self) -> dict:
        return {
            "documents": [[d.record_id, d.label, d.role] for d in self.documents],
            "postings": {t: self.postings[t] for t in sorted(self.postings)},
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "TermIndex":
        docs = [Document(rid, label, role) for rid, label, role in payload["documents"]]
        postings = {t: [(d, tf) for d, tf in plist] for t, plist in payload["postings"].items()}
        return cls(docs, postings)


def build_index(store: AuthorityStore) -> TermIndex:
    """One document per authorized label and per variant label, in canonical order."""
    docs: list[Document] = []
    for rec in store:
        docs.append(Document(rec.id, rec.authorized_label, AUTHORIZED))
        for variant in rec.variant_labels:
            docs.append(Document(rec.id, variant, VARIANT))
    docs.sort(key=lambda d: (d.record_id, _ROLE_ORDER[d.role], d.label))
    postings: dict[str, list[tuple[int, int]]] = {}
    for i, doc in enumerate(docs):
        for tok, tf in sorted(Counter(normalize(doc.label)).items()):
            postings.setdefault(tok, []).append((i, tf))
    return TermIndex(docs, dict(sorted(postings.items())))


# -- match classification -------------------------------------------------


@dataclass(frozen=True)
class Authorized:
    record_id: str

    def to_json(self) -> dict:
        return {"match": "authorized", "record_id": self.record_id}


@dataclass(frozen=True)
class VariantOf:
    record_id: str
    matched_variant: str

    def to_json(self) -> dict:
        return {"match": "variant", "record_id": self.record_id, "variant": self.matched_variant}


@dataclass(frozen=True)
class Fuzzy:
    hits: tuple[SearchHit, ...]

    def to_json(self) -> dict:
        return {"match": "fuzzy", "hits": [h.to_json() for h in self.hits]}


@dataclass(frozen=True)
class NotFound:
    def to_json(self) -> dict:
        return {"match": "not_found"}


MatchClass = Union[Authorized, VariantOf, Fuzzy, NotFound]


def classify(store: AuthorityStore, index: TermIndex, query: str,
             threshold: float = DEFAULT_FUZZY_THRESHOLD, k: int = DEFAULT_K) -> MatchClass:
    """Exact authorized match, then UF variant, then fuzzy hits above *threshold*.

    Ambiguity errors from the store propagate.
    """
    rec = store.lookup_exact(query)
    if rec is not None:
        return Authorized(rec.id)
    hit = store.resolve_variant(query)
    if hit is not None:
        return VariantOf(hit[0].id, hit[1])
    hits = tuple(h for h in index.search(query, k) if h.score >= threshold)
    return Fuzzy(hits) if hits else NotFound()


# -- on-disk cache --------------------------------------------------------

CACHE_MAGIC = b"LCSHIDX"
CACHE_VERSION = 1
_HEADER = struct.Struct(">7sI32s")


class CacheError(Exception):
    pass


def file_digest(path: str | Path) -> bytes:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.digest()


def save_index(index: TermIndex, path: str | Path, source_digest: bytes) -> None:
    body = json.dumps(index.to_payload(), ensure_ascii=False, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, source_digest))
        fh.write(zlib.compress(body, 6))


def load_index(path: str | Path, source_digest: bytes) -> TermIndex:
    """Load a cached index, rejecting other format versions or stale sources."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise CacheError(f"{path}: truncated header")
        magic, version, digest = _HEADER.unpack(header)
        if magic != CACHE_MAGIC:
            raise CacheError(f"{path}: not an index cache")
        if version != CACHE_VERSION:
            raise CacheError(f"{path}: format version {version}, expected {CACHE_VERSION}")
        if digest != source_digest:
            raise CacheError(f"{path}: built from different source data")
        try:
            payload = json.loads(zlib.decompress(fh.read()))
        except (zlib.error, ValueError) as exc:
            raise CacheError(f"{path}: corrupt payload") from exc
    return TermIndex.from_payload(payload)


def cached_index(store: AuthorityStore, source: str | Path, cache: str | Path | None) -> TermIndex:
    """Reuse *cache* when it matches *source*; otherwise build and rewrite it."""
    if cache is None:
        return build_index(store)
    digest = file_digest(source)
    try:
        return load_index(cache, digest)
    except (OSError, CacheError):
        index = build_index(store)
        save_index(index, cache, digest)
        return index
