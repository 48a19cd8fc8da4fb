"""Name-authority lookups against the LC Linked Data Service ``suggest2`` endpoint.

In fixture mode the client replays raw response bodies from a directory and
never opens a connection; ``record_fixture`` captures those bodies from the
live service.
"""

from __future__ import annotations

import enum
import json
import logging
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import httpx

from .authority_store import label_key, normalize

log = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://id.loc.gov/authorities/names/suggest2"
RETRY_STATUSES = frozenset({429, 500, 502, 503, 504})


class Mode(str, enum.Enum):
    LIVE = "live"
    FIXTURE = "fixture"


class NameServiceError(Exception):
    """Base class for name lookup failures."""


class TransportError(NameServiceError):
    pass


class StatusError(NameServiceError):
    def __init__(self, status_code: int, url: str):
        self.status_code = status_code
        super().__init__(f"HTTP {status_code} from {url}")


class ProtocolError(NameServiceError):
    pass


class FixtureNotFound(NameServiceError):
    pass


@dataclass(frozen=True)
class NameHit:
    uri: str
    label: str
    raw_rank: int


@dataclass(frozen=True)
class ClientConfig:
    mode: Mode = Mode.FIXTURE
    endpoint: str | None = DEFAULT_ENDPOINT
    fixture_dir: Path | None = None
    timeout: float = 10.0
    max_retries: int = 3
    min_interval: float = 0.5
    backoff: float = 0.5

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.fixture_dir is not None:
            object.__setattr__(self, "fixture_dir", Path(self.fixture_dir))
        if self.mode is Mode.FIXTURE and self.fixture_dir is None:
            raise ValueError("fixture mode needs a fixture directory")
        if self.mode is Mode.LIVE and not self.endpoint:
            raise ValueError("live mode needs an endpoint URL")
        if self.max_retries < 0 or self.timeout <= 0 or self.min_interval < 0:
            raise ValueError("timeout must be positive; retries and interval non-negative")


def fixture_name(query: str) -> str:
    tokens = normalize(query)
    if not tokens:
        raise ValueError(f"query {query!r} has no searchable tokens")
    return "_".join(tokens) + ".json"


def parse_hits(body: bytes | str) -> list[NameHit]:
    """Extract ``(uri, label)`` pairs in response order; other fields are ignored."""
    try:
        data = json.loads(body)
    except ValueError as exc:
        raise ProtocolError(f"response is not JSON: {exc}") from exc
    hits = data.get("hits") if isinstance(data, dict) else None
    if not isinstance(hits, list):
        raise ProtocolError("response has no 'hits' array")
    out = []
    for rank, hit in enumerate(hits):
        if not isinstance(hit, dict):
            raise ProtocolError(f"hit {rank} is not an object")
        uri = hit.get("uri")
        label = hit.get("aLabel") or hit.get("label") or hit.get("suggestLabel")
        if not isinstance(uri, str) or not uri or not isinstance(label, str):
            raise ProtocolError(f"hit {rank} lacks a uri or label")
        out.append(NameHit(uri=uri, label=label, raw_rank=rank))
    return out


class NameClient:
    """Thread-safe client; all callers sharing one instance share its rate limit."""

    def __init__(self, config: ClientConfig, transport: httpx.BaseTransport | None = None,
                 sleep: Callable[[float], None] = time.sleep,
                 clock: Callable[[], float] = time.monotonic):
        self.config = config
        self._transport = transport
        self._sleep = sleep
        self._clock = clock
        self._lock = threading.Lock()
        self._last_request: float | None = None
        self.requests_sent = 0

    def suggest_names(self, query: str) -> list[NameHit]:
        if not query.strip():
            raise ValueError("empty name query")
        if self.config.mode is Mode.FIXTURE:
            return parse_hits(self._read_fixture(query))
        return parse_hits(self._fetch(query))

    def record_fixture(self, query: str) -> Path:
        """Fetch *query* live and store the raw body for later replay."""
        if self.config.fixture_dir is None:
            raise ValueError("recording needs a fixture directory")
        body = self._fetch(query)
        parse_hits(body)
        self.config.fixture_dir.mkdir(parents=True, exist_ok=True)
        path = self.config.fixture_dir / fixture_name(query)
        path.write_bytes(body)
        return path

    def _read_fixture(self, query: str) -> bytes:
        path = self.config.fixture_dir / fixture_name(query)
        try:
            return path.read_bytes()
        except FileNotFoundError:
            raise FixtureNotFound(f"no fixture for {query!r} (expected {path})") from None

    def _fetch(self, query: str) -> bytes:
        if not self.config.endpoint:
            raise ValueError("no endpoint configured")
        attempts = self.config.max_retries + 1
        with httpx.Client(transport=self._transport, timeout=self.config.timeout) as client:
            for attempt in range(attempts):
                last = attempt == attempts - 1
                self._wait_turn()
                try:
                    resp = client.get(self.config.endpoint, params={"q": query})
                except httpx.TransportError as exc:
                    if last:
                        raise TransportError(f"{self.config.endpoint}: {exc}") from exc
                    log.info("name lookup %r failed (%s), retrying", query, exc)
                else:
                    if resp.is_success:
                        return resp.content
                    if resp.status_code not in RETRY_STATUSES or last:
                        raise StatusError(resp.status_code, str(resp.request.url))
                    log.info("name lookup %r got HTTP %d, retrying", query, resp.status_code)
                self._sleep(self.config.backoff * 2 ** attempt)
        raise AssertionError("unreachable")

    def _wait_turn(self) -> None:
        with self._lock:
            now = self._clock()
            if self._last_request is not None:
                wait = self.config.min_interval - (now - self._last_request)
                if wait > 0:
                    self._sleep(wait)
                    now = self._clock()
            self._last_request = now
            self.requests_sent += 1


# -- name acceptance ------------------------------------------------------

_DATES = re.compile(
    r",\s*((?:approximately|active|born|died|b\.|d\.|ca\.|fl\.)?\s*"
    r"\d{3,4}\??(?:\s*-\s*(?:\d{3,4}\??)?)?|-\s*\d{3,4}\??)\s*\.?\s*$"
)


def split_dates(label: str) -> tuple[str, str | None]:
    """``"Yunus, Muhammad, 1940-"`` -> ``("Yunus, Muhammad", "1940-")``."""
    m = _DATES.search(label)
    if not m or not m.group(1).strip() or m.start() == 0:
        return label.strip(), None
    return label[: m.start()].strip(), re.sub(r"\s*-\s*", "-", m.group(1).strip())


@dataclass(frozen=True)
class NameMatch:
    hit: NameHit
    name: str
    dates: str | None
    other_hits: int  # further acceptable hits, reported for disambiguation


def accept_name(candidate: str, hits: list[NameHit]) -> NameMatch | None:
    """First hit whose undated label equals the candidate's undated name."""
    want = label_key(split_dates(candidate)[0])
    matches = [h for h in hits if label_key(split_dates(h.label)[0]) == want]
    if not matches:
        return None
    name, dates = split_dates(matches[0].label)
    return NameMatch(matches[0], name, dates, len(matches) - 1)
