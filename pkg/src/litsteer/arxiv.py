"""arXiv search: query building, Atom feed parsing, and corpus merging.

The HTTP transport is injectable so tests run against canned or synthetic
feeds; the client enforces the polite >= 3 second gap between live requests
regardless of transport.
"""
from __future__ import annotations

import logging
import re
import threading
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum
from typing import Any, Callable, Iterable, Protocol

import httpx

from .errors import EmptyKeywordSet, FeedParse, HttpError, InvalidRequest

logger = logging.getLogger(__name__)

ARXIV_API_URL = "https://export.arxiv.org/api/query"
MIN_REQUEST_INTERVAL_SECONDS = 3.0
MAX_RESULTS_LIMIT = 100

ATOM_NS = "http://www.w3.org/2005/Atom"
ARXIV_NS = "http://arxiv.org/schemas/atom"

_VERSION_SUFFIX_RE = re.compile(r"v\d+$")


class SortOrder(str, Enum):
    RELEVANCE = "relevance"
    SUBMITTED_DATE = "submittedDate"


@dataclass(frozen=True)
class SearchSpec:
    """Parameters for one arXiv query."""

    keywords: frozenset[str]
    max_results: int = 25
    start: int = 0
    sort: SortOrder = SortOrder.RELEVANCE

    def __post_init__(self) -> None:
        cleaned = frozenset(k.strip().lower() for k in self.keywords if k.strip())
        if not cleaned:
            raise EmptyKeywordSet("search needs at least one keyword")
        object.__setattr__(self, "keywords", cleaned)
        if not 1 <= self.max_results <= MAX_RESULTS_LIMIT:
            raise InvalidRequest(
                f"max_results must be in [1, {MAX_RESULTS_LIMIT}]"
            )
        if self.start < 0:
            raise InvalidRequest("start must be >= 0")


@dataclass
class PaperRecord:
    """One paper as stored in the session corpus."""

    arxiv_id: str
    title: str
    abstract: str
    authors: list[str]
    published: date
    updated: date
    primary_category: str
    abs_url: str
    iteration_tags: set[str] = field(default_factory=set)

    def to_dict(self) -> dict[str, Any]:
        return {
            "arxiv_id": self.arxiv_id,
            "title": self.title,
            "abstract": self.abstract,
            "authors": list(self.authors),
            "published": self.published.isoformat(),
            "updated": self.updated.isoformat(),
            "primary_category": self.primary_category,
            "abs_url": self.abs_url,
            "iteration_tags": sorted(self.iteration_tags),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> PaperRecord:
        return cls(
            arxiv_id=doc["arxiv_id"],
            title=doc["title"],
            abstract=doc["abstract"],
            authors=list(doc["authors"]),
            published=date.fromisoformat(doc["published"]),
            updated=date.fromisoformat(doc["updated"]),
            primary_category=doc["primary_category"],
            abs_url=doc["abs_url"],
            iteration_tags=set(doc.get("iteration_tags", [])),
        )


# --- query construction ---------------------------------------------------

def canonical_id(raw: str) -> str:
    """Bare arXiv id: URL prefix, arXiv: prefix, and version suffix removed."""
    out = raw.strip()
    for prefix in ("http://arxiv.org/abs/", "https://arxiv.org/abs/", "arXiv:"):
        if out.startswith(prefix):
            out = out[len(prefix):]
    return _VERSION_SUFFIX_RE.sub("", out)


def abs_url_for(arxiv_id: str) -> str:
    return f"https://arxiv.org/abs/{arxiv_id}"


def build_query(keywords: Iterable[str]) -> str:
    """Deterministic search_query string: quoted all: terms, AND-joined.

    Keywords are lowercased and sorted so the same set always produces the
    same string (mock fixtures key on it).
    """
    cleaned = sorted({k.strip().lower() for k in keywords if k.strip()})
    if not cleaned:
        raise EmptyKeywordSet("build_query needs at least one keyword")
    return " AND ".join(f'all:"{k}"' for k in cleaned)


# --- feed parsing ----------------------------------------------------------

def _normalize_ws(text: str) -> str:
    return " ".join(text.split())


def _parse_date(raw: str, what: str) -> date:
    try:
        return date.fromisoformat(raw.strip()[:10])
    except ValueError as exc:
        raise FeedParse(f"bad {what} date: {raw!r}") from exc


def parse_atom(feed_bytes: bytes) -> list[PaperRecord]:
    """Parse an arXiv Atom feed into PaperRecords, entry order preserved.

    id, title, summary, and published are mandatory per entry; updated falls
    back to published. Titles and abstracts are whitespace-normalized here so
    excerpt spans index into a stable string.
    """
    try:
        root = ET.fromstring(feed_bytes)
    except ET.ParseError as exc:
        raise FeedParse(f"feed is not well-formed XML: {exc}") from exc
    if root.tag != f"{{{ATOM_NS}}}feed":
        raise FeedParse(f"root element is {root.tag}, expected Atom feed")

    records: list[PaperRecord] = []
    for pos, entry in enumerate(root.findall(f"{{{ATOM_NS}}}entry")):
        def text_of(tag: str, ns: str = ATOM_NS) -> str | None:
            el = entry.find(f"{{{ns}}}{tag}")
            return el.text if el is not None and el.text else None

        raw_id = text_of("id")
        title = text_of("title")
        summary = text_of("summary")
        published = text_of("published")
        if not (raw_id and title and summary and published):
            raise FeedParse(f"entry {pos} is missing a mandatory element")

        arxiv_id = canonical_id(raw_id)
        updated = text_of("updated") or published
        authors = [
            name.text.strip()
            for author in entry.findall(f"{{{ATOM_NS}}}author")
            for name in author.findall(f"{{{ATOM_NS}}}name")
            if name.text and name.text.strip()
        ]

        primary = entry.find(f"{{{ARXIV_NS}}}primary_category")
        if primary is not None and primary.get("term"):
            category = primary.get("term", "")
        else:
            first = entry.find(f"{{{ATOM_NS}}}category")
            category = first.get("term", "") if first is not None else ""

        records.append(
            PaperRecord(
                arxiv_id=arxiv_id,
                title=_normalize_ws(title),
                abstract=_normalize_ws(summary),
                authors=authors,
                published=_parse_date(published, "published"),
                updated=_parse_date(updated, "updated"),
                primary_category=category,
                abs_url=abs_url_for(arxiv_id),
            )
        )
    return records


# --- transport and client --------------------------------------------------

class Transport(Protocol):
    def get(self, url: str, params: dict[str, str]) -> tuple[int, bytes]: ...


class HttpTransport:
    """Live transport over httpx with a bounded timeout."""

    def __init__(self, timeout_seconds: float = 30.0) -> None:
        self._client = httpx.Client(timeout=timeout_seconds, follow_redirects=True)

    def get(self, url: str, params: dict[str, str]) -> tuple[int, bytes]:
        try:
            resp = self._client.get(url, params=params)
        except httpx.HTTPError as exc:
            raise HttpError(f"arXiv request failed: {exc}") from exc
        return resp.status_code, resp.content


class ArxivClient:
    """Rate-limited search client; every response goes through parse_atom."""

    def __init__(
        self,
        transport: Transport | None = None,
        min_interval_seconds: float = MIN_REQUEST_INTERVAL_SECONDS,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self._transport = transport or HttpTransport()
        self._min_interval = min_interval_seconds
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._last_request_at: float | None = None

    def _respect_rate_limit(self) -> None:
        if self._last_request_at is not None:
            elapsed = self._clock() - self._last_request_at
            if elapsed < self._min_interval:
                self._sleep(self._min_interval - elapsed)
        self._last_request_at = self._clock()

    def fetch(self, spec: SearchSpec) -> list[PaperRecord]:
        params = {
            "search_query": build_query(spec.keywords),
            "start": str(spec.start),
            "max_results": str(spec.max_results),
            "sortBy": spec.sort.value,
        }
        with self._lock:
            self._respect_rate_limit()
            status, body = self._transport.get(ARXIV_API_URL, params)
        if status != 200:
            raise HttpError(f"arXiv returned HTTP {status}")
        records = parse_atom(body)
        if len(records) > spec.max_results:
            records = records[: spec.max_results]
        logger.info("fetched %d records for %s", len(records), params["search_query"])
        return records


# --- corpus merging ---------------------------------------------------------

def merge_into_corpus(
    corpus: dict[str, PaperRecord], records: Iterable[PaperRecord]
) -> dict[str, PaperRecord]:
    """Merge fetched records into the session corpus, in place.

    Duplicate ids union their iteration_tags; the record with the newest
    updated date wins the metadata fields.
    """
    for record in records:
        existing = corpus.get(record.arxiv_id)
        if existing is None:
            corpus[record.arxiv_id] = replace(
                record,
                authors=list(record.authors),
                iteration_tags=set(record.iteration_tags),
            )
            continue
        merged_tags = existing.iteration_tags | record.iteration_tags
        if record.updated >= existing.updated:
            fresher = replace(
                record,
                authors=list(record.authors),
                iteration_tags=merged_tags,
            )
            corpus[record.arxiv_id] = fresher
        else:
            existing.iteration_tags = merged_tags
    return corpus
