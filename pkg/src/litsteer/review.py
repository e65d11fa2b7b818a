"""Paper review, provenance chunks, and grounded synthesis.

Every excerpt the agent quotes must be an exact substring of a stored
abstract; anything else is dropped and flagged rather than stored. Synthesis
may only cite stored chunks, and never chunks of papers the user rejected.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Iterable, Mapping, Sequence

from .arxiv import PaperRecord
from .errors import (
    CitationUnresolved,
    CitesRejected,
    EmptyInput,
    InvalidRequest,
    NothingToSynthesize,
    ReviewParse,
)
from .gateway import ChatRequest, ChatResponse

logger = logging.getLogger(__name__)

RELEVANCE_THRESHOLD = 0.5
DEFAULT_REVIEW_BATCH_SIZE = 10
MARKER_RE = re.compile(r"\[(\d+)\]")

SYSTEM_REVIEW = (
    "You screen arXiv papers for relevance to a research interest and quote "
    "verbatim supporting excerpts."
)
SYSTEM_SYNTHESIS = (
    "You write a grounded research synthesis, citing the numbered evidence "
    "excerpts you are given."
)


class UserState(str, Enum):
    NEUTRAL = "neutral"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


class DisplayState(str, Enum):
    GREEN = "green"
    RED = "red"
    BLUE = "blue"


@dataclass
class ReviewVerdict:
    """Agent judgment plus the user's overriding call on one paper."""

    arxiv_id: str
    relevance_score: float
    agent_rationale: str
    user_state: UserState = UserState.NEUTRAL
    excerpt_dropped: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.relevance_score <= 1.0:
            raise InvalidRequest(
                f"relevance_score {self.relevance_score} outside [0, 1]"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "arxiv_id": self.arxiv_id,
            "relevance_score": self.relevance_score,
            "agent_rationale": self.agent_rationale,
            "user_state": self.user_state.value,
            "excerpt_dropped": self.excerpt_dropped,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> ReviewVerdict:
        return cls(
            arxiv_id=doc["arxiv_id"],
            relevance_score=float(doc["relevance_score"]),
            agent_rationale=doc["agent_rationale"],
            user_state=UserState(doc.get("user_state", "neutral")),
            excerpt_dropped=bool(doc.get("excerpt_dropped", False)),
        )


def display_state(verdict: ReviewVerdict) -> DisplayState:
    """User judgment wins over the agent score, whatever the score says."""
    if verdict.user_state is UserState.ACCEPTED:
        return DisplayState.GREEN
    if verdict.user_state is UserState.REJECTED:
        return DisplayState.RED
    return DisplayState.BLUE


@dataclass(frozen=True)
class Chunk:
    """A provenance span: chunk.text == abstract[start:end], always."""

    chunk_id: str
    arxiv_id: str
    start: int
    end: int
    text: str

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise InvalidRequest(f"bad chunk span [{self.start}, {self.end})")
        if len(self.text) != self.end - self.start:
            raise InvalidRequest("chunk text length does not match its span")

    def validate_against(self, abstract: str) -> None:
        if abstract[self.start : self.end] != self.text:
            raise InvalidRequest(
                f"chunk {self.chunk_id} does not match its abstract span"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "chunk_id": self.chunk_id,
            "arxiv_id": self.arxiv_id,
            "start": self.start,
            "end": self.end,
            "text": self.text,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> Chunk:
        return cls(
            chunk_id=doc["chunk_id"],
            arxiv_id=doc["arxiv_id"],
            start=int(doc["start"]),
            end=int(doc["end"]),
            text=doc["text"],
        )


def locate_excerpt(abstract: str, excerpt: str) -> tuple[int, int] | None:
    """Span of the excerpt as an exact substring, or None."""
    if not excerpt:
        return None
    start = abstract.find(excerpt)
    if start < 0:
        return None
    return start, start + len(excerpt)


@dataclass(frozen=True)
class ReviewResult:
    """Output payload of a Review node."""

    verdicts: tuple[ReviewVerdict, ...]
    chunks: tuple[Chunk, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdicts": [v.to_dict() for v in self.verdicts],
            "chunks": [c.to_dict() for c in self.chunks],
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> ReviewResult:
        return cls(
            verdicts=tuple(ReviewVerdict.from_dict(v) for v in doc["verdicts"]),
            chunks=tuple(Chunk.from_dict(c) for c in doc["chunks"]),
        )


@dataclass(frozen=True)
class SynthesisReport:
    """Output payload of a Synthesis node.

    citations holds one (marker, chunk_id) entry per distinct [n] marker in
    the body; a marker cited twice still resolves to a single entry. The
    constructor enforces closure in both directions.
    """

    body: str
    citations: tuple[tuple[int, str], ...] = ()

    def __post_init__(self) -> None:
        if not self.body.strip():
            raise InvalidRequest("synthesis body must be nonempty")
        in_body = {int(m) for m in MARKER_RE.findall(self.body)}
        listed = [n for n, _ in self.citations]
        if len(listed) != len(set(listed)):
            raise InvalidRequest("duplicate citation markers")
        if in_body != set(listed):
            raise InvalidRequest(
                f"citation markers {sorted(in_body)} do not match "
                f"citations {sorted(listed)}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "body": self.body,
            "citations": [[n, cid] for n, cid in self.citations],
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> SynthesisReport:
        return cls(
            body=doc["body"],
            citations=tuple((int(n), cid) for n, cid in doc.get("citations", [])),
        )


# --- prompt block rendering ---------------------------------------------

def render_paper_block(papers: Sequence[PaperRecord]) -> str:
    blocks = []
    for n, paper in enumerate(papers, start=1):
        blocks.append(
            f"[[P{n}]] id={paper.arxiv_id}\n"
            f"title: {paper.title}\n"
            f"abstract: {paper.abstract}"
        )
    return "\n\n".join(blocks)


def render_chunk_block(numbered: Sequence[tuple[int, Chunk]]) -> str:
    blocks = [
        f"[[C{n}]] id={chunk.arxiv_id}\n{chunk.text}" for n, chunk in numbered
    ]
    return "\n\n".join(blocks)


# --- review -----------------------------------------------------------------

def parse_review_response(
    text: str, expected_ids: Sequence[str]
) -> list[tuple[str, float, str, str | None]]:
    """One "id | score | rationale | excerpt" line per expected paper.

    The fourth field may be "-" for papers below the relevance threshold;
    at or above it, a missing excerpt is a parse failure.
    """
    expected = set(expected_ids)
    seen: dict[str, tuple[str, float, str, str | None]] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split("|", 3)]
        if len(parts) != 4:
            raise ReviewParse(f"expected 4 |-separated fields: {line!r}")
        arxiv_id, raw_score, rationale, raw_excerpt = parts
        if arxiv_id not in expected:
            raise ReviewParse(f"verdict for unknown paper {arxiv_id!r}")
        if arxiv_id in seen:
            raise ReviewParse(f"duplicate verdict for {arxiv_id}")
        try:
            score = float(raw_score)
        except ValueError as exc:
            raise ReviewParse(f"bad score {raw_score!r} for {arxiv_id}") from exc
        if not 0.0 <= score <= 1.0:
            raise ReviewParse(f"score {score} for {arxiv_id} outside [0, 1]")
        if not rationale:
            raise ReviewParse(f"empty rationale for {arxiv_id}")
        excerpt: str | None = raw_excerpt if raw_excerpt not in ("", "-") else None
        if score >= RELEVANCE_THRESHOLD and excerpt is None:
            raise ReviewParse(
                f"{arxiv_id} scored {score} but quoted no excerpt"
            )
        seen[arxiv_id] = (arxiv_id, score, rationale, excerpt)
    missing = expected - set(seen)
    if missing:
        raise ReviewParse(f"no verdict for: {', '.join(sorted(missing))}")
    return [seen[i] for i in expected_ids]


def review_papers(
    complete: Callable[[ChatRequest], ChatResponse],
    template: str,
    query_text: str,
    papers: Sequence[PaperRecord],
    chunk_id_alloc: Callable[[], str],
    batch_size: int = DEFAULT_REVIEW_BATCH_SIZE,
    known_states: Mapping[str, UserState] | None = None,
    model_id: str = "default-chat",
    render: Callable[[str, Mapping[str, str]], str] | None = None,
) -> ReviewResult:
    """Review papers in batches; keep verbatim excerpts, flag the rest.

    known_states carries user judgments already made on these papers so a
    re-review never resets them.
    """
    if not papers:
        raise EmptyInput("review needs at least one paper")
    if batch_size < 1:
        raise InvalidRequest("batch_size must be >= 1")
    known_states = known_states or {}
    render = render or render_template

    verdicts: list[ReviewVerdict] = []
    chunks: list[Chunk] = []
    for at in range(0, len(papers), batch_size):
        batch = list(papers[at : at + batch_size])
        prompt = render(
            template,
            {"query": query_text, "abstracts": render_paper_block(batch)},
        )
        response = complete(
            ChatRequest(
                system_prompt=SYSTEM_REVIEW,
                user_prompt=prompt,
                model_id=model_id,
            )
        )
        rows = parse_review_response(response.text, [p.arxiv_id for p in batch])
        by_id = {p.arxiv_id: p for p in batch}
        for arxiv_id, score, rationale, excerpt in rows:
            verdict = ReviewVerdict(
                arxiv_id=arxiv_id,
                relevance_score=score,
                agent_rationale=rationale,
                user_state=known_states.get(arxiv_id, UserState.NEUTRAL),
            )
            if excerpt is not None:
                span = locate_excerpt(by_id[arxiv_id].abstract, excerpt)
                if span is None:
                    verdict.excerpt_dropped = True
                    logger.warning(
                        "dropped non-verbatim excerpt for %s: %r",
                        arxiv_id, excerpt[:80],
                    )
                else:
                    chunks.append(
                        Chunk(
                            chunk_id=chunk_id_alloc(),
                            arxiv_id=arxiv_id,
                            start=span[0],
                            end=span[1],
                            text=excerpt,
                        )
                    )
            verdicts.append(verdict)
    return ReviewResult(verdicts=tuple(verdicts), chunks=tuple(chunks))


# --- synthesis ------------------------------------------------------------

def eligible_paper_ids(
    verdicts: Iterable[ReviewVerdict], threshold: float = RELEVANCE_THRESHOLD
) -> list[str]:
    """Accepted papers; if the user accepted none, high scorers not rejected."""
    verdicts = list(verdicts)
    accepted = [v.arxiv_id for v in verdicts if v.user_state is UserState.ACCEPTED]
    if accepted:
        return accepted
    fallback = [
        v.arxiv_id
        for v in verdicts
        if v.user_state is not UserState.REJECTED and v.relevance_score >= threshold
    ]
    if not fallback:
        raise NothingToSynthesize(
            "no accepted papers and nothing at or above the relevance threshold"
        )
    return fallback


def resolve_citations(
    body: str,
    chunks: Sequence[Chunk],
    rejected_ids: frozenset[str],
) -> tuple[tuple[int, str], ...]:
    """Map [n] markers onto the full chunk table, refusing bad targets.

    Markers are 1-based positions in the review's chunk tuple; that numbering
    is stable whether or not a chunk was shown in the prompt, which is what
    makes citing a rejected paper detectable.
    """
    citations: list[tuple[int, str]] = []
    for n in sorted({int(m) for m in MARKER_RE.findall(body)}):
        if not 1 <= n <= len(chunks):
            raise CitationUnresolved(
                f"marker [{n}] has no chunk (table holds {len(chunks)})"
            )
        chunk = chunks[n - 1]
        if chunk.arxiv_id in rejected_ids:
            raise CitesRejected(
                f"marker [{n}] cites {chunk.arxiv_id}, which the user rejected"
            )
        citations.append((n, chunk.chunk_id))
    return tuple(citations)


def synthesize(
    complete: Callable[[ChatRequest], ChatResponse],
    template: str,
    query_text: str,
    verdicts: Sequence[ReviewVerdict],
    chunks: Sequence[Chunk],
    threshold: float = RELEVANCE_THRESHOLD,
    model_id: str = "default-chat",
    render: Callable[[str, Mapping[str, str]], str] | None = None,
) -> SynthesisReport:
    """One completion grounded in the non-rejected chunks of this review."""
    render = render or render_template
    eligible_paper_ids(verdicts, threshold)
    rejected = frozenset(
        v.arxiv_id for v in verdicts if v.user_state is UserState.REJECTED
    )
    numbered = [
        (n, chunk)
        for n, chunk in enumerate(chunks, start=1)
        if chunk.arxiv_id not in rejected
    ]
    prompt = render(
        template,
        {"query": query_text, "chunks": render_chunk_block(numbered)},
    )
    response = complete(
        ChatRequest(
            system_prompt=SYSTEM_SYNTHESIS,
            user_prompt=prompt,
            model_id=model_id,
        )
    )
    citations = resolve_citations(response.text, chunks, rejected)
    return SynthesisReport(body=response.text, citations=citations)


# --- template rendering ------------------------------------------------------

_PLACEHOLDER_RE = re.compile(r"\{\{(\w+)\}\}")


def render_template(template: str, values: Mapping[str, str]) -> str:
    """Substitute {{name}} placeholders; unknown names are a config error."""

    def sub(match: re.Match[str]) -> str:
        name = match.group(1)
        if name not in values:
            raise InvalidRequest(f"template references unknown placeholder {name}")
        return values[name]

    return _PLACEHOLDER_RE.sub(sub, template)
