"""What each pipeline stage actually does when stepped.

Executors perform all their external effects (completions, searches,
embeddings) and hand results back; they never touch session state. The
manager turns their results into events.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .arxiv import ArxivClient, PaperRecord, SearchSpec, SortOrder
from .errors import InvalidRequest
from .gateway import ChatRequest, Gateway
from .review import (
    ReviewResult,
    SynthesisReport,
    UserState,
    render_template,
    review_papers,
    synthesize,
)
from .semantic import EmbeddingRecord, Owner
from .tree import SYSTEM_PROPOSE, DirectionProposal, parse_proposals
from .workflow import KeywordSet, PaperList

logger = logging.getLogger(__name__)

SYSTEM_EXPAND = (
    "You turn a research interest into a compact set of arXiv search keywords."
)

TEMPLATE_NAMES = ("query_expansion", "review", "synthesis", "direction_proposal")


def load_template(name: str, override_dir: Path | None = None) -> str:
    """Packaged template text, or the override file when one is given."""
    if name not in TEMPLATE_NAMES:
        raise InvalidRequest(f"unknown template {name!r}")
    filename = f"{name}.txt"
    if override_dir is not None:
        candidate = Path(override_dir) / filename
        if candidate.exists():
            return candidate.read_text(encoding="utf-8")
    return (
        resources.files("litsteer")
        .joinpath("templates", filename)
        .read_text(encoding="utf-8")
    )


# --- query expansion ----------------------------------------------------------

def parse_expansion(text: str) -> KeywordSet:
    keywords = []
    for raw in text.splitlines():
        line = raw.strip().lstrip("-*• \t").strip()
        if line:
            keywords.append(line)
    return KeywordSet(keywords=frozenset(keywords))


def run_query_expansion(
    gateway: Gateway,
    query_text: str,
    templates_dir: Path | None = None,
) -> KeywordSet:
    template = load_template("query_expansion", templates_dir)
    response = gateway.complete(
        ChatRequest(
            system_prompt=SYSTEM_EXPAND,
            user_prompt=render_template(template, {"query": query_text}),
            model_id=gateway.config.chat_model_id,
        )
    )
    return parse_expansion(response.text)


# --- search ---------------------------------------------------------------------

@dataclass
class SearchOutcome:
    """Fetched papers plus the fresh embeddings the session lacks."""

    paper_list: PaperList
    papers: list[PaperRecord]
    new_embeddings: list[EmbeddingRecord] = field(default_factory=list)


def run_search(
    gateway: Gateway,
    arxiv_client: ArxivClient,
    keywords: Iterable[str],
    tree_node_id: str,
    query_text: str,
    corpus: Mapping[str, PaperRecord],
    embedded_owner_keys: frozenset[str],
    max_results: int = 25,
    sort: SortOrder = SortOrder.RELEVANCE,
) -> SearchOutcome:
    """Query arXiv, tag the results with this iteration, embed what's new."""
    spec = SearchSpec(
        keywords=frozenset(keywords), max_results=max_results, sort=sort
    )
    fetched = arxiv_client.fetch(spec)
    for record in fetched:
        record.iteration_tags = {tree_node_id}

    paper_list = PaperList(tuple(r.arxiv_id for r in fetched))

    to_embed: list[tuple[Owner, str]] = []
    query_owner = Owner.query(tree_node_id)
    if query_owner.key not in embedded_owner_keys:
        to_embed.append((query_owner, query_text))
    seen: set[str] = set()
    for record in fetched:
        owner = Owner.paper(record.arxiv_id)
        if owner.key in embedded_owner_keys or record.arxiv_id in seen:
            continue
        seen.add(record.arxiv_id)
        to_embed.append((owner, record.abstract))

    new_embeddings: list[EmbeddingRecord] = []
    if to_embed:
        vectors = gateway.embed_batch([text for _, text in to_embed])
        new_embeddings = [
            EmbeddingRecord(owner=owner, vector=vector)
            for (owner, _), vector in zip(to_embed, vectors)
        ]
    return SearchOutcome(
        paper_list=paper_list, papers=fetched, new_embeddings=new_embeddings
    )


# --- review ----------------------------------------------------------------------

def run_review(
    gateway: Gateway,
    query_text: str,
    papers: Sequence[PaperRecord],
    chunk_id_alloc,
    known_states: Mapping[str, UserState],
    batch_size: int = 10,
    templates_dir: Path | None = None,
) -> ReviewResult:
    template = load_template("review", templates_dir)
    return review_papers(
        complete=gateway.complete,
        template=template,
        query_text=query_text,
        papers=papers,
        chunk_id_alloc=chunk_id_alloc,
        batch_size=batch_size,
        known_states=known_states,
        model_id=gateway.config.chat_model_id,
    )


# --- synthesis ----------------------------------------------------------------------

def run_synthesis(
    gateway: Gateway,
    query_text: str,
    review_result: ReviewResult,
    threshold: float = 0.5,
    templates_dir: Path | None = None,
) -> SynthesisReport:
    template = load_template("synthesis", templates_dir)
    return synthesize(
        complete=gateway.complete,
        template=template,
        query_text=query_text,
        verdicts=review_result.verdicts,
        chunks=review_result.chunks,
        threshold=threshold,
        model_id=gateway.config.chat_model_id,
    )


# --- direction proposals ---------------------------------------------------------

def render_findings(review_result: ReviewResult) -> str:
    lines = []
    for verdict in review_result.verdicts:
        lines.append(
            f"{verdict.arxiv_id} (score {verdict.relevance_score:.2f}, "
            f"{verdict.user_state.value}): {verdict.agent_rationale}"
        )
    for chunk in review_result.chunks:
        lines.append(f"excerpt from {chunk.arxiv_id}: {chunk.text}")
    return "\n".join(lines)


def run_proposals(
    gateway: Gateway,
    query_text: str,
    keywords: Iterable[str],
    review_result: ReviewResult,
    count: int,
    templates_dir: Path | None = None,
) -> list[DirectionProposal]:
    template = load_template("direction_proposal", templates_dir)
    prompt = render_template(
        template,
        {
            "query": query_text,
            "keywords": ", ".join(sorted(keywords)) or "(none)",
            "findings": render_findings(review_result),
            "count": str(count),
        },
    )
    response = gateway.complete(
        ChatRequest(
            system_prompt=SYSTEM_PROPOSE,
            user_prompt=prompt,
            model_id=gateway.config.chat_model_id,
        )
    )
    return parse_proposals(response.text, limit=count)
