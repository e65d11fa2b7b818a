"""Deterministic stand-ins for every external service.

The chat mock answers from a fixture table keyed by request content hash,
falling back to synthesizers that produce well-formed output for each stage
prompt. Embeddings are pure functions of the text. The synthetic arXiv
transport fabricates a fixed corpus and serves query-dependent slices of it.
Identical inputs always produce identical outputs, which is what makes
whole-session runs reproducible byte for byte.
"""
from __future__ import annotations

import hashlib
import logging
import random
import re
from datetime import date, timedelta
from typing import Callable
from xml.sax.saxutils import escape

import numpy as np

from . import stages
from .arxiv import ArxivClient
from .errors import ProviderError
from .gateway import ChatRequest, ChatResponse, Gateway, ProviderConfig
from .review import SYSTEM_REVIEW, SYSTEM_SYNTHESIS
from .session import EngineConfig, SessionManager
from .tree import SYSTEM_PROPOSE

logger = logging.getLogger(__name__)

_SCORE_CYCLE = (0.9, 0.35, 0.75, 0.55)
_STOPWORDS = frozenset(
    "a an and are for how in is of on or the to what with".split()
)
_DIRECTION_BANK = (
    "benchmarks",
    "user studies",
    "interpretability",
    "interaction design",
    "evaluation methods",
    "scalability",
    "provenance tracking",
    "uncertainty communication",
)

_PAPER_LINE_RE = re.compile(
    r"\[\[P\d+\]\] id=(\S+)\ntitle: ([^\n]*)\nabstract: ([^\n]*)"
)
_CHUNK_MARKER_RE = re.compile(r"\[\[C(\d+)\]\]")


def _digest_int(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def _block_after(prompt: str, header: str) -> str:
    """First nonempty line following a 'header:' line in a prompt."""
    lines = prompt.splitlines()
    for i, line in enumerate(lines):
        if line.strip() == header:
            for rest in lines[i + 1 :]:
                if rest.strip():
                    return rest.strip()
    return ""


def first_sentence(text: str) -> str:
    """Leading sentence, guaranteed to be an exact prefix of the text."""
    dot = text.find(".")
    return text[: dot + 1] if dot >= 0 else text


# --- chat ---------------------------------------------------------------------

class MockChatProvider:
    """Fixture-backed chat with deterministic per-stage fallbacks."""

    def __init__(
        self,
        fixtures: dict[str, str] | None = None,
        synthesize_missing: bool = True,
    ) -> None:
        self.fixtures = dict(fixtures or {})
        self.synthesize_missing = synthesize_missing
        self.calls: list[ChatRequest] = []
        self.fail_next = 0

    def add_fixture(self, request: ChatRequest, text: str) -> None:
        self.fixtures[request.content_hash()] = text

    def complete(self, request: ChatRequest) -> ChatResponse:
        self.calls.append(request)
        if self.fail_next > 0:
            self.fail_next -= 1
            raise ProviderError("simulated outage")
        hit = self.fixtures.get(request.content_hash())
        if hit is None:
            if not self.synthesize_missing:
                raise ProviderError(
                    f"no fixture for request {request.content_hash()[:12]}",
                    retryable=False,
                )
            hit = self._synthesize(request)
        return ChatResponse(
            text=hit,
            prompt_tokens=len(request.user_prompt) // 4,
            completion_tokens=len(hit) // 4,
        )

    def _synthesize(self, request: ChatRequest) -> str:
        system = request.system_prompt
        if system == stages.SYSTEM_EXPAND:
            return self._expand(request.user_prompt)
        if system == SYSTEM_REVIEW:
            return self._review(request.user_prompt)
        if system == SYSTEM_SYNTHESIS:
            return self._synthesis(request.user_prompt)
        if system == SYSTEM_PROPOSE:
            return self._propose(request.user_prompt)
        raise ProviderError(
            "mock has no synthesizer for this system prompt", retryable=False
        )

    def _expand(self, prompt: str) -> str:
        query = _block_after(prompt, "Research interest:")
        tokens = re.findall(r"[a-z0-9]+", query.lower())
        keywords = []
        for token in tokens:
            if token not in _STOPWORDS and token not in keywords:
                keywords.append(token)
        if not keywords:
            keywords = [query.lower() or "survey"]
        return "\n".join(keywords[:6])

    def _review(self, prompt: str) -> str:
        papers = _PAPER_LINE_RE.findall(prompt)
        if not papers:
            raise ProviderError("mock review saw no paper blocks", retryable=False)
        lines = []
        for i, (arxiv_id, _title, abstract) in enumerate(papers):
            score = _SCORE_CYCLE[i % len(_SCORE_CYCLE)]
            if score >= 0.5:
                excerpt = first_sentence(abstract)
                rationale = "Directly overlaps the stated interest."
            else:
                excerpt = "-"
                rationale = "Only tangentially related to the stated interest."
            lines.append(f"{arxiv_id} | {score} | {rationale} | {excerpt}")
        return "\n".join(lines)

    def _synthesis(self, prompt: str) -> str:
        markers = []
        for m in _CHUNK_MARKER_RE.findall(prompt):
            n = int(m)
            if n not in markers:
                markers.append(n)
        cited = markers[:3]
        if not cited:
            return (
                "## Synthesis\n\nThe accepted papers outline a coherent agenda, "
                "but none of the quoted evidence survived screening, so this "
                "summary stays at the level of shared themes."
            )
        sentences = [
            f"## Synthesis\n\nThe reviewed work converges on a shared core "
            f"[{cited[0]}]."
        ]
        if len(cited) > 1:
            sentences.append(
                f"A second strand extends the same ideas toward practice "
                f"[{cited[1]}]."
            )
        if len(cited) > 2:
            sentences.append(
                f"Open problems remain around evaluation and scale [{cited[2]}]."
            )
        return " ".join(sentences)

    def _propose(self, prompt: str) -> str:
        query = _block_after(prompt, "Current query:")
        count_match = re.search(r"Propose (\d+) distinct directions", prompt)
        count = int(count_match.group(1)) if count_match else 3
        h = _digest_int(prompt)
        lines = []
        for i in range(count):
            theme = _DIRECTION_BANK[(h + i) % len(_DIRECTION_BANK)]
            lines.append(
                f"{theme} focus"
                f" | Reviewed papers touch {theme} without treating it directly."
                f" | {query} {theme}"
            )
        return "\n".join(lines)


class FlakyChatProvider:
    """Delegates after failing the first fail_count calls."""

    def __init__(self, inner, fail_count: int) -> None:
        self.inner = inner
        self.fail_count = fail_count
        self.attempts = 0

    def complete(self, request: ChatRequest) -> ChatResponse:
        self.attempts += 1
        if self.attempts <= self.fail_count:
            raise ProviderError(f"flaky failure {self.attempts}")
        return self.inner.complete(request)


# --- embeddings ----------------------------------------------------------------

class MockEmbeddingProvider:
    """Normalized sum of per-token hash vectors; a pure function of text."""

    _token_cache: dict[tuple[str, int], np.ndarray] = {}

    def __init__(self, dim: int = 32) -> None:
        self.dim = dim
        self.calls: list[list[str]] = []

    def embed(self, texts: list[str], model_id: str) -> list[list[float]]:
        self.calls.append(list(texts))
        return [self._vector(text) for text in texts]

    def _token_vector(self, token: str) -> np.ndarray:
        key = (token, self.dim)
        cached = self._token_cache.get(key)
        if cached is None:
            rng = np.random.default_rng(_digest_int(token))
            cached = rng.standard_normal(self.dim)
            self._token_cache[key] = cached
        return cached

    def _vector(self, text: str) -> list[float]:
        tokens = re.findall(r"[a-z0-9]+", text.lower())
        if not tokens:
            tokens = ["blank"]
        acc = np.zeros(self.dim)
        for token in tokens:
            acc = acc + self._token_vector(token)
        norm = float(np.linalg.norm(acc))
        if norm < 1e-9:
            acc = self._token_vector("degenerate:" + text)
            norm = float(np.linalg.norm(acc))
        return (acc / norm).tolist()


# --- arXiv -----------------------------------------------------------------------

_TOPICS = (
    "graph layout algorithms",
    "literature review workflows",
    "language model agents",
    "dimensionality reduction",
    "human oversight of automation",
    "citation network analysis",
    "interactive visualization",
    "dense retrieval",
)
_METHODS = (
    "a controlled user study",
    "a new benchmark suite",
    "an interactive prototype",
    "a formal analysis",
    "large-scale simulation",
    "a longitudinal deployment",
)
_SURNAMES = (
    "Okafor", "Lindqvist", "Moreau", "Tanaka", "Petrov",
    "Alves", "Novak", "Castillo", "Hansen", "Rahman",
)
_CATEGORIES = ("cs.HC", "cs.CL", "cs.IR", "cs.LG")


class SyntheticArxivTransport:
    """Fabricated Atom feeds over a fixed corpus.

    Which papers a query returns is a pure function of the query string, and
    paper metadata is fixed per id, so repeated or overlapping queries
    exercise corpus merging the way the live API would.
    """

    def __init__(
        self,
        corpus_size: int = 40,
        results_per_query: int = 5,
        seed: int = 1234,
    ) -> None:
        self.corpus_size = corpus_size
        self.results_per_query = results_per_query
        self.requests: list[dict[str, str]] = []
        rng = random.Random(seed)
        self.papers = [self._make_paper(i, rng) for i in range(corpus_size)]

    @staticmethod
    def _make_paper(i: int, rng: random.Random) -> dict[str, str]:
        topic = _TOPICS[i % len(_TOPICS)]
        method = _METHODS[i % len(_METHODS)]
        month = 1 + i % 12
        published = date(2024, month, 1 + i % 27)
        updated = published + timedelta(days=(i % 3) * 7)
        authors = rng.sample(_SURNAMES, 2)
        title = f"Revisiting {topic} with {method}"
        abstract = (
            f"We study {topic} through {method}. "
            f"Our results show consistent gains over prior approaches to "
            f"{topic}, with ablations isolating the contribution of each "
            f"component. "
            f"We release code and data to support replication."
        )
        return {
            "id": f"24{month:02d}.{10000 + i}",
            "title": title,
            "abstract": abstract,
            "authors": authors,
            "published": published.isoformat(),
            "updated": updated.isoformat(),
            "category": _CATEGORIES[i % len(_CATEGORIES)],
        }

    def _entry_xml(self, paper: dict) -> str:
        authors = "\n".join(
            f"    <author><name>{escape(a)} Example</name></author>"
            for a in paper["authors"]
        )
        # Titles are wrapped across lines the way the live feed wraps them;
        # the parser is expected to normalize that away.
        broken_title = escape(paper["title"]).replace(" with ", "\n  with ")
        return f"""  <entry>
    <id>http://arxiv.org/abs/{paper["id"]}v1</id>
    <title>{broken_title}</title>
    <summary>{escape(paper["abstract"])}</summary>
    <published>{paper["published"]}T12:00:00Z</published>
    <updated>{paper["updated"]}T12:00:00Z</updated>
{authors}
    <arxiv:primary_category xmlns:arxiv="http://arxiv.org/schemas/atom" term="{paper["category"]}"/>
    <category term="{paper["category"]}"/>
    <link href="http://arxiv.org/abs/{paper["id"]}v1" rel="alternate" type="text/html"/>
  </entry>"""

    def feed_for(self, search_query: str, max_results: int) -> bytes:
        count = min(self.results_per_query, max_results, self.corpus_size)
        rng = random.Random(_digest_int(search_query))
        indices = sorted(rng.sample(range(self.corpus_size), count))
        entries = "\n".join(self._entry_xml(self.papers[i]) for i in indices)
        xml = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            '<feed xmlns="http://www.w3.org/2005/Atom">\n'
            f"  <title>arXiv Query: {escape(search_query)}</title>\n"
            f"{entries}\n"
            "</feed>\n"
        )
        return xml.encode("utf-8")

    def get(self, url: str, params: dict[str, str]) -> tuple[int, bytes]:
        self.requests.append(dict(params))
        return 200, self.feed_for(
            params["search_query"], int(params.get("max_results", "25"))
        )


class FixtureTransport:
    """Canned responses keyed by search_query; optional scripted failures."""

    def __init__(
        self,
        responses: dict[str, tuple[int, bytes]] | None = None,
        default: tuple[int, bytes] | None = None,
    ) -> None:
        self.responses = dict(responses or {})
        self.default = default
        self.requests: list[dict[str, str]] = []

    def get(self, url: str, params: dict[str, str]) -> tuple[int, bytes]:
        self.requests.append(dict(params))
        hit = self.responses.get(params["search_query"], self.default)
        if hit is None:
            return 404, b""
        return hit


# --- wiring ----------------------------------------------------------------------

def build_mock_gateway(
    dim: int = 32,
    fixtures: dict[str, str] | None = None,
    chat: MockChatProvider | None = None,
    sleep: Callable[[float], None] = lambda _s: None,
) -> Gateway:
    """Gateway over mocks; retries still exercised, backoff sleeps skipped."""
    return Gateway(
        chat=chat or MockChatProvider(fixtures=fixtures),
        embedder=MockEmbeddingProvider(dim=dim),
        config=ProviderConfig(),
        sleep=sleep,
    )


def build_mock_manager(
    config: EngineConfig | None = None,
    data_dir=None,
    dim: int = 32,
    transport: SyntheticArxivTransport | None = None,
    chat: MockChatProvider | None = None,
    clock=None,
) -> SessionManager:
    """A fully offline SessionManager: mock chat, embeddings, and arXiv."""
    gateway = build_mock_gateway(dim=dim, chat=chat)
    client = ArxivClient(
        transport=transport or SyntheticArxivTransport(),
        min_interval_seconds=0.0,
    )
    return SessionManager(
        gateway=gateway,
        arxiv_client=client,
        config=config,
        data_dir=data_dir,
        clock=clock,
    )
