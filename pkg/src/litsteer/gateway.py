"""Provider access for chat completion and text embedding.

Everything that talks to an LLM goes through :class:`Gateway`, which owns
retry, backoff, concurrency limiting, and batch splitting. Providers are
injectable so tests and offline runs swap in the deterministic mocks from
``litsteer.mocks`` without touching engine code.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Protocol

import httpx

from .errors import (
    EmptyBatch,
    EmptyText,
    InvalidRequest,
    ProviderError,
)

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_SECONDS = 60.0
DEFAULT_EMBED_BATCH_SIZE = 64
MAX_RETRIES_CAP = 10


# --- request / response types -------------------------------------------

@dataclass(frozen=True)
class ChatRequest:
    """One chat completion request. Hashable content for fixture keying."""

    system_prompt: str
    user_prompt: str
    temperature: float = 0.0
    max_output_tokens: int = 1024
    model_id: str = "default-chat"

    def __post_init__(self) -> None:
        if not self.user_prompt.strip():
            raise InvalidRequest("user_prompt must be nonempty")
        if not 0.0 <= self.temperature <= 2.0:
            raise InvalidRequest(f"temperature {self.temperature} outside [0, 2]")
        if self.max_output_tokens <= 0:
            raise InvalidRequest("max_output_tokens must be positive")

    def content_hash(self) -> str:
        """Stable digest of the request content, used to key mock fixtures."""
        doc = {
            "system_prompt": self.system_prompt,
            "user_prompt": self.user_prompt,
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
            "model_id": self.model_id,
        }
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ChatResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass(frozen=True)
class EmbeddingVector:
    """A dense embedding. Values are immutable; dim is derived."""

    values: tuple[float, ...]
    model_id: str = "default-embed"

    def __post_init__(self) -> None:
        if not self.values:
            raise InvalidRequest("embedding must have at least one dimension")
        for v in self.values:
            if not math.isfinite(v):
                raise InvalidRequest("embedding values must be finite")

    @property
    def dim(self) -> int:
        return len(self.values)

    def to_list(self) -> list[float]:
        return list(self.values)


@dataclass(frozen=True)
class ProviderConfig:
    """Connection and policy settings for provider access."""

    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "LLM_API_KEY"
    chat_model_id: str = "default-chat"
    embedding_model_id: str = "default-embed"
    max_retries: int = 2
    backoff_base_seconds: float = 0.5
    timeout_seconds: float = DEFAULT_TIMEOUT_SECONDS
    embed_batch_size: int = DEFAULT_EMBED_BATCH_SIZE
    max_inflight: int = 4

    def __post_init__(self) -> None:
        if not 0 <= self.max_retries <= MAX_RETRIES_CAP:
            raise InvalidRequest(f"max_retries must be in [0, {MAX_RETRIES_CAP}]")
        if self.backoff_base_seconds < 0:
            raise InvalidRequest("backoff_base_seconds must be >= 0")
        if self.timeout_seconds <= 0:
            raise InvalidRequest("timeout_seconds must be positive")
        if self.embed_batch_size < 1:
            raise InvalidRequest("embed_batch_size must be >= 1")
        if self.max_inflight < 1:
            raise InvalidRequest("max_inflight must be >= 1")


# --- provider protocols -------------------------------------------------

class ChatProvider(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


class EmbeddingProvider(Protocol):
    def embed(self, texts: list[str], model_id: str) -> list[list[float]]: ...


# --- gateway -------------------------------------------------------------

class Gateway:
    """Retry, backoff, concurrency, and batching around raw providers."""

    def __init__(
        self,
        chat: ChatProvider,
        embedder: EmbeddingProvider,
        config: ProviderConfig | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self._chat = chat
        self._embedder = embedder
        self.config = config or ProviderConfig()
        self._sleep = sleep
        self._inflight = threading.BoundedSemaphore(self.config.max_inflight)

    # Retries cover transient provider failures only; malformed requests
    # raise immediately and never consume attempts.
    def complete(self, request: ChatRequest) -> ChatResponse:
        response = self._with_retries(
            lambda: self._chat.complete(request), label="complete"
        )
        if not response.text.strip():
            raise ProviderError("provider returned an empty completion")
        return response

    def embed_batch(self, texts: list[str]) -> list[EmbeddingVector]:
        if not texts:
            raise EmptyBatch("embed_batch requires at least one text")
        for i, text in enumerate(texts):
            if not text.strip():
                raise EmptyText(f"text at index {i} is empty")
        model_id = self.config.embedding_model_id
        out: list[EmbeddingVector] = []
        size = self.config.embed_batch_size
        for start in range(0, len(texts), size):
            chunk = texts[start : start + size]
            rows = self._with_retries(
                lambda c=chunk: self._embedder.embed(c, model_id), label="embed"
            )
            if len(rows) != len(chunk):
                raise ProviderError(
                    f"provider returned {len(rows)} vectors for {len(chunk)} texts"
                )
            out.extend(EmbeddingVector(tuple(row), model_id) for row in rows)
        dims = {v.dim for v in out}
        if len(dims) > 1:
            raise ProviderError(f"provider mixed embedding dims: {sorted(dims)}")
        return out

    def _with_retries(self, call: Callable[[], Any], label: str) -> Any:
        attempts = self.config.max_retries + 1
        last: ProviderError | None = None
        for attempt in range(attempts):
            if attempt:
                delay = self.config.backoff_base_seconds * (2 ** (attempt - 1))
                logger.warning(
                    "%s failed (attempt %d/%d), retrying in %.2fs: %s",
                    label, attempt, attempts, delay, last,
                )
                self._sleep(delay)
            try:
                with self._inflight:
                    return call()
            except ProviderError as exc:
                last = exc
                if not exc.retryable:
                    raise
        raise ProviderError(
            f"{label} failed after {attempts} attempts: {last}"
        )


# --- OpenAI-compatible HTTP provider -------------------------------------

class OpenAICompatProvider:
    """Chat + embeddings against an OpenAI-style HTTP API.

    Network errors, timeouts, and non-2xx statuses all surface as
    ProviderError; 4xx statuses other than 429 are marked non-retryable.
    """

    def __init__(
        self,
        config: ProviderConfig,
        client: httpx.Client | None = None,
    ) -> None:
        self.config = config
        self._client = client or httpx.Client(
            base_url=config.base_url, timeout=config.timeout_seconds
        )

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.config.api_key_env, "")
        if not key:
            raise ProviderError(
                f"no API key in ${self.config.api_key_env}", retryable=False
            )
        return {"Authorization": f"Bearer {key}"}

    def _post(self, path: str, payload: dict[str, Any]) -> dict[str, Any]:
        try:
            resp = self._client.post(path, json=payload, headers=self._headers())
        except httpx.TimeoutException as exc:
            raise ProviderError(f"request timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise ProviderError(f"transport failure: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise ProviderError(f"HTTP {resp.status_code} from provider")
        if resp.status_code >= 400:
            raise ProviderError(
                f"HTTP {resp.status_code} from provider: {resp.text[:200]}",
                retryable=False,
            )
        try:
            return resp.json()
        except ValueError as exc:
            raise ProviderError(f"non-JSON provider response: {exc}") from exc

    def complete(self, request: ChatRequest) -> ChatResponse:
        body = self._post(
            "/chat/completions",
            {
                "model": request.model_id,
                "messages": [
                    {"role": "system", "content": request.system_prompt},
                    {"role": "user", "content": request.user_prompt},
                ],
                "temperature": request.temperature,
                "max_tokens": request.max_output_tokens,
            },
        )
        try:
            text = body["choices"][0]["message"]["content"] or ""
            usage = body.get("usage", {})
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed completion payload: {exc}") from exc
        return ChatResponse(
            text=text,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
        )

    def embed(self, texts: list[str], model_id: str) -> list[list[float]]:
        body = self._post("/embeddings", {"model": model_id, "input": texts})
        try:
            rows = sorted(body["data"], key=lambda d: d["index"])
            return [[float(x) for x in row["embedding"]] for row in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed embedding payload: {exc}") from exc


def gateway_from_env(sleep: Callable[[float], None] = time.sleep) -> Gateway:
    """Build a live gateway from LLM_* environment variables."""
    config = ProviderConfig(
        base_url=os.environ.get("LLM_BASE_URL", ProviderConfig.base_url),
        chat_model_id=os.environ.get("LLM_CHAT_MODEL", ProviderConfig.chat_model_id),
        embedding_model_id=os.environ.get(
            "LLM_EMBED_MODEL", ProviderConfig.embedding_model_id
        ),
    )
    provider = OpenAICompatProvider(config)
    return Gateway(chat=provider, embedder=provider, config=config, sleep=sleep)
