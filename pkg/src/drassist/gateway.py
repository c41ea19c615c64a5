"""Provider-agnostic chat-completion and embedding access.

One request shape for every provider, with deterministic settings
(temperature 0), a content-addressed disk cache, exponential-backoff
retries, and per-provider concurrency limits. HTTP providers speak the
prevailing chat-completions REST schema; the bundled offline providers
(`mock://` chat, `pseudo://` embeddings) serve tests and demos without
network or keys.

Cache layout: `<cache_dir>/<model_id>/<sha256>.resp`, one JSON document
per response. The cache directory comes from, in priority order: the
DRASSIST_CACHE_DIR environment variable, the configuration file, the
default `cache/`.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Protocol
from urllib.parse import urlparse

import httpx


class GatewayError(Exception):
    pass


class AuthMissingError(GatewayError):
    pass


class ProviderUnreachableError(GatewayError):
    pass


class EmptyTextError(GatewayError):
    pass


class UnknownModelError(GatewayError):
    pass


class TransientProviderError(GatewayError):
    """Retryable transport failure (timeouts, 429, 5xx)."""


class FinishReason(Enum):
    COMPLETE = "complete"
    TRUNCATED = "truncated"
    REFUSED = "refused"


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    provider_endpoint: str
    api_key_env_var: str = ""
    max_output_tokens: int = 2048
    temperature: float = 0.0
    embedding_dimension: int | None = None

    def __post_init__(self) -> None:
        if self.temperature != 0.0:
            raise ValueError(
                f"model {self.model_id!r}: temperature must be exactly 0"
            )
        if self.max_output_tokens < 1:
            raise ValueError(f"model {self.model_id!r}: max_output_tokens must be >= 1")
        if "/" in self.model_id or self.model_id != self.model_id.strip() or not self.model_id:
            raise ValueError(f"model id {self.model_id!r} is not filesystem-safe")

    @property
    def scheme(self) -> str:
        return urlparse(self.provider_endpoint).scheme


@dataclass(frozen=True)
class ChatRequest:
    model: ModelSpec
    prompt: str
    request_tag: str = ""


@dataclass(frozen=True)
class ChatResponse:
    text: str
    finish_reason: FinishReason
    latency_ms: float = 0.0
    retry_count: int = 0
    from_cache: bool = False


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    dimension: int

    def __post_init__(self) -> None:
        if len(self.values) != self.dimension:
            raise ValueError(
                f"embedding claims dimension {self.dimension} but has {len(self.values)} values"
            )
        if all(v == 0.0 for v in self.values):
            raise ValueError("zero embedding vector rejected")


@dataclass(frozen=True)
class Limits:
    in_flight: int = 4
    requests_per_minute: int = 0  # 0 disables pacing


@dataclass
class GatewayConfig:
    models: dict[str, ModelSpec] = field(default_factory=dict)
    cache_dir: str | None = None
    max_attempts: int = 3
    backoff_base_seconds: float = 0.5
    limits: Limits = field(default_factory=Limits)

    def model(self, model_id: str) -> ModelSpec:
        try:
            return self.models[model_id]
        except KeyError:
            raise UnknownModelError(f"model {model_id!r} is not declared in the configuration")

    @property
    def model_priority(self) -> list[str]:
        """Declaration order; the ensemble's tie-break priority."""
        return list(self.models)


def load_gateway_config(path: str | Path) -> GatewayConfig:
    """Read the JSON configuration file declaring every ModelSpec.

    Shape::

        {
          "cache_dir": "cache",
          "max_attempts": 3,
          "backoff_base_seconds": 0.5,
          "limits": {"in_flight": 4, "requests_per_minute": 0},
          "models": [
            {"model_id": "judge-a", "provider_endpoint": "mock://chat"},
            {"model_id": "embed-1", "provider_endpoint": "pseudo://embed",
             "embedding_dimension": 32}
          ]
        }

    API keys are never stored in the file; each model names the
    environment variable holding its key in ``api_key_env_var``.
    """
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    models: dict[str, ModelSpec] = {}
    for entry in raw.get("models", []):
        spec = ModelSpec(
            model_id=entry["model_id"],
            provider_endpoint=entry["provider_endpoint"],
            api_key_env_var=entry.get("api_key_env_var", ""),
            max_output_tokens=entry.get("max_output_tokens", 2048),
            temperature=entry.get("temperature", 0.0),
            embedding_dimension=entry.get("embedding_dimension"),
        )
        if spec.model_id in models:
            raise ValueError(f"model {spec.model_id!r} declared twice")
        models[spec.model_id] = spec
    limits_raw = raw.get("limits", {})
    return GatewayConfig(
        models=models,
        cache_dir=raw.get("cache_dir"),
        max_attempts=raw.get("max_attempts", 3),
        backoff_base_seconds=raw.get("backoff_base_seconds", 0.5),
        limits=Limits(
            in_flight=limits_raw.get("in_flight", 4),
            requests_per_minute=limits_raw.get("requests_per_minute", 0),
        ),
    )


class ChatProvider(Protocol):
    def complete(self, model: ModelSpec, prompt: str) -> tuple[str, FinishReason]: ...


class EmbeddingProvider(Protocol):
    def embed(self, model: ModelSpec, texts: list[str]) -> list[list[float]]: ...


_FINISH_REASONS = {
    "stop": FinishReason.COMPLETE,
    "length": FinishReason.TRUNCATED,
    "content_filter": FinishReason.REFUSED,
}


class HttpChatProvider:
    """Chat-completions REST adapter (OpenAI-compatible schema)."""

    def __init__(self, timeout: float = 120.0) -> None:
        self._client = httpx.Client(timeout=timeout)

    def complete(self, model: ModelSpec, prompt: str) -> tuple[str, FinishReason]:
        payload = {
            "model": model.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": model.temperature,
            "max_tokens": model.max_output_tokens,
        }
        data = _post_json(self._client, model, payload)
        try:
            choice = data["choices"][0]
            text = choice["message"]["content"]
            reason = _FINISH_REASONS.get(choice.get("finish_reason", "stop"), FinishReason.COMPLETE)
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderUnreachableError(
                f"{model.provider_endpoint}: malformed chat response: {exc}"
            ) from exc
        return text, reason

    def close(self) -> None:
        self._client.close()


class HttpEmbeddingProvider:
    def __init__(self, timeout: float = 120.0) -> None:
        self._client = httpx.Client(timeout=timeout)

    def embed(self, model: ModelSpec, texts: list[str]) -> list[list[float]]:
        payload = {"model": model.model_id, "input": texts}
        data = _post_json(self._client, model, payload)
        try:
            rows = sorted(data["data"], key=lambda row: row["index"])
            return [list(map(float, row["embedding"])) for row in rows]
        except (KeyError, TypeError) as exc:
            raise ProviderUnreachableError(
                f"{model.provider_endpoint}: malformed embedding response: {exc}"
            ) from exc

    def close(self) -> None:
        self._client.close()


def _post_json(client: httpx.Client, model: ModelSpec, payload: dict[str, Any]) -> dict[str, Any]:
    api_key = os.environ.get(model.api_key_env_var, "") if model.api_key_env_var else ""
    headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
    try:
        response = client.post(model.provider_endpoint, json=payload, headers=headers)
    except httpx.TransportError as exc:
        raise TransientProviderError(f"{model.provider_endpoint}: {exc}") from exc
    if response.status_code == 429 or response.status_code >= 500:
        raise TransientProviderError(
            f"{model.provider_endpoint}: HTTP {response.status_code}"
        )
    if response.status_code >= 400:
        raise ProviderUnreachableError(
            f"{model.provider_endpoint}: HTTP {response.status_code}: {response.text[:200]}"
        )
    return response.json()


class PseudoEmbeddingProvider:
    """Deterministic offline embeddings: unit vectors seeded by sha256 of
    (model_id, text). Identical texts embed identically; distinct texts
    land far apart with overwhelming probability."""

    def embed(self, model: ModelSpec, texts: list[str]) -> list[list[float]]:
        dim = model.embedding_dimension or 32
        return [self._vector(model.model_id, text, dim) for text in texts]

    @staticmethod
    def _vector(model_id: str, text: str, dim: int) -> list[float]:
        seed = hashlib.sha256(f"{model_id}:{text}".encode("utf-8")).digest()
        raw: list[float] = []
        counter = 0
        while len(raw) < dim:
            block = hashlib.sha256(seed + counter.to_bytes(4, "big")).digest()
            for i in range(0, len(block) - 3, 4):
                u = int.from_bytes(block[i : i + 4], "big")
                raw.append(u / 2**31 - 1.0)
                if len(raw) == dim:
                    break
            counter += 1
        norm = sum(v * v for v in raw) ** 0.5
        if norm == 0.0:  # unreachable in practice, keeps the unit guarantee
            raw[0] = 1.0
            norm = 1.0
        return [v / norm for v in raw]


def _chat_cache_key(model: ModelSpec, prompt: str) -> str:
    material = json.dumps(
        {
            "kind": "chat",
            "model_id": model.model_id,
            "prompt": prompt,
            "temperature": model.temperature,
            "max_output_tokens": model.max_output_tokens,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def _embed_cache_key(model: ModelSpec, text: str) -> str:
    material = json.dumps(
        {"kind": "embed", "model_id": model.model_id, "text": text},
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def _atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _ProviderLimiter:
    """Caps in-flight requests and paces to a requests-per-minute budget."""

    def __init__(self, limits: Limits, clock=time.monotonic, sleep=time.sleep) -> None:
        self._semaphore = threading.Semaphore(limits.in_flight)
        self._rpm = limits.requests_per_minute
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._starts: list[float] = []

    def __enter__(self):
        self._semaphore.acquire()
        if self._rpm > 0:
            while True:
                with self._lock:
                    now = self._clock()
                    self._starts = [t for t in self._starts if now - t < 60.0]
                    if len(self._starts) < self._rpm:
                        self._starts.append(now)
                        break
                    wait = 60.0 - (now - self._starts[0])
                self._sleep(max(wait, 0.01))
        return self

    def __exit__(self, *exc_info):
        self._semaphore.release()
        return False


class Gateway:
    """Cached, retried, rate-limited access to all configured models."""

    def __init__(
        self,
        config: GatewayConfig,
        cache_dir: str | Path | None = None,
        sleep=time.sleep,
    ) -> None:
        self.config = config
        resolved = (
            cache_dir
            or os.environ.get("DRASSIST_CACHE_DIR")
            or config.cache_dir
            or "cache"
        )
        self.cache_dir = Path(resolved)
        self._sleep = sleep
        self._lock = threading.Lock()
        self._chat_providers: dict[str, ChatProvider] = {}
        self._embed_providers: dict[str, EmbeddingProvider] = {}
        self._limiters: dict[str, _ProviderLimiter] = {}

    # -- provider wiring ---------------------------------------------------

    def _limiter(self, endpoint: str) -> _ProviderLimiter:
        with self._lock:
            if endpoint not in self._limiters:
                self._limiters[endpoint] = _ProviderLimiter(
                    self.config.limits, sleep=self._sleep
                )
            return self._limiters[endpoint]

    def _chat_provider(self, model: ModelSpec) -> ChatProvider:
        with self._lock:
            provider = self._chat_providers.get(model.provider_endpoint)
            if provider is None:
                if model.scheme == "mock":
                    from .mock_provider import MockChatProvider

                    provider = MockChatProvider()
                elif model.scheme in ("http", "https"):
                    provider = HttpChatProvider()
                else:
                    raise GatewayError(
                        f"no chat provider for scheme {model.scheme!r} "
                        f"({model.provider_endpoint})"
                    )
                self._chat_providers[model.provider_endpoint] = provider
            return provider

    def _embed_provider(self, model: ModelSpec) -> EmbeddingProvider:
        with self._lock:
            provider = self._embed_providers.get(model.provider_endpoint)
            if provider is None:
                if model.scheme in ("pseudo", "mock"):
                    provider = PseudoEmbeddingProvider()
                elif model.scheme in ("http", "https"):
                    provider = HttpEmbeddingProvider()
                else:
                    raise GatewayError(
                        f"no embedding provider for scheme {model.scheme!r} "
                        f"({model.provider_endpoint})"
                    )
                self._embed_providers[model.provider_endpoint] = provider
            return provider

    def _check_auth(self, model: ModelSpec) -> None:
        if model.scheme in ("http", "https"):
            if not model.api_key_env_var or not os.environ.get(model.api_key_env_var):
                raise AuthMissingError(
                    f"model {model.model_id!r}: environment variable "
                    f"{model.api_key_env_var or '<unnamed>'} is not set"
                )

    # -- chat ----------------------------------------------------------------

    def _cache_path(self, model: ModelSpec, key: str) -> Path:
        return self.cache_dir / model.model_id / f"{key}.resp"

    def chat_complete(self, req: ChatRequest) -> ChatResponse:
        """One chat call: cache hit is returned byte-identical; a miss is
        retried with exponential backoff on transient failures, then
        stored."""
        key = _chat_cache_key(req.model, req.prompt)
        path = self._cache_path(req.model, key)
        if path.exists():
            stored = json.loads(path.read_text(encoding="utf-8"))
            return ChatResponse(
                text=stored["text"],
                finish_reason=FinishReason(stored["finish_reason"]),
                from_cache=True,
            )

        self._check_auth(req.model)
        provider = self._chat_provider(req.model)
        retries = 0
        started = time.monotonic()
        for attempt in range(self.config.max_attempts):
            try:
                with self._limiter(req.model.provider_endpoint):
                    text, reason = provider.complete(req.model, req.prompt)
                break
            except TransientProviderError as exc:
                retries += 1
                if attempt + 1 >= self.config.max_attempts:
                    raise ProviderUnreachableError(
                        f"model {req.model.model_id!r}: "
                        f"{self.config.max_attempts} attempts failed: {exc}"
                    ) from exc
                self._sleep(self.config.backoff_base_seconds * 2**attempt)
        latency_ms = (time.monotonic() - started) * 1000.0
        _atomic_write(
            path,
            json.dumps(
                {"text": text, "finish_reason": reason.value},
                sort_keys=True,
                ensure_ascii=False,
            ),
        )
        return ChatResponse(
            text=text, finish_reason=reason, latency_ms=latency_ms, retry_count=retries
        )

    # -- embeddings ------------------------------------------------------

    def embed_texts(self, texts: list[str], model: ModelSpec) -> list[EmbeddingVector]:
        """Embed texts in order, one vector each, cached per (model, text)."""
        for text in texts:
            if not text or not text.strip():
                raise EmptyTextError("cannot embed empty text")

        vectors: dict[int, EmbeddingVector] = {}
        missing: list[int] = []
        for i, text in enumerate(texts):
            path = self._cache_path(model, _embed_cache_key(model, text))
            if path.exists():
                stored = json.loads(path.read_text(encoding="utf-8"))
                vectors[i] = EmbeddingVector(
                    values=tuple(stored["values"]), dimension=stored["dimension"]
                )
            else:
                missing.append(i)

        if missing:
            self._check_auth(model)
            provider = self._embed_provider(model)
            batch = [texts[i] for i in missing]
            for attempt in range(self.config.max_attempts):
                try:
                    with self._limiter(model.provider_endpoint):
                        raw_vectors = provider.embed(model, batch)
                    break
                except TransientProviderError as exc:
                    if attempt + 1 >= self.config.max_attempts:
                        raise ProviderUnreachableError(
                            f"model {model.model_id!r}: "
                            f"{self.config.max_attempts} attempts failed: {exc}"
                        ) from exc
                    self._sleep(self.config.backoff_base_seconds * 2**attempt)
            if len(raw_vectors) != len(batch):
                raise ProviderUnreachableError(
                    f"model {model.model_id!r}: asked for {len(batch)} embeddings, "
                    f"got {len(raw_vectors)}"
                )
            for i, values in zip(missing, raw_vectors):
                vector = EmbeddingVector(values=tuple(values), dimension=len(values))
                _atomic_write(
                    self._cache_path(model, _embed_cache_key(model, texts[i])),
                    json.dumps(
                        {"values": list(vector.values), "dimension": vector.dimension},
                        sort_keys=True,
                    ),
                )
                vectors[i] = vector

        return [vectors[i] for i in range(len(texts))]

    def close(self) -> None:
        for provider in (*self._chat_providers.values(), *self._embed_providers.values()):
            close = getattr(provider, "close", None)
            if close is not None:
                close()

    def __enter__(self) -> "Gateway":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
