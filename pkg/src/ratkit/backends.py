"""Uniform interface to chat-completion and embedding providers.

Two families of backends are supported: HTTP providers speaking the common
chat-completions / embeddings JSON wire format, and a deterministic scripted
backend for offline tests.  Scripted backends replay a fixed list of responses
and record every conversation they receive; their embedding function is a
stable token-hash bag so similarity is content-sensitive without any network.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

ROLES = ("system", "user", "assistant")

MOCK_EMBED_DIM = 64

RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 0.5


class BackendError(Exception):
    """Base class for backend failures."""


class TransportError(BackendError):
    """Network-level or 5xx provider failure, after retries were exhausted."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(f"{message} (after {attempts} attempt(s))")
        self.attempts = attempts


class MalformedReplyError(BackendError):
    """Provider returned a payload we cannot interpret."""


class ScriptExhaustedError(BackendError):
    """Scripted backend has no further response to replay."""


class CapabilityError(BackendError):
    """Backend does not support the requested operation."""


@dataclass(frozen=True)
class Message:
    role: str
    content: str


@dataclass(frozen=True)
class Conversation:
    messages: tuple[Message, ...]

    def __post_init__(self):
        if not self.messages:
            raise ValueError("conversation must be non-empty")
        for i, m in enumerate(self.messages):
            if m.role not in ROLES:
                raise ValueError(f"unknown role {m.role!r}")
            if not m.content and not (m.role == "assistant" and i == len(self.messages) - 1):
                raise ValueError("empty content only allowed for trailing assistant slot")

    @classmethod
    def of(cls, *turns: tuple[str, str]) -> "Conversation":
        return cls(tuple(Message(r, c) for r, c in turns))

    @classmethod
    def user(cls, content: str) -> "Conversation":
        return cls.of(("user", content))

    def to_wire(self) -> list[dict]:
        return [{"role": m.role, "content": m.content} for m in self.messages]


@dataclass(frozen=True)
class DecodingParams:
    temperature: float = 0.0
    max_tokens: int = 2048
    sample_count: int = 1
    seed: Optional[int] = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    def __post_init__(self):
        for v in self.values:
            if not (v == v and abs(v) != float("inf")):
                raise ValueError("embedding values must be finite")

    def __len__(self) -> int:
        return len(self.values)


def mock_embed_text(text: str, dim: int = MOCK_EMBED_DIM) -> EmbeddingVector:
    """Token-hash bag embedding: each whitespace token increments one bucket.

    Pure function of the input text; uses md5 so values are stable across
    processes (unlike the builtin hash).
    """
    if not text:
        raise ValueError("cannot embed empty text")
    counts = [0.0] * dim
    for tok in text.split():
        h = int.from_bytes(hashlib.md5(tok.encode("utf-8")).digest()[:8], "big")
        counts[h % dim] += 1.0
    return EmbeddingVector(tuple(counts))


class Backend:
    """Common surface for chat + embedding providers."""

    chat_capable = False
    embed_capable = False
    dimension: Optional[int] = None

    def complete(self, conv: Conversation, params: DecodingParams) -> list[str]:
        raise CapabilityError("backend is not chat-capable")

    def embed(self, text: str) -> EmbeddingVector:
        raise CapabilityError("backend is not embed-capable")


class ScriptedBackend(Backend):
    """Replays a fixed script of responses in order.

    Also embed-capable through the deterministic token-hash bag, so a single
    scripted backend can drive a full pipeline run offline.  Access is
    serialized so transcripts are totally ordered under concurrency.
    """

    chat_capable = True
    embed_capable = True

    def __init__(self, script: Sequence[str], dimension: int = MOCK_EMBED_DIM):
        self._script = list(script)
        self._cursor = 0
        self.dimension = dimension
        self.transcript: list[Conversation] = []
        self._lock = threading.Lock()

    @property
    def remaining(self) -> int:
        return len(self._script) - self._cursor

    def complete(self, conv: Conversation, params: DecodingParams) -> list[str]:
        with self._lock:
            if self.remaining < params.sample_count:
                raise ScriptExhaustedError(
                    f"script has {self.remaining} response(s) left, "
                    f"{params.sample_count} requested"
                )
            self.transcript.append(conv)
            out = self._script[self._cursor : self._cursor + params.sample_count]
            self._cursor += params.sample_count
            return out

    def embed(self, text: str) -> EmbeddingVector:
        return mock_embed_text(text, self.dimension)


def scripted_backend(script: Sequence[str]) -> ScriptedBackend:
    return ScriptedBackend(script)


def _default_sleep(seconds: float) -> None:
    time.sleep(seconds)


class _HttpBase:
    """Shared retry/transport plumbing for HTTP providers.

    ``transport`` is a callable (url, headers, payload) -> (status, body-dict);
    injectable for tests.  Retries transport errors and 5xx with exponential
    backoff starting at RETRY_BASE_DELAY seconds.
    """

    def __init__(self, endpoint, model_id, auth_env=None, transport=None, sleep=_default_sleep):
        self.endpoint = endpoint
        self.model_id = model_id
        self.auth_env = auth_env
        self._transport = transport or _requests_transport
        self._sleep = sleep

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            key = os.environ.get(self.auth_env)
            if not key:
                raise BackendError(f"auth environment variable {self.auth_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post(self, payload: dict) -> dict:
        last = None
        for attempt in range(1, RETRY_ATTEMPTS + 1):
            try:
                status, body = self._transport(self.endpoint, self._headers(), payload)
            except OSError as exc:
                last = str(exc)
                status = None
            else:
                if status < 500:
                    if status >= 400:
                        raise BackendError(f"provider rejected request: HTTP {status}: {body}")
                    return body
                last = f"HTTP {status}"
            if attempt < RETRY_ATTEMPTS:
                self._sleep(RETRY_BASE_DELAY * (2 ** (attempt - 1)))
        raise TransportError(f"transport failure: {last}", attempts=RETRY_ATTEMPTS)


def _requests_transport(url, headers, payload):
    import requests

    try:
        resp = requests.post(url, headers=headers, json=payload, timeout=120)
    except requests.RequestException as exc:
        raise OSError(str(exc)) from exc
    try:
        body = resp.json()
    except ValueError:
        body = {"raw": resp.text}
    return resp.status_code, body


class HttpChatBackend(_HttpBase, Backend):
    """Chat-completions provider (OpenAI-compatible wire format)."""

    chat_capable = True

    def complete(self, conv: Conversation, params: DecodingParams) -> list[str]:
        payload = {
            "model": self.model_id,
            "messages": conv.to_wire(),
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "n": params.sample_count,
        }
        if params.seed is not None:
            payload["seed"] = params.seed
        body = self._post(payload)
        try:
            choices = body["choices"]
            texts = [c["message"]["content"] for c in choices]
        except (KeyError, TypeError) as exc:
            raise MalformedReplyError(f"unexpected chat reply shape: {exc}") from exc
        if len(texts) != params.sample_count:
            raise MalformedReplyError(
                f"provider returned {len(texts)} choices, expected {params.sample_count}"
            )
        return texts


class HttpEmbedBackend(_HttpBase, Backend):
    """Embeddings provider (OpenAI-compatible wire format)."""

    embed_capable = True

    def __init__(self, endpoint, model_id, dimension, auth_env=None, transport=None, sleep=_default_sleep):
        super().__init__(endpoint, model_id, auth_env=auth_env, transport=transport, sleep=sleep)
        self.dimension = dimension

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValueError("cannot embed empty text")
        body = self._post({"model": self.model_id, "input": text})
        try:
            values = body["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedReplyError(f"unexpected embedding reply shape: {exc}") from exc
        if len(values) != self.dimension:
            raise MalformedReplyError(
                f"provider returned dimension {len(values)}, expected {self.dimension}"
            )
        return EmbeddingVector(tuple(float(v) for v in values))


def load_backend_config(path: str) -> Backend:
    """Build a backend from a TOML or JSON provider config file.

    Fields: kind (http-chat | http-embed | scripted), endpoint, model_id,
    auth_env (name of the env var holding the secret), dimension (embed
    kinds), script / script_file (scripted kind).
    """
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib

        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    return backend_from_dict(cfg, base_dir=os.path.dirname(os.path.abspath(path)))


def backend_from_dict(cfg: dict, base_dir: str = ".") -> Backend:
    kind = cfg.get("kind")
    if kind == "scripted":
        if "script_file" in cfg:
            with open(os.path.join(base_dir, cfg["script_file"]), "r", encoding="utf-8") as fh:
                script = json.load(fh)
        else:
            script = cfg.get("script")
        if script is None:
            raise ValueError("scripted backend requires 'script' or 'script_file'")
        return ScriptedBackend(script, dimension=cfg.get("dimension", MOCK_EMBED_DIM))
    if kind == "http-chat":
        _require(cfg, "endpoint", "model_id")
        return HttpChatBackend(cfg["endpoint"], cfg["model_id"], auth_env=cfg.get("auth_env"))
    if kind == "http-embed":
        _require(cfg, "endpoint", "model_id", "dimension")
        return HttpEmbedBackend(
            cfg["endpoint"], cfg["model_id"], cfg["dimension"], auth_env=cfg.get("auth_env")
        )
    raise ValueError(f"unknown backend kind {kind!r}")


def _require(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ValueError(f"backend config missing required field(s): {', '.join(missing)}")
