"""Text-completion access behind one interface: live HTTP, replay store, fixtures.

Replay and fixture backends never touch the network.  The live backend
consults and fills a write-once on-disk cache that the replay backend reads.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import httpx

logger = logging.getLogger(__name__)

DEFAULT_MAX_TOKENS = 256
DEFAULT_IN_FLIGHT = 4
EXTRACTION_STOP = ("\n\n",)


class GatewayError(RuntimeError):
    pass


class ReplayMiss(GatewayError):
    def __init__(self, key: str):
        super().__init__(f"no stored completion for key {key}")
        self.key = key


class CacheConflict(GatewayError):
    pass


class AuthError(GatewayError):
    pass


class TransportError(GatewayError):
    def __init__(self, message: str, status: Optional[int] = None,
                 retry_after: Optional[str] = None, attempts: int = 1):
        super().__init__(message)
        self.status = status
        self.retry_after = retry_after
        self.attempts = attempts


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    model_id: str
    temperature: float = 0.0
    max_tokens: int = DEFAULT_MAX_TOKENS
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))


def cache_key(req: CompletionRequest) -> str:
    payload = json.dumps(
        {
            "model_id": req.model_id,
            "temperature": float(req.temperature),
            "max_tokens": req.max_tokens,
            "stop": list(req.stop_sequences),
            "prompt": req.prompt,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class CacheStore:
    """Directory of ``<key>.json`` documents, one per completion."""

    def __init__(self, root: str | os.PathLike, created_at: Optional[str] = None):
        self.root = Path(root)
        self.created_at = created_at
        self._lock = threading.Lock()

    def path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> Optional[str]:
        p = self.path(key)
        if not p.exists():
            return None
        return json.loads(p.read_text("utf-8"))["completion"]

    def put(self, req: CompletionRequest, completion: str) -> None:
        key = cache_key(req)
        with self._lock:
            existing = self.get(key)
            if existing is not None:
                if existing != completion:
                    raise CacheConflict(f"cache entry {key} already holds a different completion")
                return
            self.root.mkdir(parents=True, exist_ok=True)
            doc = {
                "key": key,
                "model_id": req.model_id,
                "temperature": req.temperature,
                "max_tokens": req.max_tokens,
                "stop": list(req.stop_sequences),
                "prompt": req.prompt,
                "completion": completion,
                "created_at": self.created_at or time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            }
            tmp = self.path(key).with_suffix(".tmp")
            tmp.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", "utf-8")
            tmp.replace(self.path(key))


class Backend:
    def complete(self, req: CompletionRequest) -> str:
        raise NotImplementedError


class FixtureBackend(Backend):
    """In-memory ``cache key -> completion`` map."""

    def __init__(self, completions: Mapping[str, str] | None = None):
        self.completions = dict(completions or {})

    def add(self, req: CompletionRequest, completion: str) -> None:
        self.completions[cache_key(req)] = completion

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> FixtureBackend:
        """Load a JSON list of entries carrying either ``key`` or full request fields."""
        entries = json.loads(Path(path).read_text("utf-8"))
        backend = cls()
        for e in entries:
            if "key" in e:
                backend.completions[e["key"]] = e["completion"]
            else:
                req = CompletionRequest(e["prompt"], e["model_id"], e.get("temperature", 0.0),
                                        e.get("max_tokens", DEFAULT_MAX_TOKENS),
                                        tuple(e.get("stop", ())))
                backend.add(req, e["completion"])
        return backend

    def complete(self, req: CompletionRequest) -> str:
        key = cache_key(req)
        try:
            return self.completions[key]
        except KeyError:
            raise ReplayMiss(key) from None


class ReplayBackend(Backend):
    def __init__(self, store_path: str | os.PathLike):
        self.store = CacheStore(store_path)

    def complete(self, req: CompletionRequest) -> str:
        key = cache_key(req)
        text = self.store.get(key)
        if text is None:
            raise ReplayMiss(key)
        return text


@dataclass
class LiveConfig:
    """Schema of the JSON config file for live runs."""

    endpoint: str
    model: str = ""
    credential_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    chat: bool = False
    cache_dir: str = ".completion-cache"
    max_in_flight: int = DEFAULT_IN_FLIGHT
    max_tokens: int = DEFAULT_MAX_TOKENS

    @classmethod
    def load(cls, path: str | os.PathLike) -> LiveConfig:
        return cls(**json.loads(Path(path).read_text("utf-8")))


RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 1.0


class LiveBackend(Backend):
    """OpenAI-style ``/completions`` client with an on-disk cache in front.

    ``chat=True`` wraps the prompt as a single user message for endpoints that
    only speak the chat shape.
    """

    def __init__(self, endpoint: str, credential_env: str, cache_dir: str | os.PathLike,
                 timeout: float = 60.0, chat: bool = False,
                 transport: Optional[httpx.BaseTransport] = None,
                 sleep: Callable[[float], None] = time.sleep,
                 rng: Optional[random.Random] = None):
        self.endpoint = endpoint
        self.credential_env = credential_env
        self.cache = CacheStore(cache_dir)
        self.timeout = timeout
        self.chat = chat
        self.transport = transport
        self.sleep = sleep
        self.rng = rng or random.Random()

    @classmethod
    def from_config(cls, cfg: LiveConfig, **kwargs) -> LiveBackend:
        return cls(cfg.endpoint, cfg.credential_env, cfg.cache_dir, cfg.timeout, cfg.chat, **kwargs)

    def _body(self, req: CompletionRequest) -> dict:
        body = {"model": req.model_id, "temperature": req.temperature, "max_tokens": req.max_tokens}
        if req.stop_sequences:
            body["stop"] = list(req.stop_sequences)
        if self.chat:
            body["messages"] = [{"role": "user", "content": req.prompt}]
        else:
            body["prompt"] = req.prompt
        return body

    def _text(self, payload: dict) -> str:
        choice = payload["choices"][0]
        if self.chat:
            return choice["message"]["content"]
        return choice["text"]

    def _post(self, req: CompletionRequest) -> str:
        token = os.environ.get(self.credential_env)
        if not token:
            raise AuthError(f"credential environment variable {self.credential_env} is not set")
        headers = {"Authorization": f"Bearer {token}"}
        last: Optional[TransportError] = None
        with httpx.Client(transport=self.transport, timeout=self.timeout) as client:
            for attempt in range(1, RETRY_ATTEMPTS + 1):
                try:
                    resp = client.post(self.endpoint, json=self._body(req), headers=headers)
                except httpx.TransportError as exc:
                    last = TransportError(f"transport failure: {exc}", attempts=attempt)
                else:
                    if resp.status_code == 200:
                        return self._text(resp.json())
                    retry_after = resp.headers.get("retry-after")
                    if resp.status_code in (401, 403):
                        raise AuthError(f"endpoint rejected credential ({resp.status_code})")
                    err = TransportError(f"HTTP {resp.status_code} from endpoint",
                                         resp.status_code, retry_after, attempt)
                    if resp.status_code != 429 and resp.status_code < 500:
                        raise err
                    last = err
                if attempt < RETRY_ATTEMPTS:
                    # exponential backoff, full jitter
                    delay = self.rng.uniform(0, RETRY_BASE_DELAY * 2 ** (attempt - 1))
                    logger.warning("completion attempt %d failed (%s); retrying in %.2fs",
                                   attempt, last, delay)
                    self.sleep(delay)
        assert last is not None
        raise last

    def complete(self, req: CompletionRequest) -> str:
        cached = self.cache.get(cache_key(req))
        if cached is not None:
            return cached
        text = self._post(req)
        self.cache.put(req, text)
        return text


def complete(req: CompletionRequest, backend: Backend) -> str:
    return backend.complete(req)


def complete_many(reqs: Sequence[CompletionRequest], backend: Backend,
                  max_in_flight: int = DEFAULT_IN_FLIGHT) -> list[str]:
    """Run requests concurrently; results come back in submission order."""
    if max_in_flight <= 1 or len(reqs) <= 1:
        return [backend.complete(r) for r in reqs]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(backend.complete, reqs))
