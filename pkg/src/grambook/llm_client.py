"""Chat-completion access with deterministic request shaping, disk cache,
retry, and first-newline response trimming."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import requests

from .errors import AuthError, ContextLengthError, ExhaustedRetriesError

_CONTEXT_MARKERS = ("context length", "context window", "maximum context",
                    "too many tokens", "prompt is too long")


@dataclass(frozen=True)
class EndpointProfile:
    """Maps internal requests onto a concrete wire shape.

    The default shape is an OpenAI-style chat-completions POST. Auth comes
    from the environment variable named here, never from config files.
    """

    name: str
    base_url: str
    api_key_env: str = "GRAMBOOK_API_KEY"

    def build_body(self, request: "CompletionRequest") -> dict:
        return {
            "model": request.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }

    def parse_response(self, payload: dict) -> str:
        return payload["choices"][0]["message"]["content"]


@dataclass(frozen=True)
class CompletionRequest:
    model_name: str
    prompt: str
    temperature: float = 0.0
    max_output_tokens: int = 1024
    profile_name: str = "default"

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not self.prompt:
            raise ValueError("empty prompt")

    def digest(self) -> str:
        payload = json.dumps(
            [self.model_name, self.prompt, self.temperature, self.max_output_tokens],
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class DiskCache:
    """One JSON file per entry under a content-addressed tree; writes are
    atomic (temp file then rename)."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    def put(self, key: str, entry: dict) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(entry, fh, ensure_ascii=False)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


class LLMClient:
    """Cache-first completion client with bounded retries.

    Concurrent misses for the same key coalesce onto one network call via
    per-key locks; cache reads need no locking.
    """

    def __init__(self, profile: EndpointProfile, cache_dir: str | Path,
                 max_retries: int = 5, backoff: float = 1.0,
                 transport: Callable[[CompletionRequest], str] | None = None,
                 timeout: float = 120.0):
        self.profile = profile
        self.cache = DiskCache(cache_dir)
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self._transport = transport or self._http_transport
        self._key_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock_for(self, key: str) -> threading.Lock:
        with self._locks_guard:
            return self._key_locks.setdefault(key, threading.Lock())

    def complete(self, request: CompletionRequest) -> str:
        key = request.digest()
        entry = self.cache.get(key)
        if entry is not None:
            return entry["text"]
        with self._lock_for(key):
            entry = self.cache.get(key)  # a concurrent miss may have filled it
            if entry is not None:
                return entry["text"]
            text = self._transport(request)
            self.cache.put(key, {
                "key": key,
                "text": text,
                "timestamp": time.time(),
                "model": request.model_name,
            })
            return text

    def _http_transport(self, request: CompletionRequest) -> str:
        token = os.environ.get(self.profile.api_key_env, "")
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = self.profile.build_body(request)
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = requests.post(self.profile.base_url, json=body,
                                     headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials ({resp.status_code})")
            if resp.status_code == 400:
                message = resp.text.lower()
                if any(marker in message for marker in _CONTEXT_MARKERS):
                    raise ContextLengthError(resp.text[:500])
                raise ExhaustedRetriesError(f"bad request: {resp.text[:500]}")
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = RuntimeError(f"HTTP {resp.status_code}")
                continue
            resp.raise_for_status()
            return self.profile.parse_response(resp.json())
        raise ExhaustedRetriesError(
            f"{self.max_retries} attempts failed; last error: {last_error}"
        )


def trim_response(raw: str) -> str:
    """Keep the substring before the first newline, whitespace-trimmed."""
    return raw.split("\n", 1)[0].strip()
