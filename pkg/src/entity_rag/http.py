"""Retrying JSON-over-HTTP helpers with client-side rate limiting and a disk cache."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import httpx

from .errors import TransportError

logger = logging.getLogger(__name__)

USER_AGENT = "entity-rag/0.1 (research retrieval harness; https://www.wikidata.org/wiki/Wikidata:Bots)"


class RateLimiter:
    """Enforces a minimum interval between calls, across threads."""

    def __init__(self, requests_per_second: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self._min_interval = 0.0 if requests_per_second <= 0 else 1.0 / requests_per_second
        self._last = float("-inf")
        self._lock = threading.Lock()
        self._clock = clock
        self._sleep = sleep

    def wait(self) -> None:
        with self._lock:
            now = self._clock()
            delay = self._last + self._min_interval - now
            if delay > 0:
                self._sleep(delay)
                now = self._clock()
            self._last = now


class ResponseCache:
    """One JSON file per key. Readers never see partial writes (atomic rename)."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self._write_lock = threading.Lock()

    def _path(self, key: tuple) -> Path:
        digest = hashlib.sha256(json.dumps(list(key), ensure_ascii=False).encode("utf-8")).hexdigest()
        return self.directory / f"{digest[:32]}.json"

    def get(self, key: tuple) -> Any | None:
        path = self._path(key)
        try:
            with open(path, encoding="utf-8") as fh:
                return json.load(fh)["response"]
        except (OSError, json.JSONDecodeError, KeyError):
            return None

    def put(self, key: tuple, response: Any) -> None:
        with self._write_lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump({"key": list(key), "response": response}, fh, ensure_ascii=False)
            os.replace(tmp, self._path(key))


@dataclass
class RetryPolicy:
    max_retries: int = 3
    backoff_seconds: float = 0.5

    def delay(self, attempt: int) -> float:
        return self.backoff_seconds * (2 ** attempt)


def request_json(
    client: httpx.Client,
    method: str,
    url: str,
    *,
    retry: RetryPolicy,
    limiter: RateLimiter | None = None,
    sleep: Callable[[float], None] = time.sleep,
    **kwargs,
) -> Any:
    """Send a request and decode its JSON body.

    Network failures and HTTP status >= 400 are retried ``retry.max_retries``
    times with exponential backoff, then raised as TransportError. A 2xx body
    that is not JSON is not retried.
    """
    last_problem = ""
    for attempt in range(retry.max_retries + 1):
        if attempt:
            sleep(retry.delay(attempt - 1))
        if limiter is not None:
            limiter.wait()
        try:
            response = client.request(method, url, **kwargs)
        except httpx.HTTPError as exc:
            last_problem = f"{type(exc).__name__}: {exc}"
            logger.warning("%s %s failed (attempt %d): %s", method, url, attempt + 1, last_problem)
            continue
        if response.status_code >= 400:
            last_problem = f"HTTP {response.status_code}"
            logger.warning("%s %s returned %d (attempt %d)", method, url, response.status_code, attempt + 1)
            continue
        try:
            return response.json()
        except ValueError as exc:
            raise TransportError(f"{method} {url}: response is not JSON") from exc
    raise TransportError(f"{method} {url}: giving up after {retry.max_retries + 1} attempts ({last_problem})")


def make_client(timeout: float = 30.0, transport: httpx.BaseTransport | None = None,
                headers: dict[str, str] | None = None) -> httpx.Client:
    all_headers = {"User-Agent": USER_AGENT}
    all_headers.update(headers or {})
    return httpx.Client(timeout=timeout, transport=transport, headers=all_headers)
