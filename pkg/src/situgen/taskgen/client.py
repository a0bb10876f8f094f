"""Chat-completion HTTP client with retry, bounded concurrency and an audit trail.

Wire shape (request)::

    POST <endpoint>
    Authorization: Bearer <key from $<api_key_env>>
    {"model": ..., "temperature": ..., "messages": [{"role": "system", ...}, {"role": "user", ...}]}

Response: ``{"choices": [{"message": {"content": "<text>"}}]}``.
"""

from __future__ import annotations

import collections
import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass
from datetime import datetime, timezone

import requests

from ..errors import AuthError, MalformedResponse, RateLimitExhausted, TransportError
from .prompts import PromptBundle

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClientConfig:
    endpoint: str
    model: str = "gpt-4o"
    api_key_env: str = "OPENAI_API_KEY"
    max_retries: int = 4
    timeout: float = 60.0
    max_in_flight: int = 4
    temperature: float = 1.0
    backoff_base: float = 1.0
    backoff_cap: float = 30.0
    audit_path: str | None = None

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


@dataclass
class AuditRecord:
    timestamp: str
    scene_id: str
    situation_digest: str
    task: str
    attempts: int
    status: str
    http_status: int | None = None
    elapsed: float = 0.0


class _FairGate:
    """Counting semaphore that admits waiters in arrival order."""

    def __init__(self, slots: int):
        self._free = slots
        self._cond = threading.Condition()
        self._queue = collections.deque()

    def acquire(self):
        with self._cond:
            ticket = object()
            self._queue.append(ticket)
            while self._queue[0] is not ticket or self._free == 0:
                self._cond.wait()
            self._queue.popleft()
            self._free -= 1
            self._cond.notify_all()

    def release(self):
        with self._cond:
            self._free += 1
            self._cond.notify_all()

    def __enter__(self):
        self.acquire()
        return self

    def __exit__(self, *exc):
        self.release()


class _Retryable(Exception):
    def __init__(self, kind, message, status=None):
        super().__init__(message)
        self.kind = kind
        self.status = status


class CompletionClient:
    """One client per endpoint; safe to call ``complete`` from many threads."""

    def __init__(self, cfg: ClientConfig, session: requests.Session | None = None,
                 sleep=time.sleep):
        self.cfg = cfg
        self._gate = _FairGate(cfg.max_in_flight)
        self._session = session or requests.Session()
        self._sleep = sleep
        self._audit_lock = threading.Lock()
        self.audit: list[AuditRecord] = []

    def _api_key(self) -> str:
        key = os.environ.get(self.cfg.api_key_env)
        if not key:
            raise AuthError(f"environment variable {self.cfg.api_key_env} is not set")
        return key

    def _record(self, rec: AuditRecord):
        with self._audit_lock:
            self.audit.append(rec)
            if self.cfg.audit_path:
                with open(self.cfg.audit_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(asdict(rec)) + "\n")

    def _attempt(self, body: dict, headers: dict) -> tuple[str, int]:
        try:
            with self._gate:
                resp = self._session.post(self.cfg.endpoint, json=body, headers=headers,
                                          timeout=self.cfg.timeout)
        except requests.Timeout as exc:
            raise _Retryable("transport", f"timeout: {exc}") from None
        except requests.RequestException as exc:
            raise _Retryable("transport", f"transport failure: {exc}") from None
        status = resp.status_code
        if status in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {status})")
        if status == 429:
            raise _Retryable("rate", "rate limited (HTTP 429)", status)
        if status >= 500:
            raise _Retryable("transport", f"server error (HTTP {status})", status)
        if status >= 400:
            raise TransportError(f"request rejected (HTTP {status}): {resp.text[:200]}")
        try:
            text = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise MalformedResponse(f"unexpected response body: {resp.text[:200]!r}") from None
        if not isinstance(text, str):
            raise MalformedResponse("completion content is not a string")
        return text, status

    def complete(self, bundle: PromptBundle) -> str:
        headers = {"Authorization": f"Bearer {self._api_key()}",
                   "Content-Type": "application/json"}
        body = {
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [
                {"role": "system", "content": bundle.system_text},
                {"role": "user", "content": bundle.user_text},
            ],
        }
        start = time.monotonic()
        attempts = 0
        last = None

        def audit(status, http_status=None):
            self._record(AuditRecord(
                datetime.now(timezone.utc).isoformat(), bundle.scene_id, bundle.situation_digest,
                bundle.task.value, attempts, status, http_status, time.monotonic() - start))

        while True:
            attempts += 1
            try:
                text, http_status = self._attempt(body, headers)
            except _Retryable as exc:
                last = exc
                if attempts > self.cfg.max_retries:
                    break
                delay = min(self.cfg.backoff_cap, self.cfg.backoff_base * 2 ** (attempts - 1))
                logger.info("retrying %s after %s (attempt %d)", bundle.scene_id, exc, attempts)
                self._sleep(delay)
                continue
            except (AuthError, TransportError, MalformedResponse) as exc:
                audit(type(exc).__name__, getattr(exc, "status", None))
                raise
            audit("ok", http_status)
            return text
        audit("exhausted", last.status)
        if last.kind == "rate":
            raise RateLimitExhausted(f"still rate limited after {attempts} attempts")
        raise TransportError(f"{last} (after {attempts} attempts)")


_clients: dict[ClientConfig, CompletionClient] = {}
_clients_lock = threading.Lock()


def complete(bundle: PromptBundle, cfg: ClientConfig) -> str:
    """Send one prompt; calls sharing ``cfg`` share its in-flight limit."""
    with _clients_lock:
        client = _clients.get(cfg)
        if client is None:
            client = _clients[cfg] = CompletionClient(cfg)
    return client.complete(bundle)
