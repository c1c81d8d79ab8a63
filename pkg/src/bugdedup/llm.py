"""Minimal chat-completions wire client plus a scriptable mock.

One call issues exactly one request unless a retryable transport
failure (connection error, timeout, 429, 5xx) occurs, in which case the
request is retried with exponential backoff up to the configured limit.
The returned assistant text is never altered; parsing belongs to the
keyword extractor.

The API key is read from the LLM_API_KEY environment variable, never
from configuration files.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass

import requests

API_KEY_ENV = "LLM_API_KEY"

_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class TransportError(RuntimeError):
    """Endpoint unreachable or still failing after the retry budget."""


class ApiError(RuntimeError):
    """Non-success HTTP status or malformed completion body."""


@dataclass
class LlmConfig:
    endpoint: str
    model_name: str
    temperature: float = 0.0
    seed: int = 42
    max_new_tokens: int = 2048
    timeout: float = 60.0
    max_transport_retries: int = 3
    backoff_base: float = 0.5
    max_inflight: int = 4

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")


def build_payload(cfg: LlmConfig, prompt: str) -> dict:
    """Single-message chat request carrying the deterministic settings."""
    return {
        "model": cfg.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": cfg.temperature,
        "seed": cfg.seed,
        "max_tokens": cfg.max_new_tokens,
    }


def completions_url(endpoint: str) -> str:
    endpoint = endpoint.rstrip("/")
    if endpoint.endswith("/chat/completions"):
        return endpoint
    return endpoint + "/chat/completions"


class LlmClient:
    """Blocking client; shareable across workers, in-flight capped."""

    def __init__(self, cfg: LlmConfig, api_key: str | None = None):
        self.cfg = cfg
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self._inflight = threading.Semaphore(cfg.max_inflight)

    def complete(self, prompt: str) -> str:
        payload = build_payload(self.cfg, prompt)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = completions_url(self.cfg.endpoint)

        last_error: Exception | None = None
        attempts = self.cfg.max_transport_retries + 1
        with self._inflight:
            for attempt in range(attempts):
                if attempt:
                    time.sleep(self.cfg.backoff_base * (2 ** (attempt - 1)))
                try:
                    response = requests.post(
                        url, json=payload, headers=headers, timeout=self.cfg.timeout
                    )
                except requests.RequestException as exc:
                    last_error = exc
                    continue
                if response.status_code in _RETRYABLE_STATUS:
                    last_error = ApiError(
                        f"status {response.status_code}: {response.text[:200]}"
                    )
                    continue
                if response.status_code != 200:
                    raise ApiError(
                        f"status {response.status_code}: {response.text[:200]}"
                    )
                return _extract_text(response)
        raise TransportError(
            f"request to {url} failed after {attempts} attempts: {last_error}"
        )


def _extract_text(response) -> str:
    try:
        data = response.json()
        return data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ApiError(f"malformed completion body: {response.text[:200]}") from exc


class MockLlmClient:
    """Scripted stand-in with the same complete() surface.

    Responses are returned in order and the last one repeats once the
    script runs out; an Exception instance in the script is raised
    instead. Every call records the payload the real client would have
    sent, so tests can inspect the wire settings.
    """

    def __init__(self, responses, cfg: LlmConfig | None = None):
        self.responses = list(responses)
        if not self.responses:
            raise ValueError("mock needs at least one scripted response")
        self.cfg = cfg or LlmConfig(endpoint="mock://", model_name="mock")
        self.requests: list[dict] = []
        self._cursor = 0

    def complete(self, prompt: str) -> str:
        self.requests.append(build_payload(self.cfg, prompt))
        entry = self.responses[min(self._cursor, len(self.responses) - 1)]
        self._cursor += 1
        if isinstance(entry, Exception):
            raise entry
        return entry
