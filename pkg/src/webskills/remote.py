"""Minimal client for OpenAI-compatible chat-completions endpoints."""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field

import httpx

log = logging.getLogger(__name__)


class RemoteError(Exception):
    pass


@dataclass
class EndpointConfig:
    base_url: str
    model: str
    api_key_env: str = "WEBSKILLS_API_KEY"
    temperature: float = 0.0
    max_tokens: int = 512
    timeout: float = 60.0
    retries: int = 3

    @classmethod
    def from_dict(cls, data: dict) -> "EndpointConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class ChatClient:
    config: EndpointConfig
    transport: httpx.BaseTransport | None = None
    _client: httpx.Client | None = field(default=None, init=False, repr=False)

    @property
    def client(self) -> httpx.Client:
        if self._client is None:
            headers = {}
            key = os.environ.get(self.config.api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
            self._client = httpx.Client(
                base_url=self.config.base_url.rstrip("/"),
                headers=headers,
                timeout=self.config.timeout,
                transport=self.transport,
            )
        return self._client

    def complete(self, messages: list[dict]) -> str:
        """One chat completion; raises ``httpx.HTTPError`` or ``RemoteError``."""
        body = {
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }
        resp = self.client.post("/chat/completions", json=body)
        resp.raise_for_status()
        try:
            return resp.json()["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise RemoteError(f"unexpected response shape: {exc}") from exc

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None


_FENCE = re.compile(r"```[a-zA-Z]*\n(.*?)```", re.S)


def strip_fences(text: str) -> str:
    m = _FENCE.search(text)
    return m.group(1) if m else text
