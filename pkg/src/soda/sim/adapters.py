"""Language-model adapters: scripted replay by default, live opt-in.

Simulated runs must be byte-reproducible, so the default adapter replays
a frozen transcript and refuses to improvise.  A live HTTP endpoint can
be wired in explicitly — but never together with strict reproduction
mode, which exists to guarantee that no network call can perturb a run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import requests


class AdapterError(Exception):
    """Adapter misconfiguration or a failed completion."""


class ScriptMissError(AdapterError):
    """The scripted transcript has no entry for the requested exchange."""


class StrictReproError(AdapterError):
    """A live endpoint was requested while strict reproduction is on."""


@dataclass(frozen=True)
class Completion:
    text: str
    tokens: int


class ScriptedAdapter:
    """Replays a frozen key -> (text, tokens) transcript."""

    def __init__(self, script: Mapping[str, tuple[str, int]]) -> None:
        self._script = dict(script)
        self.calls: list[str] = []

    def complete(self, key: str) -> Completion:
        self.calls.append(key)
        try:
            text, tokens = self._script[key]
        except KeyError:
            raise ScriptMissError(f"no scripted exchange for {key!r}") from None
        return Completion(text=text, tokens=tokens)


class LiveEndpointAdapter:
    """POSTs each exchange to an HTTP endpoint returning text and tokens."""

    def __init__(self, base_url: str, *, timeout: float = 15.0) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.calls: list[str] = []

    def complete(self, key: str) -> Completion:
        self.calls.append(key)
        try:
            response = requests.post(
                f"{self.base_url}/complete", json={"key": key}, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise AdapterError(f"endpoint unreachable: {exc}") from exc
        if response.status_code != 200:
            raise AdapterError(f"endpoint returned HTTP {response.status_code}")
        try:
            body = response.json()
            return Completion(text=body["text"], tokens=int(body["tokens"]))
        except (ValueError, KeyError, TypeError) as exc:
            raise AdapterError(f"endpoint reply unreadable: {exc}") from exc


def make_adapter(
    script: Mapping[str, tuple[str, int]],
    *,
    live_endpoint: str | None = None,
    strict_repro: bool = False,
):
    """Pick the adapter for a run, enforcing the reproduction guard."""
    if live_endpoint is None:
        return ScriptedAdapter(script)
    if strict_repro:
        raise StrictReproError(
            "strict reproduction forbids live endpoints; drop one or the other"
        )
    return LiveEndpointAdapter(live_endpoint)
