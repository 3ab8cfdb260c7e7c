"""Text-completion backends: a scripted mock, a rule-based mock and an HTTP gateway.

The gateway speaks an OpenAI-style chat-completion JSON shape::

    POST $ANONPREP_LLM_URL
    {"model": ..., "temperature": 0, "messages": [{"role": "system", ...}, {"role": "user", ...}]}
    -> {"choices": [{"message": {"content": "..."}}]}

``response_path`` selects the text inside the reply for other shapes.
"""

from __future__ import annotations

import json
import os
import re
import urllib.request
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

from ..model import parse_number
from .llm import BOTTOM, PromptRequest


class ScriptedBackend:
    """Replays canned responses in order, or delegates to a function of the request."""

    def __init__(self, script: Union[Sequence[str], Callable[[PromptRequest], str]]):
        self._fn = script if callable(script) else None
        self._queue = [] if callable(script) else list(script)
        self.requests: list[PromptRequest] = []

    def complete(self, request: PromptRequest) -> str:
        self.requests.append(request)
        if self._fn is not None:
            return self._fn(request)
        if not self._queue:
            raise RuntimeError("scripted backend ran out of responses")
        return self._queue.pop(0)


_LINE = re.compile(r"^REQ_(\d+)\t(.*)$")
_RANGE = re.compile(r"^\[([^\]]+?)-([^\]]+)\]$")


class RuleBasedMock:
    """Deterministic offline stand-in.

    Imputation answers a range with its midpoint and everything else with
    ``UNK``; prediction answers ``default_label`` for every record.
    """

    def __init__(self, default_label: int = 0):
        self.default_label = default_label
        self.calls = 0

    def complete(self, request: PromptRequest) -> str:
        self.calls += 1
        lines = [m.groups() for m in map(_LINE.match, request.user_prompt.splitlines()) if m]
        if request.system_prompt.startswith("You are predicting"):
            return "\n".join(f"REQ_{rid}\t{self.default_label}" for rid, _ in lines)
        targets = [
            line[len("Targets: ") :].split(",") for line in request.user_prompt.splitlines() if line.startswith("Targets: ")
        ]
        out = []
        for (rid, body), cols in zip(lines, targets):
            cells = dict(part.split("=", 1) for part in body.split("|") if "=" in part)
            answers = []
            for col in cols:
                m = _RANGE.match(cells.get(col, BOTTOM))
                if m:
                    try:
                        lo, hi = parse_number(m.group(1)), parse_number(m.group(2))
                        answers.append(f"{col}={(lo + hi) / 2:g}")
                        continue
                    except ValueError:
                        pass
                answers.append(f"{col}=UNK")
            out.append(f"REQ_{rid}\t" + "|".join(answers))
        return "\n".join(out)


@dataclass
class GatewayBackend:
    url: str
    model: str
    token: str | None = None
    timeout: float = 120.0
    response_path: Sequence[Union[str, int]] = ("choices", 0, "message", "content")
    extra_headers: dict = field(default_factory=dict)

    @classmethod
    def from_env(cls, prefix: str = "ANONPREP_LLM_") -> "GatewayBackend":
        url = os.environ.get(prefix + "URL")
        if not url:
            raise RuntimeError(f"{prefix}URL is not set")
        return cls(url, os.environ.get(prefix + "MODEL", "default"), os.environ.get(prefix + "TOKEN"))

    def payload(self, request: PromptRequest) -> dict:
        return {
            "model": self.model,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
        }

    def complete(self, request: PromptRequest) -> str:
        headers = {"Content-Type": "application/json", **self.extra_headers}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        req = urllib.request.Request(
            self.url, data=json.dumps(self.payload(request)).encode(), headers=headers, method="POST"
        )
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            body = json.loads(resp.read().decode("utf-8"))
        for key in self.response_path:
            body = body[key]
        return str(body)
