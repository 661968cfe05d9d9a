"""Uniform chat-completion interface: remote HTTP, and a deterministic
scripted backend for offline runs and golden tests.

The gateway also owns prompt-template rendering and run-level usage counters
(#calls, #tokens, wall time), which the evaluation harness reports.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

import httpx

from .errors import GatewayError, RenderError

TEMPLATE_IDS = (
    "decomposition",
    "relation_pruning",
    "triple_pruning",
    "triple_pruning_refine",
    "final_answer",
)

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


def _load_templates() -> dict[str, str]:
    out = {}
    for tid in TEMPLATE_IDS:
        out[tid] = resources.files("hopqa.prompts").joinpath(f"{tid}.txt").read_text("utf-8")
    return out


_TEMPLATES = _load_templates()


def render(template_id: str, bindings: dict) -> str:
    """Render a prompt template. List bindings become numbered lines, in the
    caller's order (ordering is semantically meaningful downstream)."""
    if template_id not in _TEMPLATES:
        raise RenderError(f"unknown template: {template_id}")
    template = _TEMPLATES[template_id]
    rendered = {}
    for key, value in bindings.items():
        if isinstance(value, (list, tuple)):
            if not value:
                raise RenderError(f"empty candidate list for placeholder {{{key}}}")
            if key == "candidates":
                rendered[key] = ", ".join(str(v) for v in value)
            else:
                rendered[key] = "\n".join(f"{i}. {v}" for i, v in enumerate(value, 1))
        else:
            rendered[key] = str(value)
    needed = set(_PLACEHOLDER_RE.findall(template))
    missing = needed - set(rendered)
    if missing:
        raise RenderError(f"unbound placeholders in {template_id}: {sorted(missing)}")
    out = template
    for key in needed:
        out = out.replace("{" + key + "}", rendered[key])
    return out


def binding_digest(bindings: dict) -> str:
    """Stable short digest of a binding map, used to key scripted responses."""
    blob = json.dumps(bindings, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def count_tokens(text: str) -> int:
    # Whitespace tokenization; counts feed relative efficiency reporting only.
    return len(text.split())


@dataclass
class ChatRequest:
    prompt: str
    max_tokens: int = 512
    temperature: float = 0.0
    logit_capture: bool = False
    top_k: int = 0
    template_id: Optional[str] = None
    key: Optional[str] = None

    def __post_init__(self):
        if self.logit_capture and self.top_k < 1:
            raise ValueError("top_k must be >= 1 when logit_capture is set")


@dataclass
class ChatResponse:
    text: str
    first_answer_token_logits: Optional[list[tuple[str, float]]] = None
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency: float = 0.0
    logits_supported: bool = True


@dataclass
class UsageCounters:
    llm_calls: int = 0
    total_prompt_tokens: int = 0
    total_completion_tokens: int = 0
    wall_time: float = 0.0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record(self, response: ChatResponse) -> None:
        with self._lock:
            self.llm_calls += 1
            self.total_prompt_tokens += response.prompt_tokens
            self.total_completion_tokens += response.completion_tokens
            self.wall_time += response.latency

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "llm_calls": self.llm_calls,
                "total_prompt_tokens": self.total_prompt_tokens,
                "total_completion_tokens": self.total_completion_tokens,
                "wall_time": self.wall_time,
            }


class ScriptedBackend:
    """Deterministic backend driven by a response script.

    A script is ``{"responses": [rule, ...]}``; each rule has an optional
    ``key`` (template id + binding digest, exact match), optional ``template``,
    ``contains``/``not_contains`` prompt substring filters, and the reply
    ``{"text": ..., "logits": [[token, logit], ...]?}``. The first matching
    rule wins, so order rules from most to least specific.
    """

    supports_logits = True

    def __init__(self, script: dict | str | os.PathLike):
        if not isinstance(script, dict):
            with open(script, encoding="utf-8") as fh:
                script = json.load(fh)
        self.rules = script.get("responses", [])
        self.invocations = 0
        self._lock = threading.Lock()

    def _match(self, rule: dict, request: ChatRequest) -> bool:
        if rule.get("key") is not None:
            return rule["key"] == request.key
        if rule.get("template") is not None and rule["template"] != request.template_id:
            return False
        if any(s not in request.prompt for s in rule.get("contains", ())):
            return False
        if any(s in request.prompt for s in rule.get("not_contains", ())):
            return False
        return True

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.invocations += 1
        for rule in self.rules:
            if self._match(rule, request):
                logits = None
                if request.logit_capture and rule.get("logits") is not None:
                    pairs = [(str(t), float(v)) for t, v in rule["logits"]]
                    pairs.sort(key=lambda p: -p[1])
                    logits = pairs[: request.top_k]
                return ChatResponse(
                    text=rule["text"],
                    first_answer_token_logits=logits,
                    prompt_tokens=count_tokens(request.prompt),
                    completion_tokens=count_tokens(rule["text"]),
                    latency=0.0,
                )
        head = request.prompt.strip().splitlines()[-1] if request.prompt.strip() else ""
        raise GatewayError(
            f"scripted backend has no rule for template={request.template_id!r} "
            f"(last prompt line: {head!r})"
        )


class HTTPBackend:
    """Chat-completions-style JSON backend. Treated as black-box: no logit
    access, so the uncertainty gate degrades to always-accept."""

    supports_logits = False

    def __init__(
        self,
        url: str,
        model: str = "default",
        auth_env: str = "HOPQA_API_KEY",
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff: float = 0.5,
    ):
        self.url = url
        self.model = model
        self.auth_env = auth_env
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self._client = httpx.Client(timeout=timeout)

    def complete(self, request: ChatRequest) -> ChatResponse:
        headers = {}
        token = os.environ.get(self.auth_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        start = time.monotonic()
        last_error = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = self._client.post(self.url, json=payload, headers=headers)
                if resp.status_code in (429, 500, 502, 503, 504):
                    last_error = GatewayError(f"backend HTTP {resp.status_code}")
                    time.sleep(self.backoff * (2**attempt))
                    continue
                resp.raise_for_status()
                body = resp.json()
                text = body["choices"][0]["message"]["content"]
                usage = body.get("usage", {})
                return ChatResponse(
                    text=text,
                    first_answer_token_logits=None,
                    prompt_tokens=usage.get("prompt_tokens", count_tokens(request.prompt)),
                    completion_tokens=usage.get("completion_tokens", count_tokens(text)),
                    latency=time.monotonic() - start,
                    logits_supported=False,
                )
            except httpx.HTTPError as exc:
                last_error = GatewayError(f"backend transport failure: {exc}")
                time.sleep(self.backoff * (2**attempt))
        raise last_error or GatewayError("backend unreachable")


class Gateway:
    """Front door for all LLM traffic; owns the run's usage counters."""

    def __init__(self, backend, counters: Optional[UsageCounters] = None):
        self.backend = backend
        self.counters = counters or UsageCounters()

    @property
    def supports_logits(self) -> bool:
        return getattr(self.backend, "supports_logits", False)

    def complete(self, request: ChatRequest) -> ChatResponse:
        response = self.backend.complete(request)
        if request.logit_capture and not self.supports_logits:
            response.first_answer_token_logits = None
            response.logits_supported = False
        self.counters.record(response)
        return response

    def ask(
        self,
        template_id: str,
        bindings: dict,
        logit_capture: bool = False,
        top_k: int = 0,
        max_tokens: int = 512,
        temperature: float = 0.0,
    ) -> ChatResponse:
        prompt = render(template_id, bindings)
        request = ChatRequest(
            prompt=prompt,
            max_tokens=max_tokens,
            temperature=temperature,
            logit_capture=logit_capture,
            top_k=top_k,
            template_id=template_id,
            key=f"{template_id}:{binding_digest(bindings)}",
        )
        return self.complete(request)
