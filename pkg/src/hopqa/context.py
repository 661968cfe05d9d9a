"""Final-stage context assembly: enumerate all prefixes of the complete
reasoning paths, reorder them by relevance to the original question, render
the answer prompt, and parse the LLM's answer list."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import Config
from .decompose import Question
from .engine import PartialReasoningPath
from .errors import AnswerParseError
from .gateway import Gateway
from .kg import KnowledgeGraph, Triple
from .scoring import ScorerBackend, verbalize_triple

_ANSWER_RE = re.compile(r"^Answer\s*:\s*(.*?)\s*$", re.MULTILINE)

EMPTY_EVIDENCE_NOTICE = "(no evidence retrieved; if you cannot answer, say unanswerable)"


@dataclass(frozen=True)
class Prefix:
    triples: tuple[Triple, ...]
    origin_path: int
    k: int
    relevance: float = 0.0

    def with_relevance(self, score: float) -> "Prefix":
        return Prefix(self.triples, self.origin_path, self.k, score)


@dataclass
class FinalContext:
    question: str
    ordered_prefixes: list[Prefix]
    rendered: str


def enumerate_prefixes(paths: list[PartialReasoningPath]) -> list[Prefix]:
    """Every prefix of every path; identical triple sequences across paths are
    emitted once (first origin wins). Pre-dedup count is the sum of lengths."""
    seen: set[tuple[Triple, ...]] = set()
    prefixes: list[Prefix] = []
    for path_idx, path in enumerate(paths):
        for k in range(1, len(path) + 1):
            triples = path.triples[:k]
            if triples in seen:
                continue
            seen.add(triples)
            prefixes.append(Prefix(triples=triples, origin_path=path_idx, k=k))
    return prefixes


def verbalize_prefix(prefix: Prefix, graph: Optional[KnowledgeGraph] = None) -> str:
    return " -> ".join(verbalize_triple(t, graph) for t in prefix.triples)


def repack(
    prefixes: list[Prefix],
    question: str,
    backend: ScorerBackend,
    graph: Optional[KnowledgeGraph] = None,
    placement: str = "first",
) -> list[Prefix]:
    """Reorder prefixes by embedding-cosine relevance to the full question.

    ``placement`` controls whether the most relevant prefix comes first or
    last in the final prompt. Ties break on (origin_path, k).
    """
    if not prefixes:
        raise ValueError("prefixes must be nonempty")
    texts = [question] + [verbalize_prefix(p, graph) for p in prefixes]
    vectors = backend.embed(texts)
    query, docs = vectors[0], vectors[1:]
    norms = np.linalg.norm(docs, axis=1) * max(np.linalg.norm(query), 1e-12)
    norms = np.where(norms == 0, 1.0, norms)
    scores = docs @ query / norms
    scored = [p.with_relevance(float(s)) for p, s in zip(prefixes, scores)]
    scored.sort(key=lambda p: (-p.relevance, p.origin_path, p.k))
    if placement == "last":
        scored.reverse()
    return scored


def build_context(
    question: Question,
    prefixes: list[Prefix],
    graph: Optional[KnowledgeGraph] = None,
) -> FinalContext:
    from .gateway import render

    if prefixes:
        evidence = [verbalize_prefix(p, graph) for p in prefixes]
    else:
        evidence = EMPTY_EVIDENCE_NOTICE
    rendered = render("final_answer", {"question": question.text, "evidence": evidence})
    return FinalContext(question=question.text, ordered_prefixes=prefixes, rendered=rendered)


def parse_final_answer(text: str) -> list[str]:
    match = None
    for match in _ANSWER_RE.finditer(text):
        pass
    if match is None:
        raise AnswerParseError(f"no Answer: line in final response: {text!r}")
    line = match.group(1).strip()
    if not line or line.lower() == "unanswerable":
        return []
    return [part.strip() for part in line.split("|") if part.strip()]


def answer(
    question: Question,
    context: FinalContext,
    gateway: Gateway,
    retries: int = 2,
) -> tuple[list[str], str]:
    """Final LLM call over the repacked context. An empty context still goes
    to the LLM with an explicit empty-evidence notice, so unanswerable cases
    are accounted the same way as reasoning errors."""
    from .gateway import ChatRequest

    last_error: AnswerParseError | None = None
    for _ in range(retries + 1):
        response = gateway.complete(
            ChatRequest(prompt=context.rendered, template_id="final_answer")
        )
        try:
            return parse_final_answer(response.text), response.text
        except AnswerParseError as exc:
            last_error = exc
    assert last_error is not None
    raise last_error
