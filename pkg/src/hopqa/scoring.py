"""Relation and triple scoring: top-m relation retrieval, semantic triple
scores (softmax over cosine similarities), structure-based entity scores via a
pluggable backend, score combination, and top-p selection.

A zero-dependency lexical backend ships alongside the HTTP client for the
scorer sidecar, so the whole engine runs without any external service.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import httpx
import numpy as np

from .errors import ScorerBackendError
from .kg import FORWARD, KnowledgeGraph, Triple

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def softmax(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    arr = arr - arr.max()
    exp = np.exp(arr)
    return exp / exp.sum()


def verbalize_relation(name: str) -> str:
    return name.replace(".", " ").replace("_", " ")


def verbalize_triple(triple: Triple, graph: Optional[KnowledgeGraph] = None) -> str:
    """Render a triple as text for embedding/reranking, hierarchy separators
    replaced by spaces."""
    head, tail = triple.head, triple.tail
    if graph is not None:
        head, tail = graph.label_of(head), graph.label_of(tail)
    return f"{head} {verbalize_relation(triple.relation)} {tail}"


def answer_end(triple: Triple, source: str) -> str:
    """The candidate answer entity of a one-hop triple: the end opposite the
    source (tail for forward edges, head for inverse ones)."""
    return triple.tail if triple.direction == FORWARD else triple.head


class ScorerBackend(Protocol):
    def capabilities(self) -> set[str]: ...

    def rerank(self, query: str, documents: list[str]) -> list[float]: ...

    def embed(self, texts: list[str]) -> np.ndarray: ...

    def entity_scores(
        self, query: str, subgraph: KnowledgeGraph, source: str, tails: list[str]
    ) -> list[float]: ...


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class LexicalScorer:
    """IDF-weighted token-overlap scorer and hashed bag-of-words embedder.

    Scores are crude but deterministic; the point is a fully offline backend
    with the same interface shape as the neural sidecar.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim

    def capabilities(self) -> set[str]:
        return {"relation_rerank", "triple_embed"}

    def rerank(self, query: str, documents: list[str]) -> list[float]:
        if not documents:
            return []
        doc_tokens = [set(_tokens(d)) for d in documents]
        n = len(documents)
        df: dict[str, int] = {}
        for toks in doc_tokens:
            for tok in toks:
                df[tok] = df.get(tok, 0) + 1
        query_tokens = set(_tokens(query))
        scores = []
        for toks in doc_tokens:
            overlap = query_tokens & toks
            score = sum(math.log(1.0 + n / df[t]) for t in overlap)
            scores.append(score / (1.0 + math.sqrt(len(toks))))
        return scores

    def embed(self, texts: list[str]) -> np.ndarray:
        vectors = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            for tok in _tokens(text):
                # Stable hash; builtin hash() is salted per process.
                idx = int.from_bytes(tok.encode("utf-8").ljust(8, b"\0")[:8], "little")
                vectors[i, idx % self.dim] += 1.0
            norm = np.linalg.norm(vectors[i])
            if norm > 0:
                vectors[i] /= norm
        return vectors

    def entity_scores(self, query, subgraph, source, tails):
        raise ScorerBackendError("lexical backend has no entity_score capability")


class HTTPScorerBackend:
    """Client for the scorer sidecar (POST /rerank, /embed, /entity_scores)."""

    def __init__(self, base_url: str, timeout: float = 30.0, gnn_layers: int = 3):
        self.base_url = base_url.rstrip("/")
        self.gnn_layers = gnn_layers
        self._client = httpx.Client(timeout=timeout)
        self._capabilities: Optional[set[str]] = None

    def capabilities(self) -> set[str]:
        if self._capabilities is None:
            try:
                resp = self._client.get(f"{self.base_url}/healthz")
                resp.raise_for_status()
                self._capabilities = set(resp.json().get("capabilities", []))
            except httpx.HTTPError as exc:
                raise ScorerBackendError(f"scorer sidecar unreachable: {exc}") from exc
        return self._capabilities

    def _post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._client.post(f"{self.base_url}{path}", json=payload)
            resp.raise_for_status()
            return resp.json()
        except httpx.HTTPError as exc:
            raise ScorerBackendError(f"scorer sidecar {path} failed: {exc}") from exc

    def rerank(self, query: str, documents: list[str]) -> list[float]:
        return self._post("/rerank", {"query": query, "documents": documents})["scores"]

    def embed(self, texts: list[str]) -> np.ndarray:
        vectors = self._post("/embed", {"texts": texts})["vectors"]
        return np.asarray(vectors, dtype=float)

    def entity_scores(self, query, subgraph: KnowledgeGraph, source, tails):
        payload = {
            "query": query,
            "subgraph": {
                "triples": [[t.head, t.relation, t.tail] for t in subgraph.triples]
            },
            "source": source,
            "tails": tails,
            "layers": self.gnn_layers,
        }
        return self._post("/entity_scores", payload)["scores"]


@dataclass
class RelationCandidateSet:
    sub_question: str
    ranked: list[tuple[str, float]]  # descending by score
    m: int

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.ranked]

    def __bool__(self) -> bool:
        return bool(self.ranked)


@dataclass
class ScoredTriple:
    triple: Triple
    phi_t: float
    phi_e: float
    u: float


@dataclass
class SelectionResult:
    selected: list[ScoredTriple]  # descending by u
    p: float

    @property
    def cumulative(self) -> float:
        return sum(st.u for st in self.selected)


def retrieve_relations(
    graph: KnowledgeGraph,
    source: str,
    sub_question: str,
    m: int,
    backend: ScorerBackend,
    include_inverse: bool = True,
) -> RelationCandidateSet:
    """Top-m unique relations among the source's one-hop triples, ranked by
    reranker score; a relation scores the max over its triples."""
    if m < 1:
        raise ValueError("m must be >= 1")
    triples = graph.one_hop(source, include_inverse=include_inverse)
    if not triples:
        return RelationCandidateSet(sub_question, [], m)
    docs = [verbalize_triple(t, graph) for t in triples]
    scores = backend.rerank(sub_question, docs)
    best: dict[str, float] = {}
    for triple, score in zip(triples, scores):
        prev = best.get(triple.relation)
        if prev is None or score > prev:
            best[triple.relation] = score
    ranked = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))[:m]
    return RelationCandidateSet(sub_question, ranked, m)


def semantic_triple_scores(
    sub_question: str,
    candidates: list[Triple],
    backend: ScorerBackend,
    graph: Optional[KnowledgeGraph] = None,
) -> list[float]:
    """Softmax over cosine similarities between the sub-question embedding and
    each candidate triple's embedding."""
    if not candidates:
        raise ValueError("candidates must be nonempty")
    texts = [sub_question] + [verbalize_triple(t, graph) for t in candidates]
    vectors = backend.embed(texts)
    if vectors.shape[0] != len(texts):
        raise ScorerBackendError("embedding count mismatch")
    query, docs = vectors[0], vectors[1:]
    norms = np.linalg.norm(docs, axis=1) * max(np.linalg.norm(query), 1e-12)
    norms = np.where(norms == 0, 1.0, norms)
    cosines = docs @ query / norms
    return softmax(cosines).tolist()


def structure_entity_scores(
    sub_question: str,
    candidates: list[Triple],
    subgraph: KnowledgeGraph,
    backend: ScorerBackend,
    source: str,
) -> list[float]:
    """Per-triple probabilities inherited from backend entity scores over the
    candidate answer entities; uniform when the capability is missing."""
    if not candidates:
        raise ValueError("candidates must be nonempty")
    if "entity_score" not in backend.capabilities():
        return [1.0 / len(candidates)] * len(candidates)
    ends = [answer_end(t, source) for t in candidates]
    unique_ends = sorted(set(ends))
    scores = backend.entity_scores(sub_question, subgraph, source, unique_ends)
    by_entity = dict(zip(unique_ends, scores))
    raw = np.asarray([by_entity[e] for e in ends], dtype=float)
    total = raw.sum()
    if total <= 0:
        return [1.0 / len(candidates)] * len(candidates)
    return (raw / total).tolist()


def combine_scores(phi_t: Sequence[float], phi_e: Sequence[float]) -> list[float]:
    """Combined triple probability: softmax of the elementwise score sum."""
    if len(phi_t) != len(phi_e):
        raise ValueError("phi_t and phi_e must have equal length")
    return softmax(np.asarray(phi_t) + np.asarray(phi_e)).tolist()


def score_candidates(
    sub_question: str,
    candidates: list[Triple],
    subgraph: KnowledgeGraph,
    backend: ScorerBackend,
    source: str,
    graph: Optional[KnowledgeGraph] = None,
) -> list[ScoredTriple]:
    phi_t = semantic_triple_scores(sub_question, candidates, backend, graph)
    phi_e = structure_entity_scores(sub_question, candidates, subgraph, backend, source)
    u = combine_scores(phi_t, phi_e)
    return [
        ScoredTriple(t, pt, pe, pu)
        for t, pt, pe, pu in zip(candidates, phi_t, phi_e, u)
    ]


def top_p_select(scored: list[ScoredTriple], p: float) -> SelectionResult:
    """Minimal descending-u prefix whose cumulative u strictly exceeds p; the
    crossing triple is included and at least one triple is always selected."""
    if not scored:
        raise ValueError("scored must be nonempty")
    if not (0 < p <= 1):
        raise ValueError("p must be in (0, 1]")
    ordered = sorted(scored, key=lambda st: (-st.u, st.triple))
    selected = []
    cumulative = 0.0
    for st in ordered:
        selected.append(st)
        cumulative += st.u
        if cumulative > p:
            break
    return SelectionResult(selected=selected, p=p)
