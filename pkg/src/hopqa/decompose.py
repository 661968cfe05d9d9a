"""Question decomposition: key-entity identification and per-entity
sub-question chains, parsed from the tagged SUB-QUESTIONi / ENTITYi format."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import DecompositionError
from .gateway import Gateway
from .kg import KnowledgeGraph

_SUBQ_RE = re.compile(r"^SUB-QUESTION(\d+)\s*:\s*(.+?)\s*$", re.MULTILINE)
_ENTITY_RE = re.compile(r"^ENTITY(\d+)\s*:\s*(.+?)\s*$", re.MULTILINE)


@dataclass
class Question:
    text: str
    id: str = "q0"
    gold_answers: Optional[set[str]] = None
    gold_relations: Optional[set[str]] = None
    entity_links: Optional[dict[str, str]] = None  # label -> entity id

    def __post_init__(self):
        if not self.text:
            raise ValueError("question text must be nonempty")


@dataclass
class SubQuestionChain:
    key_entity: str
    sub_questions: list[str]

    @property
    def depth(self) -> int:
        return len(self.sub_questions)


@dataclass
class DecompositionResult:
    chains: list[SubQuestionChain]
    raw_llm_output: str = ""


def parse_decomposition(text: str) -> list[SubQuestionChain]:
    """Group tagged sub-questions by their key entity, preserving tag order.

    Raises DecompositionError when the tag sets are empty or misaligned.
    """
    sub_questions = {int(m.group(1)): m.group(2) for m in _SUBQ_RE.finditer(text)}
    entities = {int(m.group(1)): m.group(2) for m in _ENTITY_RE.finditer(text)}
    if not sub_questions:
        raise DecompositionError("no SUB-QUESTION tags found", raw_output=text)
    if set(sub_questions) != set(entities):
        raise DecompositionError(
            "SUB-QUESTION and ENTITY tag indexes do not align", raw_output=text
        )
    chains: dict[str, SubQuestionChain] = {}
    for idx in sorted(sub_questions):
        entity = entities[idx]
        chain = chains.get(entity)
        if chain is None:
            chain = SubQuestionChain(key_entity=entity, sub_questions=[])
            chains[entity] = chain
        chain.sub_questions.append(sub_questions[idx])
    return list(chains.values())


def decompose(question: Question, gateway: Gateway, retries: int = 2) -> DecompositionResult:
    """Prompt the LLM for a decomposition; retry on unparseable output."""
    last_error: DecompositionError | None = None
    for _ in range(retries + 1):
        response = gateway.ask("decomposition", {"question": question.text})
        try:
            chains = parse_decomposition(response.text)
            return DecompositionResult(chains=chains, raw_llm_output=response.text)
        except DecompositionError as exc:
            last_error = exc
    assert last_error is not None
    raise last_error


def validate_chains(
    result: DecompositionResult,
    graph: KnowledgeGraph,
    entity_links: Optional[dict[str, str]] = None,
) -> DecompositionResult:
    """Resolve key-entity strings to graph entities and drop unresolvable
    chains; duplicate key entities keep the first occurrence's sub-questions."""
    links = entity_links or {}
    resolved: dict[str, SubQuestionChain] = {}
    for chain in result.chains:
        entity_id = links.get(chain.key_entity)
        if entity_id is not None and not graph.has_entity(entity_id):
            entity_id = None
        if entity_id is None:
            entity_id = graph.resolve_label(chain.key_entity)
        if entity_id is None:
            continue
        if entity_id not in resolved:
            resolved[entity_id] = SubQuestionChain(entity_id, list(chain.sub_questions))
    if not resolved:
        raise DecompositionError(
            "no key entity could be resolved against the graph",
            raw_output=result.raw_llm_output,
        )
    return DecompositionResult(
        chains=list(resolved.values()), raw_llm_output=result.raw_llm_output
    )
