"""Sub-question answering loop: per hop, relation retrieval, LLM relation
pruning, scored triple retrieval with top-p selection, and LLM triple pruning
with an uncertainty-gated refinement pass. Paths branch on multiple answers
and dead-end paths are dropped without aborting sibling paths or chains.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from typing import Optional

from . import uncertainty
from .config import Config
from .decompose import DecompositionResult, Question, SubQuestionChain, decompose, validate_chains
from .errors import DecompositionError, GatewayError
from .gateway import Gateway
from .kg import KnowledgeGraph, Triple
from .scoring import (
    RelationCandidateSet,
    ScoredTriple,
    ScorerBackend,
    SelectionResult,
    answer_end,
    retrieve_relations,
    score_candidates,
    top_p_select,
    verbalize_triple,
)

_RETURN_RE = re.compile(r"^Return\s*:\s*(.*?)\s*$", re.MULTILINE)
_ANSWER_RE = re.compile(r"^Answer\s*:\s*(.*?)\s*$", re.MULTILINE)


@dataclass(frozen=True)
class PartialReasoningPath:
    source: str
    triples: tuple[Triple, ...] = ()
    frontier: str = ""

    def __post_init__(self):
        if not self.frontier:
            object.__setattr__(self, "frontier", self.source)

    def extend(self, triple: Triple) -> "PartialReasoningPath":
        return PartialReasoningPath(
            source=self.source,
            triples=self.triples + (triple,),
            frontier=answer_end(triple, self.frontier),
        )

    def __len__(self) -> int:
        return len(self.triples)


@dataclass
class StepOutcome:
    answers: list[tuple[str, ScoredTriple]]
    au_report: Optional[uncertainty.AUReport] = None
    fallback_rounds_used: int = 0
    pruned_relations: list[str] = field(default_factory=list)
    unused_relations: list[str] = field(default_factory=list)


@dataclass
class TraceRecord:
    stage: str
    chain: int
    depth: int
    payload: dict
    duration: float = 0.0
    timestamp: float = field(default_factory=time.time)

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "chain": self.chain,
            "depth": self.depth,
            "payload": self.payload,
            "duration": self.duration,
            "timestamp": self.timestamp,
        }


@dataclass
class ReasoningState:
    question: Question
    chains: list[SubQuestionChain]
    frontier_paths: dict[int, list[PartialReasoningPath]]
    trace: list[TraceRecord] = field(default_factory=list)

    def record(self, stage: str, chain: int, depth: int, payload: dict, duration: float = 0.0):
        self.trace.append(TraceRecord(stage, chain, depth, payload, duration))


def write_trace(trace: list[TraceRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in trace:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")


class ReasoningEngine:
    """Owns the graph, gateway, scorer, and config; stateless across
    questions, so one engine can serve many questions concurrently."""

    def __init__(
        self,
        graph: KnowledgeGraph,
        gateway: Gateway,
        scorer: ScorerBackend,
        config: Optional[Config] = None,
    ):
        self.graph = graph
        self.gateway = gateway
        self.scorer = scorer
        self.config = config or Config()

    # -- relation pruning --------------------------------------------------

    def prune_relations(
        self,
        sub_question: str,
        source: str,
        candidates: RelationCandidateSet,
        n: Optional[int] = None,
    ) -> tuple[list[str], list[str]]:
        """LLM-selected top-n relations out of the ranked candidates; returns
        (kept, unused). "None" from the LLM keeps nothing."""
        n = n if n is not None else self.config.n
        names = candidates.names
        if not names:
            return [], []
        kept: list[str] = []
        for _ in range(self.config.retries + 1):
            response = self.gateway.ask(
                "relation_pruning",
                {
                    "question": sub_question,
                    "topic_entity": self.graph.label_of(source),
                    "candidates": names,
                    "n": n,
                },
            )
            match = None
            for match in _RETURN_RE.finditer(response.text):
                pass  # keep the last Return: line (prompt contains an example)
            if match is None:
                continue
            line = match.group(1)
            if line.strip().lower() == "none":
                return [], list(names)
            picked = [part.strip() for part in line.split(",") if part.strip()]
            kept = [name for name in picked if name in names][:n]
            break
        unused = [name for name in names if name not in kept]
        return kept, unused

    # -- triple pruning ----------------------------------------------------

    def _parse_answers(self, text: str, selection: SelectionResult, source: str):
        """Map LLM answer strings onto candidate answer-end entities; anything
        that matches no candidate is dropped."""
        match = None
        for match in _ANSWER_RE.finditer(text):
            pass
        if match is None:
            return [], []
        line = match.group(1)
        if line.strip().lower() in ("none", ""):
            return [], []
        by_label: dict[str, tuple[str, ScoredTriple]] = {}
        for st in selection.selected:
            entity = answer_end(st.triple, source)
            for key in (entity.casefold(), self.graph.label_of(entity).casefold()):
                best = by_label.get(key)
                if best is None or st.u > best[1].u:
                    by_label[key] = (entity, st)
        answers, dropped = [], []
        seen = set()
        for part in line.split("|"):
            name = part.strip()
            if not name:
                continue
            hit = by_label.get(name.casefold())
            if hit is None:
                dropped.append(name)
            elif hit[0] not in seen:
                seen.add(hit[0])
                answers.append(hit)
        return answers, dropped

    def prune_triples(
        self,
        sub_question: str,
        source: str,
        selection: SelectionResult,
        state: Optional[ReasoningState] = None,
        chain: int = -1,
        depth: int = -1,
    ) -> StepOutcome:
        """Ask the LLM for answer entities over the selected triples; when
        first-token uncertainty exceeds the threshold, re-ask with the top-l
        triples as explicit external evidence."""
        cfg = self.config
        lines = [verbalize_triple(st.triple, self.graph) for st in selection.selected]
        response = self.gateway.ask(
            "triple_pruning",
            {
                "question": sub_question,
                "topic_entity": self.graph.label_of(source),
                "triples": lines,
            },
            logit_capture=True,
            top_k=cfg.au_top_k,
        )
        answers, dropped = self._parse_answers(response.text, selection, source)
        au_report = None
        if response.first_answer_token_logits:
            logits = [logit for _, logit in response.first_answer_token_logits]
            au_report = uncertainty.assess(
                logits, threshold=cfg.au_threshold, transform=cfg.au_transform
            )
            if state is not None:
                state.record(
                    "au_gate",
                    chain,
                    depth,
                    {"au": au_report.au, "decision": au_report.decision},
                )
            if au_report.decision == uncertainty.REFINE:
                evidence = lines[: cfg.l]
                refined = self.gateway.ask(
                    "triple_pruning_refine",
                    {
                        "question": sub_question,
                        "topic_entity": self.graph.label_of(source),
                        "evidence": evidence,
                    },
                )
                answers, dropped = self._parse_answers(refined.text, selection, source)
        if dropped and state is not None:
            state.record(
                "tri_prune", chain, depth, {"dropped_answers": dropped, "note": "no candidate match"}
            )
        return StepOutcome(answers=answers, au_report=au_report)

    # -- one hop of one path -----------------------------------------------

    def _step_path(
        self,
        state: ReasoningState,
        chain_idx: int,
        depth: int,
        path: PartialReasoningPath,
        subgraph: KnowledgeGraph,
    ) -> StepOutcome:
        cfg = self.config
        sub_question = state.chains[chain_idx].sub_questions[depth]
        source = path.frontier
        started = time.monotonic()
        candidates = retrieve_relations(
            self.graph, source, sub_question, cfg.m, self.scorer, cfg.include_inverse
        )
        state.record(
            "rel_retrieve",
            chain_idx,
            depth,
            {"source": source, "relations": candidates.names},
            time.monotonic() - started,
        )
        if not candidates:
            return StepOutcome(answers=[])

        offered = candidates
        all_pruned: list[str] = []
        outcome = StepOutcome(answers=[])
        round_no = 0
        for round_no in range(cfg.max_fallback_rounds + 1):
            kept, unused = self.prune_relations(sub_question, source, offered)
            all_pruned.extend(kept)
            state.record(
                "rel_prune",
                chain_idx,
                depth,
                {"round": round_no, "kept": kept, "unused": unused},
            )
            if kept:
                triples = [
                    t
                    for t in self.graph.one_hop(source, cfg.include_inverse)
                    if t.relation in kept
                ]
                scored = score_candidates(
                    sub_question, triples, subgraph, self.scorer, source, self.graph
                )
                selection = top_p_select(scored, cfg.p)
                state.record(
                    "tri_retrieve",
                    chain_idx,
                    depth,
                    {
                        "candidates": len(scored),
                        "selected": [st.triple.key() for st in selection.selected],
                    },
                )
                outcome = self.prune_triples(
                    sub_question, source, selection, state, chain_idx, depth
                )
                state.record(
                    "tri_prune",
                    chain_idx,
                    depth,
                    {
                        "round": round_no,
                        "answers": [entity for entity, _ in outcome.answers],
                    },
                )
            if outcome.answers:
                outcome.fallback_rounds_used = round_no
                outcome.pruned_relations = kept
                outcome.unused_relations = unused
                return outcome
            if not unused:
                break
            # None-fallback: retry relation pruning over the unused remainder.
            state.record(
                "fallback",
                chain_idx,
                depth,
                {"round": round_no + 1, "remaining": unused},
            )
            offered = RelationCandidateSet(
                sub_question,
                [(name, score) for name, score in offered.ranked if name in unused],
                offered.m,
            )
        outcome.fallback_rounds_used = round_no
        outcome.pruned_relations = all_pruned
        return outcome

    # -- chain / question level --------------------------------------------

    def answer_subquestion(self, state: ReasoningState, chain_idx: int, depth: int) -> None:
        """Extend every frontier path of one chain by one hop; branches on
        multiple answers, capped at beam_width by supporting-triple u."""
        cfg = self.config
        chain = state.chains[chain_idx]
        subgraph = self.graph.subgraph_for_key_entity(chain.key_entity, cfg.subgraph_radius)
        extended: list[tuple[float, PartialReasoningPath]] = []
        for path in state.frontier_paths[chain_idx]:
            outcome = self._step_path(state, chain_idx, depth, path, subgraph)
            if not outcome.answers:
                state.record("fallback", chain_idx, depth, {"dead_end": path.frontier})
                continue
            for _, scored in outcome.answers:
                extended.append((scored.u, path.extend(scored.triple)))
        extended.sort(key=lambda item: (-item[0], item[1].triples))
        state.frontier_paths[chain_idx] = [p for _, p in extended[: cfg.beam_width]]

    def run_question(
        self,
        question: Question,
        decomposition: Optional[DecompositionResult] = None,
    ) -> tuple[list[PartialReasoningPath], ReasoningState]:
        """Run every chain to its own depth; returns the union of complete
        paths. A chain whose paths all die contributes nothing."""
        started = time.monotonic()
        if decomposition is None:
            decomposition = decompose(question, self.gateway, retries=self.config.retries)
        decomposition = validate_chains(decomposition, self.graph, question.entity_links)
        state = ReasoningState(
            question=question,
            chains=decomposition.chains,
            frontier_paths={
                i: [PartialReasoningPath(source=c.key_entity)]
                for i, c in enumerate(decomposition.chains)
            },
        )
        state.record(
            "decompose",
            -1,
            -1,
            {
                "chains": [
                    {"key_entity": c.key_entity, "sub_questions": c.sub_questions}
                    for c in decomposition.chains
                ]
            },
            time.monotonic() - started,
        )
        complete: list[PartialReasoningPath] = []
        for chain_idx, chain in enumerate(state.chains):
            for depth in range(chain.depth):
                if not state.frontier_paths[chain_idx]:
                    break
                self.answer_subquestion(state, chain_idx, depth)
            survivors = state.frontier_paths[chain_idx]
            state.record(
                "final",
                chain_idx,
                chain.depth - 1,
                {"complete_paths": len(survivors)},
            )
            complete.extend(p for p in survivors if len(p) == chain.depth)
        return complete, state
