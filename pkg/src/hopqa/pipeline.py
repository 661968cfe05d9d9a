"""End-to-end orchestration: build the engine from config, answer single
questions, and evaluate JSONL datasets."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from . import context as ctx
from .config import Config
from .decompose import Question
from .engine import PartialReasoningPath, ReasoningEngine, ReasoningState, write_trace
from .errors import DecompositionError, HopQAError
from .gateway import Gateway, HTTPBackend, ScriptedBackend, UsageCounters
from .kg import KnowledgeGraph, load_graph
from .metrics import MetricsReport, QuestionResult, aggregate
from .scoring import HTTPScorerBackend, LexicalScorer


@dataclass
class AnswerOutput:
    answers: list[str]
    raw: str
    paths: list[PartialReasoningPath]
    state: ReasoningState
    counters: dict
    num_paths: int
    num_context_paths: int
    rendered_context: str
    wall_time: float


class Pipeline:
    """Config-driven façade over the three pipeline stages."""

    def __init__(self, config: Config, graph: Optional[KnowledgeGraph] = None):
        self.config = config
        if graph is None:
            if not config.graph_path:
                raise HopQAError("no graph configured (graph_path)")
            graph = load_graph(config.graph_path, config.label_path)
        self.graph = graph
        if config.scorer_backend == "http":
            self.scorer = HTTPScorerBackend(config.scorer_url, gnn_layers=config.gnn_layers)
        else:
            self.scorer = LexicalScorer()
        if config.llm_backend == "http":
            self._backend = HTTPBackend(
                config.llm_url, model=config.llm_model, auth_env=config.llm_auth_env
            )
        else:
            self._backend = ScriptedBackend(config.scripted_path)

    @property
    def backend(self):
        return self._backend

    def _engine(self, counters: UsageCounters) -> ReasoningEngine:
        gateway = Gateway(self._backend, counters)
        return ReasoningEngine(self.graph, gateway, self.scorer, self.config)

    def answer_question(self, question: Question) -> AnswerOutput:
        started = time.monotonic()
        counters = UsageCounters()
        engine = self._engine(counters)
        paths, state = engine.run_question(question)
        prefixes = ctx.enumerate_prefixes(paths)
        if prefixes:
            prefixes = ctx.repack(
                prefixes,
                question.text,
                self.scorer,
                self.graph,
                placement=self.config.repack_placement,
            )
        final_context = ctx.build_context(question, prefixes, self.graph)
        answers, raw = ctx.answer(
            question, final_context, engine.gateway, retries=self.config.retries
        )
        elapsed = time.monotonic() - started
        state.record("final", -1, -1, {"answers": answers})
        return AnswerOutput(
            answers=answers,
            raw=raw,
            paths=paths,
            state=state,
            counters=counters.snapshot(),
            num_paths=len(paths),
            num_context_paths=len(prefixes),
            rendered_context=final_context.rendered,
            wall_time=elapsed,
        )

    def evaluate_question(self, question: Question) -> QuestionResult:
        try:
            out = self.answer_question(question)
            predicted, paths = out.answers, out.paths
            counters = out.counters
            num_paths, num_ctx = out.num_paths, out.num_context_paths
        except DecompositionError:
            predicted, paths, counters = [], [], {}
            num_paths = num_ctx = 0
        return QuestionResult(
            question=question,
            predicted=predicted,
            paths=paths,
            llm_calls=counters.get("llm_calls", 0),
            tokens=counters.get("total_prompt_tokens", 0)
            + counters.get("total_completion_tokens", 0),
            # Backend-reported latency, not wall clock, so metrics output is
            # byte-identical across runs and parallelism levels.
            wall_time=counters.get("wall_time", 0.0),
            num_paths=num_paths,
            num_context_paths=num_ctx,
            labeler=self.graph.label_of,
        )

    def evaluate_dataset(
        self, dataset_path, parallel: int = 1
    ) -> tuple[MetricsReport, list[str]]:
        questions, warnings = load_dataset(dataset_path)
        if parallel > 1:
            with ThreadPoolExecutor(max_workers=parallel) as pool:
                results = list(pool.map(self.evaluate_question, questions))
        else:
            results = [self.evaluate_question(q) for q in questions]
        return aggregate(results, normalize=self.config.normalize_answers), warnings


def load_dataset(path) -> tuple[list[Question], list[str]]:
    """Parse a JSONL dataset: {id, question, answers[], key_entities?,
    gold_relations?}. Bad lines are skipped with a warning."""
    questions: list[Question] = []
    warnings: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                questions.append(
                    Question(
                        text=row["question"],
                        id=str(row.get("id", f"line{line_no}")),
                        gold_answers=set(row.get("answers", [])) or None,
                        gold_relations=set(row.get("gold_relations", [])) or None,
                        entity_links=row.get("key_entities") or None,
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                warnings.append(f"line {line_no}: skipped ({exc})")
    return questions, warnings


def write_report(report: MetricsReport, json_path, csv_path=None) -> None:
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if csv_path is not None:
        fields = [
            "id", "hit", "f1", "entity_recall", "entity_hit", "entities",
            "error_class", "overlap", "calls", "tokens", "paths",
            "context_paths", "time",
        ]
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in report.per_question:
                writer.writerow(row)
