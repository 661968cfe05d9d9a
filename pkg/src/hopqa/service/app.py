"""FastAPI service wrapping the pipeline; the CLI is a thin client of this.

The graph and backends are loaded once at startup (or via /graph/load) and
shared read-only across requests.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException

from ..config import Config
from ..decompose import Question
from ..errors import (
    AnswerParseError,
    ConfigError,
    DecompositionError,
    GatewayError,
    GraphError,
    HopQAError,
    ScorerBackendError,
)
from ..kg import load_graph
from ..pipeline import Pipeline
from .schemas import (
    AnswerRequest,
    AnswerResponse,
    EvalRequest,
    EvalResponse,
    HealthResponse,
    LoadGraphRequest,
    LoadGraphResponse,
    PathModel,
    TripleModel,
)

_STAGES = {
    ConfigError: "config",
    GraphError: "graph",
    DecompositionError: "decomposition",
    ScorerBackendError: "retrieval-scoring",
    GatewayError: "llm-gateway",
    AnswerParseError: "final-answer",
}


def _stage_of(exc: HopQAError) -> str:
    for cls, stage in _STAGES.items():
        if isinstance(exc, cls):
            return stage
    return "engine"


def _http_error(exc: HopQAError) -> HTTPException:
    return HTTPException(
        status_code=502 if isinstance(exc, (GatewayError, ScorerBackendError)) else 400,
        detail={"stage": _stage_of(exc), "detail": str(exc)},
    )


def create_app(config: Config, eager: bool = True) -> FastAPI:
    app = FastAPI(title="hopqa", version="0.1.0")
    app.state.config = config
    app.state.pipeline = None
    if eager and config.graph_path:
        app.state.pipeline = Pipeline(config)

    def pipeline() -> Pipeline:
        if app.state.pipeline is None:
            raise HTTPException(
                status_code=409,
                detail={"stage": "graph", "detail": "no graph loaded; POST /graph/load first"},
            )
        return app.state.pipeline

    @app.get("/healthz", response_model=HealthResponse)
    def healthz():
        loaded = app.state.pipeline is not None
        return HealthResponse(
            status="ok",
            graph_loaded=loaded,
            stats=app.state.pipeline.graph.stats() if loaded else {},
        )

    @app.post("/graph/load", response_model=LoadGraphResponse)
    def graph_load(req: LoadGraphRequest):
        cfg = app.state.config
        try:
            graph = load_graph(req.path, req.label_path)
            app.state.pipeline = Pipeline(cfg, graph=graph)
        except HopQAError as exc:
            raise _http_error(exc)
        stats = graph.stats()
        return LoadGraphResponse(
            entities=stats["entities"],
            relations=stats["relations"],
            triples=stats["triples"],
            duplicates_dropped=getattr(graph, "duplicate_count", 0),
        )

    @app.post("/answer", response_model=AnswerResponse)
    def answer(req: AnswerRequest):
        question = Question(text=req.question, id=req.id, entity_links=req.key_entities)
        try:
            out = pipeline().answer_question(question)
        except HopQAError as exc:
            raise _http_error(exc)
        paths = [
            PathModel(
                source=p.source,
                frontier=p.frontier,
                triples=[
                    TripleModel(
                        head=t.head, relation=t.relation, tail=t.tail, direction=t.direction
                    )
                    for t in p.triples
                ],
            )
            for p in out.paths
        ]
        return AnswerResponse(
            answers=out.answers,
            raw=out.raw,
            paths=paths,
            counters=out.counters,
            num_paths=out.num_paths,
            num_context_paths=out.num_context_paths,
            trace=[r.to_dict() for r in out.state.trace] if req.include_trace else None,
            rendered_context=out.rendered_context if req.include_context else None,
        )

    @app.post("/eval", response_model=EvalResponse)
    def evaluate(req: EvalRequest):
        try:
            report, warnings = pipeline().evaluate_dataset(req.dataset_path, req.parallel)
        except HopQAError as exc:
            raise _http_error(exc)
        except OSError as exc:
            raise HTTPException(
                status_code=400, detail={"stage": "eval", "detail": str(exc)}
            )
        return EvalResponse(
            report=report.to_dict(), per_question=report.per_question, warnings=warnings
        )

    return app
