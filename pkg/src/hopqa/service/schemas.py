"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    graph_loaded: bool
    stats: dict[str, int] = Field(default_factory=dict)


class LoadGraphRequest(BaseModel):
    path: str
    label_path: Optional[str] = None


class LoadGraphResponse(BaseModel):
    entities: int
    relations: int
    triples: int
    duplicates_dropped: int


class TripleModel(BaseModel):
    head: str
    relation: str
    tail: str
    direction: str


class PathModel(BaseModel):
    source: str
    frontier: str
    triples: list[TripleModel]


class AnswerRequest(BaseModel):
    question: str
    id: str = "q0"
    key_entities: Optional[dict[str, str]] = None
    include_trace: bool = False
    include_context: bool = False


class AnswerResponse(BaseModel):
    answers: list[str]
    raw: str
    paths: list[PathModel]
    counters: dict
    num_paths: int
    num_context_paths: int
    trace: Optional[list[dict]] = None
    rendered_context: Optional[str] = None


class EvalRequest(BaseModel):
    dataset_path: str
    parallel: int = 1


class EvalResponse(BaseModel):
    report: dict
    per_question: list[dict]
    warnings: list[str]


class ErrorBody(BaseModel):
    stage: str
    detail: str
