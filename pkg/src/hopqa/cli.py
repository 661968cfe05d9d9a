"""Operator CLI. Every verb is a thin HTTP client of the service: either a
remote server (--server URL) or an in-process instance built from --config.

Exit codes: 0 success; 2 config; 3 graph/ingest; 4 decomposition;
5 scoring backend; 6 LLM gateway; 7 final-answer parse; 1 anything else.
"""

from __future__ import annotations

import json
import sys
from contextlib import contextmanager

import click
import httpx

from .config import Config
from .errors import ConfigError

_STAGE_EXIT_CODES = {
    "config": 2,
    "graph": 3,
    "ingest": 3,
    "decomposition": 4,
    "retrieval-scoring": 5,
    "llm-gateway": 6,
    "final-answer": 7,
}


@contextmanager
def _client(server: str | None, config_path: str | None):
    if server:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            yield client
        return
    try:
        config = Config.load(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from .service import create_app

    app = create_app(config, eager=True)
    with TestClient(app, base_url="http://hopqa.local") as client:
        yield client


def _fail(response: httpx.Response) -> None:
    try:
        detail = response.json().get("detail", {})
    except json.JSONDecodeError:
        detail = {}
    stage = detail.get("stage", "unknown") if isinstance(detail, dict) else "unknown"
    message = detail.get("detail", response.text) if isinstance(detail, dict) else detail
    click.echo(f"error in stage {stage}: {message}", err=True)
    sys.exit(_STAGE_EXIT_CODES.get(stage, 1))


@click.group()
@click.option("--server", default=None, help="Base URL of a running hopqa server.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.pass_context
def main(ctx, server, config_path):
    """Progressive multi-hop question answering over knowledge graphs."""
    ctx.obj = {"server": server, "config": config_path}


@main.command()
@click.argument("graph_file", type=click.Path(exists=True))
@click.option("--labels", default=None, type=click.Path(exists=True))
@click.pass_context
def ingest(ctx, graph_file, labels):
    """Load and validate a TSV triple file, reporting counts."""
    with _client(ctx.obj["server"], ctx.obj["config"]) as client:
        resp = client.post("/graph/load", json={"path": graph_file, "label_path": labels})
        if resp.status_code != 200:
            _fail(resp)
        body = resp.json()
        click.echo(
            f"{body['triples']} triples, {body['entities']} entities, "
            f"{body['relations']} relations "
            f"({body['duplicates_dropped']} duplicates dropped)"
        )


@main.command()
@click.argument("question", required=False)
@click.option("--file", "question_file", default=None, type=click.Path(exists=True),
              help="Read the question text from a file instead.")
@click.option("--links", default=None, help='Entity links as JSON, e.g. \'{"France": "F1"}\'.')
@click.option("--trace", "trace_path", default=None, type=click.Path(),
              help="Write the reasoning trace as JSONL.")
@click.option("--dump-context", "context_path", default=None, type=click.Path(),
              help="Write the rendered final-answer context.")
@click.pass_context
def answer(ctx, question, question_file, links, trace_path, context_path):
    """Answer one question and print the answer(s)."""
    if question is None:
        if question_file is None:
            click.echo("provide a question or --file", err=True)
            sys.exit(2)
        with open(question_file, encoding="utf-8") as fh:
            question = fh.read().strip()
    payload = {
        "question": question,
        "include_trace": trace_path is not None,
        "include_context": context_path is not None,
    }
    if links:
        payload["key_entities"] = json.loads(links)
    with _client(ctx.obj["server"], ctx.obj["config"]) as client:
        resp = client.post("/answer", json=payload)
        if resp.status_code != 200:
            _fail(resp)
        body = resp.json()
        if trace_path:
            with open(trace_path, "w", encoding="utf-8") as fh:
                for record in body["trace"]:
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        if context_path:
            with open(context_path, "w", encoding="utf-8") as fh:
                fh.write(body["rendered_context"])
        if body["answers"]:
            for ans in body["answers"]:
                click.echo(ans)
        else:
            click.echo("unanswerable")


@main.command()
@click.argument("dataset", type=click.Path(exists=True))
@click.option("--report", "report_path", default="metrics.json", type=click.Path())
@click.option("--csv", "csv_path", default=None, type=click.Path())
@click.option("--parallel", default=1, type=int)
@click.pass_context
def eval(ctx, dataset, report_path, csv_path, parallel):
    """Evaluate a JSONL dataset and write a metrics report."""
    with _client(ctx.obj["server"], ctx.obj["config"]) as client:
        resp = client.post("/eval", json={"dataset_path": dataset, "parallel": parallel})
        if resp.status_code != 200:
            _fail(resp)
        body = resp.json()
        for warning in body["warnings"]:
            click.echo(f"warning: {warning}", err=True)
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(body["report"], fh, indent=2, sort_keys=True)
            fh.write("\n")
        if csv_path:
            import csv as csv_mod

            rows = body["per_question"]
            if rows:
                with open(csv_path, "w", encoding="utf-8", newline="") as fh:
                    writer = csv_mod.DictWriter(fh, fieldnames=list(rows[0]))
                    writer.writeheader()
                    writer.writerows(rows)
        report = body["report"]
        click.echo(
            f"questions={report['num_questions']} hit@1={report['hit_at_1']:.3f} "
            f"f1={report['f1']:.3f} avg_calls={report['avg_calls']:.1f} "
            f"avg_paths={report['avg_context_paths']:.1f} ({report['avg_paths']:.1f})"
        )


@main.command()
@click.argument("trace_file", type=click.Path(exists=True))
def trace(trace_file):
    """Pretty-print a trace JSONL file."""
    with open(trace_file, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            where = f"chain {record['chain']} depth {record['depth']}"
            click.echo(f"[{record['stage']:>12}] {where:<18} {json.dumps(record['payload'])}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8080, type=int)
@click.pass_context
def serve(ctx, host, port):
    """Run the HTTP service."""
    import uvicorn

    try:
        config = Config.load(ctx.obj["config"])
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    from .service import create_app

    uvicorn.run(create_app(config), host=host, port=port)


if __name__ == "__main__":
    main()
