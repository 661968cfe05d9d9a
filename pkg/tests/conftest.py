import json
from pathlib import Path

import pytest

import golden as golden_mod
from hopqa.config import Config
from hopqa.kg import load_graph
from hopqa.pipeline import Pipeline

FIXTURES = Path(__file__).parent / "fixtures" / "golden"


@pytest.fixture(scope="session")
def golden_graph():
    return load_graph(FIXTURES / "kg.tsv")


@pytest.fixture(scope="session")
def golden_script(tmp_path_factory):
    return golden_mod.write_script(tmp_path_factory.mktemp("script") / "scripted.json")


@pytest.fixture(scope="session")
def corrupted_script(tmp_path_factory):
    return golden_mod.write_script(
        tmp_path_factory.mktemp("script") / "corrupted.json",
        rules=golden_mod.corrupted_rules(),
    )


def make_config(script_path, **overrides):
    defaults = dict(
        graph_path=str(FIXTURES / "kg.tsv"),
        scripted_path=str(script_path),
        au_top_k=5,
    )
    defaults.update(overrides)
    return Config(**defaults).validate()


@pytest.fixture()
def golden_pipeline(golden_graph, golden_script):
    return Pipeline(make_config(golden_script), graph=golden_graph)


@pytest.fixture()
def corrupted_pipeline(golden_graph, corrupted_script):
    return Pipeline(make_config(corrupted_script), graph=golden_graph)


@pytest.fixture(scope="session")
def golden_dataset():
    return FIXTURES / "dataset.jsonl"
