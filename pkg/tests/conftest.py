import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

REPO = Path(__file__).resolve().parents[1]
FIXTURES = REPO / "fixtures"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def engine_dir(tmp_path_factory) -> Path:
    """Fixture engine trained once per session."""
    from stylebot.training import train_all

    out = tmp_path_factory.mktemp("engine")
    train_all(FIXTURES / "train_config.json", outdir=out)
    return out


@pytest.fixture(scope="session")
def engine(engine_dir):
    from stylebot.pipeline import load_engine

    return load_engine(engine_dir / "manifest.json")


@pytest.fixture(scope="session")
def figure_graph_fixture():
    """Tagged name-prepending corpus, its graph, tagger, and LM."""
    from stylebot.ngram_lm import train_lm
    from stylebot.textproc import parse_tagged_line, train_tagger
    from stylebot.wordgraph import build_graph

    lines = [
        "uhura_NNP how_WRB are_VBP you_PRP",
        "uhura_NNP how_WRB are_VBP things_NNS",
        "i_PRP am_VBP sorry_JJ miranda_NNP",
        "i_PRP am_VBP sorry_JJ",
        "how_WRB are_VBP you_PRP",
    ]
    tagged = [parse_tagged_line(line) for line in lines]
    tagger = train_tagger(tagged)
    graph = build_graph(tagged)
    lm = train_lm([[t.word for t in s] for s in tagged])
    return graph, tagger, lm
