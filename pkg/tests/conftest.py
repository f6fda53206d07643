import json
from pathlib import Path

import pytest

from graphjudge.backends import OracleTransport
from graphjudge.corpus_io import load_corpus
from graphjudge.gateway import BackendConfig, Gateway, HashEmbedder, MockTransport

TOY_CORPUS = Path(__file__).parent.parent / "data" / "toy_corpus.jsonl"


@pytest.fixture(scope="session")
def toy_corpus_path() -> Path:
    return TOY_CORPUS


@pytest.fixture(scope="session")
def toy_corpus():
    corpus, _ = load_corpus(TOY_CORPUS, "test")
    return corpus


@pytest.fixture
def offline_embedder():
    return HashEmbedder(dim=256, seed=0)


@pytest.fixture
def oracle_gateway(toy_corpus):
    return Gateway(BackendConfig(max_retries=0), transport=OracleTransport(toy_corpus))


def scripted_gateway(responder=None, script=None, **cfg_kw) -> Gateway:
    cfg = BackendConfig(max_retries=cfg_kw.pop("max_retries", 0), **cfg_kw)
    return Gateway(cfg, transport=MockTransport(script=script, responder=responder))


@pytest.fixture
def mock_gateway_factory():
    return scripted_gateway


def write_jsonl(path: Path, records) -> Path:
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path
