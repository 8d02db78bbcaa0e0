import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hsoscan import ocsvm
from hsoscan.catalog import default_catalog
from hsoscan.corpus import CorpusSpec, generate
from hsoscan.pipeline import analyze_program

FIXTURES = Path(__file__).parent / "fixtures"

# lines printed by the acceptance tests, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cat():
    return default_catalog()


@pytest.fixture(scope="session")
def benign_corpus(cat):
    return generate(CorpusSpec(seed=1, apps=200), cat)


@pytest.fixture(scope="session")
def bomb_corpus(cat):
    return generate(CorpusSpec(seed=2, apps=200, bomb_rate=0.1), cat)


@pytest.fixture(scope="session")
def benign_results(benign_corpus, cat):
    corpus, _ = benign_corpus
    return {name: analyze_program(p, cat, None, name) for name, p in sorted(corpus.items())}


@pytest.fixture(scope="session")
def benign_vectors(benign_results):
    return [rec.vector for r in benign_results.values() for rec in r.triggers]


@pytest.fixture(scope="session")
def benign_model(benign_vectors):
    return ocsvm.fit(benign_vectors)
