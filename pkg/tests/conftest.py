import numpy as np
import pytest

from diffstego.codec import Codec, SessionConfig
from diffstego.corpus import load_corpus, opening_triples
from diffstego.diffusion.train import TrainConfig, train
from diffstego.prompts import PromptTable


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def model(corpus):
    return train(corpus, TrainConfig(epochs=20), seed=42)


@pytest.fixture(scope="session")
def model_file(model, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "toy.bin"
    model.save(path)
    return path


@pytest.fixture(scope="session")
def table16(corpus, model):
    return PromptTable(opening_triples(corpus)[:16], model.vocab)


@pytest.fixture(scope="session")
def codec16(model, table16):
    return Codec(SessionConfig(seed=1, k=16, table=table16, model=model))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if config.acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(config.acceptance_lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line, then assert."""

    def check(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
        request.config.acceptance_lines.append(line)
        print(line)
        assert ok, line

    return check
