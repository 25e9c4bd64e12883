import numpy as np
import pytest

from ulcnet.config import ModelConfig
from ulcnet.model import prepare
from ulcnet.nn import init_weights


@pytest.fixture(scope="session")
def cfg():
    return ModelConfig()


@pytest.fixture(scope="session")
def weights(cfg):
    return init_weights(cfg, 42)


@pytest.fixture(scope="session")
def prepared(weights, cfg):
    return prepare(weights, cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_verdicts: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _verdicts[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_verdicts):
            terminalreporter.write_line(_verdicts[number])
