import numpy as np
import pytest

from covertlink.graph import build_graph

ACCEPTANCE_LINES: list[str] = []


def random_graph(rng: np.random.Generator, n: int, p: float):
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return build_graph(np.stack([iu[keep], ju[keep]], axis=1), n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record_criterion():
    def record(name: str, ok: bool, detail: str = "") -> None:
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
