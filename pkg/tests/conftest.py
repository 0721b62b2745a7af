import pytest

from shsbm.model import Hypothesis, ModelConfig


@pytest.fixture
def tiny_config():
    return ModelConfig(4, 1, 2, 2, 0.8, 0.3)


@pytest.fixture
def tiny_truth():
    return Hypothesis((0, 0, 1, 1), 1, 2)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; also printed live."""

    def report(label: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
