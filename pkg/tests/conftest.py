import pytest

from cosrays.cosine_map import sinh_family_params
from cosrays.partition import build_partition


@pytest.fixture(scope="session")
def sinh1():
    return sinh_family_params(1)


@pytest.fixture(scope="session")
def sinh2():
    return sinh_family_params(2)


@pytest.fixture(scope="session")
def part1(sinh1):
    return build_partition(sinh1)


ACCEPTANCE_LINES: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[criterion] = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[criterion])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
