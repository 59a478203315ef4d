import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def record_criterion(request):
    """Log one PASS/FAIL line per acceptance criterion and return the verdict."""
    lines = request.config.stash[_LINES]

    def record(number: int, name: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
