import pytest

VERDICTS = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record ``(passed, detail)`` for an acceptance criterion and print it."""
    store = request.config.stash.setdefault(VERDICTS, {})

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        store[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(VERDICTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        terminalreporter.write_line(store[number])
