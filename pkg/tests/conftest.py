import pytest

ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Collects acceptance PASS/FAIL lines for the terminal summary."""
    return request.config.stash.setdefault(ACCEPTANCE_LINES, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(s.split("criterion", 1)[1].split(":")[0])):
        terminalreporter.write_line(line)
    passed = sum(line.startswith("[PASS]") for line in lines)
    terminalreporter.write_line(f"{passed}/{len(lines)} criteria pass")
