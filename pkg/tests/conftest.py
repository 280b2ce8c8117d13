import pytest

_CRITERIA = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_CRITERIA] = []


@pytest.fixture
def record_criterion(request):
    """``record(number, title, passed, detail)``; printed in the terminal summary."""
    lines = request.config.stash[_CRITERIA]

    def record(number, title, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number:>2}: {title}  [{detail}]"
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines, key=lambda x: x[0]):
            terminalreporter.write_line(line)
