import sys
from pathlib import Path

import pytest

# make the oracle helpers importable as a plain module
sys.path.insert(0, str(Path(__file__).parent))


class Criterion:
    """Collects named sub-checks for one acceptance criterion."""

    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.checks = []

    def check(self, label, ok, detail=""):
        self.checks.append((label, bool(ok), detail))

    @property
    def passed(self):
        return bool(self.checks) and all(ok for _, ok, _ in self.checks)

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        failed = [f"{label} ({detail})" for label, ok, detail in self.checks if not ok]
        tail = f" -- failed: {'; '.join(failed)}" if failed else ""
        return f"{status} criterion {self.number}: {self.title}{tail}"

    def finish(self):
        print(self.summary())
        lines = [f"  {'ok  ' if ok else 'FAIL'} {label}: {detail}" for label, ok, detail in self.checks]
        assert self.passed, "\n" + "\n".join(lines)


@pytest.fixture
def criterion(request):
    made = []

    def factory(number, title):
        c = Criterion(number, title)
        made.append(c)
        return c

    yield factory
    request.config._acceptance = getattr(request.config, "_acceptance", []) + made


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "_acceptance", [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(results, key=lambda c: c.number):
        terminalreporter.write_line(c.summary())
