"""Shared pytest wiring: acceptance-criterion result lines.

Each acceptance test wraps its body in the ``acceptance`` context
manager; the collected PASS/FAIL lines are printed in the terminal
summary so the verdict for every criterion is visible even though
pytest captures per-test stdout.
"""

from contextlib import contextmanager

import pytest

_ACCEPTANCE_LINES = []


class _Log:
    def __init__(self):
        self.detail = ""

    def note(self, text: str) -> None:
        self.detail = text


@pytest.fixture(scope="session")
def acceptance():
    @contextmanager
    def criterion(number: int, title: str):
        log = _Log()
        try:
            yield log
        except BaseException as exc:
            _ACCEPTANCE_LINES.append(
                f"criterion {number:2d} FAIL  {title}: "
                f"{type(exc).__name__}: {exc}")
            raise
        suffix = f"  ({log.detail})" if log.detail else ""
        _ACCEPTANCE_LINES.append(
            f"criterion {number:2d} PASS  {title}{suffix}")

    return criterion


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
