import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS: dict[int, list[tuple[str, bool, str]]] = {}


class AcceptanceRecorder:
    def __call__(self, criterion: int, passed: bool, detail: str, part: str = "") -> bool:
        _RESULTS.setdefault(criterion, []).append((part, bool(passed), detail))
        return bool(passed)


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_RESULTS):
        parts = _RESULTS[crit]
        ok = all(p for _, p, _ in parts)
        detail = "; ".join(f"{name + ': ' if name else ''}{d}" for name, _, d in parts)
        terminalreporter.write_line(f"criterion {crit:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
