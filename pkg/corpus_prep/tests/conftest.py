"""Shared helpers plus the acceptance scoreboard for the terminal summary."""
import os

ACCEPTANCE_RESULTS = {}
ACCEPTANCE_CRITERIA = ("corpus-round-trip",)

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def record(name, ok, detail=""):
    assert name in ACCEPTANCE_CRITERIA, f"unknown criterion {name!r}"
    ACCEPTANCE_RESULTS[name] = bool(ok)
    assert ok, f"{name}: {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in ACCEPTANCE_CRITERIA:
        verdict = ACCEPTANCE_RESULTS.get(name)
        line = "NOT RUN" if verdict is None else ("PASS" if verdict else "FAIL")
        terminalreporter.write_line(f"ACCEPTANCE {name}: {line}")
