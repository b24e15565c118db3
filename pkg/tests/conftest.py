"""Shared test plumbing: the acceptance-criteria scoreboard.

``test_acceptance.py`` records one verdict per criterion through ``record``;
the terminal summary prints them as one line each so a full run ends with an
explicit PASS/FAIL roster.
"""

ACCEPTANCE_RESULTS = {}

ACCEPTANCE_CRITERIA = (
    "block-matrix-agreement",
    "gradient-check-suite",
    "degenerate-real-reduction",
    "attention-normalization",
    "toy-corpus-memorization",
    "syntax-sensitivity",
    "loss-algebra",
    "bleu-reference-agreement",
    "checkpoint-round-trip",
    "beam-greedy-consistency",
)


def record(name, ok, detail=""):
    """Store a criterion verdict, then fail the test if it did not hold."""
    assert name in ACCEPTANCE_CRITERIA, f"unknown criterion {name!r}"
    ACCEPTANCE_RESULTS[name] = bool(ok)
    assert ok, f"{name}: {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in ACCEPTANCE_CRITERIA:
        verdict = ACCEPTANCE_RESULTS.get(name)
        if verdict is None:
            line = "NOT RUN"
        else:
            line = "PASS" if verdict else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {name}: {line}")
