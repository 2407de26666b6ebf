import re

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion, printed after any run."""
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            match = _CRITERION.search(getattr(report, "nodeid", ""))
            if match:
                number = int(match.group(1))
                title = match.group(2).replace("_", " ")
                verdict = "PASS" if outcome == "passed" else "FAIL"
                lines[number] = f"acceptance criterion {number:2d} [{verdict}] {title}"
    if lines:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance summary:")
        for number in sorted(lines):
            terminalreporter.write_line("  " + lines[number])
