import numpy as np
import pytest

from mhpbayes.kernels import seeded_rng


@pytest.fixture
def rng():
    return seeded_rng(20240601)


def assert_mean_within(draws, expected, k=4.0):
    draws = np.asarray(draws, float)
    se = draws.std(ddof=1) / np.sqrt(draws.size)
    assert abs(draws.mean() - expected) < k * se, (draws.mean(), expected, se)


def assert_var_within(draws, expected, k=4.0):
    """Sample variance vs ``expected`` using the SE of squared deviations."""
    draws = np.asarray(draws, float)
    dev2 = (draws - draws.mean()) ** 2
    se = dev2.std(ddof=1) / np.sqrt(draws.size)
    assert abs(dev2.mean() - expected) < k * se, (dev2.mean(), expected, se)


# One line per acceptance criterion, printed in the terminal summary.
ACCEPTANCE = []


def record_verdict(number, title, ok, detail=""):
    """Log a criterion outcome; ``ok=None`` marks it skipped."""
    status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    line = f"criterion {number:>2} {status}  {title}" + (f"  [{detail}]" if detail else "")
    ACCEPTANCE.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
