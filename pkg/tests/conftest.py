import numpy as np
import pytest


# Five points in the plane shaped like the small worked example: two tight
# points on the left, three looser ones on the right.
FIVE_POINTS = np.array([
    [1.0, 1.0],
    [1.3, 1.2],
    [3.0, 3.0],
    [3.7, 2.8],
    [3.3, 3.8],
])


@pytest.fixture
def five_points():
    return FIVE_POINTS.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_orthogonal(rng, p):
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    return q * np.sign(np.diag(r))


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion, then assert it."""
    def record(number, title, ok, detail):
        ACCEPTANCE_LINES.append((number, f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"))
        print(ACCEPTANCE_LINES[-1][1])
        assert ok, detail
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
