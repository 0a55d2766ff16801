import itertools

import numpy as np
import pytest


def brute_force_pmf(probs):
    """Poisson binomial pmf by enumerating all 2**n outcomes."""
    probs = np.asarray(probs, dtype=float)
    n = probs.shape[0]
    pmf = np.zeros(n + 1)
    for bits in itertools.product((0, 1), repeat=n):
        b = np.array(bits)
        pmf[b.sum()] += np.prod(np.where(b == 1, probs, 1.0 - probs))
    return pmf


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    def _record(criterion, ok, detail):
        status = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
        line = f"criterion {criterion:>4}: {status:<7} {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
