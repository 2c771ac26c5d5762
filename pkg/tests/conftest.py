import numpy as np
import pytest

from tomofeat.sampling import SamplingSpec, make_subset, spec_for_grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_spec():
    """8 angles of a 16-angle grid, 25 offsets on [-1.5, 1.5]."""
    return make_subset(SamplingSpec(40.0, 16, 12, 1.5), 8)


@pytest.fixture(scope="session")
def full_spec():
    """Fully sampled geometry of the experiments: 301 offsets on [-1.5, 1.5], 472 angles."""
    return spec_for_grid(150, 1.5)


_CRITERIA_KEY = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one pass/fail line per acceptance criterion (printed in the summary)."""
    lines = request.config.stash.setdefault(_CRITERIA_KEY, [])

    def _report(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
