from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume
from hypothesis import strategies as st

from rmcurve.curve import branch_points, cut_structure, validate_spec
from rmcurve.errors import DegenerateCurveError

SEMICIRCLE = ([0.0], [Fraction(1)])
TWO_CUT = ([-2.0, 2.0], [Fraction(1, 2), Fraction(1, 2)])
# l = 1 < k = 2: the two intervals have merged into one cut.
MERGED = ([-0.5, 0.5], [Fraction(1, 2), Fraction(1, 2)])
THREE_CUT = ([-3.0, 0.0, 3.0], [Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)])


def make(spec_args):
    return validate_spec(*spec_args)


def is_regular(spec) -> bool:
    try:
        branch_points(spec)
        cut_structure(spec)
    except DegenerateCurveError:
        return False
    return True


def random_spec(rng: np.random.Generator, k_max: int = 4, k_min: int = 2):
    """A random non-critical spec with k_min <= k <= k_max and separated eigenvalues."""
    while True:
        k = int(rng.integers(k_min, k_max + 1))
        a = np.sort(rng.uniform(-4.0, 4.0, k))
        if k > 1 and np.diff(a).min() < 0.3:
            continue
        w = rng.integers(1, 5, k)
        spec = validate_spec(a, [Fraction(int(v), int(w.sum())) for v in w])
        if is_regular(spec):
            return spec


@st.composite
def specs(draw, k_max: int = 3, real_only: bool = False):
    """Hypothesis strategy for non-critical curve specs."""
    k = draw(st.integers(1, k_max))
    a = draw(
        st.lists(
            st.floats(-4.0, 4.0, allow_nan=False, allow_infinity=False),
            min_size=k,
            max_size=k,
        ).filter(lambda v: len(v) < 2 or np.diff(np.sort(v)).min() > 0.3)
    )
    w = draw(st.lists(st.integers(1, 4), min_size=k, max_size=k))
    spec = validate_spec(a, [Fraction(v, sum(w)) for v in w])
    assume(is_regular(spec))
    if real_only:
        assume(branch_points(spec).is_real)
    return spec


@pytest.fixture(scope="session")
def semicircle():
    return make(SEMICIRCLE)


@pytest.fixture(scope="session")
def two_cut():
    return make(TWO_CUT)


@pytest.fixture(scope="session")
def merged():
    return make(MERGED)


@pytest.fixture(scope="session")
def three_cut():
    return make(THREE_CUT)


# One PASS/FAIL line per acceptance criterion, printed after the run.
_CRITERIA: list[str] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    number, title = marker.args
    measured = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    verdict = "PASS" if rep.passed else "FAIL"
    line = f"[{verdict}] criterion {number}: {title}"
    _CRITERIA.append(f"{line} ({measured})" if measured else line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
