import itertools

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from quenchdual.instance import Instance

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def naive_value(terms, v):
    """Direct sum over terms with Python arithmetic."""
    total = 0
    for idx, sign in terms:
        prod = sign
        for i in idx:
            prod = prod * v[i]
        total += prod
    return total


@st.composite
def small_instances(draw, n_min=2, n_max=8, k_values=(2, 3, 4)):
    """Arbitrary (possibly non-regular) instances with at least one term."""
    k = draw(st.sampled_from([k for k in k_values if k <= n_max]))
    n = draw(st.integers(max(n_min, k), n_max))
    pool = list(itertools.combinations(range(n), k))
    chosen = draw(st.lists(st.sampled_from(pool), min_size=1, max_size=min(len(pool), 12), unique=True))
    signs = draw(st.lists(st.sampled_from([-1, 1]), min_size=len(chosen), max_size=len(chosen)))
    return Instance.from_terms(n, k, list(zip(chosen, signs)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[num])
