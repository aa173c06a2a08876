import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from vnspectral.algebra import TracedAlgebra
from vnspectral.hilbert_module import AMatrix

# derandomized so repeated runs see the same examples
settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@st.composite
def traced_algebras(draw, max_blocks=3, max_n=3):
    """Random blocks ``(n_i, w_i)`` with ``sum w_i n_i = 1``."""
    m = draw(st.integers(1, max_blocks))
    dims = draw(st.lists(st.integers(1, max_n), min_size=m, max_size=m))
    raw = draw(st.lists(st.floats(0.1, 1.0), min_size=m, max_size=m))
    total = float(np.dot(raw, dims))
    return TracedAlgebra(tuple((n, w / total) for n, w in zip(dims, raw)))


@st.composite
def amatrices(draw, hermitian=True, max_k=4, max_blocks=3, max_n=3):
    alg = draw(traced_algebras(max_blocks, max_n))
    k = draw(st.integers(1, max_k))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return AMatrix.random(alg, k, np.random.default_rng(seed), hermitian=hermitian)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
