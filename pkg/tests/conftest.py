import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cdsta.hamiltonians import spin1_model, spin2_model


def hermitian_matrices(max_dim=5):
    """Random dense Hermitian matrices with bounded entries."""
    floats = st.floats(-3, 3, allow_nan=False, allow_infinity=False)

    @st.composite
    def build(draw):
        n = draw(st.integers(1, max_dim))
        re = draw(arrays(float, (n, n), elements=floats))
        im = draw(arrays(float, (n, n), elements=floats))
        a = re + 1j * im
        return 0.5 * (a + a.conj().T)

    return build()


@pytest.fixture(scope="session")
def spin1():
    return spin1_model(2.0)


@pytest.fixture(scope="session")
def spin2():
    return spin2_model()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
