import numpy as np
import pytest
from hypothesis import settings

from kinops import sphere

settings.register_profile("ci", max_examples=25, deadline=None)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def quad16():
    return sphere.build_quadrature(17, 36)


@pytest.fixture(scope="session")
def quad_small():
    return sphere.build_quadrature(8, 16)


def random_directions(rng, k):
    d = rng.standard_normal((k, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


_CRITERIA = {}


@pytest.fixture
def criterion():
    """record(number, title, ok, detail) stores one acceptance line for the summary."""

    def record(number, title, ok, detail=""):
        _CRITERIA[number] = (title, bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
