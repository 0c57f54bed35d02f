import numpy as np
import pytest
from hypothesis import settings

from _support import ACCEPTANCE_RESULTS
from toeplitz_qrng import ExtractorDims, Seed

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def small_case():
    """The m=2, n=4, k=2 worked example."""
    return ExtractorDims(2, 4, 2), Seed([1, 0, 1, 1, 0])
