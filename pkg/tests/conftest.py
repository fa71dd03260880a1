import numpy as np
import pytest

from bregman_voronoi import divergence as dv

# generators with closed-form gradient inverse and conjugate
ANALYTIC = ("squared_norm", "squared_half_norm", "shannon", "exponential", "burg",
            "bit_entropy", "dual_bit_entropy", "hellinger_like")

MAHALANOBIS_Q = [[2.0, 0.6], [0.6, 1.0]]

# criterion number -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def gen2(name: str) -> dv.Generator:
    if name == "mahalanobis":
        return dv.mahalanobis(MAHALANOBIS_Q)
    return dv.generator_from_spec({"name": name, "dim": 2})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
