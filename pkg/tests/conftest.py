import numpy as np
import pytest

from pacbound import finite_model as fm


def random_model(seed, N=30, H=10, p=0.3, dirichlet=False):
    rng = np.random.default_rng(seed)
    rates = rng.uniform(0.05, 0.6, H)
    L = (rng.random((N, H)) < rates).astype(int)
    if dirichlet:
        return fm.FiniteHypothesisClass.from_weights(rng.dirichlet(np.ones(H)), L)
    return fm.FiniteHypothesisClass.uniform(L)


@pytest.fixture
def make_model():
    return random_model


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        passed, detail = mod.RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
