import numpy as np
import pytest

from qdilation.algebra import Algebra
from qdilation.measure import OperatorMap


def identity_map(alg: Algebra) -> OperatorMap:
    """The inclusion of a one-block algebra ``M_n`` into ``B(C^n)``."""
    return OperatorMap.from_function(alg, alg.matrix_dim, lambda e: e.dense())


def trace_map(alg: Algebra, d: int) -> OperatorMap:
    return OperatorMap.from_function(alg, d, lambda e: e.trace() * np.eye(d))


def scalar_measure(values) -> OperatorMap:
    """Scalar measure on the diagonal algebra with the given atom values."""
    vals = np.asarray(values, dtype=complex)
    return OperatorMap(Algebra.abelian(len(vals)), 1, vals.reshape(-1, 1, 1))


@pytest.fixture
def m3():
    return Algebra.parse("3")


@pytest.fixture
def m2m3():
    return Algebra.parse("2,3")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results):
        terminalreporter.write_line(results[key])
