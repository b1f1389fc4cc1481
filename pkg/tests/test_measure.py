import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import identity_map, trace_map
from qdilation.algebra import Algebra
from qdilation.errors import ContractError, MeasureLookupError, UnderdeterminedError
from qdilation.measure import (
    OperatorMap,
    QuantumMeasure,
    TypeI2Warning,
    bloch_vector,
    check_additivity,
    extension_norm_bracket,
    gleason_extend,
    m2_bloch_cubic_measure,
    measure_norm,
    random_operator_map,
    tabulate,
)
from qdilation.projection import as_projection, random_projection


def spanning_table(ubar, count=50, seed=0):
    rng = np.random.default_rng(seed)
    return tabulate(ubar, [random_projection(ubar.algebra, rng) for _ in range(count)])


def test_evaluate_identity_map(m3):
    u = identity_map(m3).restrict()
    p = random_projection(m3, 0, ranks=[1])
    assert np.allclose(u.evaluate(p), p.blocks[0])


def test_evaluate_zero(m3):
    u = OperatorMap.zero(m3, 2).restrict()
    assert np.all(u.evaluate(m3.identity()) == 0)


@pytest.mark.parametrize("r", [0, 1, 2, 3])
def test_evaluate_trace_map(m3, r):
    u = trace_map(m3, 2).restrict()
    p = random_projection(m3, r, ranks=[r])
    assert np.allclose(u.evaluate(p), r * np.eye(2), atol=1e-12)


def test_tabulated_lookup(m3):
    ubar = random_operator_map(m3, 2, 1)
    table = spanning_table(ubar, 12)
    p = table.projections()[5]
    assert table.lookup(p) == 5
    assert np.allclose(table.evaluate(p), ubar.apply(p))
    with pytest.raises(MeasureLookupError):
        table.evaluate(random_projection(m3, 99, ranks=[1]))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), spec=st.sampled_from(["3", "2,3", "1,1"]))
def test_operator_map_linear(seed, spec):
    alg = Algebra.parse(spec)
    ubar = random_operator_map(alg, 3, seed)
    rng = np.random.default_rng(seed)
    a, b = (alg.element([rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for n in alg.blocks])
            for _ in range(2))
    al, be = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
    lhs = ubar.apply(a * al + b * be)
    assert np.linalg.norm(lhs - al * ubar.apply(a) - be * ubar.apply(b), 2) <= 1e-10


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_linear_maps_are_additive(seed):
    u = random_operator_map(Algebra.parse("2,3"), 2, seed).restrict()
    assert check_additivity(u, 20, seed).max_violation <= 1e-10


def test_bloch_counterexample_is_additive():
    u = m2_bloch_cubic_measure(30)
    rep = check_additivity(u, 1000, 0)
    assert rep.checked >= 30
    assert rep.max_violation <= 1e-12


def test_corrupted_table_detected(m3):
    ubar = random_operator_map(m3, 2, 3)
    rng = np.random.default_rng(0)
    projs = [m3.identity(), m3.zeros()]
    for _ in range(10):
        p = random_projection(m3, rng)
        projs += [p, p.complement()]
    table = tabulate(ubar, projs)
    assert check_additivity(table, 100).max_violation <= 1e-10
    k = next(i for i, p in enumerate(table.projections()) if 0 < p.rank < 3)
    bad = list(table.pairs)
    bad[k] = (bad[k][0], bad[k][1] + 0.1)
    rep = check_additivity(QuantumMeasure(m3, 2, pairs=bad), 100)
    assert rep.max_violation >= 0.09


def test_measure_norm_examples(m3):
    assert measure_norm(identity_map(m3).restrict()) == pytest.approx(1.0, abs=1e-6)
    assert measure_norm(OperatorMap.zero(m3, 2).restrict()) == 0.0
    assert measure_norm(trace_map(m3, 2).restrict()) == pytest.approx(3.0, abs=1e-6)


def test_gleason_identity_round_trip(m3):
    ubar = identity_map(m3)
    ext, res = gleason_extend(spanning_table(ubar, 50))
    assert res <= 1e-8
    assert np.max(np.abs(ext.values - ubar.values)) <= 1e-8


def test_gleason_zero(m3):
    ext, res = gleason_extend(spanning_table(OperatorMap.zero(m3, 2), 30))
    assert res == 0.0
    assert np.all(np.abs(ext.values) == 0)


def test_gleason_bloch_counterexample_fails():
    u = m2_bloch_cubic_measure(20)
    with pytest.warns(TypeI2Warning):
        _, res = gleason_extend(u)
    assert res > 0.05


def test_bloch_values():
    u = m2_bloch_cubic_measure(10, seed=4)
    for p, v in u.pairs:
        if p.rank == 1:
            assert v[0, 0].real == pytest.approx(bloch_vector(p.blocks[0])[0] ** 3)
    # no 2x2 functional reproduces the sample: least squares over tr(A P)
    design = np.array([p.flatten() for p, _ in u.pairs])
    rhs = np.array([v[0, 0] for _, v in u.pairs])
    sol, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    assert np.max(np.abs(design @ sol - rhs)) > 0.05


def test_gleason_underdetermined(m3):
    table = tabulate(identity_map(m3), [m3.identity(), random_projection(m3, 1, ranks=[1])])
    with pytest.raises(UnderdeterminedError) as info:
        gleason_extend(table)
    assert info.value.rank == 2
    assert info.value.required == 9


def test_gleason_needs_table(m3):
    with pytest.raises(ContractError):
        gleason_extend(identity_map(m3).restrict())


def test_gleason_uniqueness(m2m3):
    ubar = random_operator_map(Algebra.parse("1,3"), 2, 7)
    a, _ = gleason_extend(spanning_table(ubar, 40, seed=1))
    b, _ = gleason_extend(spanning_table(ubar, 40, seed=2))
    assert np.max(np.abs(a.values - b.values)) <= 1e-7


def test_no_warning_without_i2(m3):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        gleason_extend(spanning_table(identity_map(m3), 20))


def test_bracket_examples(m3):
    ubar = identity_map(m3)
    mu, ext, ok = extension_norm_bracket(ubar.restrict(), ubar)
    assert (mu, ext, ok) == (pytest.approx(1.0, abs=1e-6), pytest.approx(1.0, abs=1e-6), True)
    zero = OperatorMap.zero(m3, 2)
    assert extension_norm_bracket(zero.restrict(), zero) == (0.0, 0.0, True)
    tr = trace_map(m3, 2)
    mu, ext, ok = extension_norm_bracket(tr.restrict(), tr)
    assert ext == pytest.approx(3.0, abs=1e-6) and ok


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_bracket_property(seed):
    alg = Algebra.parse("3")
    ubar = random_operator_map(alg, 2, seed)
    table = spanning_table(ubar, 30, seed)
    ext, res = gleason_extend(table)
    assert res <= 1e-8
    mu, en, ok = extension_norm_bracket(table, ext, budget=8, seed=seed)
    assert ok


def test_bracket_rejects_bad_extension(m3):
    table = spanning_table(identity_map(m3), 20)
    with pytest.raises(ContractError):
        extension_norm_bracket(table, trace_map(m3, 3))


def test_measure_json_round_trip(m3):
    ubar = random_operator_map(m3, 2, 0)
    again = QuantumMeasure.from_json(ubar.restrict().to_json())
    assert np.array_equal(again.restriction_of.values, ubar.values)
    table = spanning_table(ubar, 5)
    obj = table.to_json()
    assert obj["kind"] == "tabulated" and len(obj["pairs"]) == 5
    back = QuantumMeasure.from_json(obj)
    assert all(np.allclose(a[1], b[1]) for a, b in zip(back.pairs, table.pairs))


def test_tabulated_requires_projections(m3):
    with pytest.raises(ContractError):
        QuantumMeasure(m3, 1, pairs=[(m3.identity() * 2.0, np.zeros((1, 1)))])
    with pytest.raises(ContractError):
        QuantumMeasure(m3, 1)
    assert as_projection(m3.identity()).rank == 3
