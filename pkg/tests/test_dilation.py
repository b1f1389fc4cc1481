import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import identity_map, trace_map
from qdilation.algebra import Algebra, evaluate_on_witnesses
from qdilation.dilation import (
    ConcreteDilation,
    ElementaryGenerator,
    build_elementary_space,
    elementary_norm,
    induced_contraction,
    induced_dilation_norm,
    invariance_residual,
    jordan_check,
    map_S,
    map_T,
    map_V,
    verify_dilation,
)
from qdilation.errors import ContractError
from qdilation.measure import OperatorMap, measure_norm, random_operator_map
from qdilation.projection import as_projection, random_orthogonal_partition, random_projection


@pytest.fixture(scope="module")
def id_space():
    return build_elementary_space(identity_map(Algebra.parse("3")), 16, 0)


@pytest.fixture(scope="module")
def rand_space():
    return build_elementary_space(random_operator_map(Algebra.parse("2,3"), 2, 5), 16, 1)


def test_identity_map_space_dimension(id_space):
    # R -> R Q x only depends on the vector Q x, so the span is {R -> R v}
    assert id_space.dim == 3
    assert id_space.saturated


def test_zero_map_space():
    space = build_elementary_space(OperatorMap.zero(Algebra.parse("3"), 2), 4)
    assert space.dim == 0
    assert map_S(space, np.zeros(0)).shape == (2,)


def test_trace_map_space_dimension():
    space = build_elementary_space(trace_map(Algebra.parse("3"), 3), 16)
    assert space.dim == 27


def test_generators_in_span(rand_space):
    assert rand_space.dim <= rand_space.d * rand_space.algebra.total_dim
    for g in rand_space.generators:
        assert rand_space.span_residual(g.concrete(rand_space.source)) <= 1e-9


def test_generator_contract():
    alg = Algebra.parse("2")
    with pytest.raises(ContractError):
        ElementaryGenerator(alg.identity() * 2.0, np.ones(2))
    with pytest.raises(ContractError):
        build_elementary_space(identity_map(alg), 0)


def test_S_examples(id_space, rand_space):
    x = np.array([1.0, -2.0, 0.5j])
    assert np.allclose(map_S(id_space, map_T(id_space, x)), x)
    assert np.all(map_S(id_space, np.zeros(id_space.dim)) == 0)
    g = rand_space.generators[-1]
    assert np.allclose(map_S(rand_space, rand_space.generator_coords(g)), rand_space.source.apply(g.Q) @ g.x)


def test_S_rejects_bad_coords(id_space):
    with pytest.raises(ContractError):
        map_S(id_space, np.zeros(id_space.dim + 1))


def test_T_examples(id_space, rand_space):
    assert np.all(map_T(id_space, np.zeros(3)) == 0)
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        want = rand_space.source.apply(rand_space.algebra.identity()) @ x
        assert np.allclose(map_S(rand_space, map_T(rand_space, x)), want)
    col = id_space.concrete(map_T(id_space, np.eye(3)[0]))
    r = np.random.default_rng(1).standard_normal((3, 3))
    assert np.allclose(col @ r.reshape(-1), r[:, 0])


def test_V_examples(rand_space):
    alg = rand_space.algebra
    assert np.allclose(map_V(rand_space, alg.identity()), np.eye(rand_space.dim), atol=1e-12)
    rng = np.random.default_rng(2)
    for _ in range(10):
        p = random_projection(alg, rng)
        v = map_V(rand_space, p)
        assert np.linalg.norm(v @ v - v, 2) <= 1e-10
        assert invariance_residual(rand_space, p) <= 1e-10
        q = random_projection(alg, rng, ranks=[2, 2])
        p1, p2 = random_orthogonal_partition(q, 2, rng)
        assert np.linalg.norm(map_V(rand_space, q) - map_V(rand_space, p1) - map_V(rand_space, p2), 2) <= 1e-10


def test_V_is_precomposition(rand_space):
    rng = np.random.default_rng(3)
    p = random_projection(rand_space.algebra, rng)
    phi = rand_space.random_element(rng)
    r = rng.standard_normal(rand_space.algebra.total_dim)
    lhs = rand_space.concrete(map_V(rand_space, p) @ phi) @ r
    rhs = rand_space.concrete(phi) @ (rand_space.algebra.from_flat(r) @ p).flatten()
    assert np.allclose(lhs, rhs)


def test_E_norm_examples(id_space):
    assert elementary_norm(id_space, np.zeros(id_space.dim)) == 0.0
    x = np.array([3.0, 4.0j, 0.0])
    assert elementary_norm(id_space, map_T(id_space, x), 8) == pytest.approx(5.0, abs=1e-6)


def test_E_norm_generator_bound(rand_space):
    mu = measure_norm(rand_space.source.restrict(), 8)
    rng = np.random.default_rng(4)
    for _ in range(5):
        idx = rng.choice(len(rand_space.generators), 3, replace=False)
        coeffs = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        phi = sum(c * rand_space.generator_coords(rand_space.generators[i]) for c, i in zip(coeffs, idx))
        bound = 4 * mu * sum(abs(c) * abs(rand_space.generators[i].C) * np.linalg.norm(rand_space.generators[i].x)
                             for c, i in zip(coeffs, idx))
        assert elementary_norm(rand_space, phi, 8) <= bound + 1e-6


def test_E_norm_homogeneity_and_triangle(rand_space):
    rng = np.random.default_rng(5)
    phi, psi = rand_space.random_element(rng), rand_space.random_element(rng)
    alg = rand_space.algebra
    _, w = elementary_norm(rand_space, phi, 6, return_witness=True)
    pool = [w, alg.identity()]
    a = evaluate_on_witnesses(rand_space.concrete(phi), alg, pool)[0]
    b = evaluate_on_witnesses(rand_space.concrete((2 - 3j) * phi), alg, pool)[0]
    assert b == pytest.approx(abs(2 - 3j) * a, rel=1e-12)
    s, ws = elementary_norm(rand_space, phi + psi, 6, return_witness=True)
    e1 = elementary_norm(rand_space, phi, 6, witnesses=[ws])
    e2 = elementary_norm(rand_space, psi, 6, witnesses=[ws])
    assert s <= e1 + e2 + 2e-6


def test_verify_dilation(rand_space):
    rep = verify_dilation(rand_space, trials=30, seed=0, budget=4, norm_trials=5)
    assert rep.identity_residual <= 1e-10
    assert rep.idempotency_residual <= 1e-10
    assert rep.additivity_residual <= 1e-10
    assert rep.bounds_ok
    d = rep.to_dict()
    assert type(d["S_norm"]) is float and type(d["bounds_ok"]) is bool


def _identity_concrete(alg):
    return ConcreteDilation(identity_map(alg), np.eye(alg.matrix_dim), np.eye(alg.matrix_dim))


def test_induced_norm_injective_S(id_space):
    alg = id_space.algebra
    concrete = _identity_concrete(alg)
    assert induced_dilation_norm(id_space, concrete, np.zeros(id_space.dim)) == 0.0
    rng = np.random.default_rng(6)
    for _ in range(3):
        phi = id_space.random_element(rng)
        d_norm = induced_dilation_norm(id_space, concrete, phi, 8)
        assert d_norm == pytest.approx(elementary_norm(id_space, phi, 8), abs=1e-6)


def test_induced_contraction(id_space):
    concrete = _identity_concrete(id_space.algebra)
    rng = np.random.default_rng(7)
    for _ in range(5):
        phi = id_space.random_element(rng)
        w = np.linalg.norm(induced_contraction(id_space, concrete, phi))
        assert w <= induced_dilation_norm(id_space, concrete, phi, 8) + 1e-6


def test_induced_rejects_inconsistent(id_space):
    bad = ConcreteDilation(identity_map(id_space.algebra), 2 * np.eye(3), np.eye(3))
    with pytest.raises(ContractError):
        induced_dilation_norm(id_space, bad, np.zeros(id_space.dim))


@pytest.mark.parametrize("spec", ["3", "2,3"])
def test_jordan(spec):
    alg = Algebra.parse(spec)
    space = build_elementary_space(random_operator_map(alg, 2, 11), 8, 2)
    rep = jordan_check(space, trials=10, seed=1)
    assert rep["idempotency_residual"] <= 1e-10
    assert rep["anticommutator"] <= 1e-8
    assert rep["jordan_residual"] <= 1e-7
    assert rep["extension_residual"] <= 1e-8


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_dilation_identity_property(seed):
    alg = Algebra.parse("1,2")
    ubar = random_operator_map(alg, 2, seed)
    space = build_elementary_space(ubar, 8, seed)
    rng = np.random.default_rng(seed)
    p = as_projection(random_projection(alg, rng))
    x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    assert np.linalg.norm(ubar.apply(p) @ x - map_S(space, map_V(space, p) @ map_T(space, x))) <= 1e-10
