import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdilation.algebra import Algebra
from qdilation.cpmaps import (
    KrausMap,
    cb_norm_combination_bound,
    cb_norm_cp,
    choi,
    kraus_from_choi,
    left_mult_pvar,
    left_mult_pvar_check,
    orthogonal_family_gap,
    random_cp_map,
    schatten_counter_probe,
    schatten_norm,
    stinespring,
    trace_weights,
    two_variation_bound_check,
)
from qdilation.errors import ContractError
from qdilation.projection import as_projection, random_orthogonal_partition, random_projection


def identity_channel(n):
    return KrausMap((np.eye(n),))


def test_choi_identity_channel():
    c = choi(identity_channel(2))
    omega = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(c, 2 * np.outer(omega, omega))
    assert np.linalg.matrix_rank(c) == 1


def test_choi_zero_map():
    z = KrausMap((np.zeros((2, 3)),))
    assert np.all(choi(z) == 0)
    assert cb_norm_cp(kraus_from_choi(choi(z), 3, 2)) == 0.0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 4), d=st.integers(1, 4), m=st.integers(1, 4))
def test_choi_round_trip(seed, n, d, m):
    psi = random_cp_map(n, d, m, seed)
    c = choi(psi)
    assert np.min(np.linalg.eigvalsh(c)) >= -1e-10
    back = kraus_from_choi(c, n, d)
    assert np.max(np.abs(choi(back) - c)) <= 1e-9
    assert len(back.kraus) <= min(m, n * d)


def test_kraus_from_choi_rejects_non_psd():
    c = -np.eye(4)
    with pytest.raises(ContractError):
        kraus_from_choi(c, 2, 2)


def test_stinespring_identity_channel():
    st_ = stinespring(identity_channel(3))
    assert st_.hat_dim == 3
    assert np.allclose(st_.V1, np.eye(3))
    e = np.zeros((3, 3))
    e[0, 1] = 1
    assert np.allclose(st_.pi(e), e)


def test_stinespring_depolarizing():
    n = 2
    units = []
    for i in range(n):
        for j in range(n):
            k = np.zeros((n, n))
            k[i, j] = 1 / np.sqrt(n)
            units.append(k)
    psi = KrausMap(tuple(units))
    a = np.array([[1.0, 2.0], [3.0, 4.0j]])
    assert np.allclose(psi(a), np.trace(a) * np.eye(n) / n)
    st_ = stinespring(psi)
    assert st_.reconstruction_residual(psi) <= 1e-10
    assert st_.homomorphism_residual() <= 1e-10


@pytest.mark.parametrize("seed", range(4))
def test_stinespring_random(seed):
    psi = random_cp_map(3, 2, 3, seed)
    st_ = stinespring(psi)
    assert st_.hat_dim == 9
    assert st_.reconstruction_residual(psi) <= 1e-10
    assert st_.homomorphism_residual() <= 1e-10
    assert np.linalg.norm(st_.V1, 2) * np.linalg.norm(st_.V2, 2) == pytest.approx(cb_norm_cp(psi), abs=1e-8)
    assert np.linalg.norm(st_.V1, 2) ** 2 == pytest.approx(cb_norm_cp(psi), abs=1e-9)
    concrete = st_.concrete(psi.algebra)
    assert concrete.consistency_residual(psi.as_operator_map()) <= 1e-10


def test_stinespring_rejects_non_cp():
    with pytest.raises(ContractError):
        stinespring(np.eye(2))


def test_cb_norm_examples():
    assert cb_norm_cp(identity_channel(3)) == pytest.approx(1.0)
    assert cb_norm_cp(random_cp_map(3, 3, 3, 0, channel=True)) == pytest.approx(1.0, abs=1e-12)
    assert cb_norm_cp(identity_channel(3).scaled(2.0)) == pytest.approx(2.0)
    with pytest.raises(ContractError):
        cb_norm_cp("not a map")


def test_cb_combination_bound():
    a, b = random_cp_map(2, 2, 2, 0), random_cp_map(2, 2, 2, 1)
    bound = cb_norm_combination_bound([(1.0, a), (-0.5j, b)])
    assert bound == pytest.approx(cb_norm_cp(a) + 0.5 * cb_norm_cp(b))
    # the difference map at the identity never exceeds the bound
    diff = a(np.eye(2)) + 0.5j * b(np.eye(2))
    assert np.linalg.norm(diff, 2) <= bound + 1e-12


def test_two_variation_identity_channel():
    rep = two_variation_bound_check(identity_channel(3), budget=8, samples=4)
    assert rep["max_estimate"] <= 1 + 1e-6
    assert rep["holds"]


def test_two_variation_zero():
    rep = two_variation_bound_check(KrausMap((np.zeros((3, 3)),)), budget=2, samples=2)
    assert rep["max_estimate"] == 0.0 and rep["cb_norm"] == 0.0 and rep["holds"]


def test_two_variation_random():
    rep = two_variation_bound_check(random_cp_map(3, 3, 3, 7), budget=8, samples=4)
    assert rep["slack"] >= -1e-6


def test_kraus_json():
    psi = random_cp_map(3, 2, 2, 0)
    obj = psi.to_json()
    assert (obj["n"], obj["d"], len(obj["kraus"])) == (3, 2, 2)
    back = KrausMap.from_json(obj)
    assert all(np.array_equal(a, b) for a, b in zip(back.kraus, psi.kraus))


# -- Schatten -----------------------------------------------------------------

@pytest.mark.parametrize("p", [1.0, 2.0, 3.0, 7.5])
def test_schatten_identity(m3, p):
    assert schatten_norm(m3.identity(), p) == pytest.approx(3 ** (1 / p))


def test_schatten_diagonal():
    alg = Algebra.parse("2")
    assert schatten_norm(alg.element([np.diag([1.0, 2.0])]), 2) == pytest.approx(np.sqrt(5))


def test_schatten_normalized_trace(m2m3):
    w = trace_weights(m2m3, "normalized")
    assert schatten_norm(m2m3.identity(), 3, w) == pytest.approx(1.0)
    with pytest.raises(ContractError):
        trace_weights(m2m3, "bogus")
    with pytest.raises(ContractError):
        schatten_norm(m2m3.identity(), 2, [1.0, -1.0])


def test_schatten_rejects_small_p(m3):
    with pytest.raises(ContractError):
        schatten_norm(m3.identity(), 0.5)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), p=st.floats(1.0, 8.0), spec=st.sampled_from(["3", "2,3"]))
def test_schatten_holder(seed, p, spec):
    alg = Algebra.parse(spec)
    rng = np.random.default_rng(seed)
    a = alg.element([rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for n in alg.blocks])
    tau_i = float(alg.matrix_dim)
    assert schatten_norm(a, p) <= tau_i ** (1 / p) * a.op_norm() * (1 + 1e-12)


def test_family_inequality_equality_case(m3):
    parts = random_orthogonal_partition(as_projection(m3.identity()), 3, 0)
    rep = orthogonal_family_gap(parts, m3.identity(), 2)
    assert rep["lhs"] == pytest.approx(np.sqrt(3))
    assert rep["gap"] == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), p=st.sampled_from([2.0, 2.5, 3.0, 4.0]))
def test_family_inequality_p_at_least_2(seed, p):
    alg = Algebra.parse("2,3")
    rng = np.random.default_rng(seed)
    top = random_projection(alg, rng)
    if top.rank == 0:
        top = as_projection(alg.identity())
    fam = random_orthogonal_partition(top, int(rng.integers(1, top.rank + 1)), rng)
    y = alg.element([rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for n in alg.blocks])
    y = y * (1 / schatten_norm(y, p))
    assert orthogonal_family_gap(fam, y, p)["gap"] <= 1e-10
    assert orthogonal_family_gap([fam[0]], y, p)["gap"] <= 1e-10


def test_family_inequality_rejects_overlap(m3):
    p = random_projection(m3, 0, ranks=[2])
    with pytest.raises(ContractError):
        orthogonal_family_gap([p, p], m3.identity(), 2)


def test_counter_probe_below_2():
    rep = schatten_counter_probe(1.5)
    assert rep["violates"]
    assert rep["lhs"] == pytest.approx(2 ** (1 / 1.5 - 0.5))
    assert not schatten_counter_probe(2.0)["violates"]
    assert not schatten_counter_probe(3.0)["violates"]


def test_left_mult_check_small():
    rep = left_mult_pvar_check(Algebra.parse("3"), 3, budget=4, samples=3, family_trials=50)
    assert rep["holds"]
    assert rep["max_estimate"] == pytest.approx(1.0, abs=1e-6)


def test_left_mult_rejects_p_below_2(m3):
    with pytest.raises(ContractError):
        left_mult_pvar_check(m3, 1.5)


def test_left_mult_single_projection(m2m3):
    p = random_projection(m2m3, 1, ranks=[1, 1])
    est = left_mult_pvar(m2m3, p, 2, budget=4)
    assert est.value == pytest.approx(1.0, abs=1e-6)
