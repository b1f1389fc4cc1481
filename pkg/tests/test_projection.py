import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdilation.algebra import Algebra
from qdilation.errors import ContractError
from qdilation.projection import (
    Projection,
    as_projection,
    is_orthogonal,
    is_projection,
    join,
    meet,
    projection_onto,
    random_orthogonal_partition,
    random_projection,
    spectral_projections,
)

SPECS = ["3", "2,3", "1,1,2", "4"]


def rank_one(alg, v):
    v = np.asarray(v, dtype=complex)
    return projection_onto(alg, [v[:, None] / np.linalg.norm(v)])


def test_orthogonal_complement(m3):
    p = random_projection(m3, 1, ranks=[1])
    assert is_orthogonal(p, p.complement())
    assert not is_orthogonal(p, p)


def test_orthogonal_eigenvectors(m3):
    rng = np.random.default_rng(0)
    z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    _, vecs = np.linalg.eigh(z + z.conj().T)
    p, q = rank_one(m3, vecs[:, 0]), rank_one(m3, vecs[:, 2])
    assert is_orthogonal(p, q)


def test_orthogonal_rejects_non_projection(m3):
    with pytest.raises(ContractError):
        is_orthogonal(m3.identity() * 2.0, m3.identity())


def test_join_meet_trivial(m2m3):
    p = random_projection(m2m3, 4)
    assert join(p, m2m3.zeros()).distance(p) < 1e-10
    assert meet(p, m2m3.identity()).distance(p) < 1e-9


def test_join_two_lines_in_m2():
    alg = Algebra.parse("2")
    p, q = rank_one(alg, [1, 0]), rank_one(alg, [1, 1j])
    j = join(p, q)
    assert j.distance(alg.identity()) < 1e-10
    assert j.rank == 2
    assert meet(p, q).rank == 0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), spec=st.sampled_from(SPECS))
def test_lattice_laws(seed, spec):
    alg = Algebra.parse(spec)
    rng = np.random.default_rng(seed)
    p, q = random_projection(alg, rng), random_projection(alg, rng)
    assert meet(p, join(p, q)).distance(p) <= 1e-9
    assert join(p, q).distance(join(q, p)) <= 1e-9
    assert meet(p, q).distance(meet(q, p)) <= 1e-9
    assert is_projection(join(p, q)) and is_projection(meet(p, q), 1e-9)


def test_partition_of_identity(m3):
    parts = random_orthogonal_partition(as_projection(m3.identity()), 3, seed=2)
    assert [q.rank for q in parts] == [1, 1, 1]
    total = parts[0] + parts[1] + parts[2]
    assert total.distance(m3.identity()) <= 1e-10


def test_partition_single_part(m2m3):
    p = random_projection(m2m3, 3, ranks=[1, 2])
    (q,) = random_orthogonal_partition(p, 1, seed=1)
    assert q.distance(p) <= 1e-10


def test_partition_too_many_parts(m3):
    p = random_projection(m3, 3, ranks=[2])
    with pytest.raises(ContractError):
        random_orthogonal_partition(p, 3, seed=0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), spec=st.sampled_from(SPECS), data=st.data())
def test_partition_postconditions(seed, spec, data):
    alg = Algebra.parse(spec)
    rng = np.random.default_rng(seed)
    p = random_projection(alg, rng)
    if p.rank == 0:
        p = as_projection(alg.identity())
    m = data.draw(st.integers(1, p.rank))
    parts = random_orthogonal_partition(p, m, rng)
    assert len(parts) == m and all(q.rank >= 1 for q in parts)
    for i, a in enumerate(parts):
        for b in parts[i + 1:]:
            assert is_orthogonal(a, b)
    total = alg.zeros()
    for q in parts:
        total = total + q
    assert total.distance(p) <= 1e-10
    # refining one part keeps the sum
    if parts[0].rank >= 2:
        refined = random_orthogonal_partition(parts[0], 2, rng) + parts[1:]
        total2 = alg.zeros()
        for q in refined:
            total2 = total2 + q
        assert total2.distance(p) <= 1e-10


def test_partition_deterministic(m2m3):
    p = as_projection(m2m3.identity())
    a = random_orthogonal_partition(p, 3, seed=5)
    b = random_orthogonal_partition(p, 3, seed=5)
    assert all(x.distance(y) == 0 for x, y in zip(a, b))


def test_spectral_identity(m3):
    out = spectral_projections(m3.identity())
    assert len(out) == 1
    assert out[0][0] == pytest.approx(1.0)
    assert out[0][1].distance(m3.identity()) < 1e-12


def test_spectral_degenerate(m3):
    h = m3.element([np.diag([1.0, 2.0, 2.0])])
    out = spectral_projections(h)
    assert [lam for lam, _ in out] == pytest.approx([1.0, 2.0])
    assert [q.rank for _, q in out] == [1, 2]


def test_spectral_merges_across_blocks(m2m3):
    h = m2m3.element([np.diag([1.0, 3.0]), np.diag([3.0, 1.0, 5.0])])
    out = spectral_projections(h)
    assert [q.rank for _, q in out] == [2, 2, 1]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), spec=st.sampled_from(SPECS))
def test_spectral_reconstruction(seed, spec):
    alg = Algebra.parse(spec)
    rng = np.random.default_rng(seed)
    blocks = []
    for n in alg.blocks:
        z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        blocks.append(z + z.conj().T)
    h = alg.element(blocks)
    rec = alg.zeros()
    for lam, q in spectral_projections(h):
        rec = rec + q * lam
    assert rec.distance(h) <= 1e-8


def test_spectral_rejects_non_hermitian(m3):
    with pytest.raises(ContractError):
        spectral_projections(m3.element([np.triu(np.ones((3, 3)))]))


def test_projection_json(m2m3):
    p = random_projection(m2m3, 8, ranks=[1, 2])
    obj = p.to_json()
    assert obj["rank"] == 3
    assert Projection.from_json(m2m3, obj).distance(p) == 0


def test_as_projection_rejects(m3):
    with pytest.raises(ContractError):
        as_projection(m3.identity() * 0.5)
