"""Projections of a finite-dimensional algebra and their lattice operations."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .algebra import Algebra, AlgebraElement, haar_unitary
from .errors import ContractError

__all__ = [
    "PROJECTION_TOL",
    "RANK_CUTOFF",
    "Projection",
    "as_projection",
    "is_projection",
    "projection_onto",
    "range_basis",
    "is_orthogonal",
    "join",
    "meet",
    "random_projection",
    "random_orthogonal_partition",
    "spectral_projections",
]

PROJECTION_TOL = 1e-10
RANK_CUTOFF = 1e-9


class Projection(AlgebraElement):
    """A self-adjoint idempotent element.  Build with :func:`as_projection`."""

    @property
    def rank(self) -> int:
        return int(round(self.trace().real))

    def complement(self) -> "Projection":
        return Projection(self.algebra, tuple(np.eye(b.shape[0]) - b for b in self.blocks))

    def block_ranks(self) -> list[int]:
        return [int(round(np.trace(b).real)) for b in self.blocks]

    def to_json(self) -> dict:
        out = super().to_json()
        out["rank"] = self.rank
        return out

    @classmethod
    def from_json(cls, algebra: Algebra, obj: dict) -> "Projection":
        return as_projection(AlgebraElement.from_json(algebra, obj), tol=1e-8)

    def __repr__(self):
        return f"Projection(blocks={self.algebra.blocks}, rank={self.rank})"


def is_projection(a: AlgebraElement, tol: float = PROJECTION_TOL) -> bool:
    return (a @ a).distance(a) <= tol and a.distance(a.adjoint()) <= tol


def as_projection(a: AlgebraElement, tol: float = PROJECTION_TOL) -> Projection:
    if isinstance(a, Projection):
        return a
    if not is_projection(a, tol):
        raise ContractError("element is not a projection within tolerance")
    return Projection(a.algebra, a.blocks)


def projection_onto(alg: Algebra, bases: Sequence[np.ndarray | None]) -> Projection:
    """Projection onto the span of orthonormal columns given per block."""
    blocks = []
    for n, w in zip(alg.blocks, bases):
        if w is None or np.size(w) == 0:
            blocks.append(np.zeros((n, n), dtype=complex))
        else:
            w = np.asarray(w, dtype=complex).reshape(n, -1)
            blocks.append(w @ w.conj().T)
    return Projection(alg, tuple(blocks))


def range_basis(p: AlgebraElement) -> list[np.ndarray]:
    """Orthonormal basis (columns) of the range of ``p`` in each block."""
    out = []
    for b in p.blocks:
        vals, vecs = np.linalg.eigh((b + b.conj().T) / 2)
        out.append(vecs[:, vals > 0.5])
    return out


def _require(*ps):
    for p in ps:
        if not isinstance(p, Projection) and not is_projection(p):
            raise ContractError("expected a projection")


def is_orthogonal(p: AlgebraElement, q: AlgebraElement, tol: float = PROJECTION_TOL) -> bool:
    _require(p, q)
    return (p @ q).op_norm() <= tol


def join(p: AlgebraElement, q: AlgebraElement, cutoff: float = RANK_CUTOFF) -> Projection:
    """Projection onto ``range(p) + range(q)``."""
    _require(p, q)
    bases = []
    for a, b in zip(p.blocks, q.blocks):
        u, s, _ = np.linalg.svd(np.hstack([a, b]))
        bases.append(u[:, s > cutoff])
    return projection_onto(p.algebra, bases)


def meet(p: AlgebraElement, q: AlgebraElement, cutoff: float = RANK_CUTOFF) -> Projection:
    one = p.algebra.identity()
    return as_projection(one - join(one - p, one - q, cutoff), tol=1e-8)


def random_projection(alg: Algebra, seed=None, ranks: Sequence[int] | None = None) -> Projection:
    """Haar-random projection; block ranks are drawn uniformly unless given."""
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    if ranks is None:
        ranks = [int(rng.integers(0, n + 1)) for n in alg.blocks]
    return projection_onto(alg, [haar_unitary(n, rng)[:, :r] for n, r in zip(alg.blocks, ranks)])


def random_orthogonal_partition(p: AlgebraElement, parts: int, seed=None) -> list[Projection]:
    """Split ``p`` into ``parts`` nonzero mutually orthogonal projections.

    A Haar-random orthonormal basis of ``range(p)`` is drawn blockwise and its
    vectors are dealt into ``parts`` nonempty groups at random.
    """
    _require(p)
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    cols = []
    for k, w in enumerate(range_basis(p)):
        r = w.shape[1]
        if r:
            w = w @ haar_unitary(r, rng)
            cols.extend((k, w[:, c]) for c in range(r))
    if parts < 1 or parts > len(cols):
        raise ContractError(f"cannot split a rank-{len(cols)} projection into {parts} parts")
    labels = _random_surjection(len(cols), parts, rng)
    out = []
    for g in range(parts):
        bases = [[] for _ in p.algebra.blocks]
        for (k, v), lab in zip(cols, labels):
            if lab == g:
                bases[k].append(v)
        out.append(projection_onto(p.algebra, [np.array(b).T if b else None for b in bases]))
    return out


def _random_surjection(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    labels = np.empty(n, dtype=int)
    perm = rng.permutation(n)
    labels[perm[:m]] = np.arange(m)
    labels[perm[m:]] = rng.integers(0, m, size=n - m)
    return labels


def spectral_projections(h: AlgebraElement, merge_tol: float = 1e-8) -> list[tuple[float, Projection]]:
    """Eigenvalue/eigenprojection pairs of a self-adjoint element, ascending.

    Eigenvalues closer than ``merge_tol`` (also across blocks) share one
    projection.
    """
    if not h.is_self_adjoint(1e-9):
        raise ContractError("spectral_projections needs a self-adjoint element")
    items = []
    for k, b in enumerate(h.blocks):
        vals, vecs = np.linalg.eigh((b + b.conj().T) / 2)
        items.extend((float(vals[c]), k, vecs[:, c]) for c in range(len(vals)))
    items.sort(key=lambda t: t[0])
    groups: list[list] = []
    for it in items:
        if groups and it[0] - groups[-1][-1][0] < merge_tol:
            groups[-1].append(it)
        else:
            groups.append([it])
    out = []
    for g in groups:
        bases = [[] for _ in h.algebra.blocks]
        for _, k, v in g:
            bases[k].append(v)
        lam = float(np.mean([it[0] for it in g]))
        out.append((lam, projection_onto(h.algebra, [np.array(b).T if b else None for b in bases])))
    return out
