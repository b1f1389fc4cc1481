"""Operator-valued quantum measures and their Gleason extensions."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .algebra import (
    Algebra,
    AlgebraElement,
    matrix_from_json,
    matrix_to_json,
    maximize_convex_over_ball,
    sample_unit_ball,
)
from .errors import ContractError, MeasureLookupError, StructuralError, UnderdeterminedError
from .projection import (
    Projection,
    as_projection,
    is_orthogonal,
    projection_onto,
    random_orthogonal_partition,
    random_projection,
)

__all__ = [
    "TypeI2Warning",
    "OperatorMap",
    "QuantumMeasure",
    "AdditivityReport",
    "tabulate",
    "check_additivity",
    "measure_norm",
    "operator_map_norm",
    "gleason_extend",
    "extension_norm_bracket",
    "random_operator_map",
    "bloch_vector",
    "m2_bloch_cubic_measure",
]

LOOKUP_TOL = 1e-10


class TypeI2Warning(UserWarning):
    """Gleason extension attempted on an algebra with a 2x2 block."""


@dataclass(frozen=True, eq=False)
class OperatorMap:
    """Linear map ``M -> B(C^d)`` stored by its values on the matrix units."""

    algebra: Algebra
    d: int
    values: np.ndarray  # (total_dim, d, d), flat-coordinate order

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        expected = (self.algebra.total_dim, self.d, self.d)
        if vals.shape != expected:
            raise StructuralError(f"values have shape {vals.shape}, expected {expected}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, alg: Algebra, d: int, fn: Callable[[AlgebraElement], np.ndarray]) -> "OperatorMap":
        vals = [np.asarray(fn(alg.matrix_unit(k, i, j)), dtype=complex).reshape(d, d)
                for k, i, j in alg.matrix_units()]
        return cls(alg, d, np.array(vals))

    @classmethod
    def zero(cls, alg: Algebra, d: int) -> "OperatorMap":
        return cls(alg, d, np.zeros((alg.total_dim, d, d), dtype=complex))

    def apply(self, a: AlgebraElement) -> np.ndarray:
        if a.algebra != self.algebra:
            raise StructuralError("element belongs to a different algebra")
        return np.tensordot(a.flatten(), self.values, axes=1)

    __call__ = apply

    def matrix(self) -> np.ndarray:
        """``(d*d, total_dim)`` matrix with ``vec(apply(R)) = matrix() @ R.flatten()``."""
        return self.values.reshape(self.algebra.total_dim, -1).T

    def vector_map(self, x) -> np.ndarray:
        """``d x total_dim`` matrix of ``R -> apply(R) @ x``."""
        return np.einsum("kij,j->ik", self.values, np.asarray(x, dtype=complex))

    def compose(self, left, right) -> "OperatorMap":
        """The map ``A -> left @ apply(A) @ right``."""
        left = np.asarray(left, dtype=complex)
        right = np.asarray(right, dtype=complex)
        vals = np.einsum("ab,kbc,cd->kad", left, self.values, right)
        return OperatorMap(self.algebra, left.shape[0], vals)

    def scaled(self, c) -> "OperatorMap":
        return OperatorMap(self.algebra, self.d, c * self.values)

    def restrict(self) -> "QuantumMeasure":
        return QuantumMeasure(self.algebra, self.d, restriction_of=self)

    def to_json(self) -> dict:
        return {
            "kind": "linear_map",
            "d": self.d,
            "algebra": self.algebra.to_json(),
            "units": [matrix_to_json(v) for v in self.values],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "OperatorMap":
        alg = Algebra.from_json(obj["algebra"])
        d = int(obj["d"])
        return cls(alg, d, np.array([matrix_from_json(u) for u in obj["units"]]).reshape(-1, d, d))


@dataclass(eq=False)
class QuantumMeasure:
    """Finitely additive map from projections to ``d x d`` matrices.

    Either the restriction of an :class:`OperatorMap`, or a finite table of
    ``(projection, value)`` pairs looked up by distance.
    """

    algebra: Algebra
    d: int
    restriction_of: OperatorMap | None = None
    pairs: list[tuple[Projection, np.ndarray]] | None = None
    _index: cKDTree | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if (self.restriction_of is None) == (self.pairs is None):
            raise ContractError("give exactly one of restriction_of and pairs")
        if self.pairs is not None:
            self.pairs = [(as_projection(p, 1e-8), np.asarray(v, dtype=complex).reshape(self.d, self.d))
                          for p, v in self.pairs]

    @property
    def is_tabulated(self) -> bool:
        return self.pairs is not None

    def projections(self) -> list[Projection]:
        return [p for p, _ in self.pairs] if self.pairs is not None else []

    def _keys(self) -> np.ndarray:
        flat = np.array([p.flatten() for p, _ in self.pairs])
        return np.hstack([flat.real, flat.imag])

    def lookup(self, p: AlgebraElement, tol: float = LOOKUP_TOL) -> int | None:
        """Index of the tabulated projection within ``tol`` of ``p``."""
        if self._index is None:
            self._index = cKDTree(self._keys())
        flat = p.flatten()
        key = np.concatenate([flat.real, flat.imag])
        radius = tol * np.sqrt(self.algebra.matrix_dim) + 1e-15
        for i in sorted(self._index.query_ball_point(key, radius)):
            if self.pairs[i][0].distance(p) <= tol:
                return i
        return None

    def evaluate(self, p: AlgebraElement) -> np.ndarray:
        if self.restriction_of is not None:
            return self.restriction_of.apply(p)
        i = self.lookup(p)
        if i is None:
            raise MeasureLookupError("projection not in the table")
        return self.pairs[i][1]

    __call__ = evaluate

    def to_json(self) -> dict:
        if self.restriction_of is not None:
            return self.restriction_of.to_json()
        return {
            "kind": "tabulated",
            "d": self.d,
            "algebra": self.algebra.to_json(),
            "pairs": [{"projection": p.to_json(), "value": matrix_to_json(v)} for p, v in self.pairs],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "QuantumMeasure":
        kind = obj.get("kind")
        if kind == "linear_map":
            return OperatorMap.from_json(obj).restrict()
        if kind == "tabulated":
            alg = Algebra.from_json(obj["algebra"])
            pairs = [(Projection.from_json(alg, e["projection"]), matrix_from_json(e["value"])) for e in obj["pairs"]]
            return cls(alg, int(obj["d"]), pairs=pairs)
        raise StructuralError(f"unknown measure kind {kind!r}")


def tabulate(source, projections: Sequence[AlgebraElement]) -> QuantumMeasure:
    """Tabulate an OperatorMap or measure on the given projections."""
    fn = source.apply if isinstance(source, OperatorMap) else source.evaluate
    pairs = [(as_projection(p, 1e-8), fn(p)) for p in projections]
    return QuantumMeasure(source.algebra, source.d, pairs=pairs)


def random_operator_map(alg: Algebra, d: int, seed=None, scale: float = 1.0) -> OperatorMap:
    rng = np.random.default_rng(seed)
    shape = (alg.total_dim, d, d)
    vals = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (scale / np.sqrt(2 * d * alg.total_dim))
    return OperatorMap(alg, d, vals)


# -- additivity -------------------------------------------------------------

@dataclass
class AdditivityReport:
    max_violation: float
    worst_pair: tuple[Projection, ...] | None
    checked: int

    def to_dict(self) -> dict:
        return {
            "max_violation": self.max_violation,
            "checked": self.checked,
            "worst_pair": None if self.worst_pair is None else [p.to_json() for p in self.worst_pair],
        }


def _violation(u: QuantumMeasure, parts: Sequence[Projection], total: AlgebraElement) -> float:
    lhs = u.evaluate(total)
    rhs = sum(u.evaluate(q) for q in parts)
    return float(np.linalg.norm(lhs - rhs, 2))


def check_additivity(u: QuantumMeasure, trials: int = 100, seed: int = 0) -> AdditivityReport:
    """Largest ``||U(sum P_i) - sum U(P_i)||`` over sampled orthogonal families.

    Linear-map measures are probed with random orthogonal pairs and random
    partitions of the identity.  Tabulated measures are probed on every
    orthogonal pair whose sum is also in the table (a seeded subsample of
    ``trials`` of them if there are more).
    """
    if trials < 1:
        raise ContractError("trials must be at least 1")
    if u.is_tabulated:
        return _check_tabulated(u, trials, seed)
    alg = u.algebra
    worst, worst_pair = 0.0, None
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        if t % 2 == 0:
            p = random_projection(alg, rng)
            if p.rank < 2:
                p = alg.identity()
            parts = random_orthogonal_partition(as_projection(p), 2, rng)
        else:
            m = int(rng.integers(1, alg.matrix_dim + 1))
            p = alg.identity()
            parts = random_orthogonal_partition(as_projection(p), m, rng)
        v = _violation(u, parts, p)
        if v > worst or worst_pair is None:
            worst, worst_pair = v, tuple(parts)
    return AdditivityReport(worst, worst_pair, trials)


def _check_tabulated(u: QuantumMeasure, trials: int, seed: int) -> AdditivityReport:
    projs = u.projections()
    flat = np.array([p.flatten() for p in projs])
    # tr(PQ) = ||PQ||_F^2 for projections; used only as a prefilter
    gram = np.real(flat.conj() @ flat.T)
    nonzero = np.array([p.rank > 0 for p in projs])
    cand = np.argwhere((np.abs(gram) < 1e-8) & nonzero[:, None] & nonzero[None, :])
    triples = []
    for i, j in cand:
        if i >= j or not is_orthogonal(projs[i], projs[j]):
            continue
        k = u.lookup(projs[i] + projs[j])
        if k is not None:
            triples.append((int(i), int(j), k))
    if len(triples) > trials:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(len(triples), size=trials, replace=False))
        triples = [triples[t] for t in keep]
    worst, worst_pair = 0.0, None
    for i, j, k in triples:
        v = float(np.linalg.norm(u.pairs[k][1] - u.pairs[i][1] - u.pairs[j][1], 2))
        if v > worst or worst_pair is None:
            worst, worst_pair = v, (projs[i], projs[j])
    zero_idx = [i for i, p in enumerate(projs) if p.rank == 0]
    for i in zero_idx:
        worst = max(worst, float(np.linalg.norm(u.pairs[i][1], 2)))
    return AdditivityReport(worst, worst_pair, len(triples))


# -- norms --------------------------------------------------------------------

def _positive_part_projection(alg: Algebra, coeffs: np.ndarray) -> Projection:
    """Projection maximizing ``Re sum_k coeffs[k] * P.flatten()[k]``."""
    bases = []
    for off, n in zip(alg.offsets, alg.blocks):
        a = coeffs[off:off + n * n].reshape(n, n).T
        h = (a + a.conj().T) / 2
        vals, vecs = np.linalg.eigh(h)
        bases.append(vecs[:, vals > 0])
    return projection_onto(alg, bases)


def _projection_ascent(ubar: OperatorMap, p: Projection, iters: int = 100) -> tuple[float, Projection]:
    alg = ubar.algebra
    val = float(np.linalg.norm(ubar.apply(p), 2))
    for _ in range(iters):
        a = ubar.apply(p)
        uu, s, vh = np.linalg.svd(a)
        coeffs = np.einsum("i,kij,j->k", uu[:, 0].conj(), ubar.values, vh[0].conj())
        cand = _positive_part_projection(alg, coeffs)
        new_val = float(np.linalg.norm(ubar.apply(cand), 2))
        if new_val <= val * (1 + 1e-12):
            if new_val > val:
                val, p = new_val, cand
            break
        val, p = new_val, cand
    return val, p


def measure_norm(u: QuantumMeasure, budget: int = 16, seed: int = 0, return_witness: bool = False):
    """Lower bound for ``sup_P ||U(P)||``.

    For tabulated measures this is the exact maximum over the table.  For
    linear-map measures it is an ascent over projections started from the
    identity, the block identities and ``budget`` seeded random projections;
    each step replaces ``P`` by the positive spectral projection of the
    linearization at the current top singular pair.
    """
    if u.is_tabulated:
        vals = [float(np.linalg.norm(v, 2)) for _, v in u.pairs]
        i = int(np.argmax(vals))
        return (vals[i], u.pairs[i][0]) if return_witness else vals[i]
    ubar = u.restriction_of
    alg = u.algebra
    starts = [alg.identity()]
    for k, n in enumerate(alg.blocks):
        starts.append(projection_onto(alg, [np.eye(n) if j == k else None for j in range(len(alg.blocks))]))
    starts = [as_projection(s) for s in starts]
    for i in range(budget):
        starts.append(random_projection(alg, np.random.default_rng([seed, i])))
    best, best_p = -1.0, None
    for s in starts:
        val, p = _projection_ascent(ubar, s)
        if val > best:
            best, best_p = val, p
    return (best, best_p) if return_witness else best


def operator_map_norm(ubar: OperatorMap, budget: int = 16, seed: int = 0, iters: int = 200,
                      return_witness: bool = False):
    """Lower bound for ``sup_{||R|| <= 1} ||Ubar(R)||`` by ascent over unitaries."""
    alg = ubar.algebra

    def linearize(r):
        a = np.tensordot(r, ubar.values, axes=1)
        uu, s, vh = np.linalg.svd(a)
        c = np.einsum("i,kij,j->k", uu[:, 0].conj(), ubar.values, vh[0].conj())
        return float(s[0]), c.conj()

    starts = [alg.identity().flatten()]
    for i in range(budget):
        starts.append(sample_unit_ball(alg, np.random.default_rng([seed, i])).flatten())
    val, r, _ = maximize_convex_over_ball(alg, linearize, starts, iters)
    return (val, alg.from_flat(r)) if return_witness else val


# -- Gleason extension -----------------------------------------------------

def gleason_extend(u: QuantumMeasure, tol: float = 1e-8, cutoff: float = 1e-9) -> tuple[OperatorMap, float]:
    """Least-squares linear map agreeing with a tabulated measure.

    Returns ``(extension, residual)`` where ``residual`` is the largest
    spectral-norm mismatch on the table.  A residual at most ``tol`` means the
    table is consistent with a (necessarily unique) linear extension; a larger
    residual means no linear map reproduces the data.
    """
    if not u.is_tabulated:
        raise ContractError("gleason_extend expects a tabulated measure")
    alg = u.algebra
    if alg.has_type_i2:
        warnings.warn("algebra has a 2x2 block; a bounded additive measure need not extend linearly",
                      TypeI2Warning, stacklevel=2)
    design = np.array([p.flatten() for p, _ in u.pairs])
    rhs = np.array([v.reshape(-1) for _, v in u.pairs])
    uu, s, vh = np.linalg.svd(design, full_matrices=False)
    rank = int(np.sum(s > cutoff * max(s[0], 1.0))) if s.size else 0
    if rank < alg.total_dim:
        raise UnderdeterminedError("tabulated projections do not span the algebra", rank, alg.total_dim)
    sol = vh.conj().T @ ((uu.conj().T @ rhs) / s[:, None])
    ext = OperatorMap(alg, u.d, sol.reshape(alg.total_dim, u.d, u.d))
    fitted = (design @ sol).reshape(-1, u.d, u.d)
    residual = max(float(np.linalg.norm(f - v, 2)) for f, (_, v) in zip(fitted, u.pairs))
    return ext, residual


def extension_norm_bracket(u: QuantumMeasure, extension: OperatorMap, budget: int = 16, seed: int = 0,
                           eps: float = 1e-4, tol: float = 1e-8) -> tuple[float, float, bool]:
    """Estimate ``||U||`` and ``||extension||`` and test ``||U|| <= ||ext|| <= 4||U||``.

    Both norms are lower-bound estimates; ``||U||`` also uses the tabulated
    values when ``u`` is tabulated.
    """
    if u.is_tabulated:
        residual = max(float(np.linalg.norm(extension.apply(p) - v, 2)) for p, v in u.pairs)
        if residual > tol:
            raise ContractError(f"extension does not agree with the measure (residual {residual:.3g})")
    mu = measure_norm(extension.restrict(), budget, seed)
    if u.is_tabulated:
        mu = max(mu, measure_norm(u))
    ext = operator_map_norm(extension, budget, seed)
    return mu, ext, bool(mu - eps <= ext <= 4 * mu + eps)


# -- the M_2 counterexample ---------------------------------------------------

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def bloch_vector(p: np.ndarray) -> np.ndarray:
    """Bloch vector ``v`` of a rank-one projection ``p = (I + v.sigma)/2``."""
    return np.array([np.trace(p @ s).real for s in _PAULI])


def m2_bloch_cubic_measure(count: int = 30, seed: int = 0) -> QuantumMeasure:
    """Scalar measure on ``M_2`` with ``mu(P) = v_x(P)**3`` on rank-one ``P``.

    ``mu(0) = mu(I) = 0``.  Orthogonal nonzero pairs in ``M_2`` are ``P, I - P``
    with opposite Bloch vectors, so the measure is additive, but it is cubic
    in ``v`` and therefore not the restriction of any linear functional.  The
    table holds ``0``, ``I`` and ``count`` random rank-one projections together
    with their complements.
    """
    alg = Algebra((2,))
    rng = np.random.default_rng(seed)
    pairs = [(alg.zeros(), np.zeros((1, 1))), (alg.identity(), np.zeros((1, 1)))]
    for _ in range(count):
        p = random_projection(alg, rng, ranks=[1])
        for q in (p, p.complement()):
            pairs.append((q, np.array([[bloch_vector(q.blocks[0])[0] ** 3]])))
    return QuantumMeasure(alg, 1, pairs=pairs)
