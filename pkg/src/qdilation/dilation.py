"""The elementary dilation space of a quantum measure.

For an extension ``Ubar: M -> B(C^d)`` the generators are the maps
``R -> Ubar(R Q) x`` with ``||Q|| <= 1``.  Every map ``M -> C^d`` is stored as a
``d x total_dim`` matrix acting on flat algebra coordinates, and the span of
the generators gets a Hilbert-Schmidt orthonormal basis used purely as a
coordinate system.  The dilation norms are separate suprema evaluated on
demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import AlgebraElement, sample_unit_ball, sup_over_ball
from .errors import ContractError
from .measure import OperatorMap, QuantumMeasure, measure_norm
from .projection import (
    as_projection,
    random_orthogonal_partition,
    random_projection,
    spectral_projections,
)

__all__ = [
    "ElementaryGenerator",
    "ElementarySpace",
    "ConcreteDilation",
    "DilationReport",
    "build_elementary_space",
    "map_S",
    "map_T",
    "map_V",
    "elementary_norm",
    "verify_dilation",
    "induced_dilation_norm",
    "induced_contraction",
    "jordan_extension",
    "jordan_check",
]

BASIS_CUTOFF = 1e-9


@dataclass(frozen=True, eq=False)
class ElementaryGenerator:
    Q: AlgebraElement
    x: np.ndarray
    C: complex = 1.0

    def __post_init__(self):
        if self.Q.op_norm() > 1 + 1e-10:
            raise ContractError(f"generator Q has norm {self.Q.op_norm():.6g} > 1")
        object.__setattr__(self, "x", np.asarray(self.x, dtype=complex))

    def concrete(self, source: OperatorMap) -> np.ndarray:
        return self.C * (source.vector_map(self.x) @ self.Q.right_mult_matrix())

    def to_json(self) -> dict:
        return {
            "Q": self.Q.to_json(),
            "x": [[float(z.real), float(z.imag)] for z in self.x],
            "C": [float(np.real(self.C)), float(np.imag(self.C))],
        }


@dataclass(eq=False)
class ElementarySpace:
    source: OperatorMap
    generators: list[ElementaryGenerator]
    basis: np.ndarray  # (d * total_dim, dim), orthonormal columns
    gen_vectors: np.ndarray = field(repr=False)  # (d * total_dim, len(generators))
    saturated: bool = True

    @property
    def algebra(self):
        return self.source.algebra

    @property
    def d(self) -> int:
        return self.source.d

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def concrete(self, coords) -> np.ndarray:
        coords = self._check(coords)
        return (self.basis @ coords).reshape(self.d, self.algebra.total_dim)

    def coords(self, concrete) -> np.ndarray:
        return self.basis.conj().T @ np.asarray(concrete, dtype=complex).reshape(-1)

    def span_residual(self, concrete) -> float:
        """Distance from a concrete map to the span (Hilbert-Schmidt)."""
        v = np.asarray(concrete, dtype=complex).reshape(-1)
        return float(np.linalg.norm(v - self.basis @ (self.basis.conj().T @ v)))

    def generator_coords(self, g: ElementaryGenerator) -> np.ndarray:
        return self.coords(g.concrete(self.source))

    def representation(self, coords) -> tuple[np.ndarray, float]:
        """Coefficients ``C_i`` over the stored generators reproducing ``coords``."""
        target = self.basis @ self._check(coords)
        sol, *_ = np.linalg.lstsq(self.gen_vectors, target, rcond=None)
        return sol, float(np.linalg.norm(self.gen_vectors @ sol - target))

    def random_element(self, rng) -> np.ndarray:
        c = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        return c / max(np.linalg.norm(c), 1e-300)

    def _check(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=complex).reshape(-1)
        if coords.shape != (self.dim,):
            raise ContractError(f"coordinates of length {coords.shape[0]} for a space of dimension {self.dim}")
        return coords

    def manifest(self) -> dict:
        return {
            "dimension": self.dim,
            "generator_count": len(self.generators),
            "saturated": self.saturated,
            "source": self.source.to_json(),
            "generators": [g.to_json() for g in self.generators],
        }


def _random_generator(space_alg, d, rng) -> ElementaryGenerator:
    q = sample_unit_ball(space_alg, rng, kind="contraction")
    x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return ElementaryGenerator(q, x / np.linalg.norm(x))


def _orthonormal_span(vectors: np.ndarray) -> np.ndarray:
    if vectors.size == 0:
        return np.zeros((vectors.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((vectors.shape[0], 0), dtype=complex)
    return u[:, s > BASIS_CUTOFF * s[0]]


def build_elementary_space(ubar: OperatorMap, generator_budget: int = 32, seed: int = 0) -> ElementarySpace:
    """Span of seeded random generators plus ``(I, e_j)`` for each basis vector.

    Batches of 10 extra random generators are added until a batch no longer
    raises the dimension.
    """
    if generator_budget < 1:
        raise ContractError("generator_budget must be at least 1")
    alg, d = ubar.algebra, ubar.d
    gens = [ElementaryGenerator(alg.identity(), np.eye(d)[j]) for j in range(d)]
    rng = np.random.default_rng([seed, 0])
    gens += [_random_generator(alg, d, rng) for _ in range(generator_budget)]
    vecs = np.stack([g.concrete(ubar).reshape(-1) for g in gens], axis=1)
    basis = _orthonormal_span(vecs)
    cap = d * alg.total_dim
    batch, saturated = 1, False
    while not saturated:
        rng = np.random.default_rng([seed, batch])
        extra = [_random_generator(alg, d, rng) for _ in range(10)]
        ext_vecs = np.stack([g.concrete(ubar).reshape(-1) for g in extra], axis=1)
        new_basis = _orthonormal_span(np.hstack([vecs, ext_vecs]))
        gens += extra
        vecs = np.hstack([vecs, ext_vecs])
        saturated = new_basis.shape[1] == basis.shape[1] or new_basis.shape[1] >= cap
        basis = new_basis
        batch += 1
    return ElementarySpace(ubar, gens, basis, vecs, saturated)


def map_S(space: ElementarySpace, coords) -> np.ndarray:
    """Evaluation at the identity."""
    return space.concrete(coords) @ space.algebra.identity().flatten()


def map_T(space: ElementarySpace, x) -> np.ndarray:
    """Coordinates of ``R -> Ubar(R) x``."""
    return space.coords(space.source.vector_map(x))


def _precomposition(space: ElementarySpace, a: AlgebraElement) -> np.ndarray:
    # (Phi . R_a) on row-major vec(Phi)
    k = np.kron(np.eye(space.d), a.right_mult_matrix().T)
    return k @ space.basis


def map_V(space: ElementarySpace, p: AlgebraElement) -> np.ndarray:
    """Operator ``Phi -> Phi(. p)`` in span coordinates."""
    return space.basis.conj().T @ _precomposition(space, p)


def invariance_residual(space: ElementarySpace, p: AlgebraElement) -> float:
    """How far precomposition with ``p`` leaves the span (zero for a saturated span)."""
    img = _precomposition(space, p)
    return float(np.linalg.norm(img - space.basis @ (space.basis.conj().T @ img), 2)) if space.dim else 0.0


def elementary_norm(space: ElementarySpace, coords, budget: int = 32, seed: int = 0,
                    witnesses: Sequence[AlgebraElement] = (), return_witness: bool = False):
    """Lower bound for ``sup_{||R|| <= 1} ||Phi(R)||``."""
    val, w = sup_over_ball(space.concrete(coords), space.algebra, budget, seed, witnesses=witnesses)
    return (val, w) if return_witness else val


@dataclass
class DilationReport:
    identity_residual: float
    idempotency_residual: float
    additivity_residual: float
    invariance_residual: float
    S_norm: float
    T_norm: float
    V_norm: float
    measure_norm: float
    trials: int

    @property
    def bounds_ok(self) -> bool:
        return bool(self.S_norm <= 1 + 1e-6 and self.V_norm <= 1 + 1e-6
                    and self.T_norm <= 4 * self.measure_norm + 1e-4)

    def to_dict(self) -> dict:
        out = {k: (int(v) if k == "trials" else float(v)) for k, v in self.__dict__.items()}
        out["bounds_ok"] = bool(self.bounds_ok)
        return out


def verify_dilation(space: ElementarySpace, u: QuantumMeasure | OperatorMap | None = None, trials: int = 100, seed: int = 0,
                    budget: int = 8, norm_trials: int | None = None) -> DilationReport:
    """Check ``U(P) = S V(P) T`` and the elementary-norm bounds of S, T, V(P).

    Norm ratios are computed with shared witnesses: the estimate of ``||Phi||``
    always includes the points ``I`` and ``R* P`` where ``R*`` is the witness of
    the numerator, so each ratio is a genuine lower bound of the operator
    norm it estimates.
    """
    u = u if u is not None else space.source.restrict()
    if isinstance(u, OperatorMap):
        u = u.restrict()
    alg, d = space.algebra, space.d
    norm_trials = trials if norm_trials is None else norm_trials
    table = u.projections() if u.is_tabulated else None
    ident = alg.identity()
    id_res = idem_res = add_res = inv_res = 0.0
    s_norm = t_norm = v_norm = 0.0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        p = table[int(rng.integers(len(table)))] if table else random_projection(alg, rng)
        x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        v = map_V(space, p)
        dil = map_S(space, v @ map_T(space, x))
        id_res = max(id_res, float(np.linalg.norm(u.evaluate(p) @ x - dil)))
        idem_res = max(idem_res, float(np.linalg.norm(v @ v - v, 2)) if space.dim else 0.0)
        inv_res = max(inv_res, invariance_residual(space, p))
        q = random_projection(alg, rng)
        q = q if q.rank >= 2 else ident
        p1, p2 = random_orthogonal_partition(as_projection(q), 2, rng)
        if space.dim:
            add_res = max(add_res, float(np.linalg.norm(map_V(space, q) - map_V(space, p1) - map_V(space, p2), 2)))
        if t >= norm_trials or space.dim == 0:
            continue
        phi = space.random_element(rng)
        # S: ||Phi(I)|| / ||Phi||_E, identity among witnesses
        den = elementary_norm(space, phi, budget, seed + t, witnesses=[ident])
        if den > 1e-12:
            s_norm = max(s_norm, float(np.linalg.norm(map_S(space, phi))) / den)
        # V(P): ||V(P)Phi||_E / ||Phi||_E with R* P shared
        num, w = elementary_norm(space, v @ phi, budget, seed + t, return_witness=True)
        den = elementary_norm(space, phi, budget, seed + t, witnesses=[w @ p, ident])
        if den > 1e-12:
            v_norm = max(v_norm, num / den)
        # T: ||T x||_E / ||x||
        t_norm = max(t_norm, elementary_norm(space, map_T(space, x), budget, seed + t) / float(np.linalg.norm(x)))
    mu = measure_norm(u if not u.is_tabulated else space.source.restrict(), budget, seed)
    if u.is_tabulated:
        mu = max(mu, measure_norm(u))
    return DilationReport(id_res, idem_res, add_res, inv_res, s_norm, t_norm, v_norm, mu, trials)


# -- induced (quotient) norm -----------------------------------------------------

@dataclass(eq=False)
class ConcreteDilation:
    """A Hilbert-space dilation ``Ubar(A) = S Vbar(A) T`` with ``Vbar: M -> B(C^D)``."""

    V: OperatorMap
    S: np.ndarray  # d x D
    T: np.ndarray  # D x d

    def __post_init__(self):
        self.S = np.asarray(self.S, dtype=complex)
        self.T = np.asarray(self.T, dtype=complex)

    def consistency_residual(self, source: OperatorMap) -> float:
        comp = self.V.compose(self.S, self.T)
        return max(float(np.linalg.norm(a - b, 2)) for a, b in zip(comp.values, source.values))

    def quotient_projector(self) -> np.ndarray:
        """Orthogonal projection of ``C^D`` onto ``(ker S)^perp``."""
        return np.linalg.pinv(self.S) @ self.S


def _check_concrete(space: ElementarySpace, concrete: ConcreteDilation, tol: float = 1e-8):
    res = concrete.consistency_residual(space.source)
    if res > tol:
        raise ContractError(f"concrete dilation does not reproduce the measure (residual {res:.3g})")


def _lifted_map(space: ElementarySpace, concrete: ConcreteDilation, coords) -> tuple[np.ndarray, float]:
    """Matrix of ``R -> sum_i C_i Vbar(R Q_i) T x_i`` (D x total_dim)."""
    coeffs, rep_res = space.representation(coords)
    out = np.zeros((concrete.V.d, space.algebra.total_dim), dtype=complex)
    for c, g in zip(coeffs, space.generators):
        if c != 0:
            out += c * g.C * (concrete.V.vector_map(concrete.T @ g.x) @ g.Q.right_mult_matrix())
    return out, rep_res


def induced_dilation_norm(space: ElementarySpace, concrete: ConcreteDilation, coords, budget: int = 32,
                          seed: int = 0, witnesses: Sequence[AlgebraElement] = (), return_witness: bool = False):
    """Lower bound for ``sup_R ||[sum_i C_i Vbar(R Q_i) T x_i]||`` in ``C^D / ker S``."""
    _check_concrete(space, concrete)
    lifted, _ = _lifted_map(space, concrete, coords)
    val, w = sup_over_ball(concrete.quotient_projector() @ lifted, space.algebra, budget, seed, witnesses=witnesses)
    return (val, w) if return_witness else val


def induced_contraction(space: ElementarySpace, concrete: ConcreteDilation, coords) -> np.ndarray:
    """``W(Phi) = [sum_i C_i Vbar(Q_i) T x_i]`` as a vector in ``(ker S)^perp``."""
    _check_concrete(space, concrete)
    lifted, _ = _lifted_map(space, concrete, coords)
    return concrete.quotient_projector() @ (lifted @ space.algebra.identity().flatten())


# -- Jordan property ---------------------------------------------------------------

def _phi_from_spectra(space: ElementarySpace, h: AlgebraElement) -> np.ndarray:
    return sum(lam * map_V(space, p) for lam, p in spectral_projections(h))


def jordan_extension(space: ElementarySpace) -> np.ndarray:
    """Values ``phi(E_k)`` (shape ``(total_dim, dim, dim)``) of the linear extension of ``V``.

    Built only from ``V`` on projections: each Hermitian combination
    ``E_jj``, ``E_jk + E_kj`` and ``i E_jk - i E_kj`` is split spectrally.
    """
    alg = space.algebra
    out = np.zeros((alg.total_dim, space.dim, space.dim), dtype=complex)
    for k, n in enumerate(alg.blocks):
        off = alg.offsets[k]
        for i in range(n):
            out[off + i * n + i] = _phi_from_spectra(space, alg.matrix_unit(k, i, i))
            for j in range(i + 1, n):
                eij, eji = alg.matrix_unit(k, i, j), alg.matrix_unit(k, j, i)
                sym = _phi_from_spectra(space, eij + eji)
                asym = _phi_from_spectra(space, 1j * eij - 1j * eji)
                out[off + i * n + j] = (sym - 1j * asym) / 2
                out[off + j * n + i] = (sym + 1j * asym) / 2
    return out


def _random_hermitian(alg, rng) -> AlgebraElement:
    blocks = []
    for n in alg.blocks:
        z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        blocks.append((z + z.conj().T) / 2)
    h = alg.element(blocks)
    return h * (1.0 / max(h.op_norm(), 1e-300))


def jordan_check(space: ElementarySpace, trials: int = 50, seed: int = 0, pair_trials: int | None = None) -> dict:
    """Jordan residual ``||phi(a^2) - phi(a)^2||`` and anti-commutators of orthogonal pairs."""
    alg = space.algebra
    phi_units = jordan_extension(space)

    def phi(a: AlgebraElement) -> np.ndarray:
        return np.tensordot(a.flatten(), phi_units, axes=1)

    def nrm(m) -> float:
        return float(np.linalg.norm(m, 2)) if m.size else 0.0

    jordan = anti = idem = ext = 0.0
    pair_trials = trials if pair_trials is None else pair_trials
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        a = _random_hermitian(alg, rng)
        fa = phi(a)
        jordan = max(jordan, nrm(phi(a @ a) - fa @ fa))
        p = random_projection(alg, rng)
        fp = phi(p)
        idem = max(idem, nrm(fp @ fp - fp))
        ext = max(ext, nrm(fp - map_V(space, p)))
    for t in range(pair_trials):
        rng = np.random.default_rng([seed, 10**6 + t])
        q = random_projection(alg, rng)
        q = q if q.rank >= 2 else alg.identity()
        p1, p2 = random_orthogonal_partition(as_projection(q), 2, rng)
        f1, f2 = phi(p1), phi(p2)
        anti = max(anti, nrm(f1 @ f2 + f2 @ f1))
    return {
        "jordan_residual": jordan,
        "anticommutator": anti,
        "idempotency_residual": idem,
        "extension_residual": ext,
        "trials": trials,
        "pair_trials": pair_trials,
    }
