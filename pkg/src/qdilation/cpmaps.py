"""Completely positive maps, Stinespring dilations and Schatten-norm examples.

A :class:`KrausMap` is ``A -> sum_i K_i A K_i^*`` from ``M_n`` to ``M_d``.  Its
restriction to projections is a quantum measure with bounded 2-variation
(controlled by the cb-norm), and left multiplication on a Schatten-p space is
a projection-valued measure with bounded p-variation for ``p >= 2``.  Both
bounds are checked here against the tree-search estimator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import Algebra, AlgebraElement, haar_unitary, matrix_from_json, matrix_to_json
from .dilation import ConcreteDilation
from .errors import ContractError, StructuralError
from .measure import OperatorMap
from .projection import (
    as_projection,
    is_orthogonal,
    random_orthogonal_partition,
    random_projection,
)
from .pvariation import PVarEstimate, pvar_estimate, tree_search

__all__ = [
    "CHOI_CUTOFF",
    "KrausMap",
    "StinespringData",
    "choi",
    "kraus_from_choi",
    "random_cp_map",
    "stinespring",
    "cb_norm_cp",
    "cb_norm_combination_bound",
    "two_variation_bound_check",
    "trace_weights",
    "schatten_norm",
    "orthogonal_family_gap",
    "SchattenAggregator",
    "left_mult_pvar",
    "left_mult_pvar_check",
    "schatten_counter_probe",
]

CHOI_CUTOFF = 1e-9
PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class KrausMap:
    kraus: tuple  # of d x n matrices

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise StructuralError("need at least one Kraus operator (use a zero matrix for the zero map)")
        shape = ks[0].shape
        if len(shape) != 2 or any(k.shape != shape for k in ks):
            raise StructuralError("Kraus operators must be matrices of a common shape")
        object.__setattr__(self, "kraus", ks)

    @property
    def d(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def n(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def algebra(self) -> Algebra:
        return Algebra((self.n,))

    def __call__(self, a) -> np.ndarray:
        a = a.blocks[0] if isinstance(a, AlgebraElement) else np.asarray(a, dtype=complex)
        return sum(k @ a @ k.conj().T for k in self.kraus)

    def scaled(self, c: float) -> "KrausMap":
        if c < 0:
            raise ContractError("a negative multiple of a CP map is not CP")
        return KrausMap(tuple(np.sqrt(c) * k for k in self.kraus))

    def as_operator_map(self) -> OperatorMap:
        return OperatorMap.from_function(self.algebra, self.d, self)

    def choi(self) -> np.ndarray:
        return choi(self)

    def to_json(self) -> dict:
        return {"n": self.n, "d": self.d, "kraus": [matrix_to_json(k) for k in self.kraus]}

    @classmethod
    def from_json(cls, obj: dict) -> "KrausMap":
        n, d = int(obj["n"]), int(obj["d"])
        ks = [matrix_from_json(k).reshape(d, n) for k in obj["kraus"]]
        if not ks:
            ks = [np.zeros((d, n))]
        return cls(tuple(ks))


def choi(psi: KrausMap) -> np.ndarray:
    """``C = sum_ij E_ij (x) Psi(E_ij)``, an ``nd x nd`` matrix."""
    n, d = psi.n, psi.d
    out = np.zeros((n * d, n * d), dtype=complex)
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n))
            e[i, j] = 1
            out[i * d:(i + 1) * d, j * d:(j + 1) * d] = psi(e)
    return out


def kraus_from_choi(c, n: int, d: int, cutoff: float = CHOI_CUTOFF) -> KrausMap:
    """Kraus operators from the eigendecomposition of a PSD Choi matrix."""
    c = np.asarray(c, dtype=complex)
    if c.shape != (n * d, n * d):
        raise StructuralError(f"Choi matrix has shape {c.shape}, expected {(n * d, n * d)}")
    if np.linalg.norm(c - c.conj().T, 2) > cutoff:
        raise ContractError("Choi matrix is not Hermitian")
    vals, vecs = np.linalg.eigh((c + c.conj().T) / 2)
    if vals[0] < -cutoff * max(1.0, abs(vals[-1])):
        raise ContractError(f"Choi matrix is not positive semidefinite (eigenvalue {vals[0]:.3g})")
    ks = [np.sqrt(lam) * vecs[:, i].reshape(n, d).T for i, lam in enumerate(vals) if lam > cutoff]
    return KrausMap(tuple(ks) if ks else (np.zeros((d, n)),))


def random_cp_map(n: int, d: int, m: int, seed=None, channel: bool = False) -> KrausMap:
    """``m`` Gaussian Kraus operators; with ``channel`` they are rescaled so ``Psi(I) = I``."""
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    ks = [(rng.standard_normal((d, n)) + 1j * rng.standard_normal((d, n))) / np.sqrt(2 * n * m) for _ in range(m)]
    if channel:
        s = sum(k @ k.conj().T for k in ks)
        vals, vecs = np.linalg.eigh(s)
        root = vecs @ np.diag(vals ** -0.5) @ vecs.conj().T
        ks = [root @ k for k in ks]
    return KrausMap(tuple(ks))


@dataclass(frozen=True, eq=False)
class StinespringData:
    """``Psi(A) = V2^* pi(A) V1`` with ``pi(A) = A (x) I_m`` on ``C^n (x) C^m``."""

    hat_dim: int
    pi_units: np.ndarray  # (n*n, hat_dim, hat_dim), row-major matrix-unit order
    V1: np.ndarray  # hat_dim x d
    V2: np.ndarray

    def pi(self, a) -> np.ndarray:
        a = a.blocks[0] if isinstance(a, AlgebraElement) else np.asarray(a, dtype=complex)
        return np.tensordot(a.reshape(-1), self.pi_units, axes=1)

    def apply(self, a) -> np.ndarray:
        return self.V2.conj().T @ self.pi(a) @ self.V1

    def homomorphism_residual(self) -> float:
        n = int(round(np.sqrt(self.pi_units.shape[0])))
        worst = 0.0
        for i in range(n):
            for j in range(n):
                u = self.pi_units[i * n + j]
                worst = max(worst, float(np.linalg.norm(u.conj().T - self.pi_units[j * n + i], 2)))
                for k in range(n):
                    for l in range(n):
                        want = self.pi_units[i * n + l] if j == k else 0
                        worst = max(worst, float(np.linalg.norm(u @ self.pi_units[k * n + l] - want, 2)))
        return worst

    def reconstruction_residual(self, psi: KrausMap) -> float:
        n = psi.n
        worst = 0.0
        for idx in range(n * n):
            e = np.zeros(n * n)
            e[idx] = 1
            e = e.reshape(n, n)
            worst = max(worst, float(np.linalg.norm(self.apply(e) - psi(e), 2)))
        return worst

    def concrete(self, alg: Algebra) -> ConcreteDilation:
        """The dilation ``Psi(A) = S Vbar(A) T`` with ``Vbar = pi`` as an :class:`OperatorMap`."""
        return ConcreteDilation(OperatorMap(alg, self.hat_dim, self.pi_units), self.V2.conj().T, self.V1)


def _nonzero_projections(alg: Algebra, count: int, rng) -> list:
    out = []
    while len(out) < count:
        q = random_projection(alg, rng)
        if q.rank > 0:
            out.append(q)
    return out


def _require_cp(psi) -> KrausMap:
    if not isinstance(psi, KrausMap):
        raise ContractError(f"expected a KrausMap, got {type(psi).__name__}")
    return psi


def stinespring(psi: KrausMap) -> StinespringData:
    psi = _require_cp(psi)
    n, d, m = psi.n, psi.d, len(psi.kraus)
    units = []
    for idx in range(n * n):
        e = np.zeros(n * n)
        e[idx] = 1
        units.append(np.kron(e.reshape(n, n), np.eye(m)))
    # (V x)_(a, i) = (K_i^* x)_a
    v = np.stack([k.conj().T for k in psi.kraus], axis=1).reshape(n * m, d)
    return StinespringData(n * m, np.array(units, dtype=complex), v, v)


def cb_norm_cp(psi: KrausMap) -> float:
    """``||Psi||_cb = ||Psi(I)||`` for completely positive ``Psi``."""
    psi = _require_cp(psi)
    return float(np.linalg.norm(psi(np.eye(psi.n)), 2))


def cb_norm_combination_bound(terms: Sequence[tuple[complex, KrausMap]]) -> float:
    """Upper bound ``sum |lambda_i| cb(Psi_i)`` for ``sum lambda_i Psi_i``."""
    return float(sum(abs(lam) * cb_norm_cp(psi) for lam, psi in terms))


def two_variation_bound_check(psi: KrausMap, budget: int = 16, seed: int = 0, samples: int = 8) -> dict:
    """2-variation estimates of the restricted measure on sampled roots against ``||Psi||_cb``.

    The roots are ``I`` followed by ``samples - 1`` seeded random nonzero projections.
    """
    psi = _require_cp(psi)
    alg = psi.algebra
    ubar = psi.as_operator_map()
    cb = cb_norm_cp(psi)
    rng = np.random.default_rng(seed)
    roots = [alg.identity()] + _nonzero_projections(alg, samples - 1, rng)
    estimates = [pvar_estimate(ubar, r, 2, budget, seed + i).value for i, r in enumerate(roots)]
    worst = max(estimates)
    return {
        "cb_norm": cb,
        "estimates": estimates,
        "max_estimate": worst,
        "slack": cb - worst,
        "holds": bool(worst <= cb + 1e-6),
    }


# -- Schatten classes ---------------------------------------------------------------

def trace_weights(alg: Algebra, mode: str = "unnormalized") -> np.ndarray:
    """Per-block weights of a faithful trace: 1 everywhere, or scaled so ``tau(I) = 1``."""
    if mode == "unnormalized":
        return np.ones(len(alg.blocks))
    if mode == "normalized":
        return np.full(len(alg.blocks), 1.0 / alg.matrix_dim)
    raise ContractError(f"unknown trace mode {mode!r}")


def _weights(alg: Algebra, weights) -> np.ndarray:
    if weights is None:
        return trace_weights(alg)
    if isinstance(weights, str):
        return trace_weights(alg, weights)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape != (len(alg.blocks),) or np.any(w <= 0):
        raise ContractError("trace weights must be positive, one per block")
    return w


def schatten_norm(a: AlgebraElement, p: float, weights=None) -> float:
    """``tau(|a|^p)^(1/p)`` with ``tau = sum_k w_k tr_k``."""
    if p < 1:
        raise ContractError(f"p must be at least 1, got {p}")
    w = _weights(a.algebra, weights)
    total = sum(wk * np.sum(np.linalg.svd(b, compute_uv=False) ** p) for wk, b in zip(w, a.blocks))
    return float(total ** (1 / p))


def orthogonal_family_gap(family: Sequence[AlgebraElement], y: AlgebraElement, p: float, weights=None) -> dict:
    """Both sides of ``(sum_i ||P_i y||_p^p)^(1/p) <= ||y||_p``; valid for any ``p``, proved for ``p >= 2``."""
    fam = [as_projection(q, 1e-8) for q in family]
    for i, a in enumerate(fam):
        for b in fam[i + 1:]:
            if not is_orthogonal(a, b, 1e-10):
                raise ContractError("family members must be mutually orthogonal")
    lhs = float(sum(schatten_norm(q @ y, p, weights) ** p for q in fam) ** (1 / p))
    rhs = schatten_norm(y, p, weights)
    return {"lhs": lhs, "rhs": rhs, "gap": lhs - rhs}


def schatten_counter_probe(p: float = 1.5) -> dict:
    """A rank-one ``y`` in ``M_2`` split by the diagonal projections.

    With ``y = u e_1^T`` and ``u = (1, 1)/sqrt(2)``, ``||y||_p = 1`` while
    ``||E_11 y||_p = ||E_22 y||_p = 2^(-1/2)``, so the left side is
    ``2^(1/p - 1/2)``: above 1 for ``p < 2``, at most 1 for ``p >= 2``.
    """
    alg = Algebra((2,))
    u = np.array([1.0, 1.0]) / np.sqrt(2)
    y = alg.element([np.outer(u, [1.0, 0.0])])
    fam = [alg.matrix_unit(0, 0, 0), alg.matrix_unit(0, 1, 1)]
    out = orthogonal_family_gap(fam, y, p)
    out["p"] = float(p)
    out["violates"] = bool(out["gap"] > 1e-10)
    return out


class SchattenAggregator:
    """Score ``sup_{||y||_p <= 1} (sum_t ||B_t y||_p^p)^(1/p)`` for branch elements ``B_t``.

    The objective is convex in ``y``; each step moves to the maximizer of its
    linearization over the Schatten unit ball (a dual-norm step), which never
    decreases it.  Starts: ``I`` normalized, the hint, and on refinement
    ``restarts`` seeded random points.
    """

    def __init__(self, alg: Algebra, p: float, weights=None, restarts: int = 8, iters: int = 100, seed: int = 0):
        if p < 1:
            raise ContractError(f"p must be at least 1, got {p}")
        self.alg = alg
        self.p = float(p)
        self.w = _weights(alg, weights)
        self.restarts = restarts
        self.iters = iters
        self.seed = seed

    def _elem(self, flat) -> AlgebraElement:
        return self.alg.from_flat(flat)

    def _normalize(self, y: AlgebraElement) -> AlgebraElement:
        s = schatten_norm(y, self.p, self.w)
        return y * (1 / s) if s > 0 else y

    def _value(self, elems, y):
        contrib = np.array([schatten_norm(b @ y, self.p, self.w) ** self.p for b in elems])
        return float(np.sum(contrib) ** (1 / self.p)), contrib

    def _dual_step(self, elems, y):
        p = self.p
        grads = []
        for k, wk in enumerate(self.w):
            g = np.zeros_like(y.blocks[k])
            for b in elems:
                z = b.blocks[k] @ y.blocks[k]
                u, s, vh = np.linalg.svd(z)
                if p == 1:
                    s_pow = (s > 1e-14).astype(float)
                else:
                    s_pow = s ** (p - 1)
                g += wk * b.blocks[k].conj().T @ (u @ np.diag(s_pow) @ vh)
            grads.append(g)
        blocks = []
        for g, wk in zip(grads, self.w):
            u, s, vh = np.linalg.svd(g)
            if p == 1:
                t = np.zeros_like(s)
            else:
                t = (s / wk) ** (1 / (p - 1))
            blocks.append(u @ np.diag(t) @ vh)
        if p == 1:
            # linearization is maximized at a rank-one point of the block with the largest ratio
            ratios = [np.linalg.norm(g, 2) / wk for g, wk in zip(grads, self.w)]
            k = int(np.argmax(ratios))
            u, s, vh = np.linalg.svd(grads[k])
            blocks[k] = np.outer(u[:, 0], vh[0])
        return self._normalize(self.alg.element(blocks))

    def _ascend(self, elems, y, iters):
        val, contrib = self._value(elems, y)
        for _ in range(iters):
            cand = self._dual_step(elems, y)
            cval, ccontrib = self._value(elems, cand)
            if cval <= val * (1 + 1e-13):
                if cval > val:
                    y, val, contrib = cand, cval, ccontrib
                break
            y, val, contrib = cand, cval, ccontrib
        return val, y, contrib

    def __call__(self, arrays, refine: bool = False, x_hint=None):
        elems = [self._elem(a) for a in arrays]
        starts = [self._normalize(self.alg.identity())]
        if x_hint is not None:
            starts.append(x_hint)
        if refine:
            rng = np.random.default_rng(self.seed)
            for _ in range(self.restarts):
                blocks = [haar_unitary(n, rng) @ np.diag(rng.uniform(0, 1, n)) for n in self.alg.blocks]
                starts.append(self._normalize(self.alg.element(blocks)))
        iters = self.iters if refine else 10
        best = None
        for s in starts:
            cand = self._ascend(elems, s, iters)
            if best is None or cand[0] > best[0]:
                best = cand
        return best


def left_mult_pvar(alg: Algebra, root: AlgebraElement, p: float, budget: int = 16, seed: int = 0,
                   weights=None, max_depth: int = 4, extra_trees=()) -> PVarEstimate:
    """Estimate of the p-variation of ``P -> L_P`` on the Schatten-p space of ``alg``."""
    agg = SchattenAggregator(alg, p, weights, seed=seed)
    return tree_search(alg, root, p, lambda flat: flat, agg, budget, seed, max_depth, extra_trees=extra_trees)


def left_mult_pvar_check(alg: Algebra, p: float, budget: int = 16, seed: int = 0, samples: int = 20,
                         family_trials: int = 1000, weights=None) -> dict:
    """Check the orthogonal-family inequality and the p-variation bound 1 for left multiplication.

    Part (a) draws ``family_trials`` random (orthogonal family, ``y``) pairs with
    ``||y||_p = 1`` and requires the left side to stay within ``1e-10`` of 1.
    Part (b) estimates the p-variation at ``I`` and at ``samples - 1`` random
    roots and requires every estimate to be at most ``1 + 1e-6``.
    """
    if p < 2:
        raise ContractError(f"the left-multiplication bound is established for p >= 2, got {p}")
    rng = np.random.default_rng(seed)
    worst_gap = -np.inf
    for _ in range(family_trials):
        top = random_projection(alg, rng)
        if top.rank == 0:
            top = as_projection(alg.identity())
        fam = random_orthogonal_partition(top, int(rng.integers(1, top.rank + 1)), rng)
        blocks = [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for n in alg.blocks]
        y = alg.element(blocks)
        y = y * (1 / schatten_norm(y, p, weights))
        worst_gap = max(worst_gap, orthogonal_family_gap(fam, y, p, weights)["gap"])
    roots = [alg.identity()] + _nonzero_projections(alg, samples - 1, rng)
    estimates = [left_mult_pvar(alg, r, p, budget, seed + i, weights).value for i, r in enumerate(roots)]
    return {
        "p": float(p),
        "family_trials": family_trials,
        "max_family_gap": float(worst_gap),
        "family_holds": bool(worst_gap <= 1e-10),
        "estimates": estimates,
        "max_estimate": float(max(estimates)),
        "pvar_holds": bool(max(estimates) <= 1 + 1e-6),
        "holds": bool(worst_gap <= 1e-10 and max(estimates) <= 1 + 1e-6),
    }

