"""Finite-dimensional von Neumann algebras ``M = M_{n_1} + ... + M_{n_K}``.

Elements are stored blockwise.  The *flat* coordinates of an element are the
row-major entries of its blocks, concatenated in block order; the matrix unit
``E_ij`` of block ``k`` is the flat basis vector at offset ``offsets[k] + i*n_k + j``.
Every linear map out of the algebra in this package is a matrix acting on these
flat coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ContractError, StructuralError

__all__ = [
    "Algebra",
    "AlgebraElement",
    "op_norm",
    "adjoint",
    "multiply",
    "identity",
    "haar_unitary",
    "sample_unit_ball",
    "functional_matrix",
    "maximize_convex_over_ball",
    "sup_over_ball",
    "evaluate_on_witnesses",
    "matrix_to_json",
    "matrix_from_json",
]


@dataclass(frozen=True)
class Algebra:
    """Direct sum of full matrix blocks with the given sizes."""

    blocks: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(int(n) for n in self.blocks)
        if not blocks:
            raise StructuralError("an algebra needs at least one block")
        if any(n < 1 for n in blocks):
            raise StructuralError(f"block sizes must be positive, got {blocks}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def parse(cls, text: str) -> "Algebra":
        """Build from a comma-separated size list such as ``"2,3"``."""
        return cls(tuple(int(s) for s in text.split(",") if s.strip()))

    @classmethod
    def abelian(cls, n: int) -> "Algebra":
        return cls((1,) * n)

    @property
    def total_dim(self) -> int:
        return sum(n * n for n in self.blocks)

    @property
    def matrix_dim(self) -> int:
        return sum(self.blocks)

    @property
    def has_type_i2(self) -> bool:
        return 2 in self.blocks

    @property
    def is_abelian(self) -> bool:
        return all(n == 1 for n in self.blocks)

    @property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for n in self.blocks:
            out.append(acc)
            acc += n * n
        return tuple(out)

    def element(self, blocks: Sequence) -> "AlgebraElement":
        return AlgebraElement(self, tuple(np.asarray(b, dtype=complex) for b in blocks))

    def identity(self) -> "AlgebraElement":
        return self.element([np.eye(n) for n in self.blocks])

    def zeros(self) -> "AlgebraElement":
        return self.element([np.zeros((n, n)) for n in self.blocks])

    def from_flat(self, vec) -> "AlgebraElement":
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (self.total_dim,):
            raise StructuralError(f"flat vector has shape {vec.shape}, expected ({self.total_dim},)")
        blocks = []
        for off, n in zip(self.offsets, self.blocks):
            blocks.append(vec[off:off + n * n].reshape(n, n).copy())
        return AlgebraElement(self, tuple(blocks))

    def from_dense(self, mat) -> "AlgebraElement":
        """Cut a block-diagonal ``matrix_dim x matrix_dim`` matrix into blocks."""
        mat = np.asarray(mat, dtype=complex)
        if mat.shape != (self.matrix_dim, self.matrix_dim):
            raise StructuralError(f"dense matrix has shape {mat.shape}")
        blocks, start = [], 0
        for n in self.blocks:
            blocks.append(mat[start:start + n, start:start + n].copy())
            start += n
        return AlgebraElement(self, tuple(blocks))

    def matrix_units(self) -> list[tuple[int, int, int]]:
        """(block, row, col) labels in flat-coordinate order."""
        return [(k, i, j) for k, n in enumerate(self.blocks) for i in range(n) for j in range(n)]

    def matrix_unit(self, k: int, i: int, j: int) -> "AlgebraElement":
        vec = np.zeros(self.total_dim, dtype=complex)
        vec[self.offsets[k] + i * self.blocks[k] + j] = 1.0
        return self.from_flat(vec)

    def to_json(self) -> dict:
        return {"block_sizes": list(self.blocks)}

    @classmethod
    def from_json(cls, obj: dict) -> "Algebra":
        return cls(tuple(obj["block_sizes"]))


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    algebra: Algebra
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.blocks) != len(self.algebra.blocks):
            raise StructuralError(
                f"{len(self.blocks)} blocks given for an algebra with {len(self.algebra.blocks)}"
            )
        for b, n in zip(self.blocks, self.algebra.blocks):
            if b.shape != (n, n):
                raise StructuralError(f"block of shape {b.shape} where ({n}, {n}) was expected")

    def _check(self, other: "AlgebraElement"):
        if not isinstance(other, AlgebraElement):
            raise StructuralError(f"expected an AlgebraElement, got {type(other).__name__}")
        if other.algebra != self.algebra:
            raise StructuralError(f"algebra mismatch: {self.algebra.blocks} vs {other.algebra.blocks}")

    def _new(self, blocks) -> "AlgebraElement":
        return AlgebraElement(self.algebra, tuple(blocks))

    def adjoint(self) -> "AlgebraElement":
        return self._new(b.conj().T for b in self.blocks)

    def __matmul__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return self._new(a @ b for a, b in zip(self.blocks, other.blocks))

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return self._new(a + b for a, b in zip(self.blocks, other.blocks))

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return self._new(a - b for a, b in zip(self.blocks, other.blocks))

    def __neg__(self) -> "AlgebraElement":
        return self._new(-b for b in self.blocks)

    def __mul__(self, scalar) -> "AlgebraElement":
        return self._new(scalar * b for b in self.blocks)

    __rmul__ = __mul__

    def flatten(self) -> np.ndarray:
        return np.concatenate([b.reshape(-1) for b in self.blocks])

    def dense(self) -> np.ndarray:
        mat = np.zeros((self.algebra.matrix_dim,) * 2, dtype=complex)
        start = 0
        for b in self.blocks:
            n = b.shape[0]
            mat[start:start + n, start:start + n] = b
            start += n
        return mat

    def op_norm(self) -> float:
        return max(float(np.linalg.norm(b, 2)) for b in self.blocks)

    def trace(self) -> complex:
        return complex(sum(np.trace(b) for b in self.blocks))

    def distance(self, other: "AlgebraElement") -> float:
        return (self - other).op_norm()

    def is_self_adjoint(self, tol: float = 1e-9) -> bool:
        return self.distance(self.adjoint()) <= tol

    def right_mult_matrix(self) -> np.ndarray:
        """Matrix of ``R -> R @ self`` on flat coordinates."""
        return _blockdiag(np.kron(np.eye(b.shape[0]), b.T) for b in self.blocks)

    def left_mult_matrix(self) -> np.ndarray:
        """Matrix of ``R -> self @ R`` on flat coordinates."""
        return _blockdiag(np.kron(b, np.eye(b.shape[0])) for b in self.blocks)

    def to_json(self) -> dict:
        return {"blocks": [matrix_to_json(b) for b in self.blocks]}

    @classmethod
    def from_json(cls, algebra: Algebra, obj: dict) -> "AlgebraElement":
        return algebra.element([matrix_from_json(b) for b in obj["blocks"]])

    def __repr__(self):
        return f"AlgebraElement(blocks={self.algebra.blocks}, norm={self.op_norm():.4g})"


def _blockdiag(mats: Iterable[np.ndarray]) -> np.ndarray:
    mats = list(mats)
    size = sum(m.shape[0] for m in mats)
    out = np.zeros((size, size), dtype=complex)
    start = 0
    for m in mats:
        n = m.shape[0]
        out[start:start + n, start:start + n] = m
        start += n
    return out


def matrix_to_json(mat) -> list:
    """Row-major nested list of ``[re, im]`` pairs."""
    mat = np.atleast_2d(np.asarray(mat, dtype=complex))
    return [[[float(z.real), float(z.imag)] for z in row] for row in mat]


def matrix_from_json(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise StructuralError(f"matrix JSON must be rows of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def op_norm(a: AlgebraElement) -> float:
    return a.op_norm()


def adjoint(a: AlgebraElement) -> AlgebraElement:
    return a.adjoint()


def multiply(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    return a @ b


def identity(alg: Algebra) -> AlgebraElement:
    return alg.identity()


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_unit_ball(alg: Algebra, seed=None, kind: str = "haar_unitary") -> AlgebraElement:
    """Blockwise Haar unitary, or a Haar unitary scaled by ``s ~ U[0, 1]``."""
    rng = _rng(seed)
    u = alg.element([haar_unitary(n, rng) for n in alg.blocks])
    if kind == "haar_unitary":
        return u
    if kind == "contraction":
        return float(rng.uniform()) * u
    raise ContractError(f"unknown kind {kind!r}")


def functional_matrix(f, alg: Algebra) -> np.ndarray:
    """Coerce a linear map ``M -> C^d`` to its ``d x total_dim`` matrix.

    ``f`` may already be such a matrix, or a callable, which is then tabulated
    on the matrix units.
    """
    if callable(f):
        cols = []
        for k, i, j in alg.matrix_units():
            cols.append(np.atleast_1d(np.asarray(f(alg.matrix_unit(k, i, j)), dtype=complex)))
        return np.stack(cols, axis=1)
    mat = np.atleast_2d(np.asarray(f, dtype=complex))
    if mat.shape[1] != alg.total_dim:
        raise StructuralError(f"functional matrix has {mat.shape[1]} columns, expected {alg.total_dim}")
    return mat


def _polar_blocks(alg: Algebra, grad: np.ndarray, current: np.ndarray) -> np.ndarray:
    out = current.copy()
    for off, n in zip(alg.offsets, alg.blocks):
        g = grad[off:off + n * n].reshape(n, n)
        if np.linalg.norm(g) <= 1e-300:
            continue
        u, _, vh = np.linalg.svd(g)
        out[off:off + n * n] = (u @ vh).reshape(-1)
    return out


def maximize_convex_over_ball(
    alg: Algebra,
    linearize: Callable[[np.ndarray], tuple[float, np.ndarray]],
    starts: Iterable[np.ndarray],
    iters: int = 200,
    rel_tol: float = 1e-9,
) -> tuple[float, np.ndarray, int]:
    """Ascent for a convex objective over the unit ball of ``alg``.

    ``linearize(r)`` returns the objective at flat point ``r`` and a gradient
    ``g`` such that ``Re <g, r'>`` (conjugate-linear in ``g``) is a supporting
    linear minorant.  Each step moves to the blockwise unitary polar factor of
    ``g``, the maximizer of the minorant over the ball, so the objective never
    decreases.  Returns ``(best value, best flat point, index of best start)``.
    """
    best_val, best_r, best_idx = -np.inf, None, -1
    for idx, r in enumerate(starts):
        val, grad = linearize(r)
        for _ in range(iters):
            cand = _polar_blocks(alg, grad, r)
            new_val, new_grad = linearize(cand)
            if new_val <= val:
                break
            gain = new_val - val
            r, val, grad = cand, new_val, new_grad
            if gain <= rel_tol * max(val, 1e-300):
                break
        if val > best_val:
            best_val, best_r, best_idx = val, r, idx
    return float(best_val), best_r, best_idx


def _restart_points(alg: Algebra, budget: int, seed, witnesses) -> list[np.ndarray]:
    starts = [alg.identity().flatten()]
    starts += [w.flatten() for w in witnesses]
    for i in range(budget - 1):
        rng = np.random.default_rng([int(seed), i])
        starts.append(sample_unit_ball(alg, rng).flatten())
    return starts


def sup_over_ball(f, alg: Algebra, budget: int = 32, seed: int = 0, iters: int = 200,
                  witnesses: Sequence[AlgebraElement] = ()) -> tuple[float, AlgebraElement]:
    """Lower bound for ``sup_{||R|| <= 1} ||f(R)||_2`` with its witness ``R``.

    Restart ``i`` is seeded by ``(seed, i)`` independently of ``budget``, so the
    returned value is nondecreasing in ``budget``.  The identity and any given
    ``witnesses`` are always among the starting points.
    """
    if budget < 1:
        raise ContractError("budget must be at least 1")
    mat = functional_matrix(f, alg)
    mat_h = mat.conj().T

    def linearize(r):
        y = mat @ r
        nrm = float(np.linalg.norm(y))
        if nrm == 0.0:
            return 0.0, np.zeros_like(r)
        return nrm, mat_h @ (y / nrm)

    val, r, _ = maximize_convex_over_ball(alg, linearize, _restart_points(alg, budget, seed, witnesses), iters)
    return max(val, 0.0), alg.from_flat(r)


def evaluate_on_witnesses(f, alg: Algebra, witnesses: Sequence[AlgebraElement]) -> tuple[float, AlgebraElement]:
    """Plain maximum of ``||f(R)||`` over a fixed witness pool (no ascent)."""
    mat = functional_matrix(f, alg)
    vals = [float(np.linalg.norm(mat @ w.flatten())) for w in witnesses]
    i = int(np.argmax(vals))
    return vals[i], witnesses[i]
