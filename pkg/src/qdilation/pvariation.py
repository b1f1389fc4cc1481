"""p-variation of quantum measures over orthogonally represented finite trees.

A tree is a prefix-closed set of integer tuples whose nodes carry projections,
siblings being mutually orthogonal.  For a terminal ``(a1, ..., al)`` and a
root projection ``P`` the branch product is

    P_(a1..al) P_(a1..a(l-1)) ... P_(a1) P

(deepest label first, root last, never reordered).  The score of a tree is the
``l^p`` sum of a norm of the measure evaluated on its branch products; the
p-variation is the supremum of scores.  On non-abelian algebras the supremum
cannot be enumerated, so :func:`pvar_estimate` returns a lower bound from a
seeded tree search.  :func:`pvar_oracle_abelian` is the exact value on diagonal
algebras, by enumerating set partitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .algebra import Algebra, AlgebraElement, haar_unitary
from .errors import ContractError, StructuralError
from .measure import OperatorMap, QuantumMeasure
from .projection import (
    PROJECTION_TOL,
    Projection,
    as_projection,
    is_orthogonal,
    projection_onto,
    random_orthogonal_partition,
    random_projection,
    range_basis,
)

__all__ = [
    "OrthoTree",
    "PVarEstimate",
    "OracleResult",
    "OperatorAggregator",
    "VectorAggregator",
    "branch_value",
    "tree_search",
    "pvar_estimate",
    "set_partitions",
    "pvar_oracle_abelian",
    "compression_check",
    "pv_dilation_norm",
    "pv_contraction_check",
    "pvar_facts_check",
]

DEFAULT_MAX_DEPTH = 4
ORACLE_MAX_ATOMS = 8


# -- trees -------------------------------------------------------------------

def _key(node: tuple[int, ...]) -> str:
    return ",".join(str(a) for a in node)


@dataclass(frozen=True, eq=False)
class OrthoTree:
    labels: dict[tuple[int, ...], Projection]

    def __post_init__(self):
        labels = {tuple(int(a) for a in k): as_projection(v, 1e-8) for k, v in self.labels.items()}
        if not labels:
            raise StructuralError("a tree needs at least one node")
        for node in labels:
            if len(node) == 0:
                raise StructuralError("nodes are nonempty sequences")
            for cut in range(1, len(node)):
                if node[:cut] not in labels:
                    raise StructuralError(f"node {node} is missing its prefix {node[:cut]}")
        algs = {p.algebra for p in labels.values()}
        if len(algs) != 1:
            raise StructuralError("labels live in different algebras")
        object.__setattr__(self, "labels", labels)
        for node, sibs in self._sibling_groups().items():
            for i, a in enumerate(sibs):
                for b in sibs[i + 1:]:
                    if not is_orthogonal(labels[a], labels[b], 1e-10):
                        raise StructuralError(f"siblings {a} and {b} are not orthogonal")

    def _sibling_groups(self) -> dict[tuple[int, ...], list[tuple[int, ...]]]:
        groups: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
        for node in sorted(self.labels):
            groups.setdefault(node[:-1], []).append(node)
        return groups

    @property
    def algebra(self) -> Algebra:
        return next(iter(self.labels.values())).algebra

    @property
    def nodes(self) -> list[tuple[int, ...]]:
        return sorted(self.labels)

    @property
    def depth(self) -> int:
        return max(len(n) for n in self.labels)

    def children(self, node: tuple[int, ...]) -> list[tuple[int, ...]]:
        return [n for n in self.nodes if len(n) == len(node) + 1 and n[:-1] == node]

    def terminals(self) -> list[tuple[int, ...]]:
        parents = {n[:-1] for n in self.labels}
        return [n for n in self.nodes if n not in parents]

    def branch_product(self, terminal: tuple[int, ...], root: AlgebraElement | None = None) -> AlgebraElement:
        terminal = tuple(terminal)
        if terminal not in self.labels or terminal not in self.terminals():
            raise ContractError(f"{terminal} is not a terminal of the tree")
        prod = self.labels[terminal]
        for cut in range(len(terminal) - 1, 0, -1):
            prod = prod @ self.labels[terminal[:cut]]
        return prod @ root if root is not None else prod

    def branch_products(self, root: AlgebraElement | None = None) -> list[AlgebraElement]:
        return [self.branch_product(t, root) for t in self.terminals()]

    def under(self, p: AlgebraElement) -> "OrthoTree":
        """This tree hung below a single new root-level node labeled ``p``."""
        labels = {(0,): as_projection(p, 1e-8)}
        labels.update({(0,) + n: q for n, q in self.labels.items()})
        return OrthoTree(labels)

    @classmethod
    def side_by_side(cls, parts: Sequence[tuple[AlgebraElement, "OrthoTree | None"]]) -> "OrthoTree":
        """Root-level nodes ``(i,)`` labeled by mutually orthogonal projections, each carrying a subtree."""
        labels = {}
        for i, (p, sub) in enumerate(parts):
            labels[(i,)] = as_projection(p, 1e-8)
            if sub is not None:
                labels.update({(i,) + n: q for n, q in sub.labels.items()})
        return cls(labels)

    def to_json(self) -> dict:
        return {
            "nodes": [list(n) for n in self.nodes],
            "labels": {_key(n): self.labels[n].to_json() for n in self.nodes},
        }

    @classmethod
    def from_json(cls, algebra: Algebra, obj: dict) -> "OrthoTree":
        labels = {}
        for node in obj["nodes"]:
            node = tuple(int(a) for a in node)
            labels[node] = Projection.from_json(algebra, obj["labels"][_key(node)])
        return cls(labels)


def branch_value(ubar: OperatorMap, tree: OrthoTree, terminal, root: AlgebraElement, x) -> float:
    """``||Ubar(branch product . root) x||``."""
    prod = tree.branch_product(tuple(terminal), root)
    return float(np.linalg.norm(ubar.apply(prod) @ np.asarray(x, dtype=complex)))


# -- aggregators -----------------------------------------------------------------
# An aggregator turns the per-terminal arrays into (score, x, contributions).

class OperatorAggregator:
    """Score ``sup_x (sum_t ||A_t x||^p)^(1/p)`` over unit ``x``, or at a fixed ``x``.

    For ``p = 2`` the supremum is the top eigenvalue of ``sum A_t^* A_t``.  For
    other ``p`` it is a normalized-gradient ascent on the sphere, which never
    decreases the convex objective; refinement adds ``restarts`` seeded starts.
    """

    def __init__(self, p: float, x=None, restarts: int = 32, iters: int = 200, seed: int = 0):
        self.p = float(p)
        self.x = None if x is None else np.asarray(x, dtype=complex)
        self.restarts = restarts
        self.iters = iters
        self.seed = seed

    def _at(self, mats: np.ndarray, x: np.ndarray):
        norms = np.linalg.norm(mats @ x, axis=1)
        contrib = norms ** self.p
        return float(np.sum(contrib) ** (1 / self.p)), contrib

    def _ascend(self, mats: np.ndarray, x: np.ndarray, iters: int):
        val, contrib = self._at(mats, x)
        for _ in range(iters):
            ys = mats @ x
            norms = np.linalg.norm(ys, axis=1)
            w = np.zeros_like(norms)
            nz = norms > 1e-300
            w[nz] = norms[nz] ** (self.p - 2)
            g = np.einsum("t,tji,tj->i", w, mats.conj(), ys)
            gn = np.linalg.norm(g)
            if gn <= 1e-300:
                break
            cand = g / gn
            new_val, new_contrib = self._at(mats, cand)
            if new_val <= val * (1 + 1e-13):
                if new_val > val:
                    x, val, contrib = cand, new_val, new_contrib
                break
            x, val, contrib = cand, new_val, new_contrib
        return val, x, contrib

    def __call__(self, arrays: Sequence[np.ndarray], refine: bool = False, x_hint=None):
        mats = np.asarray(arrays, dtype=complex)
        if self.x is not None:
            val, contrib = self._at(mats, self.x)
            return val, self.x, contrib
        gram = np.einsum("tji,tjk->ik", mats.conj(), mats)
        vals, vecs = np.linalg.eigh(gram)
        x0 = vecs[:, -1]
        if self.p == 2.0:
            val, contrib = self._at(mats, x0)
            return float(np.sqrt(max(vals[-1], 0.0))), x0, contrib
        best = self._ascend(mats, x0, 30 if not refine else self.iters)
        starts = [] if x_hint is None else [np.asarray(x_hint, dtype=complex)]
        if refine:
            rng = np.random.default_rng(self.seed)
            d = mats.shape[2]
            for _ in range(self.restarts):
                z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
                starts.append(z / np.linalg.norm(z))
        for s in starts:
            cand = self._ascend(mats, s / max(np.linalg.norm(s), 1e-300), self.iters)
            if cand[0] > best[0]:
                best = cand
        return best


class VectorAggregator:
    """Score ``(sum_t ||v_t||^p)^(1/p)`` for vector-valued branch values."""

    def __init__(self, p: float):
        self.p = float(p)

    def __call__(self, arrays, refine: bool = False, x_hint=None):
        norms = np.array([np.linalg.norm(a) for a in arrays])
        contrib = norms ** self.p
        return float(np.sum(contrib) ** (1 / self.p)), None, contrib


# -- search ------------------------------------------------------------------------

@dataclass
class PVarEstimate:
    value: float
    best_tree: OrthoTree
    best_x: np.ndarray | None
    exact: bool = False
    candidates: int = 0
    depth_cap: int = DEFAULT_MAX_DEPTH

    def to_dict(self) -> dict:
        x = None if self.best_x is None else [[float(z.real), float(z.imag)] for z in self.best_x]
        return {
            "value": float(self.value),
            "exact": self.exact,
            "candidates": self.candidates,
            "depth_cap": self.depth_cap,
            "best_x": x,
            "best_tree": self.best_tree.to_json(),
        }


class _TreeSearch:
    def __init__(self, alg, root, p, lin, agg, seed, max_depth, growth_tries, on_score):
        self.alg = alg
        self.root = root
        self.p = float(p)
        self.lin = lin
        self.agg = agg
        self.seed = seed
        self.max_depth = max_depth
        self.growth_tries = growth_tries
        self.on_score = on_score
        self.root_basis = range_basis(root)
        self.rank = sum(w.shape[1] for w in self.root_basis)

    def _score(self, arrays, refine=False, x_hint=None):
        val, x, contrib = self.agg(arrays, refine=refine, x_hint=x_hint)
        if self.on_score is not None:
            self.on_score(val)
        return val, x, contrib

    def score_tree(self, tree: OrthoTree, refine=False, x_hint=None):
        arrays = [self.lin(prod.flatten()) for prod in tree.branch_products(self.root)]
        return self._score(arrays, refine, x_hint)

    def trivial(self):
        tree = OrthoTree({(0,): as_projection(self.root, 1e-8)})
        val, x, _ = self.score_tree(tree, refine=True)
        return val, tree, x

    def _columns(self, rng):
        cols = []
        for k, w in enumerate(self.root_basis):
            r = w.shape[1]
            if r:
                w = w @ haar_unitary(r, rng)
                cols.extend((k, w[:, c]) for c in range(r))
        return cols

    def _group_tree(self, cols, labels) -> OrthoTree:
        out = {}
        for new, g in enumerate(sorted(set(labels.tolist()))):
            bases = [[] for _ in self.alg.blocks]
            for (k, v), lab in zip(cols, labels):
                if lab == g:
                    bases[k].append(v)
            out[(new,)] = projection_onto(self.alg, [np.array(b).T if b else None for b in bases])
        return OrthoTree(out)

    def _local_search(self, col_arrays, labels, rng):
        r = len(labels)

        def evaluate(labs):
            groups = sorted(set(labs.tolist()))
            sums = [col_arrays[labs == g].sum(axis=0) for g in groups]
            return self._score(sums), groups

        (val, x, contrib), groups = evaluate(labels)
        improved = True
        passes = 0
        while improved and passes < 20:
            improved = False
            passes += 1
            for c in range(r):
                options = [g for g in groups if g != labels[c]] + [max(groups) + 1]
                for g in options:
                    trial = labels.copy()
                    trial[c] = g
                    (tv, tx, tc), tg = evaluate(trial)
                    if tv > val * (1 + 1e-12) + 1e-300:
                        labels, val, x, contrib, groups = trial, tv, tx, tc, tg
                        improved = True
                        break
            # split the part contributing least
            sizes = {g: int(np.sum(labels == g)) for g in groups}
            splittable = [i for i, g in enumerate(groups) if sizes[g] >= 2]
            if splittable:
                weakest = min(splittable, key=lambda i: contrib[i])
                members = np.flatnonzero(labels == groups[weakest])
                moved = members[rng.permutation(len(members))[: int(rng.integers(1, len(members)))]]
                trial = labels.copy()
                trial[moved] = max(groups) + 1
                (tv, tx, tc), tg = evaluate(trial)
                if tv > val * (1 + 1e-12) + 1e-300:
                    labels, val, x, contrib, groups = trial, tv, tx, tc, tg
                    improved = True
        return labels, val, x

    def _child_family(self, parent: Projection, rng) -> list[Projection]:
        if parent.rank >= 2 and rng.uniform() < 0.5:
            q = parent
        else:
            q = random_projection(self.alg, rng)
            if q.rank == 0:
                q = as_projection(self.alg.identity())
        m = int(rng.integers(1, q.rank + 1))
        return random_orthogonal_partition(q, m, rng)

    def _grow(self, tree: OrthoTree, val, x, rng):
        for level in range(2, self.max_depth + 1):
            for term in [t for t in tree.terminals() if len(t) == level - 1]:
                for _ in range(self.growth_tries):
                    kids = self._child_family(tree.labels[term], rng)
                    labels = dict(tree.labels)
                    labels.update({term + (i,): q for i, q in enumerate(kids)})
                    cand = OrthoTree(labels)
                    cv, cx, _ = self.score_tree(cand)
                    if cv > val * (1 + 1e-12) + 1e-300:
                        tree, val, x = cand, cv, cx
                        break
        return tree, val, x

    def candidate(self, i: int):
        rng = np.random.default_rng([int(self.seed), i])
        cols = self._columns(rng)
        col_arrays = np.array([
            self.lin(projection_onto(self.alg, [v[:, None] if j == k else None
                                                for j in range(len(self.alg.blocks))]).flatten())
            for k, v in cols
        ])
        m = int(rng.integers(1, self.rank + 1))
        perm = rng.permutation(self.rank)
        labels = np.empty(self.rank, dtype=int)
        labels[perm[:m]] = np.arange(m)
        labels[perm[m:]] = rng.integers(0, m, size=self.rank - m)
        labels, val, x = self._local_search(col_arrays, labels, rng)
        tree = self._group_tree(cols, labels)
        if self.max_depth > 1:
            tree, val, x = self._grow(tree, val, x, rng)
        val, x, _ = self.score_tree(tree, refine=True, x_hint=x)
        return val, tree, x


def tree_search(alg: Algebra, root: AlgebraElement, p: float, lin: Callable[[np.ndarray], np.ndarray], agg,
                budget: int = 64, seed: int = 0, max_depth: int = DEFAULT_MAX_DEPTH, growth_tries: int = 2,
                extra_trees: Sequence = (), on_score: Callable[[float], None] | None = None) -> PVarEstimate:
    """Seeded lower-bound search for ``sup_T (sum_terminals ||lin(branch)||^p)^(1/p)``.

    ``lin`` maps the flat coordinates of a branch product to an array, linearly;
    ``agg`` scores the list of arrays (see the aggregator classes).  Candidate
    ``i`` is generated from ``(seed, i)`` alone: a random orthogonal partition
    of ``root``, improved by single-vector moves and by splitting its weakest
    part, then deepened up to ``max_depth`` by attaching orthogonal child
    families when that raises the score.  The result is the first maximum over
    the trivial tree, ``extra_trees`` (a tree, or a ``(tree, x)`` pair to seed
    the vector ascent) and candidates ``0 .. budget-1``; it is nondecreasing
    in ``budget``.
    """
    if p < 1:
        raise ContractError(f"p must be at least 1, got {p}")
    if budget < 1:
        raise ContractError("budget must be at least 1")
    root = as_projection(root, 1e-8)
    search = _TreeSearch(alg, root, p, lin, agg, seed, max_depth, growth_tries, on_score)
    best = search.trivial()
    for extra in extra_trees:
        tree, hint = extra if isinstance(extra, tuple) else (extra, None)
        val, x, _ = search.score_tree(tree, refine=True, x_hint=hint)
        if val > best[0]:
            best = (val, tree, x)
    if search.rank > 0:
        for i in range(budget):
            cand = search.candidate(i)
            if cand[0] > best[0]:
                best = cand
    return PVarEstimate(best[0], best[1], best[2], False, budget, max_depth)


def _as_operator_map(u) -> OperatorMap:
    if isinstance(u, OperatorMap):
        return u
    if isinstance(u, QuantumMeasure):
        if u.restriction_of is None:
            raise ContractError("tabulated measure: extend it with gleason_extend first")
        return u.restriction_of
    raise ContractError(f"expected an OperatorMap or QuantumMeasure, got {type(u).__name__}")


def pvar_estimate(u, p_root: AlgebraElement, p: float, budget: int = 64, seed: int = 0, *, x=None,
                  max_depth: int = DEFAULT_MAX_DEPTH, extra_trees: Sequence = (),
                  on_score: Callable[[float], None] | None = None) -> PVarEstimate:
    """Lower bound for the p-variation ``|U|_p(P)``; with ``x`` given, for ``|U_x|_p(P)``."""
    ubar = _as_operator_map(u)
    d = ubar.d
    agg = OperatorAggregator(p, x=x, seed=seed)

    def lin(flat):
        return np.tensordot(flat, ubar.values, axes=1).reshape(d, d)

    return tree_search(ubar.algebra, p_root, p, lin, agg, budget, seed, max_depth,
                       extra_trees=extra_trees, on_score=on_score)


def pv_dilation_norm(space, coords, p: float, budget: int = 64, seed: int = 0, *,
                     max_depth: int = DEFAULT_MAX_DEPTH, extra_trees: Sequence = (),
                     return_estimate: bool = False):
    """Lower bound for ``||Phi||_pV = sup_T (sum ||Phi(branch)||^p)^(1/p)`` (root ``I``)."""
    phi = space.concrete(coords)
    est = tree_search(space.algebra, space.algebra.identity(), p, lambda flat: phi @ flat, VectorAggregator(p),
                      budget, seed, max_depth, extra_trees=extra_trees)
    return est if return_estimate else est.value


def pv_contraction_check(space, coords, p_proj: AlgebraElement, p: float, budget: int = 16, seed: int = 0,
                         max_depth: int = DEFAULT_MAX_DEPTH) -> dict:
    """Compare the pV estimates of ``V(P) Phi`` and ``Phi`` on a shared witness.

    ``(V(P) Phi)(B) = Phi(B P)``, so the best tree found for ``V(P) Phi`` hung
    under a root-level node labeled ``P`` scores the same for ``Phi``; it is
    added to the witness pool of the estimate for ``Phi``.
    """
    from .dilation import map_V

    p_proj = as_projection(p_proj, 1e-8)
    coords = np.asarray(coords, dtype=complex)
    moved = map_V(space, p_proj) @ coords
    left = pv_dilation_norm(space, moved, p, budget, seed, max_depth=max_depth, return_estimate=True)
    extra = [left.best_tree.under(p_proj)] if p_proj.rank > 0 else []
    right = pv_dilation_norm(space, coords, p, budget, seed, max_depth=max_depth, extra_trees=extra)
    return {"moved": left.value, "original": right, "holds": bool(left.value <= right + 1e-6)}


# -- abelian oracle -------------------------------------------------------------------

def set_partitions(items: Sequence) -> Iterator[list[list]]:
    """All set partitions of ``items`` (Bell-number many), blocks in first-seen order."""
    items = list(items)
    if not items:
        yield []
        return

    def rec(i, blocks):
        if i == len(items):
            yield [list(b) for b in blocks]
            return
        for b in blocks:
            b.append(items[i])
            yield from rec(i + 1, blocks)
            b.pop()
        blocks.append([items[i]])
        yield from rec(i + 1, blocks)
        blocks.pop()

    yield from rec(0, [])


@dataclass
class OracleResult:
    value: float
    partition: list[list[int]]
    x: np.ndarray | None
    exact: bool

    def to_dict(self) -> dict:
        x = None if self.x is None else [[float(z.real), float(z.imag)] for z in self.x]
        return {"value": float(self.value), "partition": self.partition, "exact": self.exact, "x": x}


def _atoms(alg: Algebra, e) -> list[int]:
    if e is None:
        return list(range(len(alg.blocks)))
    if isinstance(e, AlgebraElement):
        diag = [b[0, 0].real for b in e.blocks]
        return [i for i, v in enumerate(diag) if v > 0.5]
    return sorted(int(i) for i in e)


def pvar_oracle_abelian(u, e=None, p: float = 2.0, x=None, seed: int = 0) -> OracleResult:
    """Exact ``sup`` over set partitions of ``E`` of ``(sum_j ||mu(E_j) x||^p)^(1/p)``.

    ``u`` lives on the diagonal algebra ``l_inf^n`` (``n <= 8``); ``e`` is a
    subset of atoms (indices, or a diagonal projection; default all).  Without
    ``x`` the supremum over unit ``x`` is taken too: exactly through the top
    eigenvalue for ``p = 2`` or for scalar values, otherwise by restarted
    ascent, in which case ``exact`` is False and the value is a lower bound.
    """
    ubar = _as_operator_map(u)
    alg = ubar.algebra
    if not alg.is_abelian:
        raise ContractError("the partition oracle needs a diagonal (abelian) algebra")
    if len(alg.blocks) > ORACLE_MAX_ATOMS:
        raise ContractError(f"oracle limited to {ORACLE_MAX_ATOMS} atoms, got {len(alg.blocks)}")
    if p < 1:
        raise ContractError(f"p must be at least 1, got {p}")
    atoms = _atoms(alg, e)
    mu = ubar.values  # flat coordinate i is atom i
    d = ubar.d
    exact = x is not None or p == 2.0 or d == 1
    agg = OperatorAggregator(p, x=x, seed=seed)
    best = OracleResult(0.0, [atoms] if atoms else [], None if x is None else np.asarray(x, dtype=complex), exact)
    if not atoms:
        return best
    for part in set_partitions(atoms):
        sums = np.array([mu[blk].sum(axis=0) for blk in part])
        if d == 1 and x is None:
            val = float(np.sum(np.abs(sums[:, 0, 0]) ** p) ** (1 / p))
            vx = np.ones(1, dtype=complex)
        else:
            val, vx, _ = agg(sums, refine=not exact)
        if val > best.value:
            best = OracleResult(val, part, vx, exact)
    return best


# -- inequalities ------------------------------------------------------------------------

def compression_check(v: OperatorMap, s, t, p_root: AlgebraElement, p: float, budget: int = 32,
                      seed: int = 0, u: OperatorMap | None = None) -> dict:
    """Compare ``|S V T|_p(P)`` with ``||S|| |V|_p(P) ||T||``.

    The right side is estimated with a strictly larger budget and with the
    left side's best tree (and the pushed-forward vector ``T x``) in its
    witness pool.
    """
    s = np.asarray(s, dtype=complex)
    t = np.asarray(t, dtype=complex)
    u = v.compose(s, t) if u is None else u
    left = pvar_estimate(u, p_root, p, budget, seed)
    hint = None
    if left.best_x is not None:
        tx = t @ left.best_x
        hint = tx / np.linalg.norm(tx) if np.linalg.norm(tx) > 0 else None
    right_v = pvar_estimate(v, p_root, p, 2 * budget + 1, seed, extra_trees=[(left.best_tree, hint)])
    s_norm = float(np.linalg.norm(s, 2))
    t_norm = float(np.linalg.norm(t, 2))
    rhs = s_norm * right_v.value * t_norm
    return {
        "lhs": left.value,
        "v_variation": right_v.value,
        "s_norm": s_norm,
        "t_norm": t_norm,
        "rhs": rhs,
        "slack": rhs - left.value,
        "holds": bool(left.value <= rhs + 1e-6),
    }


def _check_family(family: Sequence[AlgebraElement]) -> list[Projection]:
    fam = [as_projection(q, 1e-8) for q in family]
    for i, a in enumerate(fam):
        for b in fam[i + 1:]:
            if not is_orthogonal(a, b, PROJECTION_TOL):
                raise ContractError("family members must be mutually orthogonal")
    return fam


def pvar_facts_check(v: OperatorMap, y, p: float, family: Sequence[AlgebraElement], seed: int = 0,
                     budget: int = 16, tol: float = 2e-6) -> dict:
    """Tail monotonicity and superadditivity of ``|V_y|_p`` on an orthogonal family.

    Superadditivity is checked on every split ``P1 = sum(family[:k])``,
    ``P2 = sum(family[k:])``; monotonicity on the tails ``sum(family[m:])``.
    On diagonal algebras with at most 8 atoms the exact oracle is used and the
    inequalities must hold to rounding (``1e-12`` relative).  Otherwise the
    estimates share witnesses: the tree for ``P1 + P2`` includes the side-by-side
    union of the trees found for ``P1`` and ``P2``, and each larger tail gets
    the smaller tail's tree hung under the smaller tail.
    """
    fam = _check_family(family)
    alg = v.algebra
    y = np.asarray(y, dtype=complex)
    zero = alg.zeros()

    def total(members):
        out = zero
        for q in members:
            out = out + q
        return as_projection(out, 1e-8)

    use_oracle = alg.is_abelian and len(alg.blocks) <= ORACLE_MAX_ATOMS
    if use_oracle:
        def value(q, extra=()):
            return pvar_oracle_abelian(v, q, p, x=y).value, None
        slack_tol = lambda ref: 1e-12 * max(1.0, ref)  # noqa: E731
    else:
        def value(q, extra=()):
            if as_projection(q, 1e-8).rank == 0:
                return 0.0, None
            est = pvar_estimate(v, q, p, budget, seed, x=y, extra_trees=extra)
            return est.value, est.best_tree
        slack_tol = lambda ref: tol  # noqa: E731

    splits = []
    worst_super = np.inf
    for k in range(len(fam) + 1):
        p1, p2 = total(fam[:k]), total(fam[k:])
        v1, t1 = value(p1)
        v2, t2 = value(p2)
        parts = [(q, tr) for q, tr in ((p1, t1), (p2, t2)) if q.rank > 0 and tr is not None]
        extra = [OrthoTree.side_by_side(parts)] if parts and not use_oracle else []
        v12, _ = value(total(fam), extra)
        gap = v12 ** p - v1 ** p - v2 ** p
        worst_super = min(worst_super, gap)
        splits.append({"k": k, "left": v1, "right": v2, "union": v12, "gap": gap,
                       "holds": bool(gap >= -slack_tol(v12 ** p))})
    tails = []
    prev_val, prev_tree, prev_proj = None, None, None
    for m in range(len(fam), -1, -1):
        q = total(fam[m:])
        extra = [prev_tree.under(prev_proj)] if prev_tree is not None and not use_oracle else []
        val, tree = value(q, extra)
        tails.append({"m": m, "value": val,
                      "holds": bool(prev_val is None or prev_val <= val + slack_tol(val))})
        prev_val, prev_tree, prev_proj = val, tree, q
    tails.reverse()
    return {
        "mode": "oracle" if use_oracle else "estimate",
        "superadditivity": splits,
        "tail_monotonicity": tails,
        "min_superadditivity_gap": float(worst_super),
        "holds": bool(all(s["holds"] for s in splits) and all(t["holds"] for t in tails)),
    }
