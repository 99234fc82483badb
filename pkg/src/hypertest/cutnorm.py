"""r-cut norms and cut-P-norms for symmetric arrays and step kernels.

Both problems reduce to one shape: a set of atoms (unordered (r-1)-subsets
of vertices for arrays, grid-cell orbits for kernels) and a coefficient
tensor T with the normalization folded in, so that choosing sets
S_1..S_r of atoms scores sum_{a} T[a_1..a_r] prod_l 1{a_l in S_l}. The
cut norm maximizes |score|; the cut-P-norm splits each set by partition
class and maximizes the sum of per-class-tuple absolute scores.

The exact optimizer enumerates the first r-1 sets and closes the last
one: with the others fixed, the last set's contribution is linear per
atom (plain norm) and independent across classes (cut-P-norm), so the
best completion is computed, not searched. This avoids the 2^{t^r}
sign-pattern sweep entirely. The heuristic is sign-guided coordinate
ascent; it evaluates the true objective, so it is always a lower bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial, lcm
from typing import Any, Sequence

import numpy as np

from .budget import BudgetError, check_budget
from .graphon import (
    GridPartition,
    StepGraphon,
    VertexGraphon,
    class_tuple_weights,
    common_refinement,
    orbit_partition,
)
from .hypercore import ColoredHypergraph, colex_subsets
from .seeds import derive_seed, generator

__all__ = [
    "TuplePartition",
    "StepKernel",
    "CutWitness",
    "cutnorm_exact",
    "cutnorm_heuristic",
    "cutnorm_p",
    "kernel_cutnorm",
    "kernel_cutnorm_p",
    "cut_distance",
    "sup_cutnorm_over_partitions",
    "evaluate_witness",
    "difference_kernel",
    "graph_difference_arrays",
    "random_symmetric_array",
]

EXACT_SET_BITS = 24  # hard cap: exhaustive search enumerates at most 2^24 set tuples


@dataclass(frozen=True)
class TuplePartition:
    """Partition of the unordered (r-1)-subsets of [n] into q classes.

    ``classes[i]`` is the class of the i-th subset in colex order; classes
    are symmetric by construction since atoms are unordered subsets.
    """

    n: int
    r_minus_1: int
    classes: tuple[int, ...]
    q: int
    allow_empty: bool = False

    def __post_init__(self) -> None:
        expected = comb(self.n, self.r_minus_1)
        if len(self.classes) != expected:
            raise ValueError(f"need {expected} class labels, got {len(self.classes)}")
        if self.q < 1:
            raise ValueError("class count q must be >= 1")
        if any(c < 0 or c >= self.q for c in self.classes):
            raise ValueError("class labels must lie in range(q)")
        if not self.allow_empty and len(set(self.classes)) != self.q:
            raise ValueError("every class must be nonempty (or set allow_empty)")

    @classmethod
    def trivial(cls, n: int, r_minus_1: int) -> "TuplePartition":
        return cls(n, r_minus_1, (0,) * comb(n, r_minus_1), 1)

    @classmethod
    def random(cls, n: int, r_minus_1: int, q: int, seed: int) -> "TuplePartition":
        rng = generator(seed)
        m = comb(n, r_minus_1)
        for _ in range(200):
            labels = tuple(int(x) for x in rng.integers(0, q, size=m))
            if len(set(labels)) == q:
                return cls(n, r_minus_1, labels, q)
        return cls(n, r_minus_1, (0,) * m, q, allow_empty=True)

    def subsets(self) -> tuple[tuple[int, ...], ...]:
        return tuple(colex_subsets(self.n, self.r_minus_1))


@dataclass(frozen=True, eq=False)
class StepKernel:
    """A real symmetric (r, r-1)-step function, e.g. a channel difference."""

    partition: GridPartition
    array: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.array, dtype=float)
        r = self.r
        if arr.shape != (self.partition.t,) * r:
            raise ValueError(f"array shape {arr.shape} != {(self.partition.t,) * r}")
        for perm in itertools.permutations(range(r)):
            if not np.allclose(arr.transpose(perm), arr, atol=1e-9):
                raise ValueError("kernel array is not symmetric under index permutations")
        arr.flags.writeable = False
        object.__setattr__(self, "array", arr)

    @property
    def r(self) -> int:
        return self.partition.r_minus_1 + 1


@dataclass(frozen=True)
class CutWitness:
    """An argmax certificate: atom sets per position, optional class data.

    ``sets`` holds atom indices; ``atoms`` describes each atom (an
    (r-1)-subset for arrays, a representative grid cell for kernels) so
    the witness is meaningful without the original problem object.
    """

    kind: str
    r: int
    value: float
    sets: tuple[tuple[int, ...], ...]
    atoms: tuple[tuple[int, ...], ...]
    classes: tuple[int, ...] | None = None
    signs: tuple[int, ...] | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "r": self.r,
            "value": self.value,
            "sets": [list(s) for s in self.sets],
            "atoms": [list(a) for a in self.atoms],
            "classes": None if self.classes is None else list(self.classes),
            "signs": None if self.signs is None else list(self.signs),
        }


# ----------------------------------------------------------------------
# problem construction


def _validate_symmetric_array(a: np.ndarray, r: int) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != r or len(set(arr.shape)) != 1:
        raise ValueError(f"expected an r-array with equal axes, got shape {arr.shape}")
    for perm in itertools.permutations(range(r)):
        if not np.allclose(arr.transpose(perm), arr, atol=1e-9):
            raise ValueError("array is not symmetric under index permutations")
    return arr


def _array_problem(a: np.ndarray) -> tuple[tuple[tuple[int, ...], ...], np.ndarray]:
    """Atoms and coefficient tensor for the array cut norm."""
    r = np.asarray(a).ndim
    arr = _validate_symmetric_array(a, r)
    n = arr.shape[0]
    atoms = tuple(colex_subsets(n, r - 1))
    rank = {s: i for i, s in enumerate(atoms)}
    m = len(atoms)
    t = np.zeros((m,) * r)
    scale = 1.0 / n ** r
    for tup in itertools.product(range(n), repeat=r):
        if r >= 3 and len(set(tup)) != r:
            continue  # some deleted projection would hit the diagonal
        idx = tuple(rank[tuple(sorted(tup[:j] + tup[j + 1:]))] for j in range(r))
        t[idx] += arr[tup] * scale
    return atoms, t


def _kernel_problem(
    kern: StepKernel, qpart: GridPartition | None
) -> tuple[tuple[tuple[int, ...], ...], np.ndarray, np.ndarray | None]:
    """Atoms (cell orbits), coefficient tensor, and optional class vector.

    Restricting the continuum suprema to unions of cell orbits is lossless:
    the objective is multilinear in each orbit's fractional membership, so
    some vertex of the box is optimal, and symmetric sets are exactly the
    unions of orbits.
    """
    r = kern.r
    g0 = kern.partition.resolution
    g = g0 if qpart is None else lcm(g0, qpart.resolution)
    orbits = orbit_partition(r - 1, g)
    flat = orbits.labels.ravel()
    _, first = np.unique(flat, return_index=True)
    kcls = kern.partition.refined(g // g0).labels.ravel()[first]
    weights = class_tuple_weights(orbits)
    t = kern.array[np.ix_(*([kcls] * r))] * weights
    shape = orbits.labels.shape if orbits.labels.ndim else (1,)
    atoms = tuple(
        tuple(int(x) for x in np.unravel_index(i, shape)) for i in first
    )
    classes = None
    if qpart is not None:
        classes = qpart.refined(g // qpart.resolution).labels.ravel()[first]
    return atoms, t, classes


# ----------------------------------------------------------------------
# exact optimization


@lru_cache(maxsize=None)
def _subset_matrix(m: int) -> np.ndarray:
    masks = np.arange(1 << m, dtype=np.uint32)
    return ((masks[:, None] >> np.arange(m)) & 1).astype(float)


def _mask_indices(mask: int, m: int) -> tuple[int, ...]:
    return tuple(i for i in range(m) if mask >> i & 1)


def _check_exact_budget(stage: str, r: int, m: int, budget: int | None) -> None:
    bits = r * m
    if bits > EXACT_SET_BITS:
        raise BudgetError(stage, 1 << bits, 1 << EXACT_SET_BITS)
    check_budget(stage, 1 << bits, budget)


def _exact_plain(t: np.ndarray, budget: int | None) -> tuple[float, list[tuple[int, ...]]]:
    r, m = t.ndim, t.shape[0]
    _check_exact_budget("cut norm exact search", r, m, budget)
    s = _subset_matrix(m)
    if r == 1:
        pos, neg = t[t > 0].sum(), t[t < 0].sum()
        if pos >= -neg:
            return float(pos), [tuple(np.flatnonzero(t > 0))]
        return float(-neg), [tuple(np.flatnonzero(t < 0))]
    if r == 2:
        c = s @ t
        pos = np.clip(c, 0, None).sum(axis=1)
        neg = -np.clip(c, None, 0).sum(axis=1)
        vals = np.maximum(pos, neg)
        i = int(np.argmax(vals))
        row = c[i]
        last = row > 0 if pos[i] >= neg[i] else row < 0
        return float(vals[i]), [_mask_indices(i, m), tuple(np.flatnonzero(last))]
    if r == 3:
        c = np.einsum("am,bn,mno->abo", s, s, t, optimize=True)
        pos = np.clip(c, 0, None).sum(axis=2)
        neg = -np.clip(c, None, 0).sum(axis=2)
        vals = np.maximum(pos, neg)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        row = c[i, j]
        last = row > 0 if pos[i, j] >= neg[i, j] else row < 0
        return (
            float(vals[i, j]),
            [_mask_indices(int(i), m), _mask_indices(int(j), m), tuple(np.flatnonzero(last))],
        )
    best, best_sets = -1.0, [()] * r
    for masks in itertools.product(range(1 << m), repeat=r - 1):
        cur = t
        for mask in masks:
            cur = np.tensordot(s[mask], cur, axes=([0], [0]))
        pos, neg = cur[cur > 0].sum(), -cur[cur < 0].sum()
        val = max(pos, neg)
        if val > best:
            last = cur > 0 if pos >= neg else cur < 0
            best = float(val)
            best_sets = [_mask_indices(mk, m) for mk in masks] + [tuple(np.flatnonzero(last))]
    return best, best_sets


def _exact_cutp(
    t: np.ndarray, classes: np.ndarray, tq: int, budget: int | None
) -> tuple[float, list[tuple[int, ...]], np.ndarray]:
    """Exact cut-P optimum: enumerate first sets, close the last per class."""
    r, m = t.ndim, t.shape[0]
    _check_exact_budget("cut-P-norm exact search", r, m, budget)
    onehot = (np.asarray(classes)[:, None] == np.arange(tq)).astype(float)
    members = [np.flatnonzero(np.asarray(classes) == j) for j in range(tq)]
    s = _subset_matrix(m)

    def close_last(w: np.ndarray) -> tuple[float, tuple[int, ...]]:
        # w: (first-class tuples..., atom); per class the best subset of its
        # members maximizes the summed absolute inner products independently
        flat = w.reshape(-1, m)
        total, chosen = 0.0, []
        for j in range(tq):
            if len(members[j]) == 0:
                continue
            sub = _subset_matrix(len(members[j]))
            scores = np.abs(sub @ flat[:, members[j]].T).sum(axis=1)
            best = int(np.argmax(scores))
            total += float(scores[best])
            chosen.extend(members[j][i] for i in _mask_indices(best, len(members[j])))
        return total, tuple(sorted(chosen))

    if r == 2:
        w = np.einsum("sa,aj,ab->sjb", s, onehot, t, optimize=True)
        best_val, best_sets = -1.0, None
        for i in range(1 << m):
            val, last = close_last(w[i])
            if val > best_val:
                best_val, best_sets = val, [_mask_indices(i, m), last]
    elif r == 3:
        best_val, best_sets = -1.0, None
        for i in range(1 << m):
            w = np.einsum("a,aj,tb,bk,abc->tjkc", s[i], onehot, s, onehot, t, optimize=True)
            flatw = w.reshape(1 << m, tq * tq, m)
            for jdx in range(1 << m):
                val, last = close_last(flatw[jdx])
                if val > best_val:
                    best_val = val
                    best_sets = [_mask_indices(i, m), _mask_indices(jdx, m), last]
    else:
        raise BudgetError(
            "cut-P-norm exact search (r>=4 unsupported)", 1 << (r * m), 1 << EXACT_SET_BITS
        )
    signs = _cutp_signs(t, onehot, best_sets)
    return best_val, best_sets, signs


def _indicator(indices: Sequence[int], m: int) -> np.ndarray:
    out = np.zeros(m)
    out[list(indices)] = 1.0
    return out


def _class_sums(t: np.ndarray, onehot: np.ndarray, sets: Sequence[Sequence[int]]) -> np.ndarray:
    """Inner sum per class tuple for the given sets: I[j1..jr]."""
    r, m = t.ndim, t.shape[0]
    letters = "abcdefgh"[:r]
    class_letters = "ijklmnop"[:r]
    operands = []
    subs = []
    for l in range(r):
        operands.append(onehot * _indicator(sets[l], m)[:, None])
        subs.append(letters[l] + class_letters[l])
    expr = ",".join(subs) + "," + letters + "->" + class_letters
    return np.einsum(expr, *operands, t, optimize=True)


def _cutp_signs(t: np.ndarray, onehot: np.ndarray, sets: Sequence[Sequence[int]]) -> np.ndarray:
    inner = _class_sums(t, onehot, sets)
    signs = np.sign(inner)
    signs[signs == 0] = 1.0
    return signs


# ----------------------------------------------------------------------
# heuristic optimization


def _contract_except(t: np.ndarray, vecs: Sequence[np.ndarray], skip: int) -> np.ndarray:
    out = np.moveaxis(t, skip, 0)
    for axis in reversed([i for i in range(t.ndim) if i != skip]):
        out = np.tensordot(out, vecs[axis], axes=([out.ndim - 1], [0]))
    return out


def _full_value(t: np.ndarray, vecs: Sequence[np.ndarray]) -> float:
    out = t
    for vec in reversed(vecs):
        out = np.tensordot(out, vec, axes=([out.ndim - 1], [0]))
    return float(out)


def _ascend(t_eff: np.ndarray, sets: list[np.ndarray], max_sweeps: int = 200) -> list[np.ndarray]:
    r = t_eff.ndim
    for _ in range(max_sweeps):
        changed = False
        for l in range(r):
            contrib = _contract_except(t_eff, sets, l)
            new = (contrib > 0).astype(float)
            if not np.array_equal(new, sets[l]):
                sets[l] = new
                changed = True
        if not changed:
            break
    return sets


def _heuristic_plain(
    t: np.ndarray, restarts: int, seed: int
) -> tuple[float, list[tuple[int, ...]]]:
    r, m = t.ndim, t.shape[0]
    best_val, best_sets = -1.0, [tuple()] * r
    for restart in range(max(2, restarts)):
        for sigma in (1.0, -1.0):
            if restart < 1:
                sets = [np.ones(m) for _ in range(r)]
            else:
                rng = generator(derive_seed(seed, restart, int(sigma > 0)))
                sets = [(rng.random(m) < 0.5).astype(float) for _ in range(r)]
            sets = _ascend(sigma * t, sets)
            val = sigma * _full_value(t, sets)
            if val > best_val:
                best_val = val
                best_sets = [tuple(np.flatnonzero(v)) for v in sets]
    return float(max(best_val, 0.0)), best_sets


def _heuristic_cutp(
    t: np.ndarray, classes: np.ndarray, tq: int, restarts: int, seed: int
) -> tuple[float, list[tuple[int, ...]], np.ndarray]:
    r, m = t.ndim, t.shape[0]
    onehot = (np.asarray(classes)[:, None] == np.arange(tq)).astype(float)
    idx = np.asarray(classes)
    best_val, best_sets = -1.0, None
    for restart in range(max(1, restarts)):
        if restart == 0:
            sets = [np.ones(m) for _ in range(r)]
        else:
            rng = generator(derive_seed(seed, restart))
            sets = [(rng.random(m) < 0.5).astype(float) for _ in range(r)]
        value = -1.0
        for _ in range(60):
            inner = _class_sums(t, onehot, [np.flatnonzero(v) for v in sets])
            new_value = float(np.abs(inner).sum())
            if new_value <= value + 1e-15:
                value = max(value, new_value)
                break
            value = new_value
            signs = np.sign(inner)
            signs[signs == 0] = 1.0
            t_eff = t * signs[np.ix_(*([idx] * r))]
            sets = _ascend(t_eff, sets)
        if value > best_val:
            best_val = value
            best_sets = [tuple(np.flatnonzero(v)) for v in sets]
    signs = _cutp_signs(t, onehot, best_sets)
    return float(best_val), best_sets, signs


# ----------------------------------------------------------------------
# public entry points


def _finish(
    kind: str,
    r: int,
    value: float,
    sets: Sequence[Sequence[int]],
    atoms: tuple,
    classes: np.ndarray | None = None,
    signs: np.ndarray | None = None,
) -> tuple[float, CutWitness]:
    value = float(value) + 0.0  # normalize -0.0
    witness = CutWitness(
        kind=kind,
        r=r,
        value=value,
        sets=tuple(tuple(int(i) for i in s) for s in sets),
        atoms=atoms,
        classes=None if classes is None else tuple(int(c) for c in classes),
        signs=None if signs is None else tuple(int(x) for x in np.asarray(signs).ravel()),
    )
    return value, witness


def cutnorm_exact(a: np.ndarray, budget: int | None = None) -> tuple[float, CutWitness]:
    """Exact array cut norm by exhaustive symmetric-set search."""
    atoms, t = _array_problem(a)
    value, sets = _exact_plain(t, budget)
    return _finish("array", t.ndim, value, sets, atoms)


def cutnorm_heuristic(
    a: np.ndarray, restarts: int = 16, seed: int = 0
) -> tuple[float, CutWitness]:
    """Coordinate-ascent lower bound for the array cut norm."""
    atoms, t = _array_problem(a)
    value, sets = _heuristic_plain(t, restarts, seed)
    return _finish("array", t.ndim, value, sets, atoms)


def cutnorm_p(
    a: np.ndarray,
    p: TuplePartition,
    mode: str = "exact",
    budget: int | None = None,
    restarts: int = 16,
    seed: int = 0,
) -> tuple[float, CutWitness]:
    """Array cut-P-norm; exact or coordinate-ascent mode."""
    atoms, t = _array_problem(a)
    if (p.n, p.r_minus_1) != (np.asarray(a).shape[0], t.ndim - 1):
        raise ValueError("partition does not match the array's atoms")
    classes = np.asarray(p.classes)
    if mode == "exact":
        value, sets, signs = _exact_cutp(t, classes, p.q, budget)
    elif mode == "heuristic":
        value, sets, signs = _heuristic_cutp(t, classes, p.q, restarts, seed)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _finish("array", t.ndim, value, sets, atoms, classes, signs)


def kernel_cutnorm(
    kern: StepKernel,
    mode: str = "exact",
    budget: int | None = None,
    restarts: int = 16,
    seed: int = 0,
) -> tuple[float, CutWitness]:
    """Cut norm of a step kernel over symmetric measurable sets (exact on orbits)."""
    atoms, t, _ = _kernel_problem(kern, None)
    if mode == "exact":
        value, sets = _exact_plain(t, budget)
    elif mode == "heuristic":
        value, sets = _heuristic_plain(t, restarts, seed)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _finish("kernel", kern.r, value, sets, atoms)


def kernel_cutnorm_p(
    kern: StepKernel,
    qpart: GridPartition,
    mode: str = "exact",
    budget: int | None = None,
    restarts: int = 16,
    seed: int = 0,
) -> tuple[float, CutWitness]:
    """Cut-P-norm of a step kernel for a symmetric grid partition."""
    if qpart.r_minus_1 != kern.partition.r_minus_1:
        raise ValueError("partition lives on a different type cube")
    atoms, t, classes = _kernel_problem(kern, qpart)
    if mode == "exact":
        value, sets, signs = _exact_cutp(t, classes, qpart.t, budget)
    elif mode == "heuristic":
        value, sets, signs = _heuristic_cutp(t, classes, qpart.t, restarts, seed)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _finish("kernel", kern.r, value, sets, atoms, classes, signs)


def difference_kernel(u: StepGraphon, w: StepGraphon, color: int) -> StepKernel:
    """The channel difference U^color - W^color on the common refinement."""
    part, pairs = common_refinement(u.partition, w.partition)
    iu = np.array([a for a, _ in pairs])
    iw = np.array([b for _, b in pairs])
    r = u.r
    zero = np.zeros((part.t,) * r)
    au = u.arrays[color][np.ix_(*([iu] * r))] if color in u.arrays else zero
    aw = w.arrays[color][np.ix_(*([iw] * r))] if color in w.arrays else zero
    return StepKernel(part, au - aw)


def graph_difference_arrays(g: ColoredHypergraph, h: ColoredHypergraph) -> dict[int, np.ndarray]:
    """Per-color adjacency differences on the common vertex-cell grid."""
    if (g.r, g.k) != (h.r, h.k):
        raise ValueError("graphs must share uniformity and palette")
    n = lcm(g.n, h.n)

    def blow_up(a: np.ndarray, factor: int) -> np.ndarray:
        for axis in range(a.ndim):
            a = np.repeat(a, factor, axis=axis)
        return a

    out = {}
    for alpha in range(1, g.k + 1):
        out[alpha] = blow_up(g.adjacency_array(alpha), n // g.n) - blow_up(
            h.adjacency_array(alpha), n // h.n
        )
    return out


def _as_step(w: StepGraphon | VertexGraphon) -> StepGraphon:
    return w.to_step() if isinstance(w, VertexGraphon) else w


def cut_distance(
    u: ColoredHypergraph | StepGraphon | VertexGraphon,
    w: ColoredHypergraph | StepGraphon | VertexGraphon,
    p: TuplePartition | GridPartition | None = None,
    mode: str = "exact",
    budget: int | None = None,
    restarts: int = 16,
    seed: int = 0,
) -> float:
    """Sum over colors of per-color cut norms of differences.

    Graph pairs reduce to the array problem on the common vertex-cell
    grid (the embedded kernels agree with it: repeated cells only ever
    multiply zero differences). Graphon pairs reduce to step kernels on
    the common grid refinement. Reserved-color channels enter the sum
    when present.
    """
    if isinstance(u, ColoredHypergraph) and isinstance(w, ColoredHypergraph):
        total = 0.0
        for alpha, diff in graph_difference_arrays(u, w).items():
            if p is not None:
                if not isinstance(p, TuplePartition):
                    raise ValueError("graph cut distance takes a TuplePartition")
                value, _ = cutnorm_p(diff, p, mode=mode, budget=budget,
                                     restarts=restarts, seed=derive_seed(seed, alpha))
            elif mode == "exact":
                value, _ = cutnorm_exact(diff, budget=budget)
            else:
                value, _ = cutnorm_heuristic(diff, restarts=restarts,
                                             seed=derive_seed(seed, alpha))
            total += value
        return total
    if isinstance(u, ColoredHypergraph) or isinstance(w, ColoredHypergraph):
        raise ValueError("cut distance needs two graphs or two graphons")
    if u.r != w.r or u.k != w.k:
        raise ValueError("graphons must share uniformity and palette")
    us, ws = _as_step(u), _as_step(w)
    total = 0.0
    for alpha in sorted(set(us.arrays) | set(ws.arrays)):
        kern = difference_kernel(us, ws, alpha)
        if p is not None:
            if not isinstance(p, GridPartition):
                raise ValueError("graphon cut distance takes a GridPartition")
            value, _ = kernel_cutnorm_p(kern, p, mode=mode, budget=budget,
                                        restarts=restarts, seed=derive_seed(seed, alpha))
        else:
            value, _ = kernel_cutnorm(kern, mode=mode, budget=budget,
                                      restarts=restarts, seed=derive_seed(seed, alpha))
        total += value
    return total


# ----------------------------------------------------------------------
# supremum over partitions


def _growth_strings(m: int, t: int):
    """Restricted growth strings: set partitions of m atoms into <= t classes."""
    labels = [0] * m

    def rec(i: int, top: int):
        if i == m:
            yield tuple(labels)
            return
        for c in range(min(top + 1, t - 1) + 1):
            labels[i] = c
            yield from rec(i + 1, max(top, c))

    yield from rec(0, -1)


def _count_growth_strings(m: int, t: int) -> int:
    # Stirling triangle capped at t classes
    table = [1] + [0] * (min(m, t))
    count = 0
    for _ in range(m):
        new = [0] * (min(m, t) + 1)
        for j, v in enumerate(table):
            if v == 0:
                continue
            if j + 1 <= min(m, t):
                new[j + 1] += v
            if j >= 1:
                new[j] += v * j
        table = new
    return sum(table)


def sup_cutnorm_over_partitions(
    obj: np.ndarray | StepKernel,
    t: int,
    mode: str = "exact",
    budget: int | None = None,
    restarts: int = 16,
    seed: int = 0,
) -> float:
    """sup over symmetric partitions with at most t classes of the cut-P-norm.

    Exact mode enumerates atom partitions (restricted growth strings) and
    solves each cut-P problem exactly. Heuristic mode runs the sign-array
    energy reduction with the annealing optimizer.
    """
    if mode == "heuristic":
        from . import energy

        return energy.sup_cutnorm_via_energy(obj, t, budget=budget,
                                             restarts=restarts, seed=seed)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(obj, StepKernel):
        atoms, tensor, _ = _kernel_problem(obj, None)
    else:
        atoms, tensor = _array_problem(obj)
    m = len(atoms)
    n_parts = _count_growth_strings(m, t)
    check_budget("supremum over partitions", n_parts * (1 << ((tensor.ndim - 1) * m)), budget)
    best = 0.0
    for labels in _growth_strings(m, t):
        tq = max(labels) + 1
        value, _, _ = _exact_cutp(tensor, np.asarray(labels), tq, budget)
        best = max(best, value)
    return best


# ----------------------------------------------------------------------
# witnesses and helpers


def evaluate_witness(
    target: np.ndarray | StepKernel,
    witness: CutWitness,
    p: TuplePartition | GridPartition | None = None,
) -> float:
    """Recompute a witness's objective value from scratch."""
    if isinstance(target, StepKernel):
        qpart = p if isinstance(p, GridPartition) else None
        atoms, tensor, classes = _kernel_problem(target, qpart)
    else:
        atoms, tensor = _array_problem(target)
        classes = np.asarray(p.classes) if isinstance(p, TuplePartition) else None
    if len(atoms) != len(witness.atoms):
        raise ValueError("witness atoms do not match the target problem")
    if classes is None and witness.classes is not None:
        classes = np.asarray(witness.classes)
    if classes is None:
        vecs = [_indicator(s, len(atoms)) for s in witness.sets]
        return abs(_full_value(tensor, vecs))
    tq = int(np.max(classes)) + 1
    onehot = (classes[:, None] == np.arange(tq)).astype(float)
    inner = _class_sums(tensor, onehot, witness.sets)
    return float(np.abs(inner).sum())


def random_symmetric_array(n: int, r: int, seed: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """A random symmetric r-array with entries in [lo, hi]."""
    rng = generator(seed)
    raw = rng.uniform(lo, hi, size=(n,) * r)
    out = sum(raw.transpose(perm) for perm in itertools.permutations(range(r)))
    return out / factorial(r)
