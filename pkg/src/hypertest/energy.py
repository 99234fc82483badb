"""Ground state energies over tuple partitions and the sign-array reduction.

An energy instance reuses the cut-norm atom machinery: the coefficient
tensor T aggregates the (1/n^r)-normalized edge indicator over unordered
(r-1)-subset atoms, so the energy of a labeling L is
sum_{a1..ar} T[a1..ar] * J[L(a1)..L(ar)], summed over colors. The exact
optimizer enumerates labelings; the annealer proposes single-atom class
moves with geometric cooling and a greedy polish.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb, exp
from typing import Any, Sequence

import numpy as np

from .budget import check_budget
from .cutnorm import StepKernel, TuplePartition, _array_problem, _kernel_problem
from .graphon import StepGraphon, VertexGraphon, subsets_card_lex
from .hypercore import ColoredHypergraph, sample_subgraph
from .seeds import derive_seed, generator

__all__ = [
    "CouplingArray",
    "energy",
    "gse",
    "gse_graphon",
    "make_reduction_arrays",
    "sup_cutnorm_via_energy",
    "concentration_experiment",
]


@dataclass(frozen=True)
class CouplingArray:
    """Per-color coupling tensors J^alpha of shape (q,)*r with sup norm <= 1."""

    k: int
    q: int
    r: int
    arrays: dict[int, np.ndarray]

    def __post_init__(self) -> None:
        if set(self.arrays) != set(range(1, self.k + 1)):
            raise ValueError(f"need one array per color 1..{self.k}")
        fixed = {}
        for alpha, arr in self.arrays.items():
            arr = np.array(arr, dtype=float)
            if arr.shape != (self.q,) * self.r:
                raise ValueError(f"J^{alpha} has shape {arr.shape}, want {(self.q,) * self.r}")
            if np.abs(arr).max(initial=0.0) > 1.0 + 1e-12:
                raise ValueError(f"J^{alpha} exceeds sup norm 1")
            arr.flags.writeable = False
            fixed[alpha] = arr
        object.__setattr__(self, "arrays", fixed)

    @property
    def sup_norm(self) -> float:
        return max(float(np.abs(a).max(initial=0.0)) for a in self.arrays.values())

    def negated(self) -> "CouplingArray":
        return CouplingArray(self.k, self.q, self.r, {a: -j for a, j in self.arrays.items()})

    def to_json(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "q": self.q,
            "r": self.r,
            "arrays": {str(a): list(map(float, j.ravel())) for a, j in self.arrays.items()},
        }

    @classmethod
    def from_json(cls, payload: dict[str, Any]) -> "CouplingArray":
        q, r = payload["q"], payload["r"]
        arrays = {
            int(a): np.array(flat, dtype=float).reshape((q,) * r)
            for a, flat in payload["arrays"].items()
        }
        return cls(payload["k"], q, r, arrays)


# ----------------------------------------------------------------------
# instances: per-color coefficient tensors over shared atoms


def _graph_instance(h: ColoredHypergraph, colors: Sequence[int]) -> list[np.ndarray]:
    return [_array_problem(h.adjacency_array(alpha))[1] for alpha in colors]


def _graphon_instance(w: StepGraphon, colors: Sequence[int]) -> list[np.ndarray]:
    out = []
    for alpha in colors:
        kern = StepKernel(w.partition, w.arrays[alpha])
        out.append(_kernel_problem(kern, None)[1])
    return out


def _labeling_energy(tensors: Sequence[np.ndarray], js: Sequence[np.ndarray], labels: np.ndarray) -> float:
    total = 0.0
    for t, j in zip(tensors, js):
        mapped = j[np.ix_(*([labels] * t.ndim))]
        total += float((t * mapped).sum())
    return total


def energy(h: ColoredHypergraph, j: CouplingArray, p: TuplePartition) -> float:
    """Exact partition energy: normalized class-tuple edge counts against J."""
    if (j.r, j.k) != (h.r, h.k):
        raise ValueError("coupling shape does not match the graph")
    if (p.n, p.r_minus_1) != (h.n, h.r - 1):
        raise ValueError("partition does not match the graph's atoms")
    if p.q != j.q:
        raise ValueError(f"partition has {p.q} classes but J expects {j.q}")
    tensors = _graph_instance(h, range(1, h.k + 1))
    js = [j.arrays[a] for a in range(1, h.k + 1)]
    return _labeling_energy(tensors, js, np.asarray(p.classes))


# ----------------------------------------------------------------------
# maximization


def _batched_gather(j: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """gathered[n, a1..ar] = J[labels[n,a1], .., labels[n,ar]] via broadcasting."""
    n, m = labels.shape
    r = j.ndim
    idx = []
    for pos in range(r):
        shape = [n] + [1] * r
        shape[1 + pos] = m
        idx.append(labels.reshape(shape))
    return j[tuple(idx)]


def _all_labeling_energies(
    tensors: Sequence[np.ndarray], js: Sequence[np.ndarray], m: int, q: int, chunk: int = 20000
) -> tuple[float, np.ndarray, float]:
    """(max value, argmax labels, min value) over all q^m labelings."""
    r = tensors[0].ndim
    letters = "abcdefgh"[:r]
    expr = f"{letters},n{letters}->n"
    total = q**m
    best_val, best_labels, worst_val = -np.inf, None, np.inf
    radix = q ** np.arange(m)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total))
        labels = (codes[:, None] // radix) % q
        vals = np.zeros(len(codes))
        for t, j in zip(tensors, js):
            vals += np.einsum(expr, t, _batched_gather(j, labels), optimize=True)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_labels = float(vals[i]), labels[i].copy()
        worst_val = min(worst_val, float(vals.min()))
    return best_val, best_labels, worst_val


def gse(
    h: ColoredHypergraph,
    j: CouplingArray,
    mode: str = "exact",
    seed: int = 0,
    budget: int | None = None,
    restarts: int = 8,
) -> tuple[float, TuplePartition]:
    """Ground state energy: maximize the partition energy over q-class labelings."""
    if (j.r, j.k) != (h.r, h.k):
        raise ValueError("coupling shape does not match the graph")
    tensors = _graph_instance(h, range(1, h.k + 1))
    js = [j.arrays[a] for a in range(1, h.k + 1)]
    m = comb(h.n, h.r - 1)
    value, labels = _maximize(tensors, js, m, j.q, mode, seed, budget, restarts)
    partition = TuplePartition(h.n, h.r - 1, tuple(int(c) for c in labels), j.q, allow_empty=True)
    return value, partition


def gse_graphon(
    w: StepGraphon | VertexGraphon,
    j: CouplingArray,
    mode: str = "exact",
    seed: int = 0,
    budget: int | None = None,
    restarts: int = 8,
) -> float:
    """GSE over symmetric partitions built from grid-cell orbits.

    This searches grid-respecting partitions only, an inner approximation
    of the supremum over all measurable partitions.
    """
    if isinstance(w, VertexGraphon):
        w = w.to_step()
    if (j.r, j.k) != (w.r, w.k):
        raise ValueError("coupling shape does not match the graphon")
    tensors = _graphon_instance(w, range(1, w.k + 1))
    js = [j.arrays[a] for a in range(1, w.k + 1)]
    m = tensors[0].shape[0]
    value, _ = _maximize(tensors, js, m, j.q, mode, seed, budget, restarts)
    return value


def _maximize(
    tensors: Sequence[np.ndarray],
    js: Sequence[np.ndarray],
    m: int,
    q: int,
    mode: str,
    seed: int,
    budget: int | None,
    restarts: int,
) -> tuple[float, np.ndarray]:
    if mode == "exact":
        check_budget("gse exact labeling enumeration", q**m, budget)
        value, labels, _ = _all_labeling_energies(tensors, js, m, q)
        return value, labels
    if mode != "anneal":
        raise ValueError(f"unknown mode {mode!r}")
    best_val, best_labels = -np.inf, None
    for restart in range(max(1, restarts)):
        rng = generator(derive_seed(seed, restart))
        val, labels = _anneal_once(tensors, js, m, q, rng)
        if val > best_val:
            best_val, best_labels = val, labels
    return best_val, best_labels


def _energy_of(tensors, js, labels) -> float:
    total = 0.0
    for t, j in zip(tensors, js):
        mapped = j[np.ix_(*([labels] * t.ndim))]
        total += float((t * mapped).sum())
    return total


@lru_cache(maxsize=None)
def _position_subsets(r: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    out = []
    for size in range(1, r + 1):
        for s in itertools.combinations(range(r), size):
            out.append((s, 1 if size % 2 else -1))
    return tuple(out)


def _move_delta(tensors, js, labels, atom: int, new_class: int) -> float:
    """Energy change from relabeling one atom, via inclusion-exclusion.

    Only tuples containing the atom change; sums over tuples hitting it in
    a fixed nonempty position set S telescope to the exact difference.
    """
    old = int(labels[atom])
    if old == new_class:
        return 0.0
    lab_new = labels.copy()
    lab_new[atom] = new_class
    delta = 0.0
    for t, j in zip(tensors, js):
        r = t.ndim
        for s, sign in _position_subsets(r):
            fixed = tuple(atom if i in s else slice(None) for i in range(r))
            t_s = t[fixed]
            j_new = j[tuple(new_class if i in s else slice(None) for i in range(r))]
            j_old = j[tuple(old if i in s else slice(None) for i in range(r))]
            free = r - len(s)
            if free:
                j_new = j_new[np.ix_(*([lab_new] * free))]
                j_old = j_old[np.ix_(*([labels] * free))]
            delta += sign * float((t_s * (j_new - j_old)).sum())
    return delta


def _anneal_once(tensors, js, m: int, q: int, rng) -> tuple[float, np.ndarray]:
    labels = rng.integers(0, q, size=m)
    # warmup pass measures the move scale to set the starting temperature
    moves = max(2 * m, 20)
    scale = max(
        (abs(_move_delta(tensors, js, labels, int(rng.integers(m)), int(rng.integers(q)))) for _ in range(moves)),
        default=0.0,
    )
    temp = max(scale, 1e-12)
    floor = temp * 1e-4
    while temp > floor:
        for _ in range(m):
            atom = int(rng.integers(m))
            cls = int(rng.integers(q))
            if cls == labels[atom]:
                continue
            d = _move_delta(tensors, js, labels, atom, cls)
            if d >= 0 or rng.random() < exp(d / temp):
                labels[atom] = cls
        temp *= 0.95
    # greedy polish: strictly improving single moves until stable
    improved = True
    while improved:
        improved = False
        for atom in range(m):
            for cls in range(q):
                d = _move_delta(tensors, js, labels, atom, cls)
                if d > 1e-13:
                    labels[atom] = cls
                    improved = True
    return _energy_of(tensors, js, labels), labels


# ----------------------------------------------------------------------
# sign-array reduction


def _power_set_card_lex(r: int) -> list[tuple[int, ...]]:
    return [()] + list(subsets_card_lex(tuple(range(r)), r))


def make_reduction_arrays(a: np.ndarray, values: Sequence[float]) -> CouplingArray:
    """Couplings J_A^alpha = y_alpha * (A tensor B0) for the cut-norm reduction.

    B0 has one axis per position, indexed by the power set of [r] in
    (cardinality, lex) order; an entry is 1 exactly when each position j
    belongs to the subset chosen on axis j.
    """
    a = np.asarray(a, dtype=float)
    r = a.ndim
    if not np.all(np.isin(a, (-1.0, 1.0))):
        raise ValueError("sign array entries must be -1 or 1")
    subsets = _power_set_card_lex(r)
    size = len(subsets)
    b0 = np.zeros((size,) * r)
    for idx in itertools.product(range(size), repeat=r):
        if all(j in subsets[idx[j]] for j in range(r)):
            b0[idx] = 1.0
    arrays = {}
    for alpha, y in enumerate(values, start=1):
        if abs(y) > 1 + 1e-12:
            raise ValueError("level values must lie in [-1, 1]")
        arrays[alpha] = y * np.kron(a, b0)
    return CouplingArray(len(list(values)), a.shape[0] * size, r, arrays)


def sup_cutnorm_via_energy(
    obj: np.ndarray | StepKernel,
    t: int,
    mode: str = "anneal",
    budget: int | None = None,
    restarts: int = 8,
    seed: int = 0,
) -> float:
    """Max over sign arrays of the reduction energy: equals the cut-P supremum.

    The target is split into level sets (one 0/1 channel per distinct
    value); each sign array A yields couplings J_A whose GSE is computed
    over labelings of the atoms into 2^r * t classes.
    """
    if isinstance(obj, StepKernel):
        r = obj.r
        values = np.unique(obj.array)
        tensors = [
            _kernel_problem(StepKernel(obj.partition, (obj.array == y).astype(float)), None)[1]
            for y in values
        ]
    else:
        arr = np.asarray(obj, dtype=float)
        r = arr.ndim
        values = np.unique(arr)
        tensors = [_array_problem((arr == y).astype(float))[1] for y in values]
    if np.abs(values).max(initial=0.0) > 1 + 1e-12:
        raise ValueError("values outside [-1, 1]; rescale the kernel first")
    m = tensors[0].shape[0]
    n_signs = 2 ** (t**r)
    if mode == "exact":
        check_budget("sign-array sweep", n_signs * (t * 2**r) ** m, budget)
    else:
        check_budget("sign-array sweep", n_signs, budget)
    best = 0.0
    for bits in range(n_signs):
        signs = np.array(
            [1.0 if bits >> i & 1 else -1.0 for i in range(t**r)]
        ).reshape((t,) * r)
        coupling = make_reduction_arrays(signs, [float(y) for y in values])
        js = [coupling.arrays[a] for a in range(1, coupling.k + 1)]
        value, _ = _maximize(
            tensors, js, m, coupling.q, mode, derive_seed(seed, bits), budget, restarts
        )
        best = max(best, value)
    return best


# ----------------------------------------------------------------------
# concentration


def concentration_experiment(
    h: ColoredHypergraph,
    j: CouplingArray,
    sample_size: int,
    trials: int,
    seed: int = 0,
    restarts: int = 4,
    epsilons: Sequence[float] = (0.25, 0.5, 1.0),
) -> dict[str, Any]:
    """Empirical spread of sampled-subgraph energies vs the Azuma-type bound.

    Report-only: heuristic optimization adds noise, so the bound is shown
    alongside the empirical tail frequencies, never asserted.
    """
    values = []
    for i in range(trials):
        sample = sample_subgraph(h, sample_size, seed=derive_seed(seed, i, 0))
        sub = ColoredHypergraph(sample_size, h.r, h.k, sample.colors)
        val, _ = gse(sub, j, mode="anneal", seed=derive_seed(seed, i, 1), restarts=restarts)
        values.append(val)
    arr = np.array(values)
    mean = float(arr.mean())
    sup = j.sup_norm
    q25, q75 = np.percentile(arr, [25, 75])
    tails = []
    for eps in epsilons:
        empirical = float(np.mean(np.abs(arr - mean) >= eps * sup)) if sup > 0 else 0.0
        azuma = 2.0 * exp(-(eps**2) * sample_size / (8 * h.r**2))
        tails.append({"epsilon": eps, "empirical": empirical, "bound": azuma})
    return {
        "sample_size": sample_size,
        "trials": trials,
        "values": values,
        "mean": mean,
        "iqr": float(q75 - q25),
        "tails": tails,
    }
