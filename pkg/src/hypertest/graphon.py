"""Grid-based colored graphons.

A colored r-graphon assigns to each point of the type space
[0,1]^{nonempty proper subsets of [r]} a probability vector over colors.
We work with the step-function subclass: a symmetric partition of the
(r-1)-type cube [0,1]^{2^{r-1}-1} into classes built from uniform grid
cells, plus one value array per color over class tuples. Finite colored
hypergraphs embed as vertex graphons (values decided by the singleton
coordinates alone, reserved color 0 on the diagonal part).

Coordinate conventions, fixed once for the whole package:

* axes of any type cube are the nonempty subsets of the ground set,
  ordered by (cardinality, lexicographic);
* grid cells are half-open intervals [a, b); the point 1.0 belongs to
  the last cell;
* sampling draws one uniform per coordinate in axis order, then one
  uniform per r-subset in colex order, decoded through the cumulative
  color distribution with colors ascending (0 first when present).
"""

from __future__ import annotations

import itertools
import string
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from math import comb, lcm
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .budget import BudgetError
from .hypercore import IOTA, ColoredHypergraph, SampledColoredGraph, colex_subsets
from .seeds import derive_seed, generator

__all__ = [
    "GridPartition",
    "StepGraphon",
    "VertexGraphon",
    "evaluate",
    "embed",
    "sample_graphon",
    "step_average",
    "common_refinement",
    "class_tuple_weights",
    "orbit_partition",
    "l1_distance",
    "l2_distance",
    "color_mass",
    "random_grid_partition",
    "random_step_graphon",
    "constant_graphon",
    "step_graphon_to_json",
    "step_graphon_from_json",
    "sample_coordinates",
]

_LETTERS = string.ascii_letters


def subsets_card_lex(ground: Sequence[int], max_size: int) -> tuple[tuple[int, ...], ...]:
    """Nonempty subsets of ``ground`` of size <= max_size, (card, lex) order."""
    ground = tuple(sorted(ground))
    out: list[tuple[int, ...]] = []
    for size in range(1, max_size + 1):
        out.extend(itertools.combinations(ground, size))
    return tuple(out)


@lru_cache(maxsize=None)
def _axis_subsets(r_minus_1: int) -> tuple[tuple[int, ...], ...]:
    return subsets_card_lex(range(r_minus_1), r_minus_1)


@lru_cache(maxsize=None)
def _axis_perms(r_minus_1: int) -> tuple[tuple[int, ...], ...]:
    """Axis permutations induced by permuting the ground set."""
    axes = _axis_subsets(r_minus_1)
    index = {s: i for i, s in enumerate(axes)}
    out = []
    for perm in itertools.permutations(range(r_minus_1)):
        out.append(tuple(index[tuple(sorted(perm[v] for v in s))] for s in axes))
    return tuple(out)


@lru_cache(maxsize=None)
def _eval_coords(r: int) -> tuple[tuple[int, ...], ...]:
    """Proper nonempty subsets of [r]: the axes of the evaluation domain."""
    return subsets_card_lex(range(r), r - 1)


@lru_cache(maxsize=None)
def _block_indices(r: int) -> tuple[tuple[int, ...], ...]:
    """For each deleted position l, which evaluation coordinates form block l."""
    coords = _eval_coords(r)
    index = {s: i for i, s in enumerate(coords)}
    blocks = []
    for l in range(r):
        rest = tuple(v for v in range(r) if v != l)
        blocks.append(tuple(index[s] for s in subsets_card_lex(rest, r - 1)))
    return tuple(blocks)


def _cell(x: float, g: int) -> int:
    if x < 0.0 or x > 1.0:
        raise ValueError(f"coordinate {x} outside [0, 1]")
    return min(int(x * g), g - 1)


@dataclass(frozen=True, eq=False)
class GridPartition:
    """Symmetric partition of the (r-1)-type cube into unions of grid cells.

    ``labels`` maps each cell of the uniform grid with ``resolution`` cells
    per axis to a class in ``range(t)``; the array must be invariant under
    every axis permutation induced by relabeling the ground set.
    """

    r_minus_1: int
    resolution: int
    labels: np.ndarray
    t: int
    allow_empty: bool = False

    def __post_init__(self) -> None:
        if self.r_minus_1 < 0:
            raise ValueError("r_minus_1 must be >= 0")
        if self.resolution < 1:
            raise ValueError("resolution must be >= 1")
        if self.t < 1:
            raise ValueError("class count t must be >= 1")
        labels = np.array(self.labels, dtype=np.int64)
        shape = (self.resolution,) * self.dim
        if labels.shape != shape:
            raise ValueError(f"labels shape {labels.shape} != {shape}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.t):
            raise ValueError("labels must lie in range(t)")
        if not self.allow_empty:
            present = np.unique(labels)
            if len(present) != self.t:
                raise ValueError("every class must be nonempty (or set allow_empty)")
        for ax in _axis_perms(self.r_minus_1):
            if not np.array_equal(labels.transpose(ax), labels):
                raise ValueError("labels are not symmetric under axis permutations")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return 2 ** self.r_minus_1 - 1

    @property
    def cell_count(self) -> int:
        return self.resolution ** self.dim

    @classmethod
    def trivial(cls, r_minus_1: int) -> "GridPartition":
        return cls(r_minus_1, 1, np.zeros((1,) * (2 ** r_minus_1 - 1), dtype=np.int64), 1)

    def class_volumes(self) -> np.ndarray:
        counts = np.bincount(self.labels.ravel(), minlength=self.t)
        return counts / self.cell_count

    def class_of_cell(self, cell: Sequence[int]) -> int:
        return int(self.labels[tuple(cell)])

    def class_of_point(self, point: Sequence[float]) -> int:
        if len(point) != self.dim:
            raise ValueError(f"point needs {self.dim} coordinates, got {len(point)}")
        return int(self.labels[tuple(_cell(x, self.resolution) for x in point)])

    def onehot(self) -> np.ndarray:
        return (self.labels[..., None] == np.arange(self.t)).astype(float)

    def refined(self, factor: int) -> "GridPartition":
        """The same partition expressed on a grid ``factor`` times finer."""
        if factor < 1:
            raise ValueError("factor must be >= 1")
        if factor == 1:
            return self
        labels = self.labels
        for axis in range(self.dim):
            labels = np.repeat(labels, factor, axis=axis)
        return GridPartition(self.r_minus_1, self.resolution * factor, labels,
                             self.t, self.allow_empty)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridPartition):
            return NotImplemented
        return (self.r_minus_1 == other.r_minus_1
                and self.resolution == other.resolution
                and self.t == other.t
                and np.array_equal(self.labels, other.labels))


def orbit_partition(r_minus_1: int, resolution: int) -> GridPartition:
    """The finest symmetric partition: one class per cell orbit."""
    dim = 2 ** r_minus_1 - 1
    idx = np.arange(resolution ** dim).reshape((resolution,) * dim)
    rep = idx
    for ax in _axis_perms(r_minus_1):
        rep = np.minimum(rep, idx.transpose(ax))
    _, labels = np.unique(rep, return_inverse=True)
    labels = labels.reshape(idx.shape)
    return GridPartition(r_minus_1, resolution, labels, int(labels.max()) + 1)


def common_refinement(a: GridPartition, b: GridPartition) -> tuple[GridPartition, list[tuple[int, int]]]:
    """Coarsest partition refining both, plus the (class_a, class_b) per new class."""
    if a.r_minus_1 != b.r_minus_1:
        raise ValueError("partitions live on different type cubes")
    g = lcm(a.resolution, b.resolution)
    la = a.refined(g // a.resolution).labels
    lb = b.refined(g // b.resolution).labels
    codes = la * b.t + lb
    uniq, labels = np.unique(codes, return_inverse=True)
    part = GridPartition(a.r_minus_1, g, labels.reshape(la.shape), len(uniq))
    pairs = [(int(c) // b.t, int(c) % b.t) for c in uniq]
    return part, pairs


@dataclass(frozen=True, eq=False)
class StepGraphon:
    """A k-colored (r, r-1)-step function.

    ``arrays`` maps each color to a value array over class tuples of the
    partition; color 0 is the optional reserved-diagonal channel, present
    on embedded graphs brought to step form. Channel arrays must be
    entrywise in [0, 1], symmetric under index permutations, and sum to 1
    at every class tuple.
    """

    r: int
    k: int
    partition: GridPartition
    arrays: Mapping[int, np.ndarray]

    def __post_init__(self) -> None:
        if self.r < 1:
            raise ValueError("uniformity r must be >= 1")
        if self.k < 1:
            raise ValueError("palette size k must be >= 1")
        if self.partition.r_minus_1 != self.r - 1:
            raise ValueError("partition dimensionality does not match r")
        keys = set(self.arrays)
        if not keys.issuperset(range(1, self.k + 1)) or not keys.issubset({0, *range(1, self.k + 1)}):
            raise ValueError(f"channels must be 1..{self.k} plus optional 0, got {sorted(keys)}")
        shape = (self.partition.t,) * self.r
        frozen: dict[int, np.ndarray] = {}
        for c in sorted(keys):
            arr = np.array(self.arrays[c], dtype=float)
            if arr.shape != shape:
                raise ValueError(f"channel {c} has shape {arr.shape}, expected {shape}")
            if arr.min() < -1e-12 or arr.max() > 1 + 1e-12:
                raise ValueError(f"channel {c} has entries outside [0, 1]")
            for perm in itertools.permutations(range(self.r)):
                if not np.allclose(arr.transpose(perm), arr, atol=1e-9):
                    raise ValueError(f"channel {c} is not symmetric under index permutations")
            arr.flags.writeable = False
            frozen[c] = arr
        total = sum(frozen.values())
        if np.max(np.abs(total - 1.0)) > 1e-12:
            raise ValueError("channel arrays must sum to 1 at every class tuple")
        object.__setattr__(self, "arrays", frozen)

    @property
    def has_iota(self) -> bool:
        return 0 in self.arrays

    @property
    def channel_order(self) -> tuple[int, ...]:
        return tuple(sorted(self.arrays))

    def channel(self, color: int) -> np.ndarray:
        return self.arrays[color]

    def classes_at(self, point: Sequence[float]) -> tuple[int, ...]:
        """Partition class of each of the r projected blocks of ``point``."""
        n_coords = 2 ** self.r - 2
        if len(point) not in (n_coords, n_coords + 1):
            raise ValueError(f"point needs {n_coords} coordinates (full-set axis optional)")
        for x in point[:n_coords]:
            if not 0.0 <= x < 1.0:
                raise ValueError(f"coordinate {x} outside [0, 1)")
        return tuple(
            self.partition.class_of_point([point[i] for i in block])
            for block in _block_indices(self.r)
        )

    def evaluate(self, alpha: int, point: Sequence[float]) -> float:
        if alpha not in self.arrays:
            if alpha == 0:
                self.classes_at(point)
                return 0.0
            raise ValueError(f"color {alpha} outside palette")
        return float(self.arrays[alpha][self.classes_at(point)])


@dataclass(frozen=True, eq=False)
class VertexGraphon:
    """The embedding of a finite colored hypergraph into the type space.

    Values depend only on the singleton coordinates: each picks a vertex
    cell of width 1/n, and the color is the graph's color of the resulting
    r-set, or the reserved color 0 when two cells coincide.
    """

    graph: ColoredHypergraph

    @property
    def r(self) -> int:
        return self.graph.r

    @property
    def k(self) -> int:
        return self.graph.k

    @property
    def n(self) -> int:
        return self.graph.n

    def _cells(self, point: Sequence[float]) -> tuple[int, ...]:
        n_coords = 2 ** self.r - 2
        if len(point) not in (n_coords, n_coords + 1):
            raise ValueError(f"point needs {n_coords} coordinates (full-set axis optional)")
        for x in point[:n_coords]:
            if not 0.0 <= x < 1.0:
                raise ValueError(f"coordinate {x} outside [0, 1)")
        return tuple(_cell(x, self.n) for x in point[: self.r])

    def color_at(self, point: Sequence[float]) -> int:
        cells = self._cells(point)
        if len(set(cells)) < self.r:
            return IOTA
        return self.graph.color_of(tuple(sorted(cells)))

    def evaluate(self, alpha: int, point: Sequence[float]) -> float:
        if alpha != IOTA and not 1 <= alpha <= self.k:
            raise ValueError(f"color {alpha} outside palette")
        return 1.0 if self.color_at(point) == alpha else 0.0

    def to_step(self, resolution: int | None = None) -> StepGraphon:
        """Express the embedding as a step graphon (r = 2 or 3 only).

        The class structure is vertex cells for r = 2 and unordered
        vertex-cell pairs (diagonal included) for r = 3; class tuples no
        finite sample can realize carry reserved-color mass so the
        channels still sum to one.
        """
        n, r, k = self.n, self.r, self.k
        g = resolution if resolution is not None else n
        if g % n != 0:
            raise ValueError(f"resolution {g} is not a multiple of n={n}")
        vcell = np.repeat(np.arange(n), g // n)
        if r == 2:
            part = GridPartition(1, g, vcell, n)
            arrays: dict[int, np.ndarray] = {0: np.eye(n)}
            for alpha in range(1, k + 1):
                arrays[alpha] = self.graph.adjacency_array(alpha)
            return StepGraphon(2, k, part, arrays)
        if r == 3:
            pair_index = np.zeros((n, n), dtype=np.int64)
            count = 0
            for i in range(n):
                for j in range(i, n):
                    pair_index[i, j] = pair_index[j, i] = count
                    count += 1
            plane = pair_index[vcell[:, None], vcell[None, :]]
            labels = np.repeat(plane[:, :, None], g, axis=2)
            part = GridPartition(2, g, labels, count)
            shape = (count,) * 3
            arrays = {0: np.ones(shape)}
            for alpha in range(1, k + 1):
                arrays[alpha] = np.zeros(shape)
            for a, b, c in itertools.product(range(n), repeat=3):
                if len({a, b, c}) < 3:
                    continue
                color = self.graph.color_of(tuple(sorted((a, b, c))))
                idx = (pair_index[b, c], pair_index[a, c], pair_index[a, b])
                arrays[0][idx] = 0.0
                arrays[color][idx] = 1.0
            return StepGraphon(3, k, part, arrays)
        raise ValueError(f"to_step supports r in (2, 3), got r={r}; evaluate directly instead")


def evaluate(w: StepGraphon | VertexGraphon, alpha: int, point: Sequence[float]) -> float:
    return w.evaluate(alpha, point)


def embed(g: ColoredHypergraph) -> VertexGraphon:
    return VertexGraphon(g)


def sample_coordinates(q: int, r: int) -> tuple[tuple[int, ...], ...]:
    """The coordinate subsets drawn when sampling q vertices: H([q], r-1)."""
    return subsets_card_lex(range(q), r - 1)


@lru_cache(maxsize=32)
def _edge_blocks(q: int, r: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    coords = sample_coordinates(q, r)
    index = {s: i for i, s in enumerate(coords)}
    out = []
    for e in colex_subsets(q, r):
        per_l = []
        for l in range(r):
            rest = tuple(v for v in e if v != e[l])
            per_l.append(tuple(index[s] for s in subsets_card_lex(rest, r - 1)))
        out.append(tuple(per_l))
    return tuple(out)


def _decode_color(u: float, order: Sequence[int], probs: Sequence[float]) -> int:
    acc = 0.0
    for c, p in zip(order, probs):
        acc += p
        if u < acc:
            return c
    return order[-1]


def sample_graphon(
    w: StepGraphon | VertexGraphon,
    q: int,
    seed: int,
    condition_no_iota: bool = False,
    rejection_budget: int = 10_000,
) -> SampledColoredGraph:
    """Draw the random q-vertex colored graph of a graphon.

    One uniform per coordinate subset (axis order), then one per r-subset
    of [q] (colex order); the edge uniform picks the color through the
    cumulative distribution at the projected type point. With
    ``condition_no_iota`` (embedded graphs only) the whole draw repeats
    until no reserved color appears, up to ``rejection_budget`` attempts.
    """
    r = w.r
    if q < r:
        raise ValueError(f"sample size q={q} below uniformity r={r}")
    if condition_no_iota and not isinstance(w, VertexGraphon):
        raise ValueError("condition_no_iota applies to embedded graphs only")
    coords = sample_coordinates(q, r)
    blocks = _edge_blocks(q, r)
    n_edges = comb(q, r)
    rng = generator(seed)
    attempts = 0
    while True:
        attempts += 1
        xs = rng.random(len(coords))
        ues = rng.random(n_edges)
        if isinstance(w, VertexGraphon):
            cells = tuple(int(x * w.n) for x in xs[:q])
            if condition_no_iota and len(set(cells)) < q:
                if attempts >= rejection_budget:
                    raise BudgetError(
                        f"sample_graphon rejection (reserved color still present "
                        f"after {attempts} attempts)",
                        attempts + 1,
                        rejection_budget,
                    )
                continue
            colors = []
            for e in colex_subsets(q, r):
                ecells = sorted({cells[v] for v in e})
                colors.append(w.graph.color_of(tuple(ecells)) if len(ecells) == r else IOTA)
            return SampledColoredGraph(
                q, r, w.k, tuple(colors),
                vertices=cells, coords=tuple(float(x) for x in xs),
            )
        order = w.channel_order
        stacked = [w.arrays[c] for c in order]
        colors = []
        for edge_blocks, u in zip(blocks, ues):
            classes = tuple(
                w.partition.class_of_point(xs[list(block)]) for block in edge_blocks
            )
            colors.append(_decode_color(u, order, [a[classes] for a in stacked]))
        return SampledColoredGraph(
            q, r, w.k, tuple(colors), coords=tuple(float(x) for x in xs),
        )


def _to_step_compatible(w: VertexGraphon, resolution: int) -> StepGraphon:
    if resolution % w.n == 0:
        return w.to_step(resolution)
    if w.n % resolution == 0:
        return w.to_step(w.n)
    raise ValueError(
        f"incompatible resolutions: vertex grid {w.n} vs partition grid {resolution}"
    )


def _contract_axes(tensor: np.ndarray, m: np.ndarray, r: int, m_axis: int) -> np.ndarray:
    out = tensor
    for axis in range(r):
        out = np.moveaxis(np.tensordot(m, out, axes=([m_axis], [axis])), 0, axis)
    return out


def step_average(w: StepGraphon | VertexGraphon, p: GridPartition) -> StepGraphon:
    """Average each color channel over the class products of ``p``.

    This is the conditional expectation onto p-measurable step functions,
    computed exactly; one grid resolution must divide the other. For
    r >= 3 the projected blocks share coordinates, so the averaging runs
    over the joint class-tuple measure, not per-axis volume fractions;
    class tuples of measure zero get the uniform color vector.
    """
    if isinstance(w, VertexGraphon):
        w = _to_step_compatible(w, p.resolution)
    if p.r_minus_1 != w.r - 1:
        raise ValueError("partition dimensionality does not match the graphon")
    gw, gp = w.partition.resolution, p.resolution
    if gw % gp != 0 and gp % gw != 0:
        raise ValueError(f"incompatible resolutions: {gw} vs {gp}")
    r = w.r
    arrays: dict[int, np.ndarray] = {}
    if r == 2:
        g = max(gw, gp)
        lw = w.partition.refined(g // gw).labels.ravel()
        lp = p.refined(g // gp).labels.ravel()
        counts = np.zeros((p.t, w.partition.t))
        np.add.at(counts, (lp, lw), 1.0)
        rows = counts.sum(axis=1, keepdims=True)
        m = np.divide(counts, rows, out=np.full_like(counts, 1.0 / w.partition.t),
                      where=rows > 0)
        for c, arr in w.arrays.items():
            arrays[c] = _contract_axes(arr, m, r, 1)
    else:
        part, pairs = common_refinement(p, w.partition)
        weights = class_tuple_weights(part)
        into_p = np.array([a for a, _ in pairs])
        from_w = np.array([b for _, b in pairs])
        proj = (into_p[:, None] == np.arange(p.t)).astype(float)
        denom = _contract_axes(weights, proj, r, 0)
        mask = denom > 0
        safe = np.where(mask, denom, 1.0)
        uniform = 1.0 / len(w.arrays)
        for c, arr in w.arrays.items():
            num = _contract_axes(arr[np.ix_(*([from_w] * r))] * weights, proj, r, 0)
            arrays[c] = np.clip(np.where(mask, num / safe, uniform), 0.0, 1.0)
    total = sum(arrays.values())
    if np.max(np.abs(total - 1.0)) > 1e-9:
        raise ValueError("averaging lost the partition of unity; inputs inconsistent")
    arrays = {c: arr / total for c, arr in arrays.items()}
    return StepGraphon(w.r, w.k, p, arrays)


def class_tuple_weights(p: GridPartition) -> np.ndarray:
    """Measure of each class tuple: weights[i1..ir] = vol{x : block_l(x) in P_{i_l}}.

    The r projected blocks share coordinates, so for r >= 3 this is not a
    product of class volumes; it is the exact contraction of the one-hot
    label tensors over the shared axes.
    """
    return _weights_from_labels(p.r_minus_1 + 1, p.labels, p.t)


def _weights_from_labels(r: int, labels: np.ndarray, t: int) -> np.ndarray:
    if r == 1:
        out = np.zeros(t)
        out[int(labels.ravel()[0])] = 1.0
        return out
    coords = _eval_coords(r)
    letters = {s: _LETTERS[i] for i, s in enumerate(coords)}
    class_letters = _LETTERS[len(coords): len(coords) + r]
    onehot = (labels[..., None] == np.arange(t)).astype(float)
    subs = []
    for l in range(r):
        rest = tuple(v for v in range(r) if v != l)
        subs.append("".join(letters[s] for s in subsets_card_lex(rest, r - 1)) + class_letters[l])
    # grid axes private to a single slot (the block containing both other
    # vertices) integrate out to plain means; reducing them first keeps the
    # einsum from dragging dead axes through the contraction
    shared = {ch for ch, n in Counter(ch for s in subs for ch in s).items() if n > 1}
    operands = []
    reduced_subs = []
    for sub in subs:
        arr = onehot
        kept = []
        axis = 0
        for ch in sub:
            if ch in class_letters or ch in shared:
                kept.append(ch)
                axis += 1
            else:
                arr = arr.mean(axis=axis)
        operands.append(arr)
        reduced_subs.append("".join(kept))
    expr = ",".join(reduced_subs) + "->" + "".join(class_letters)
    out = np.einsum(expr, *operands, optimize=True)
    g = labels.shape[0] if labels.ndim else 1
    remaining = {ch for s in reduced_subs for ch in s if ch not in class_letters}
    return out / float(g) ** len(remaining)


def _expand(arr: np.ndarray | None, idx: np.ndarray, r: int, size: int) -> np.ndarray:
    if arr is None:
        return np.zeros((size,) * r)
    return arr[np.ix_(*([idx] * r))]


def l1_distance(u: StepGraphon, w: StepGraphon) -> float:
    """Sum over colors of the L1 distance between channels, exact."""
    if u.r != w.r:
        raise ValueError("uniformities differ")
    part, pairs = common_refinement(u.partition, w.partition)
    weights = class_tuple_weights(part)
    iu = np.array([a for a, _ in pairs])
    iw = np.array([b for _, b in pairs])
    total = 0.0
    for c in sorted(set(u.arrays) | set(w.arrays)):
        au = _expand(u.arrays.get(c), iu, u.r, part.t)
        aw = _expand(w.arrays.get(c), iw, u.r, part.t)
        total += float(np.sum(np.abs(au - aw) * weights))
    return total


def l2_distance(u: StepGraphon, w: StepGraphon) -> float:
    """Sum over colors of the squared L2 channel distances, square-rooted."""
    if u.r != w.r:
        raise ValueError("uniformities differ")
    part, pairs = common_refinement(u.partition, w.partition)
    weights = class_tuple_weights(part)
    iu = np.array([a for a, _ in pairs])
    iw = np.array([b for _, b in pairs])
    total = 0.0
    for c in sorted(set(u.arrays) | set(w.arrays)):
        au = _expand(u.arrays.get(c), iu, u.r, part.t)
        aw = _expand(w.arrays.get(c), iw, u.r, part.t)
        total += float(np.sum((au - aw) ** 2 * weights))
    return total ** 0.5


def color_mass(w: StepGraphon) -> dict[int, float]:
    """Total measure each color receives: mass[c] = integral of channel c."""
    weights = class_tuple_weights(w.partition)
    return {c: float(np.sum(arr * weights)) for c, arr in w.arrays.items()}


def _symmetrize_labels(labels: np.ndarray, r_minus_1: int) -> np.ndarray:
    out = labels
    for ax in _axis_perms(r_minus_1):
        out = np.minimum(out, labels.transpose(ax))
    return out


def random_grid_partition(r_minus_1: int, resolution: int, t: int, seed: int) -> GridPartition:
    """A random symmetric grid partition with t classes (fewer if t is unreachable)."""
    rng = generator(seed)
    dim = 2 ** r_minus_1 - 1
    shape = (resolution,) * dim
    labels = None
    for _ in range(200):
        raw = rng.integers(0, t, size=shape)
        sym = _symmetrize_labels(raw, r_minus_1)
        if len(np.unique(sym)) == t:
            labels = sym
            break
    if labels is None:
        sym = _symmetrize_labels(rng.integers(0, t, size=shape), r_minus_1)
        _, labels = np.unique(sym, return_inverse=True)
        labels = labels.reshape(shape)
        t = int(labels.max()) + 1
    return GridPartition(r_minus_1, resolution, labels, t)


def random_step_graphon(
    r: int, k: int, t: int, resolution: int, seed: int, with_iota: bool = False
) -> StepGraphon:
    """A random step graphon: random symmetric partition, Dirichlet-like channels."""
    part = random_grid_partition(r - 1, resolution, t, derive_seed(seed, 0))
    rng = generator(derive_seed(seed, 1))
    channels = ([0] if with_iota else []) + list(range(1, k + 1))
    perms = list(itertools.permutations(range(r)))
    arrays: dict[int, np.ndarray] = {}
    for c in channels:
        raw = rng.random((part.t,) * r)
        arrays[c] = sum(raw.transpose(p) for p in perms) / len(perms)
    total = sum(arrays.values())
    arrays = {c: arr / total for c, arr in arrays.items()}
    return StepGraphon(r, k, part, arrays)


def constant_graphon(r: int, k: int, probs: Sequence[float]) -> StepGraphon:
    """The one-class step graphon with a fixed color distribution."""
    if len(probs) != k:
        raise ValueError(f"need {k} probabilities")
    part = GridPartition.trivial(r - 1)
    arrays = {c + 1: np.full((1,) * r, p) for c, p in enumerate(probs)}
    return StepGraphon(r, k, part, arrays)


def step_graphon_to_json(w: StepGraphon) -> dict[str, Any]:
    return {
        "r": w.r,
        "k": w.k,
        "t": w.partition.t,
        "resolution": w.partition.resolution,
        "labels": [int(x) for x in w.partition.labels.ravel()],
        "arrays": {str(c): [float(x) for x in arr.ravel()] for c, arr in w.arrays.items()},
    }


def step_graphon_from_json(d: Mapping[str, Any]) -> StepGraphon:
    required = {"r", "k", "t", "resolution", "labels", "arrays"}
    missing = required - set(d)
    if missing:
        raise ValueError(f"step graphon JSON missing fields: {sorted(missing)}")
    r, k, t, g = int(d["r"]), int(d["k"]), int(d["t"]), int(d["resolution"])
    dim = 2 ** (r - 1) - 1
    labels = np.array(d["labels"], dtype=np.int64).reshape((g,) * dim)
    part = GridPartition(r - 1, g, labels, t)
    arrays = {
        int(c): np.array(vals, dtype=float).reshape((t,) * r)
        for c, vals in d["arrays"].items()
    }
    return StepGraphon(r, k, part, arrays)
