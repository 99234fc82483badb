"""Colored r-uniform hypergraphs.

A k-colored r-graph on [n] assigns one of k colors to every r-subset of
the vertex set, so a simple graph is the k=2 case (edge / non-edge). Edge
colors are stored in colexicographic order of the r-subsets, which makes
array exports and JSON files portable across machines.

The reserved color value 0 (exposed as :data:`IOTA`) marks the diagonal
in sampled objects; finite hypergraphs never store it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations, product
from math import comb
from typing import Any, Iterator, Mapping, Sequence

import numpy as np

from .budget import check_budget
from .seeds import generator

__all__ = [
    "IOTA",
    "colex_rank",
    "colex_subsets",
    "ColoredHypergraph",
    "SampledColoredGraph",
    "make_hypergraph",
    "composite_color",
    "split_color",
    "discolor",
    "enumerate_colorings",
    "sample_subgraph",
    "hypergraph_to_json",
    "hypergraph_from_json",
]

IOTA = 0


def colex_rank(subset: Sequence[int]) -> int:
    """Rank of a sorted 0-based subset in colexicographic order.

    Parameters
    ----------
    subset : sequence of int
        Strictly increasing 0-based vertex indices.

    Returns
    -------
    int
        Position of ``subset`` among all ``len(subset)``-subsets of any
        ground set containing it, counting from 0.
    """
    return sum(comb(v, i + 1) for i, v in enumerate(subset))


def colex_subsets(n: int, r: int) -> Iterator[tuple[int, ...]]:
    """All r-subsets of ``range(n)`` in colexicographic order."""
    if r == 0:
        yield ()
        return
    for top in range(r - 1, n):
        for rest in colex_subsets(top, r - 1):
            yield rest + (top,)


def _validate_colors(n: int, r: int, k: int, colors: tuple[int, ...], allow_iota: bool) -> None:
    if r < 1:
        raise ValueError(f"uniformity r must be >= 1, got {r}")
    if n < r:
        raise ValueError(f"need n >= r, got n={n}, r={r}")
    if k < 1:
        raise ValueError(f"palette size k must be >= 1, got {k}")
    expected = comb(n, r)
    if len(colors) != expected:
        raise ValueError(f"expected {expected} edge colors for n={n}, r={r}, got {len(colors)}")
    lo = IOTA if allow_iota else 1
    for c in colors:
        if not (lo <= c <= k):
            raise ValueError(f"edge color {c} outside palette [{lo}..{k}]")


@dataclass(frozen=True)
class ColoredHypergraph:
    """A k-coloring of all r-subsets of [n].

    Attributes
    ----------
    n : int
        Vertex count.
    r : int
        Uniformity (edges are r-subsets).
    k : int
        Palette size; colors are 1..k.
    colors : tuple of int
        One color per r-subset, in colexicographic subset order.
    """

    n: int
    r: int
    k: int
    colors: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "colors", tuple(int(c) for c in self.colors))
        _validate_colors(self.n, self.r, self.k, self.colors, allow_iota=False)

    def edges(self) -> Iterator[tuple[int, ...]]:
        """Edge subsets in storage (colex) order."""
        return colex_subsets(self.n, self.r)

    def color_of(self, edge: Sequence[int]) -> int:
        """Color of one r-subset (given as sorted 0-based vertices)."""
        edge = tuple(edge)
        if len(edge) != self.r or len(set(edge)) != self.r:
            raise ValueError(f"{edge} is not an r-subset for r={self.r}")
        if any(not (0 <= v < self.n) for v in edge):
            raise ValueError(f"{edge} has vertices outside range(0, {self.n})")
        if tuple(sorted(edge)) != edge:
            edge = tuple(sorted(edge))
        return self.colors[colex_rank(edge)]

    def color_counts(self) -> dict[int, int]:
        """Number of edges per color, including zero counts."""
        counts = {alpha: 0 for alpha in range(1, self.k + 1)}
        for c in self.colors:
            counts[c] += 1
        return counts

    def adjacency_array(self, alpha: int) -> np.ndarray:
        """Symmetric 0/1 indicator array of color class ``alpha``.

        The returned array has shape ``(n,) * r`` and is invariant under
        every coordinate permutation; entries with repeated indices are 0.
        """
        if not (1 <= alpha <= self.k):
            raise ValueError(f"color {alpha} outside palette [1..{self.k}]")
        a = np.zeros((self.n,) * self.r, dtype=np.float64)
        for edge in self.edges():
            if self.color_of(edge) == alpha:
                for perm in _permutations_cached(self.r):
                    a[tuple(edge[p] for p in perm)] = 1.0
        return a

    def induced_colors(self, vertices: Sequence[int]) -> tuple[int, ...]:
        """Colors of the subgraph induced on sorted ``vertices``, in colex order.

        ``vertices`` must be strictly increasing, so local colex order of
        position subsets matches global colex order of the image subsets.
        """
        verts = tuple(vertices)
        if any(verts[i] >= verts[i + 1] for i in range(len(verts) - 1)):
            raise ValueError("vertices must be strictly increasing")
        out = []
        for local in colex_subsets(len(verts), self.r):
            out.append(self.colors[colex_rank(tuple(verts[i] for i in local))])
        return tuple(out)

    def relabeled(self, perm: Sequence[int]) -> "ColoredHypergraph":
        """The same hypergraph with vertex ``v`` renamed to ``perm[v]``."""
        if sorted(perm) != list(range(self.n)):
            raise ValueError("perm must be a permutation of range(n)")
        new = [0] * len(self.colors)
        for edge in self.edges():
            image = tuple(sorted(perm[v] for v in edge))
            new[colex_rank(image)] = self.colors[colex_rank(edge)]
        return ColoredHypergraph(self.n, self.r, self.k, tuple(new))


@dataclass(frozen=True)
class SampledColoredGraph:
    """A colored r-graph on [q] produced by sampling.

    Unlike :class:`ColoredHypergraph`, the reserved diagonal color
    :data:`IOTA` (value 0) may appear, but only when the producing
    operation permits it (graphon samples with colliding coordinates).

    The provenance fields record how the sample was drawn and are
    excluded from equality: ``vertices`` holds the sorted source
    positions for subgraph samples, ``coords`` the uniform coordinates
    (keyed by sorted vertex subsets) for graphon samples.
    """

    q: int
    r: int
    k: int
    colors: tuple[int, ...]
    vertices: tuple[int, ...] | None = field(default=None, compare=False)
    coords: Mapping[tuple[int, ...], float] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "colors", tuple(int(c) for c in self.colors))
        _validate_colors(self.q, self.r, self.k, self.colors, allow_iota=True)

    @property
    def n(self) -> int:
        return self.q

    def edges(self) -> Iterator[tuple[int, ...]]:
        return colex_subsets(self.q, self.r)

    def color_of(self, edge: Sequence[int]) -> int:
        edge = tuple(sorted(edge))
        return self.colors[colex_rank(edge)]

    def induced_colors(self, vertices: Sequence[int]) -> tuple[int, ...]:
        """Colors induced on strictly increasing ``vertices``, colex order."""
        verts = tuple(vertices)
        if any(verts[i] >= verts[i + 1] for i in range(len(verts) - 1)):
            raise ValueError("vertices must be strictly increasing")
        out = []
        for local in colex_subsets(len(verts), self.r):
            out.append(self.colors[colex_rank(tuple(verts[i] for i in local))])
        return tuple(out)

    def has_iota(self) -> bool:
        return IOTA in self.colors

    def without_provenance(self) -> "SampledColoredGraph":
        return SampledColoredGraph(self.q, self.r, self.k, self.colors)


_PERM_CACHE: dict[int, tuple[tuple[int, ...], ...]] = {}


def _permutations_cached(r: int) -> tuple[tuple[int, ...], ...]:
    if r not in _PERM_CACHE:
        from itertools import permutations

        _PERM_CACHE[r] = tuple(permutations(range(r)))
    return _PERM_CACHE[r]


def make_hypergraph(n: int, r: int, k: int, color_list: Sequence[int]) -> ColoredHypergraph:
    """Build a hypergraph from a color list in colex edge order.

    Raises
    ------
    ValueError
        If ``n < r``, the list length is not C(n, r), or a color falls
        outside [1..k].
    """
    return ColoredHypergraph(n, r, k, tuple(color_list))


def composite_color(alpha: int, beta: int, k: int) -> int:
    """Pairing convention for [t] x [k] palettes: (alpha, beta) -> (alpha-1)*k + beta."""
    return (alpha - 1) * k + beta


def split_color(c: int, k: int) -> tuple[int, int]:
    """Inverse of :func:`composite_color`; color 0 (iota) maps to (0, 0)."""
    if c == IOTA:
        return (IOTA, IOTA)
    return ((c - 1) // k + 1, (c - 1) % k + 1)


def discolor(g, k: int):
    """Merge a [t] x [k] palette back to [t] by forgetting the second index.

    Works on :class:`ColoredHypergraph` and :class:`SampledColoredGraph`
    (where the reserved color 0 stays 0). The palette size must be
    divisible by ``k``.

    Raises
    ------
    ValueError
        If ``g.k`` is not a positive multiple of ``k``.
    """
    if k < 1 or g.k % k != 0:
        raise ValueError(f"palette size {g.k} is not divisible by k={k}")
    t = g.k // k
    new_colors = tuple(split_color(c, k)[0] for c in g.colors)
    if isinstance(g, SampledColoredGraph):
        return SampledColoredGraph(g.q, g.r, t, new_colors, vertices=g.vertices, coords=g.coords)
    return ColoredHypergraph(g.n, g.r, t, new_colors)


def enumerate_colorings(g, k: int, budget: int | None = None):
    """Every [t] x [k]-coloring refining ``g``, in a fixed deterministic order.

    Yields hypergraphs whose discoloring by ``k`` equals ``g``; there are
    exactly ``k ** C(n, r)`` of them. Edges keep their base color alpha
    and receive every combination of subcolors beta via the pairing
    (alpha, beta) -> (alpha-1)*k + beta, iterated in row-major order over
    colex edge positions.

    Raises
    ------
    BudgetError
        If ``k ** C(n, r)`` exceeds the enumeration budget; callers must
        then switch to local search (module testers).
    """
    m = len(g.colors)
    check_budget("enumerate_colorings", k**m, budget)
    for betas in product(range(1, k + 1), repeat=m):
        colors = tuple(composite_color(c, b, k) for c, b in zip(g.colors, betas))
        if isinstance(g, SampledColoredGraph):
            yield SampledColoredGraph(g.q, g.r, g.k * k, colors, vertices=g.vertices, coords=g.coords)
        else:
            yield ColoredHypergraph(g.n, g.r, g.k * k, colors)


def sample_subgraph(g: ColoredHypergraph, q: int, seed: int) -> SampledColoredGraph:
    """Induced subgraph on a uniform random q-subset of the vertices.

    The chosen vertices are sorted and relabeled to [q]; the sample
    records them in its ``vertices`` provenance field. Same seed, same
    sample, bit for bit.

    Raises
    ------
    ValueError
        If ``q > n`` or ``q < r``.
    """
    if q > g.n:
        raise ValueError(f"cannot sample q={q} vertices from n={g.n}")
    if q < g.r:
        raise ValueError(f"sample size q={q} below uniformity r={g.r}")
    rng = generator(seed)
    verts = tuple(sorted(rng.choice(g.n, size=q, replace=False).tolist()))
    return SampledColoredGraph(q, g.r, g.k, g.induced_colors(verts), vertices=verts)


def hypergraph_to_json(g) -> dict[str, Any]:
    """JSON-ready dict in the interchange format {"n","r","k","colors"}."""
    return {"n": g.n, "r": g.r, "k": g.k, "colors": list(g.colors)}


def hypergraph_from_json(d: Mapping[str, Any]) -> ColoredHypergraph:
    """Parse the interchange format, validating palette and length."""
    missing = {"n", "r", "k", "colors"} - set(d)
    if missing:
        raise ValueError(f"hypergraph JSON missing fields: {sorted(missing)}")
    return make_hypergraph(int(d["n"]), int(d["r"]), int(d["k"]), [int(c) for c in d["colors"]])
