"""Empirical testers for hypergraph parameters and properties.

Three harnesses. ``probe_sample_complexity`` measures how often a
parameter of a random induced sample strays from its value on the whole
graph, with Wilson confidence intervals over a grid of sample sizes.
``nd_parameter`` evaluates a best-over-colorings parameter, either by
exhaustive enumeration (an oracle at desk scale) or by first-improvement
local search (a flagged lower bound). ``property_tester`` builds a tester
for a plain property out of a tester for its colored witness property:
the sample is accepted when some coloring of it has witness
sample-property density at least 3/5, with outer thresholds 2/5 and 3/5.

Callbacks registered here must be pure functions of their argument and
invariant under vertex relabeling; registration spot-checks the
invariance on random permutations, because that invariance is what makes
the callback a graph parameter rather than a function of the adjacency
encoding. Trials are seed-derived and independent, so they can be run in
any order or in parallel without changing the outcome.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import ceil, comb, log, sqrt
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from .budget import BudgetError, check_budget
from .hypercore import (
    IOTA,
    ColoredHypergraph,
    SampledColoredGraph,
    sample_subgraph,
)
from .seeds import derive_seed, generator
from .transfer import max_over_refinements

__all__ = [
    "PARAMETERS",
    "PROPERTIES",
    "NdResult",
    "ParameterFn",
    "PropertyFn",
    "far_from_property",
    "nd_parameter",
    "probe_sample_complexity",
    "property_acceptance_rate",
    "property_tester",
    "register_parameter",
    "register_property",
    "wilson_interval",
    "witness_sample_density",
]

# witness tester thresholds and the outer accept/reject thresholds built
# from them
WITNESS_LOW = 1.0 / 5.0
WITNESS_HIGH = 4.0 / 5.0
SAMPLE_THRESHOLD = 3.0 / 5.0
OUTER_LOW = 2.0 / 5.0
OUTER_HIGH = 3.0 / 5.0

Z_95 = 1.959963984540054


@dataclass(frozen=True)
class ParameterFn:
    """A real-valued, relabeling-invariant function of colored r-graphs."""

    name: str
    r: int
    k: int
    fn: Callable[[Any], float]
    lipschitz: float | None = None

    def __call__(self, g) -> float:
        return float(self.fn(g))


@dataclass(frozen=True)
class PropertyFn:
    """A relabeling-invariant membership predicate with tester metadata.

    ``member`` answers membership for graphs on the declared palette.
    ``sample_member`` is the sample-property predicate used by the
    constructed tester (defaults to ``member``), ``sample_size`` maps a
    proximity parameter to the witness tester's sample size, and
    ``distance_to`` (optional) counts the edge recolorings needed to
    enter the property.
    """

    name: str
    r: int
    k: int
    member: Callable[[ColoredHypergraph], bool]
    sample_member: Callable[[ColoredHypergraph], bool] | None = None
    sample_size: Callable[[float], int] = field(default=lambda eps: 2)
    distance_to: Callable[[ColoredHypergraph], int] | None = None

    def sample_predicate(self) -> Callable[[ColoredHypergraph], bool]:
        return self.sample_member if self.sample_member is not None else self.member


PARAMETERS: dict[str, ParameterFn] = {}
PROPERTIES: dict[str, PropertyFn] = {}


def _check_graph(r: int, k: int, seed: int) -> ColoredHypergraph:
    n = r + 3
    rng = generator(seed)
    colors = tuple(int(c) for c in rng.integers(1, k + 1, size=comb(n, r)))
    return ColoredHypergraph(n, r, k, colors)


def _assert_invariant(name: str, r: int, k: int, value_of, seed: int,
                      permutations: int = 10) -> None:
    g = _check_graph(r, k, seed)
    reference = value_of(g)
    rng = generator(derive_seed(seed, 1))
    for _ in range(permutations):
        perm = tuple(int(v) for v in rng.permutation(g.n))
        got = value_of(g.relabeled(perm))
        if isinstance(reference, bool) or isinstance(got, bool):
            ok = bool(got) == bool(reference)
        else:
            ok = abs(float(got) - float(reference)) <= 1e-9
        if not ok:
            raise ValueError(
                f"{name!r} is not invariant under vertex relabeling; "
                f"it is a function of the encoding, not a graph parameter"
            )


def register_parameter(p: ParameterFn, seed: int = 0) -> ParameterFn:
    """Add a parameter to the registry after a relabeling spot check."""
    _assert_invariant(p.name, p.r, p.k, p, seed)
    PARAMETERS[p.name] = p
    return p


def register_property(p: PropertyFn, seed: int = 0) -> PropertyFn:
    """Add a property to the registry after a relabeling spot check."""
    _assert_invariant(p.name, p.r, p.k, p.member, seed)
    PROPERTIES[p.name] = p
    return p


def wilson_interval(successes: int, trials: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * sqrt(p * (1.0 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _map_trials(fn: Callable[[int], int], trials: int, threads: int) -> list[int]:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(trials)))
    return [fn(trial) for trial in range(trials)]


def probe_sample_complexity(
    f: ParameterFn,
    g: ColoredHypergraph,
    eps: float,
    q_grid: Sequence[int],
    trials: int = 400,
    seed: int = 0,
    threads: int = 1,
) -> dict[str, Any]:
    """Empirical deviation probabilities of f over induced q-samples.

    For each q in the grid, estimates P(|f(G) - f(sample)| > eps) over
    ``trials`` independent samples with a 95% Wilson interval, and
    reports the smallest q whose upper confidence limit is below eps
    (the working notion of a sufficient sample size: the deviation
    probability itself should drop below the proximity target).

    ``threads`` spreads trials over a worker pool; each trial's seed is
    fixed by its index, so the result does not depend on the pool size.
    """
    if f.r != g.r or f.k != g.k:
        raise ValueError(f"parameter {f.name!r} expects palette ({f.r}, {f.k})")
    if eps <= 0:
        raise ValueError("eps must be positive")
    reference = f(g)
    rows = []
    for qi, q in enumerate(q_grid):

        def one_trial(trial: int, qi: int = qi, q: int = q) -> int:
            sub = sample_subgraph(g, q, derive_seed(seed, qi * trials + trial))
            value = f(ColoredHypergraph(sub.n, sub.r, sub.k, sub.colors))
            return int(abs(value - reference) > eps)

        failures = sum(_map_trials(one_trial, trials, threads))
        low, high = wilson_interval(failures, trials)
        rows.append({
            "q": int(q),
            "failures": failures,
            "rate": failures / trials,
            "ci_low": low,
            "ci_high": high,
        })
    recommended = next((row["q"] for row in rows if row["ci_high"] < eps), None)
    return {
        "parameter": f.name,
        "epsilon": eps,
        "trials": trials,
        "value": reference,
        "rows": rows,
        "recommended_q": recommended,
    }


class NdResult(NamedTuple):
    value: float
    certified: bool
    witness: Any


def nd_parameter(
    f_witness: ParameterFn,
    g: ColoredHypergraph,
    mode: str = "exhaustive",
    seed: int = 0,
    budget: int | None = None,
    restarts: int = 8,
) -> NdResult:
    """Best witness value over the refinements of ``g``.

    Exhaustive mode enumerates every coloring and certifies the maximum;
    local mode hill-climbs single-edge recolorings from ``restarts``
    seeded starts and returns a lower bound with ``certified=False``.
    Mode "auto" enumerates when the budget allows.
    """
    if f_witness.r != g.r:
        raise ValueError("witness uniformity does not match the graph")
    if f_witness.k % g.k != 0:
        raise ValueError(
            f"witness palette {f_witness.k} does not refine the graph palette {g.k}"
        )
    arity = f_witness.k // g.k
    if mode not in ("exhaustive", "local", "auto"):
        raise ValueError(f"unknown mode {mode!r}")
    chosen = mode
    if mode == "auto":
        m = sum(1 for c in g.colors if c != IOTA)
        try:
            check_budget("refinement enumeration", arity ** m, budget)
            chosen = "exhaustive"
        except BudgetError:
            chosen = "local"
    value, witness = max_over_refinements(
        g, arity, f_witness, mode=chosen, budget=budget,
        restarts=restarts, seed=seed,
    )
    return NdResult(float(value), chosen == "exhaustive", witness)


def witness_sample_density(
    p_witness: PropertyFn,
    h: ColoredHypergraph,
    q: int,
    budget: int | None = None,
) -> float:
    """Fraction of induced q-subsets of ``h`` in the witness sample property."""
    if not h.r <= q <= h.n:
        raise ValueError(f"need r <= q <= n, got q={q} for n={h.n}")
    check_budget("sample property density", comb(h.n, q), budget)
    predicate = p_witness.sample_predicate()
    hits = 0
    for verts in itertools.combinations(range(h.n), q):
        sub = ColoredHypergraph(q, h.r, h.k, h.induced_colors(verts))
        if predicate(sub):
            hits += 1
    return hits / comb(h.n, q)


def property_tester(
    p_witness: PropertyFn,
    h: ColoredHypergraph | SampledColoredGraph,
    eps: float,
    seed: int = 0,
    mode: str = "auto",
    budget: int | None = None,
    restarts: int = 8,
) -> tuple[bool, dict[str, Any]]:
    """Accept ``h`` when some coloring passes the witness sample test.

    Membership in the constructed sample property: there is a k-coloring
    of ``h`` whose witness sample-property density at the witness
    tester's own sample size reaches 3/5. The search over colorings is
    exhaustive at desk scale (mode "local" trades the certificate for a
    one-sided search). The witness sample size is capped at the size of
    ``h`` itself.
    """
    if isinstance(h, SampledColoredGraph):
        h = ColoredHypergraph(h.n, h.r, h.k, h.colors)
    if p_witness.r != h.r:
        raise ValueError("witness uniformity does not match the graph")
    if p_witness.k % h.k != 0:
        raise ValueError(
            f"witness palette {p_witness.k} does not refine the graph palette {h.k}"
        )
    arity = p_witness.k // h.k
    q_w = min(max(p_witness.sample_size(eps), h.r), h.n)

    def density(refined) -> float:
        return witness_sample_density(p_witness, refined, q_w, budget=budget)

    best, best_g = max_over_refinements(
        h, arity, density, mode=mode, budget=budget,
        restarts=restarts, seed=seed,
    )
    accept = bool(best >= SAMPLE_THRESHOLD - 1e-12)
    trace = {
        "witness_sample_size": q_w,
        "arity": arity,
        "best_density": float(best),
        "sample_threshold": SAMPLE_THRESHOLD,
        "outer_thresholds": [OUTER_LOW, OUTER_HIGH],
        "accept": accept,
        "best_coloring": list(best_g.colors),
    }
    return accept, trace


def property_acceptance_rate(
    p_witness: PropertyFn,
    g: ColoredHypergraph,
    q: int,
    eps: float,
    trials: int = 400,
    seed: int = 0,
    mode: str = "auto",
    budget: int | None = None,
    threads: int = 1,
) -> dict[str, Any]:
    """Acceptance frequency of the constructed tester over random q-samples.

    Trial seeds are fixed by index, so ``threads`` only changes the
    schedule, never the counts.
    """

    def one_trial(trial: int) -> int:
        sub = sample_subgraph(g, q, derive_seed(seed, trial))
        ok, _ = property_tester(
            p_witness, sub, eps, seed=derive_seed(seed, trial),
            mode=mode, budget=budget,
        )
        return int(ok)

    accepted = sum(_map_trials(one_trial, trials, threads))
    low, high = wilson_interval(accepted, trials)
    return {
        "q": q,
        "epsilon": eps,
        "trials": trials,
        "accepted": accepted,
        "rate": accepted / trials,
        "ci_low": low,
        "ci_high": high,
    }


def _brute_force_distance(
    prop: PropertyFn, g: ColoredHypergraph, budget: int | None
) -> int:
    m = len(g.colors)
    check_budget("property edit distance", prop.k ** m, budget)
    best = None
    for colors in itertools.product(range(1, prop.k + 1), repeat=m):
        candidate = ColoredHypergraph(g.n, g.r, g.k, colors)
        if prop.member(candidate):
            dist = sum(1 for a, b in zip(colors, g.colors) if a != b)
            best = dist if best is None else min(best, dist)
    if best is None:
        raise ValueError(f"property {prop.name!r} has no members on {g.n} vertices")
    return best


def far_from_property(
    prop: PropertyFn,
    g: ColoredHypergraph,
    eps: float,
    normalization: str = "subsets",
    budget: int | None = None,
) -> dict[str, Any]:
    """Whether ``g`` needs more than the eps-allowance of edits to enter.

    Two allowance normalizations exist side by side: "subsets" scales by
    the number of r-subsets C(n, r), which is the natural volume for
    r-graphs and the default here, while "square" scales by n^2, the
    customary choice for graphs. They disagree for r != 2, so the choice
    is explicit rather than silent.
    """
    if normalization not in ("subsets", "square"):
        raise ValueError(f"unknown normalization {normalization!r}")
    if prop.distance_to is not None:
        distance = int(prop.distance_to(g))
    else:
        distance = _brute_force_distance(prop, g, budget)
    if normalization == "subsets":
        allowance = eps * comb(g.n, g.r)
    else:
        allowance = eps * g.n ** 2
    return {
        "distance": distance,
        "allowance": allowance,
        "far": bool(distance > allowance),
        "normalization": normalization,
    }


# ----------------------------------------------------------------------
# built-in registry


def _fraction_of(color: int) -> Callable[[Any], float]:
    def fn(h) -> float:
        return sum(1 for c in h.colors if c == color) / len(h.colors)

    return fn


def _signed_split(h) -> float:
    ones = sum(1 for c in h.colors if c == 1)
    twos = sum(1 for c in h.colors if c == 2)
    return (ones - twos) / len(h.colors)


def _all_first_color(h) -> bool:
    return all(c == 1 for c in h.colors)


def _complete_defect(h) -> int:
    return sum(1 for c in h.colors if c != 1)


def _clean_sample_size(r: int) -> Callable[[float], int]:
    # a graph eps-far from all-first-color keeps at least eps*C(n, r) bad
    # edges, so q/r disjoint probes each miss with probability at most
    # 1 - eps; q = r * ceil(ln 5 / eps + 1) pushes the all-clean chance
    # under 1/5
    def size(eps: float) -> int:
        if eps <= 0:
            raise ValueError("eps must be positive")
        return r * ceil(log(5.0) / eps + 1.0)

    return size


register_parameter(ParameterFn("edge-density", 2, 2, _fraction_of(1)))
register_parameter(ParameterFn("triple-density", 3, 2, _fraction_of(1)))
register_parameter(ParameterFn("signed-split", 2, 4, _signed_split))
register_parameter(ParameterFn("triple-signed-split", 3, 4, _signed_split))

register_property(PropertyFn(
    "complete", 2, 2, _all_first_color,
    sample_size=_clean_sample_size(2),
    distance_to=_complete_defect,
))
register_property(PropertyFn(
    "complete-witness", 2, 4, _all_first_color,
    sample_size=_clean_sample_size(2),
    distance_to=_complete_defect,
))
