"""Weak regularity decompositions of colored step graphons.

Each round measures the worst cut-P residual over symmetric partitions
within the class budget, then splits the current partition by the
witnessing sets of every color channel. Averaging over the refined
partition is an exact conditional expectation, so each detected residual
eta pushes the approximant's L2 energy up by eta^2 and the number of
productive rounds is capped by 1/eps^2. The returned approximant is the
best one seen, which keeps the reported residual trace nonincreasing.
"""

from __future__ import annotations

import csv
import io
import itertools
from math import ceil, lcm, log2
from typing import Any, Sequence

import numpy as np

from .budget import BudgetError, check_budget
from .cutnorm import (
    CutWitness,
    _count_growth_strings,
    _growth_strings,
    difference_kernel,
    kernel_cutnorm_p,
)
from .graphon import GridPartition, StepGraphon, VertexGraphon, orbit_partition, step_average
from .seeds import derive_seed

__all__ = [
    "RegularityError",
    "weak_regularize",
    "sup_partition_distance",
    "class_count_bound",
    "class_count_bound_log2",
    "growth_sequence",
    "symmetrized_step",
    "trace_csv",
]


class RegularityError(RuntimeError):
    """Raised when the round budget runs out above the target residual.

    Carries the best decomposition found so its caller can still inspect
    or reuse it: ``achieved`` is the smallest certified residual, and
    ``v``, ``p``, ``trace`` mirror the normal return values.
    """

    def __init__(self, target: float, achieved: float, v: StepGraphon,
                 p: GridPartition, trace: list[dict[str, Any]]):
        rounds = len(trace) - 1
        super().__init__(
            f"residual {achieved:.6g} still above target {target:.6g} "
            f"after {rounds} refinement rounds"
        )
        self.target = target
        self.achieved = achieved
        self.v = v
        self.p = p
        self.trace = trace


def _as_step(w: StepGraphon | VertexGraphon) -> StepGraphon:
    return w.to_step() if isinstance(w, VertexGraphon) else w


def sup_partition_distance(
    u: StepGraphon | VertexGraphon,
    w: StepGraphon | VertexGraphon,
    limit: int,
    mode: str = "exact",
    budget: int | None = None,
    restarts: int = 16,
    seed: int = 0,
) -> tuple[float, GridPartition, list[CutWitness]]:
    """Worst cut-P distance over symmetric partitions with <= limit classes.

    Returns the maximizing partition and one witness per color channel.
    Per-channel cut-P norms are monotone under partition refinement, so
    when the class budget covers every cell orbit the finest symmetric
    partition attains the supremum and the sweep collapses to one
    evaluation. Heuristic mode evaluates only that finest partition and
    reports a sign-ascent estimate rather than a certified value.
    """
    us, ws = _as_step(u), _as_step(w)
    if us.r != ws.r or us.k != ws.k:
        raise ValueError("graphons must share uniformity and palette")
    if limit < 1:
        raise ValueError("class limit must be >= 1")
    g = lcm(us.partition.resolution, ws.partition.resolution)
    orbit = orbit_partition(us.r - 1, g)
    channels = sorted(set(us.arrays) | set(ws.arrays))
    diffs = [difference_kernel(us, ws, alpha) for alpha in channels]

    if limit >= orbit.t or mode == "heuristic":
        candidates: Any = [orbit]
    elif mode == "exact":
        check_budget("residual partition sweep",
                     _count_growth_strings(orbit.t, limit), budget)
        candidates = (
            GridPartition(us.r - 1, g, np.asarray(rgs)[orbit.labels], max(rgs) + 1)
            for rgs in _growth_strings(orbit.t, limit)
        )
    else:
        raise ValueError(f"unknown mode {mode!r}")

    best = -1.0
    best_part: GridPartition | None = None
    best_wits: list[CutWitness] = []
    for qp in candidates:
        total, wits = 0.0, []
        for i, kern in enumerate(diffs):
            value, wit = kernel_cutnorm_p(kern, qp, mode=mode, budget=budget,
                                          restarts=restarts, seed=derive_seed(seed, i))
            total += value
            wits.append(wit)
        if total > best:
            best, best_part, best_wits = total, qp, wits
    return best, best_part, best_wits


def _refined_by_witnesses(p: GridPartition, qpart: GridPartition,
                          witnesses: Sequence[CutWitness], g: int) -> GridPartition:
    """Split classes of p by the q-partition and every witness set."""
    orbit_labels = orbit_partition(p.r_minus_1, g).labels
    qp = qpart.refined(g // qpart.resolution)
    code = p.refined(g // p.resolution).labels.astype(np.int64)
    code = code * qp.t + qp.labels
    for wit in witnesses:
        for s in wit.sets:
            member = np.isin(orbit_labels, np.asarray(s, dtype=np.int64))
            code = code * 2 + member
    _, labels = np.unique(code.ravel(), return_inverse=True)
    labels = labels.reshape(code.shape)
    return GridPartition(p.r_minus_1, g, labels, int(labels.max()) + 1)


def weak_regularize(
    w: StepGraphon | VertexGraphon,
    eps: float,
    t: int | None = None,
    max_rounds: int | None = None,
    mode: str = "auto",
    budget: int | None = None,
    restarts: int = 16,
    seed: int = 0,
) -> tuple[StepGraphon, GridPartition, list[dict[str, Any]]]:
    """Approximate w by a step function with small cut-P residual.

    The residual is the worst cut-P distance over symmetric partitions
    with at most cap*t classes, where cap = min(max_rounds, ceil(1/eps^2))
    bounds the refinement rounds; meeting that is stricter than the
    per-round target of rounds*t classes. ``t`` defaults to the class
    count of w's own partition. If w already fits in t classes the loop
    exits at round zero with w itself.

    mode "exact" certifies every residual by enumeration, "heuristic"
    estimates them by sign ascent, and "auto" tries exact first and falls
    back when the enumeration budget runs out.

    Returns (v, p, trace) where trace rows carry round, residual, and
    class count. Raises RegularityError when the budgeted rounds end with
    the best residual still above eps.
    """
    w = _as_step(w)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if t is None:
        t = w.partition.t
    if t < 1:
        raise ValueError("class multiplier t must be >= 1")
    cap = ceil(1.0 / eps**2)
    if max_rounds is not None:
        cap = min(cap, max_rounds)
    limit = max(1, cap * t)
    g = w.partition.resolution
    bound_log2 = class_count_bound_log2(w.r, w.k, eps, t)

    if w.partition.t <= t:
        p = w.partition
    else:
        dim = 2 ** (w.r - 1) - 1
        p = GridPartition(w.r - 1, g, np.zeros((g,) * dim, dtype=np.int64), 1)

    def residual_of(v: StepGraphon):
        if mode in ("exact", "heuristic"):
            return sup_partition_distance(w, v, limit, mode=mode, budget=budget,
                                          restarts=restarts, seed=seed)
        if mode != "auto":
            raise ValueError(f"unknown mode {mode!r}")
        try:
            return sup_partition_distance(w, v, limit, mode="exact", budget=budget)
        except BudgetError:
            return sup_partition_distance(w, v, limit, mode="heuristic",
                                          restarts=restarts, seed=seed)

    v = step_average(w, p)
    residual, qpart, wits = residual_of(v)
    best_v, best_p, best_res = v, p, residual
    trace = [{"round": 0, "residual": best_res, "classes": p.t}]

    rounds = 0
    while best_res > eps and rounds < cap:
        rounds += 1
        p = _refined_by_witnesses(p, qpart, wits, g)
        if log2(p.t) > bound_log2:
            raise RuntimeError("class count escaped the regularity bound")
        v = step_average(w, p)
        residual, qpart, wits = residual_of(v)
        if residual < best_res:
            best_v, best_p, best_res = v, p, residual
        trace.append({"round": rounds, "residual": best_res, "classes": p.t})

    if best_res > eps:
        raise RegularityError(eps, best_res, best_v, best_p, trace)
    return best_v, best_p, trace


# ----------------------------------------------------------------------
# bounds and bookkeeping


def _bound_exponent_log2(r: int, k: int, eps: float) -> float:
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min(r, k) < 1:
        raise ValueError("r, k must be >= 1")
    return ceil(4.0 / eps**2) * log2(r * k + 1)


def class_count_bound(r: int, k: int, eps: float, t: int) -> int:
    """Worst-case class count (2t)^((rk+1)^ceil(4/eps^2)) as an exact integer.

    Refuses to materialize numbers beyond a million bits; use
    class_count_bound_log2 for comparisons at that scale.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    e_log2 = _bound_exponent_log2(r, k, eps)
    # size the result before touching big integers: log2(bound) = 2^e_log2 * log2(2t)
    if e_log2 > 60 or 2.0**e_log2 * log2(2 * t) > 1_000_000:
        raise ValueError("bound too large to materialize; compare via class_count_bound_log2")
    return (2 * t) ** ((r * k + 1) ** ceil(4.0 / eps**2))


def class_count_bound_log2(r: int, k: int, eps: float, t: int) -> float:
    """log2 of the class count bound, finite or +inf, never materialized."""
    if t < 1:
        raise ValueError("t must be >= 1")
    e_log2 = _bound_exponent_log2(r, k, eps)
    if e_log2 >= 1023:
        return float("inf")
    # the exponent fits a float exactly enough for comparisons
    return float((r * k + 1) ** ceil(4.0 / eps**2)) * log2(2 * t)


def growth_sequence(r: int, k: int, t: int, rounds: int,
                    max_bits: int = 100_000) -> list[int]:
    """Reference class-count recurrence s(i+1) = s(i)*(s(i)*t+1)^(rk).

    Purely informational; stops early once entries exceed max_bits bits.
    """
    seq = [1]
    for _ in range(rounds):
        nxt = seq[-1] * (seq[-1] * t + 1) ** (r * k)
        if nxt.bit_length() > max_bits:
            break
        seq.append(nxt)
    return seq


def symmetrized_step(r: int, k: int, partition: GridPartition,
                     arrays: dict[int, np.ndarray]) -> StepGraphon:
    """Average raw channel arrays over coordinate permutations.

    Symmetrizing commutes with the partition-of-unity constraint, and by
    the triangle inequality it never increases cut-type distances to any
    symmetric target.
    """
    out = {}
    perms = list(itertools.permutations(range(r)))
    for c, arr in arrays.items():
        arr = np.asarray(arr, dtype=float)
        out[c] = sum(arr.transpose(perm) for perm in perms) / len(perms)
    return StepGraphon(r, k, partition, out)


def trace_csv(trace: Sequence[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["round", "residual", "classes"])
    writer.writeheader()
    for row in trace:
        writer.writerow({key: row[key] for key in ("round", "residual", "classes")})
    return buf.getvalue()
