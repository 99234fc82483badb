"""Tester harnesses: probes, best-coloring parameters, property testing."""

from math import comb

import numpy as np
import pytest
from scipy.stats import binomtest

from hypertest.budget import BudgetError
from hypertest.hypercore import ColoredHypergraph, make_hypergraph
from hypertest.seeds import generator
from hypertest.testers import (
    PARAMETERS,
    PROPERTIES,
    ParameterFn,
    PropertyFn,
    far_from_property,
    nd_parameter,
    probe_sample_complexity,
    property_acceptance_rate,
    property_tester,
    register_parameter,
    wilson_interval,
    witness_sample_density,
)


def complete_graph(n, r=2):
    return make_hypergraph(n, r, 2, [1] * comb(n, r))


def empty_graph(n, r=2):
    return make_hypergraph(n, r, 2, [2] * comb(n, r))


def random_graph(n, seed, r=2, k=2):
    rng = generator(seed)
    colors = [int(c) for c in rng.integers(1, k + 1, size=comb(n, r))]
    return make_hypergraph(n, r, k, colors)


class TestWilson:
    def test_matches_scipy(self):
        for hits, trials in [(0, 40), (7, 40), (200, 400), (399, 400)]:
            low, high = wilson_interval(hits, trials)
            ref = binomtest(hits, trials).proportion_ci(0.95, method="wilson")
            assert low == pytest.approx(ref.low, abs=1e-12)
            assert high == pytest.approx(ref.high, abs=1e-12)

    def test_degenerate_inputs(self):
        low, high = wilson_interval(0, 10)
        assert low == 0.0 and high < 0.35
        with pytest.raises(ValueError):
            wilson_interval(5, 0)
        with pytest.raises(ValueError):
            wilson_interval(11, 10)


class TestRegistry:
    def test_builtins_present(self):
        assert {"edge-density", "signed-split", "triple-density"} <= set(PARAMETERS)
        assert {"complete", "complete-witness"} <= set(PROPERTIES)

    def test_edge_density_values(self):
        f = PARAMETERS["edge-density"]
        assert f(complete_graph(5)) == 1.0
        assert f(empty_graph(5)) == 0.0

    def test_rejects_encoding_dependent_callback(self):
        # the color of one fixed colex slot is not a graph parameter
        bogus = ParameterFn("first-slot", 2, 2, lambda h: float(h.colors[0]))
        with pytest.raises(ValueError, match="relabeling"):
            register_parameter(bogus)
        assert "first-slot" not in PARAMETERS


class TestProbe:
    def test_constant_parameter_never_fails(self):
        f = PARAMETERS["edge-density"]
        report = probe_sample_complexity(f, complete_graph(10), 0.1,
                                         [3, 5, 8], trials=50, seed=1)
        assert all(row["failures"] == 0 for row in report["rows"])
        assert report["recommended_q"] == 3

    def test_full_sample_row_never_fails(self):
        f = PARAMETERS["edge-density"]
        g = random_graph(9, seed=5)
        report = probe_sample_complexity(f, g, 0.05, [9], trials=30, seed=2)
        assert report["rows"][0]["failures"] == 0

    def test_rates_trend_down_within_interval_slack(self):
        f = PARAMETERS["edge-density"]
        g = random_graph(24, seed=7)
        report = probe_sample_complexity(f, g, 0.12, [4, 8, 16], trials=150, seed=3)
        rows = report["rows"]
        for earlier, later in zip(rows, rows[1:]):
            slack = 2 * (earlier["ci_high"] - earlier["ci_low"])
            assert later["rate"] <= earlier["rate"] + slack

    def test_deterministic_given_seed(self):
        f = PARAMETERS["edge-density"]
        g = random_graph(12, seed=11)
        a = probe_sample_complexity(f, g, 0.2, [4, 6], trials=40, seed=9)
        b = probe_sample_complexity(f, g, 0.2, [4, 6], trials=40, seed=9)
        assert a == b

    def test_palette_mismatch_rejected(self):
        f = PARAMETERS["edge-density"]
        with pytest.raises(ValueError, match="palette"):
            probe_sample_complexity(f, random_graph(8, seed=1, r=3), 0.1, [4])


class TestNdParameter:
    def test_triangle_split_maximum(self):
        # 8 colorings of K3 by hand: all-(1,1) puts every edge in the
        # positive class and nothing in the negative one
        out = nd_parameter(PARAMETERS["signed-split"], complete_graph(3))
        assert out.value == pytest.approx(1.0)
        assert out.certified
        assert all(c == 1 for c in out.witness.colors)

    def test_arity_one_is_plain_evaluation(self):
        g = random_graph(5, seed=3)
        f = ParameterFn("identity-probe", 2, 2, PARAMETERS["edge-density"].fn)
        out = nd_parameter(f, g)
        assert out.value == pytest.approx(PARAMETERS["edge-density"](g))

    def test_local_never_beats_exhaustive(self):
        f = PARAMETERS["signed-split"]
        for seed in range(20):
            g = random_graph(4, seed=seed)
            exact = nd_parameter(f, g, mode="exhaustive")
            local = nd_parameter(f, g, mode="local", seed=seed, restarts=4)
            assert local.value <= exact.value + 1e-12
            assert not local.certified

    def test_auto_respects_budget(self):
        f = PARAMETERS["signed-split"]
        g = random_graph(6, seed=2)
        out = nd_parameter(f, g, mode="auto", budget=100)
        assert not out.certified
        with pytest.raises(BudgetError):
            nd_parameter(f, g, mode="exhaustive", budget=100)


class TestPropertyTester:
    def test_witness_density_counts_clean_subsets(self):
        # path 0-1-2-3 as a composite-colored graph: 3 of the 6 vertex
        # pairs induce an all-(1,1) subgraph
        colors = [1 if e in {(0, 1), (1, 2), (2, 3)} else 3
                  for e in [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]]
        h = make_hypergraph(4, 2, 4, colors)
        got = witness_sample_density(PROPERTIES["complete-witness"], h, 2)
        assert got == pytest.approx(3 / 6)

    def test_complete_sample_accepted(self):
        accept, trace = property_tester(PROPERTIES["complete-witness"],
                                        complete_graph(6), 0.3)
        assert accept
        assert trace["best_density"] == pytest.approx(1.0)
        assert trace["witness_sample_size"] == 6
        assert trace["sample_threshold"] == pytest.approx(3 / 5)
        assert trace["outer_thresholds"] == [pytest.approx(2 / 5), pytest.approx(3 / 5)]

    def test_empty_sample_rejected(self):
        accept, trace = property_tester(PROPERTIES["complete-witness"],
                                        empty_graph(6), 0.3)
        assert not accept
        assert trace["best_density"] == pytest.approx(0.0)

    def test_acceptance_rates_split_cleanly(self):
        witness = PROPERTIES["complete-witness"]
        good = property_acceptance_rate(witness, complete_graph(8), 4, 0.3,
                                        trials=40, seed=5)
        bad = property_acceptance_rate(witness, empty_graph(8), 4, 0.3,
                                       trials=40, seed=5)
        assert good["rate"] >= 3 / 5
        assert bad["rate"] <= 2 / 5
        assert good["ci_low"] <= good["rate"] <= good["ci_high"]

    def test_budget_refusal_propagates(self):
        with pytest.raises(BudgetError):
            property_tester(PROPERTIES["complete-witness"], complete_graph(7),
                            0.3, mode="exhaustive", budget=50)


class TestFarness:
    def test_normalizations_disagree_for_graphs(self):
        g = empty_graph(5)
        by_subsets = far_from_property(PROPERTIES["complete"], g, 0.5)
        by_square = far_from_property(PROPERTIES["complete"], g, 0.5,
                                      normalization="square")
        assert by_subsets["distance"] == 10
        assert by_subsets["far"] and not by_square["far"]

    def test_brute_force_matches_declared_distance(self):
        g = random_graph(4, seed=13)
        declared = far_from_property(PROPERTIES["complete"], g, 0.1)
        generic = PropertyFn("complete-generic", 2, 2,
                             lambda h: all(c == 1 for c in h.colors))
        brute = far_from_property(generic, g, 0.1)
        assert brute["distance"] == declared["distance"]

    def test_empty_property_raises(self):
        impossible = PropertyFn("never", 2, 2, lambda h: False)
        with pytest.raises(ValueError, match="no members"):
            far_from_property(impossible, random_graph(4, seed=1), 0.1)

    def test_unknown_normalization_rejected(self):
        with pytest.raises(ValueError, match="normalization"):
            far_from_property(PROPERTIES["complete"], empty_graph(4), 0.1,
                              normalization="cubes")
