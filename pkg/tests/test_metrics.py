from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgsumm.align import Alignment
from kgsumm.metrics import (
    PRF,
    MetricsReport,
    aggregate,
    duplication_rate,
    entity_counts,
    entity_scores,
    evaluate,
    exact_prf,
    relation_counts,
    relation_scores,
)

from helpers import edge, graph, node, random_graph_pair
from oracles import brute_scores

seeds = st.integers(0, 2**32 - 1)


def fixture_abc():
    target = graph("d", [node("A", "a"), node("B", "b"), node("C", "c")])
    pred = graph("d", [node("a1", "a"), node("a2", "a"), node("b", "b"), node("x", "x")])
    align = Alignment({"a1": ("A", 1.0), "a2": ("A", 1.0), "b": ("B", 1.0)})
    return pred, target, align


def exact(prf: PRF):
    return tuple(Fraction(v) for v in (prf.precision, prf.recall, prf.f1))


def oracle_inputs(pred, target, align):
    return (
        {n.node_id: n.entity_type for n in pred.nodes},
        {n.node_id: n.entity_type for n in target.nodes},
        [(e.src, e.dst, e.relation_type) for e in pred.edges],
        [(e.src, e.dst, e.relation_type) for e in target.edges],
        {p: t for p, (t, _) in align.pairs.items()},
    )


class TestEntityScores:
    def test_collapsed_example(self):
        pred, target, align = fixture_abc()
        assert entity_counts(align, pred, target) == (2, 3, 3)
        prf = entity_scores(align, pred, target)
        assert (prf.precision, prf.recall, prf.f1) == pytest.approx((2 / 3, 2 / 3, 2 / 3))

    def test_example_matches_oracle(self):
        pred, target, align = fixture_abc()
        ref = brute_scores(*oracle_inputs(pred, target, align))
        assert ref["untyped_entity"] == (Fraction(2, 3),) * 3

    def test_identical(self):
        g = graph("d", [node("A", "a", etype="Task"), node("B", "b", etype="Metric")])
        align = Alignment({"A": ("A", 1.0), "B": ("B", 1.0)})
        for typed in (False, True):
            assert exact(entity_scores(align, g, g, typed)) == (1, 1, 1)

    def test_empty_prediction(self):
        _, target, _ = fixture_abc()
        assert exact(entity_scores(Alignment(), graph("d", []), target)) == (0, 0, 0)

    def test_typed_policies(self):
        target = graph("d", [node("A", "a", etype="Task")])
        pred = graph("d", [node("p", "a", etype="Task"), node("q", "a", etype="Method")])
        align = Alignment({"p": ("A", 1.0), "q": ("A", 1.0)})
        assert entity_counts(align, pred, target, True, "any")[0] == 1
        assert entity_counts(align, pred, target, True, "all")[0] == 0
        with pytest.raises(ValueError):
            entity_counts(align, pred, target, True, "some")


class TestRelationScores:
    target = graph("d", [node("A", "a"), node("B", "b")], [edge("A", "B")])

    def test_direction_and_type(self):
        pred = graph("d", [node("a", "a"), node("b", "b")], [edge("a", "b")])
        align = Alignment({"a": ("A", 1.0), "b": ("B", 1.0)})
        assert relation_counts(align, pred, self.target, typed=True) == (1, 1, 1)
        flipped = graph("d", pred.nodes, [edge("b", "a")])
        assert relation_counts(align, flipped, self.target, typed=False) == (1, 1, 1)
        assert relation_counts(align, flipped, self.target, typed=True) == (0, 1, 1)

    def test_wrong_type_is_untyped_only(self):
        pred = graph("d", [node("a", "a"), node("b", "b")], [edge("a", "b", "Compare")])
        align = Alignment({"a": ("A", 1.0), "b": ("B", 1.0)})
        assert relation_counts(align, pred, self.target, typed=False)[0] == 1
        assert relation_counts(align, pred, self.target, typed=True)[0] == 0

    def test_collapsed_edges_counted_once(self):
        pred = graph("d", [node("a1", "a"), node("a2", "a"), node("b", "b")],
                     [edge("a1", "b"), edge("a2", "b")])
        align = Alignment({"a1": ("A", 1.0), "a2": ("A", 1.0), "b": ("B", 1.0)})
        for typed in (False, True):
            assert relation_counts(align, pred, self.target, typed) == (1, 1, 1)

    def test_identical(self):
        align = Alignment({"A": ("A", 1.0), "B": ("B", 1.0)})
        for typed in (False, True):
            assert exact(relation_scores(align, self.target, self.target, typed)) == (1, 1, 1)

    def test_unaligned_endpoint_never_matches(self):
        pred = graph("d", [node("a", "a"), node("z", "z")], [edge("a", "z")])
        align = Alignment({"a": ("A", 1.0)})
        assert relation_counts(align, pred, self.target) == (0, 1, 1)


class TestDuplication:
    def test_mean_group_size(self):
        pred, target, align = fixture_abc()
        assert duplication_rate(align, target) == 1.5

    def test_one_to_one(self):
        assert duplication_rate(Alignment({"p": ("A", 1.0), "q": ("B", 0.9)})) == 1.0

    def test_undefined(self):
        assert duplication_rate(Alignment()) is None


class TestAggregate:
    def report(self, f1, dup):
        prf = PRF(f1, f1, f1)
        return MetricsReport(prf, prf, prf, prf, dup)

    def test_single_report_is_identity(self):
        pred, target, align = fixture_abc()
        r = evaluate(align, pred, target)
        agg = aggregate([r])
        assert agg.to_json() == r.to_json()

    def test_macro_mean(self):
        agg = aggregate([self.report(0.2, 1.0), self.report(0.4, None)])
        assert agg.untyped_entity.f1 == pytest.approx(0.3)
        assert agg.duplication == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])

    def test_micro_pools_counts(self):
        g1 = fixture_abc()
        target = graph("e", [node("A", "a")])
        pred = graph("e", [node("p", "a")])
        g2 = (pred, target, Alignment({"p": ("A", 1.0)}))
        reports = [evaluate(a, p, t) for p, t, a in (g1, g2)]
        agg = aggregate(reports, "micro")
        # pooled: matched 3, predicted 4, target 4
        assert agg.untyped_entity.precision == 0.75
        assert agg.duplication == pytest.approx(4 / 3)
        with pytest.raises(ValueError):
            aggregate(reports, "weighted")


class TestOracle:
    @given(seeds, st.sampled_from(["any", "all"]))
    def test_equals_brute_force(self, seed, policy):
        pred, target, align = random_graph_pair(np.random.default_rng(seed))
        ref = brute_scores(*oracle_inputs(pred, target, align), type_policy=policy)
        got = {
            "untyped_entity": entity_counts(align, pred, target),
            "typed_entity": entity_counts(align, pred, target, True, policy),
            "untyped_relation": relation_counts(align, pred, target),
            "typed_relation": relation_counts(align, pred, target, True),
        }
        for key, counts in got.items():
            assert exact_prf(*counts) == ref[key], key
        dup = duplication_rate(align, target)
        assert (dup is None and ref["duplication"] is None) or dup == float(ref["duplication"])

    @given(seeds)
    def test_bounds_and_typed_le_untyped(self, seed):
        pred, target, align = random_graph_pair(np.random.default_rng(seed))
        r = evaluate(align, pred, target)
        for prf in (r.untyped_entity, r.typed_entity, r.untyped_relation, r.typed_relation):
            assert 0.0 <= min(prf.precision, prf.recall, prf.f1) <= max(prf.precision, prf.recall, prf.f1) <= 1.0
        assert r.typed_entity.precision <= r.untyped_entity.precision
        assert r.typed_entity.recall <= r.untyped_entity.recall
        assert r.duplication is None or r.duplication >= 1.0

    @given(seeds)
    def test_adding_unaligned_node_monotone(self, seed):
        pred, target, align = random_graph_pair(np.random.default_rng(seed))
        extra = graph(pred.doc_id, list(pred.nodes) + [node("p:extra", "zz")], pred.edges)
        before = entity_scores(align, pred, target)
        after = entity_scores(align, extra, target)
        assert after.precision <= before.precision
        assert after.recall == before.recall
