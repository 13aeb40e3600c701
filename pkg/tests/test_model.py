import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coexpose import (
    Assignment,
    ConstraintSet,
    ItemCatalog,
    LeaningSpan,
    PropagationModel,
    SocialGraph,
    ValidationError,
    assignment_stats,
    check_feasible,
    diversity_level,
    edge_probability,
    span_gain,
)
from coexpose.errors import ConfigError

leanings = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


class TestDiversityLevel:
    def test_empty_item_set_scores_zero(self):
        assert diversity_level(0.5, []) == 0.0

    def test_symmetric_maximum(self):
        assert diversity_level(0.0, [-1.0, 1.0]) == 2.0

    def test_simple_range(self):
        assert diversity_level(0.5, [0.2]) == pytest.approx(0.3)
        assert diversity_level(-0.6, [-0.2, 0.4, -0.8]) == pytest.approx(1.2)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            diversity_level(1.5, [0.0])
        with pytest.raises(ValidationError):
            diversity_level(0.0, [0.0, -1.2])

    @given(lv=leanings, items=st.lists(leanings, max_size=6), extra=leanings)
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_item_set(self, lv, items, extra):
        assert diversity_level(lv, items + [extra]) >= diversity_level(lv, items) - 1e-15

    @given(lv=leanings, small=st.lists(leanings, max_size=4),
           more=st.lists(leanings, max_size=4), x=leanings)
    @settings(max_examples=200, deadline=None)
    def test_submodular_gain(self, lv, small, more, x):
        big = small + more
        gain_small = diversity_level(lv, small + [x]) - diversity_level(lv, small)
        gain_big = diversity_level(lv, big + [x]) - diversity_level(lv, big)
        assert gain_small >= gain_big - 1e-12


class TestSpanGain:
    def test_extend_above(self):
        gain, span = span_gain(LeaningSpan(0.0, 0.0), 1.0)
        assert gain == 1.0 and (span.lo, span.hi) == (0.0, 1.0)

    def test_interior_point_gains_nothing(self):
        gain, span = span_gain(LeaningSpan(-0.5, 0.5), 0.2)
        assert gain == 0.0 and (span.lo, span.hi) == (-0.5, 0.5)

    def test_extend_below(self):
        gain, span = span_gain(LeaningSpan(0.1, 0.3), -0.2)
        assert gain == pytest.approx(0.3) and (span.lo, span.hi) == (-0.2, 0.3)

    @given(lv=leanings, seq=st.lists(leanings, min_size=1, max_size=8))
    @settings(max_examples=300, deadline=None)
    def test_sequential_gains_sum_to_diversity_level(self, lv, seq):
        span = LeaningSpan.at(lv)
        total = 0.0
        for x in seq:
            g, span = span_gain(span, x)
            total += g
        assert total == pytest.approx(diversity_level(lv, seq), abs=1e-12)

    @given(lv=leanings, seq=st.lists(leanings, min_size=1, max_size=6),
           salt=st.integers(0, 2 ** 16))
    @settings(max_examples=200, deadline=None)
    def test_final_span_is_order_independent(self, lv, seq, salt):
        perm = list(seq)
        np.random.default_rng(salt).shuffle(perm)
        spans = []
        for order in (seq, perm):
            span = LeaningSpan.at(lv)
            for x in order:
                _, span = span_gain(span, x)
            spans.append(span)
        assert spans[0] == spans[1]


class TestEdgeProbability:
    def test_linear_zero_distance(self):
        m = PropagationModel.linear(0.25)
        assert edge_probability(m, 0.3, 0.3, 0.3) == pytest.approx(0.25)

    def test_linear_maximum_distance(self):
        m = PropagationModel.linear(0.25)
        assert edge_probability(m, -1.0, 0.2, 1.0) == pytest.approx(0.0)

    def test_exponential_extreme_matches_reported_minimum(self):
        # beta=0.25, gamma=2 at maximal leaning distance: 0.25 * e^-2
        m = PropagationModel.exponential(0.25, 2.0)
        p = edge_probability(m, -1.0, 0.0, 1.0)
        assert p == pytest.approx(0.25 * math.exp(-2.0), rel=1e-12)
        assert round(p, 3) == 0.034

    def test_weighted_cascade(self):
        m = PropagationModel.weighted_cascade()
        assert edge_probability(m, 0.0, 0.0, 0.0, in_degree_v=4) == 0.25
        with pytest.raises(ValidationError):
            edge_probability(m, 0.0, 0.0, 0.0, in_degree_v=0)

    def test_explicit_lookup_and_missing_entry(self):
        m = PropagationModel.explicit({(0, 1, 0): 0.7})
        assert edge_probability(m, 0, 0, 0, edge=(0, 1), item=0) == 0.7
        with pytest.raises(ConfigError):
            edge_probability(m, 0, 0, 0, edge=(0, 2), item=0)

    @given(lu=leanings, lv=leanings, li=leanings,
           beta=st.floats(0.0, 1.0), gamma=st.floats(0.0, 8.0))
    @settings(max_examples=300, deadline=None)
    def test_formula_outputs_bounded_by_beta(self, lu, lv, li, beta, gamma):
        for m in (PropagationModel.linear(beta),
                  PropagationModel.exponential(beta, gamma)):
            p = edge_probability(m, lu, lv, li)
            assert 0.0 <= p <= min(beta, 1.0) + 1e-15


class TestFeasibility:
    def test_attention_bound_violation(self):
        res = check_feasible(Assignment([(0, 1), (0, 2)]), ConstraintSet(k=5, ku_default=1))
        assert not res and "node 0" in res.violations[0]

    def test_within_bounds(self):
        assert check_feasible(Assignment([(0, 1), (0, 2)]), ConstraintSet(k=2, ku_default=2))

    def test_total_size_violation(self):
        res = check_feasible(Assignment([(0, 1), (1, 2)]), ConstraintSet(k=1, ku_default=5))
        assert not res and "exceeds k" in res.violations[0]

    def test_per_node_overrides(self):
        c = ConstraintSet(k=10, ku_default=1, ku_overrides={3: 2})
        assert check_feasible(Assignment([(3, 0), (3, 1)]), c)
        assert not check_feasible(Assignment([(2, 0), (2, 1)]), c)

    def test_downward_closure(self, rng):
        c = ConstraintSet(k=4, ku_default=2)
        for _ in range(100):
            pairs = [(int(rng.integers(0, 4)), int(rng.integers(0, 3))) for _ in range(6)]
            pairs = list(dict.fromkeys(pairs))
            a = Assignment(pairs)
            if check_feasible(a, c):
                for size in range(len(pairs)):
                    sub = [pairs[j] for j in rng.choice(len(pairs), size, replace=False)]
                    assert check_feasible(Assignment(sub), c)


class TestAssignmentAndStats:
    def test_duplicate_pair_rejected(self):
        with pytest.raises(ValidationError):
            Assignment([(0, 1), (0, 1)])

    def test_single_pair_stats(self):
        g = SocialGraph(2, [(0, 1)], [0.0, 0.3])
        items = ItemCatalog([1.0])
        s = assignment_stats(Assignment([(0, 0)]), g, items)
        assert s.immediate_exposure == pytest.approx(1.0)
        assert s.normalized_degree == pytest.approx(1.0)
        assert s.sq_node_leaning == 0.0
        assert s.sq_item_leaning == 1.0
        assert s.distinct_item_fraction == 1.0

    def test_two_pair_stats(self):
        g = SocialGraph(2, [], [0.5, -0.5])
        items = ItemCatalog([0.5, 0.5])
        s = assignment_stats(Assignment([(0, 0), (1, 1)]), g, items)
        assert s.immediate_exposure == pytest.approx(0.5)
        assert s.sq_node_leaning == pytest.approx(0.25)
        assert s.sq_item_leaning == pytest.approx(0.25)
        assert s.distinct_item_fraction == 1.0

    def test_empty_assignment_rejected(self):
        g = SocialGraph(2, [], [0.0, 0.0])
        with pytest.raises(ValidationError):
            assignment_stats(Assignment([]), g, ItemCatalog([0.0]))

    def test_stats_match_one_pass_recomputation(self, rng):
        from conftest import random_feasible_assignment, random_graph
        for _ in range(20):
            g = random_graph(rng, n_lo=3, n_hi=6)
            items = ItemCatalog(rng.uniform(-1, 1, size=4))
            a = random_feasible_assignment(rng, g.n, 4, 5, 2)
            if len(a) == 0:
                continue
            s = assignment_stats(a, g, items)
            sn = sum(abs(items.item_leaning[i] - g.node_leaning[u]) for u, i in a) / len(a)
            assert s.immediate_exposure == pytest.approx(sn, abs=1e-12)
            assert s.sq_item_leaning == pytest.approx(
                sum(items.item_leaning[i] ** 2 for _, i in a) / len(a), abs=1e-12)
            assert s.distinct_item_fraction == len({i for _, i in a}) / len(a)


class TestGraphValidation:
    def test_leaning_clip_tolerance(self):
        g = SocialGraph(1, [], [1.0 + 1e-13])
        assert g.node_leaning[0] == 1.0
        with pytest.raises(ValidationError):
            SocialGraph(1, [], [1.1])

    def test_bad_edges_rejected(self):
        with pytest.raises(ValidationError):
            SocialGraph(2, [(0, 2)], [0.0, 0.0])
        with pytest.raises(ValidationError):
            SocialGraph(2, [(0, 0)], [0.0, 0.0])
        with pytest.raises(ValidationError):
            SocialGraph(2, [(0, 1), (0, 1)], [0.0, 0.0])

    def test_adjacency_directions_agree(self, rng):
        from conftest import random_graph
        for _ in range(20):
            g = random_graph(rng, n_lo=2, n_hi=7)
            forward = {(int(g.edge_src[e]), int(g.edge_dst[e])) for e in range(g.m)}
            via_out = {
                (u, int(g.out_dst[j]))
                for u in range(g.n)
                for j in range(g.out_ptr[u], g.out_ptr[u + 1])
            }
            via_in = {
                (int(g.in_src[j]), v)
                for v in range(g.n)
                for j in range(g.in_ptr[v], g.in_ptr[v + 1])
            }
            assert forward == via_out == via_in
