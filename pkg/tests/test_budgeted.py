import numpy as np
import pytest

import oracles
from conftest import random_connected_graph, random_instance
from opinion_opt.budgeted import (
    ExhaustiveTooLarge,
    GreedyState,
    apply_targets,
    baseline_score,
    baseline_scores,
    baseline_top_opinion,
    best_assignment,
    exhaustive_opt,
    greedy_select,
    marginal_gain,
)
from opinion_opt.equilibrium import OpinionProfile, system_matrix, total_opinion
from opinion_opt.graph import complete_graph, star_graph
from opinion_opt.unbudgeted import BoxBounds, maximize_unbudgeted, minimize_unbudgeted

B = BoxBounds(0.001, 1.0)


def fresh_total(g, p, node, value):
    alpha = p.alpha.copy()
    alpha[node] = value
    return oracles.total(g.n, g.edges(), p.s, alpha)


class TestGreedyState:
    def test_invariants(self, rng):
        g, p = random_instance(rng, 10, 40)
        st = GreedyState.initial(g, p)
        st.commit(3, 1.0)
        alpha = st.alpha
        M = system_matrix(g, alpha)
        assert np.max(np.abs(st.base_inverse @ M - np.eye(g.n))) <= 1e-8
        assert st.current_objective == pytest.approx(np.sum(st.base_inverse @ (alpha * p.s)), abs=1e-9)

    def test_rank1_commit_matches_refresh(self, rng):
        g, p = random_instance(rng, 10, 30)
        st = GreedyState.initial(g, p)
        st.inv.set_alpha(2, 0.001)
        st.inv.set_alpha(5, 1.0)
        B1 = st.inv.B.copy()
        st.inv.refresh()
        np.testing.assert_allclose(B1, st.inv.B, atol=1e-8)


class TestMarginalGain:
    def test_noop(self, rng):
        g, p = random_instance(rng, 5, 20)
        st = GreedyState.initial(g, p)
        assert marginal_gain(st, g, p, 1, p.alpha[1]) == pytest.approx(0.0, abs=1e-10)

    def test_k3_fixture(self, k3, k3_profile):
        st = GreedyState.initial(k3, k3_profile)
        st.commit(0, 1.0)
        st.commit(1, 0.001)
        gain = max(marginal_gain(st, k3, k3_profile, 2, a) for a in (0.001, 1.0))
        assert gain == pytest.approx(0.191, abs=5e-3)

    def test_against_fresh_solve(self, rng):
        for _ in range(5):
            g, p = random_instance(rng, 10, 60, shape="er")
            st = GreedyState.initial(g, p)
            f0 = oracles.total(g.n, g.edges(), p.s, p.alpha)
            for node in range(g.n):
                for value in (0.001, 0.37, 1.0):
                    expect = fresh_total(g, p, node, value) - f0
                    assert marginal_gain(st, g, p, node, value) == pytest.approx(expect, abs=1e-8)

    def test_committed_candidate_rejected(self, k3, k3_profile):
        st = GreedyState.initial(k3, k3_profile)
        st.commit(0, 1.0)
        with pytest.raises(ValueError):
            marginal_gain(st, k3, k3_profile, 0, 0.5)

    def test_singular_denominator_falls_back(self, rng, monkeypatch):
        import opinion_opt.rank1 as r1

        g, p = random_instance(rng, 5, 10)
        st = GreedyState.initial(g, p)
        monkeypatch.setattr(r1, "SINGULAR_EPS", np.inf)
        expect = fresh_total(g, p, 0, 1.0) - st.current_objective
        assert marginal_gain(st, g, p, 0, 1.0) == pytest.approx(expect, abs=1e-10)


class TestGreedy:
    def test_star_center(self):
        g = star_graph(5)
        p = OpinionProfile([1, 0, 0, 0, 0], [0.001, 0.01, 0.01, 0.01, 0.01])
        plan = greedy_select(g, p, B, 1, "max")
        assert plan.target_set == [0]
        assert plan.alpha_assigned[0] == 1.0
        assert plan.objective == pytest.approx(4.96, abs=1e-10)

    def test_k3_single_pick(self, k3, k3_profile):
        # best single target is the opinion-1 node made fully stubborn
        plan = greedy_select(k3, k3_profile, B, 1, "max")
        expect = oracles.best_over_subsets(3, k3.edges(), [1, 0, 0], k3_profile.alpha, 0.001, 1.0, 1)
        assert plan.target_set == [0]
        assert plan.objective == pytest.approx(expect, abs=1e-12)
        assert plan.objective == pytest.approx(2.636, abs=5e-4)

    def test_k_below_one(self, k3, k3_profile):
        with pytest.raises(ValueError):
            greedy_select(k3, k3_profile, B, 0)

    def test_budget_larger_than_n(self, k3, k3_profile):
        assert len(greedy_select(k3, k3_profile, B, 10).target_set) == 3

    def test_full_budget_bounded_by_unbudgeted(self, rng):
        for _ in range(10):
            g, p = random_instance(rng, 3, 8)
            hi = oracles.brute_max(g.n, g.edges(), p.s, B.lower, B.upper)
            lo = oracles.brute_min(g.n, g.edges(), p.s, B.lower, B.upper)
            assert greedy_select(g, p, B, g.n, "max").objective <= hi + 1e-9
            assert greedy_select(g, p, B, g.n, "min").objective >= lo - 1e-9

    def test_monotone_and_no_loss(self, rng):
        for _ in range(8):
            g, p = random_instance(rng, 5, 25)
            f0 = total_opinion(g, p)
            up = greedy_select(g, p, B, g.n, "max").history
            down = greedy_select(g, p, B, g.n, "min").history
            assert np.all(np.diff(up) >= -1e-9) and up[0] >= f0 - 1e-9
            assert np.all(np.diff(down) <= 1e-9) and down[0] <= f0 + 1e-9

    def test_history_matches_smaller_budgets(self, rng):
        g, p = random_instance(rng, 8, 15)
        full = greedy_select(g, p, B, 5)
        for k in range(1, 6):
            assert greedy_select(g, p, B, k).objective == pytest.approx(full.history[k - 1], abs=1e-9)

    def test_assignments_are_endpoints_or_original(self, rng):
        g, p = random_instance(rng, 8, 20)
        plan = greedy_select(g, p, B, 6, "min")
        for node in plan.target_set:
            assert plan.alpha_assigned[node] in (B.lower, B.upper, p.alpha[node])
        others = np.setdiff1d(np.arange(g.n), plan.target_set)
        np.testing.assert_array_equal(plan.alpha_assigned[others], p.alpha[others])

    def test_accepted_steps_match_fresh(self, rng):
        g, p = random_instance(rng, 20, 40, shape="er")
        plan = greedy_select(g, p, B, 8)
        alpha = p.alpha.copy()
        for r, (node, _) in enumerate(zip(plan.target_set, plan.history)):
            alpha[node] = plan.alpha_assigned[node]
            assert plan.history[r] == pytest.approx(oracles.total(g.n, g.edges(), p.s, alpha), abs=1e-8)

    def test_deterministic(self, rng):
        g, p = random_instance(rng, 10, 20)
        a, b = greedy_select(g, p, B, 5), greedy_select(g, p, B, 5)
        assert a.target_set == b.target_set
        np.testing.assert_array_equal(a.alpha_assigned, b.alpha_assigned)

    def test_tie_goes_to_smallest_id(self):
        g = complete_graph(4)
        p = OpinionProfile([0.5] * 4, [0.3] * 4)
        # constant opinions: every gain is zero
        assert greedy_select(g, p, B, 2).target_set == [0, 1]


class TestBaselines:
    @pytest.mark.parametrize("s,k,expect", [
        ([0.9, 0.5, 0.1], 1, [0]),
        ([0.5, 0.5, 0.1], 1, [0]),
        ([0.1, 0.9, 0.5], 2, [1, 2]),
    ])
    def test_top_opinion(self, s, k, expect):
        assert baseline_top_opinion(OpinionProfile(s, [1, 1, 1]), k) == expect

    def test_score_k3(self, k3):
        p = OpinionProfile([0.9, 0.5, 0.1], [1, 1, 1])
        np.testing.assert_allclose(baseline_scores(k3, p), [0.5, 1 / 6, 1 / 42], rtol=1e-12)
        assert baseline_score(k3, p, 1) == [0]

    def test_score_zero_neighbour_sum(self, k3):
        assert baseline_score(k3, OpinionProfile([1, 0, 0], [1, 1, 1]), 1) == [0]

    def test_infinite_scores_ordered_by_opinion(self):
        g = star_graph(4)
        # leaves 1..3 see only the centre (s=0); leaf 3 has the highest s
        p = OpinionProfile([0.0, 0.2, 0.1, 0.7], [1] * 4)
        assert baseline_score(g, p, 1) == [3]
        assert baseline_score(g, p, 2) == [1, 3]

    def test_exhaust(self, rng):
        g, p = random_instance(rng, 4, 9)
        assert baseline_score(g, p, g.n) == list(range(g.n))
        assert baseline_top_opinion(p, g.n) == list(range(g.n))

    def test_bad_k(self, k3, k3_profile):
        with pytest.raises(ValueError):
            baseline_top_opinion(k3_profile, 0)
        with pytest.raises(ValueError):
            baseline_score(k3, k3_profile, 4)

    def test_apply_sets_alpha_one(self, k3, k3_profile):
        plan = apply_targets(k3, k3_profile, [0])
        np.testing.assert_array_equal(plan.alpha_assigned, [1.0, 0.1, 0.1])
        assert plan.objective == pytest.approx(oracles.total(3, k3.edges(), [1, 0, 0], [1, 0.1, 0.1]))


class TestExhaustive:
    def test_k3_full(self, k3, k3_profile):
        plan = exhaustive_opt(k3, k3_profile, B, 3, "max")
        np.testing.assert_array_equal(plan.alpha_assigned, [1.0, 0.001, 0.001])

    def test_empty_set_objective(self, k3, k3_profile):
        assert best_assignment(k3, k3_profile, B, [])[0] == pytest.approx(1.0, abs=1e-12)

    def test_matches_subset_oracle(self, rng):
        for _ in range(6):
            g, p = random_instance(rng, 3, 6)
            k = int(rng.integers(1, g.n + 1))
            for direction, sign in (("max", 1.0), ("min", -1.0)):
                expect = oracles.best_over_subsets(g.n, g.edges(), p.s, p.alpha, B.lower, B.upper, k, sign)
                assert exhaustive_opt(g, p, B, k, direction).objective == pytest.approx(expect, abs=1e-10)

    def test_upper_bounds_heuristics(self, rng):
        for _ in range(5):
            g, p = random_instance(rng, 6, 6)
            best = exhaustive_opt(g, p, B, 2, "max").objective
            assert greedy_select(g, p, B, 2, "max").objective <= best + 1e-9
            assert apply_targets(g, p, baseline_top_opinion(p, 2)).objective <= best + 1e-9
            assert apply_targets(g, p, baseline_score(g, p, 2)).objective <= best + 1e-9

    def test_full_budget_equals_unbudgeted(self, rng):
        g, p = random_instance(rng, 5, 7)
        assert exhaustive_opt(g, p, B, g.n, "max").objective == pytest.approx(
            maximize_unbudgeted(g, p.s, B).objective, rel=1e-9)
        assert exhaustive_opt(g, p, B, g.n, "min").objective == pytest.approx(
            minimize_unbudgeted(g, p.s, B).objective, rel=1e-9)

    def test_refusal(self, rng):
        g = random_connected_graph(40, rng)
        p = OpinionProfile(rng.random(40), np.full(40, 0.5))
        with pytest.raises(ExhaustiveTooLarge) as info:
            exhaustive_opt(g, p, B, 10)
        assert info.value.count == 847660528 * 1024


class TestNonSubmodularity:
    """Marginal values of the K3 example with each target set assigned optimally."""

    @pytest.fixture
    def f(self, k3, k3_profile):
        return lambda *nodes: best_assignment(k3, k3_profile, B, nodes, "max")[0]

    def test_submodularity_fails(self, f):
        lhs = f(0, 1, 2) - f(0, 1)
        rhs = f(0, 2) - f(0)
        assert lhs == pytest.approx(0.191, abs=5e-3)
        assert rhs == pytest.approx(0.168, abs=5e-3)
        assert lhs > rhs

    def test_supermodularity_fails(self, f):
        # the single-target value f({3}) itself is 1.493
        assert f(2) == pytest.approx(1.493, abs=5e-3)
        assert f(2) - f() > f(0, 2) - f(0)
