import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expalign.formulations import (
    FormulationParams,
    UnsupportedExpectationForm,
    build_query_lp,
    compute_supersets,
    extract_policy,
    is_human_sufficient,
    is_misspecified,
    solve_optimal,
)
from expalign.formulations import test_forbidden_candidate as forbidden_test
from expalign.formulations import test_goal_candidate as goal_test
from expalign.mdp import (
    Cmp,
    ExpectationElement,
    NoisyRationalPlanning,
    Policy,
    RewardFunction,
    occupancy_of_policy,
)
from expalign.simplex import Status, solve
from helpers import brute_force_supersets, random_domain, random_reward, seeded_rng


def switch_parts(fx):
    sw = fx["switch"]
    return sw.human_domain, sw.robot_domain, sw.reward


class TestSolveOptimal:
    def test_single(self, fx):
        single = fx["single"]
        result = solve_optimal(single.robot_domain, single.reward)
        assert result.value == pytest.approx(10.0, abs=1e-7)

    def test_switch_human_presses_b1(self, fx):
        human, _, reward = switch_parts(fx)
        result = solve_optimal(human, reward)
        assert result.value == pytest.approx(9.0, abs=1e-6)
        assert result.policy.choices()[0] == 0

    def test_switch_robot_presses_b2(self, fx):
        _, robot, reward = switch_parts(fx)
        result = solve_optimal(robot, reward)
        assert result.value == pytest.approx(9.0, abs=1e-6)
        assert result.policy.choices()[0] == 1

    @given(st.integers(0, 80))
    @settings(max_examples=15)
    def test_matches_enumeration_oracle(self, seed):
        rng = seeded_rng(seed)
        dom = random_domain(rng, rng.randint(2, 5), 2)
        reward = random_reward(rng, dom)
        from expalign.mdp import brute_force_optimal_set, evaluate_policy

        best = max(
            evaluate_policy(dom, reward, pi) for pi in brute_force_optimal_set(dom, reward)
        )
        assert solve_optimal(dom, reward).value == pytest.approx(best, abs=1e-6)

    def test_occupancy_respects_invariants(self, fx):
        human, _, reward = switch_parts(fx)
        occ = solve_optimal(human, reward).occupancy
        assert occ.total_mass() == pytest.approx(10.0, abs=1e-7)


class TestCandidateTests:
    def test_switch_unsafe_is_forbidden_candidate(self, fx):
        human, _, reward = switch_parts(fx)
        vstar = solve_optimal(human, reward).value
        member, achieved = forbidden_test(human, reward, vstar, 2)
        assert member and achieved == pytest.approx(0.0, abs=1e-9)

    def test_switch_safe_is_visited(self, fx):
        human, _, reward = switch_parts(fx)
        vstar = solve_optimal(human, reward).value
        member, achieved = forbidden_test(human, reward, vstar, 1)
        assert not member
        assert achieved == pytest.approx(9.0, abs=1e-6)

    def test_start_state_always_visited(self, fx):
        human, _, reward = switch_parts(fx)
        vstar = solve_optimal(human, reward).value
        member, achieved = forbidden_test(human, reward, vstar, 0)
        assert not member and achieved >= 1.0 - 1e-9

    def test_goal_candidates_on_switch(self, fx):
        human, _, reward = switch_parts(fx)
        vstar = solve_optimal(human, reward).value
        assert goal_test(human, reward, vstar, 0)
        assert goal_test(human, reward, vstar, 1)
        assert not goal_test(human, reward, vstar, 2)


class TestSupersets:
    def test_switch(self, fx):
        human, _, reward = switch_parts(fx)
        result = compute_supersets(human, reward)
        assert result.forbidden_candidates == {2}
        assert result.goal_candidates == {0, 1}
        assert result.per_state_evidence[2].best_occupancy <= 1e-7
        assert not result.per_state_evidence[0].avoidable

    def test_corridor(self, fx):
        cor = fx["corridor"]
        result = compute_supersets(cor.human_domain, cor.reward)
        names = cor.human_domain.states
        forbidden = {names[s] for s in result.forbidden_candidates}
        goal = {names[s] for s in result.goal_candidates}
        assert forbidden == {"W"}
        assert goal == {"s0", "A", "g"}

    @given(st.integers(0, 200))
    @settings(max_examples=20)
    def test_matches_enumeration_oracle(self, seed):
        rng = seeded_rng(seed)
        dom = random_domain(rng, rng.randint(2, 5), 2)
        reward = random_reward(rng, dom)
        result = compute_supersets(dom, reward)
        forbidden, goal = brute_force_supersets(dom, reward)
        assert result.forbidden_candidates == forbidden
        assert result.goal_candidates == goal

    @given(st.integers(0, 100))
    @settings(max_examples=10)
    def test_start_state_law(self, seed):
        rng = seeded_rng(seed)
        dom = random_domain(rng, rng.randint(1, 5), 2)
        result = compute_supersets(dom, random_reward(rng, dom))
        assert dom.start in result.goal_candidates

    def test_alpha_independence(self, fx):
        human, _, reward = switch_parts(fx)
        memberships = []
        for alpha in (0.5, 1.0, 10.0):
            params = FormulationParams(alpha=alpha)
            result = compute_supersets(human, reward, params=params)
            memberships.append((result.forbidden_candidates, result.goal_candidates))
        assert memberships[0] == memberships[1] == memberships[2]

    def test_noisy_contains_optimal_sets(self, fx):
        human, _, reward = switch_parts(fx)
        vstar = solve_optimal(human, reward).value
        base = compute_supersets(human, reward)
        noisy = compute_supersets(human, reward, NoisyRationalPlanning(vstar - 1e-6))
        assert base.forbidden_candidates <= noisy.forbidden_candidates
        assert base.goal_candidates <= noisy.goal_candidates

    def test_noisy_lower_threshold_widens_forbidden(self, fx):
        # with a threshold below the value of pressing the wrong button, even
        # the safe terminal becomes avoidable by a near-optimal policy
        human, _, reward = switch_parts(fx)
        noisy = compute_supersets(human, reward, NoisyRationalPlanning(-0.5))
        assert noisy.forbidden_candidates >= {1, 2}

    def test_noisy_threshold_above_optimum_rejected(self, fx):
        human, _, reward = switch_parts(fx)
        with pytest.raises(ValueError, match="threshold"):
            compute_supersets(human, reward, NoisyRationalPlanning(100.0))


class TestQueryLp:
    def test_empty_sets_reduce_to_flow_feasibility(self, fx):
        robot = fx["switch"].robot_domain
        layout = build_query_lp(robot, [], [], [], [])
        out = solve(layout.problem)
        assert out.status is Status.OPTIMAL
        assert out.objective_value == pytest.approx(0.0, abs=1e-9)

    def test_switch_clean_solution(self, fx):
        robot = fx["switch"].robot_domain
        layout = build_query_lp(robot, [2], [0, 1], [], [])
        out = solve(layout.problem)
        assert out.status is Status.OPTIMAL
        penalties = [out.point[i] for i in layout.penalty_index.values()]
        assert max(penalties) <= 1e-7
        policy = extract_policy(out.point[: layout.num_occupancy_vars].reshape(3, 2))
        assert policy.choices()[0] == 1

    def test_corridor_conflict_pattern(self, fx):
        cor = fx["corridor"]
        dom = cor.robot_domain
        idx = {name: dom.state_index(name) for name in ("s0", "W", "A", "g")}
        layout = build_query_lp(dom, [idx["W"]], [idx["s0"], idx["A"], idx["g"]], [], [])
        out = solve(layout.problem)
        d = {
            name: out.point[layout.penalty_index[(i, "forbidden" if name == "W" else "goal")]]
            for name, i in idx.items()
        }
        assert d["W"] > 1e-7
        assert d["A"] > 1e-7
        assert d["s0"] <= 1e-7
        assert d["g"] <= 1e-7

    def test_hard_constraints_bind(self, fx):
        cor = fx["corridor"]
        dom = cor.robot_domain
        w, g = dom.state_index("W"), dom.state_index("g")
        layout = build_query_lp(dom, [], [], [w], [g])
        assert solve(layout.problem).status is Status.INFEASIBLE

    def test_rejects_candidate_confirmed_overlap(self, fx):
        robot = fx["switch"].robot_domain
        with pytest.raises(ValueError, match="candidate and confirmed"):
            build_query_lp(robot, [1], [], [1], [])

    def test_cross_kind_overlap_is_legal(self, fx):
        # noisy-rational supersets may list a state on both sides
        robot = fx["switch"].robot_domain
        layout = build_query_lp(robot, [2], [0, 2], [], [])
        assert (2, "forbidden") in layout.penalty_index
        assert (2, "goal") in layout.penalty_index
        assert solve(layout.problem).status is Status.OPTIMAL


class TestExtractPolicy:
    def test_recovers_deterministic_policy(self, fx):
        human = fx["switch"].human_domain
        pi = Policy.deterministic([0, 1, 0], 2)
        occ = occupancy_of_policy(human, pi)
        recovered = extract_policy(occ)
        assert recovered.choices()[0] == 0  # visited state keeps its action

    def test_even_split_yields_half_half(self):
        table = np.array([[0.5, 0.5], [0.0, 0.0]])
        policy = extract_policy(table)
        assert policy.rows[0] == pytest.approx([0.5, 0.5])
        assert policy.rows[1] == pytest.approx([1.0, 0.0])


class TestPredicates:
    def test_switch_reward_is_sufficient(self, fx):
        sw = fx["switch"]
        assert is_human_sufficient(sw.human_domain, sw.reward, sw.ground_truth)

    def test_unsafe_reward_is_not_sufficient(self, fx):
        sw = fx["switch"]
        bad = RewardFunction.state_based(sw.human_domain, {"sUnsafe": 1.0})
        assert not is_human_sufficient(sw.human_domain, bad, sw.ground_truth)

    def test_empty_expectations_sufficient(self, fx):
        sw = fx["switch"]
        assert is_human_sufficient(sw.human_domain, sw.reward, ())

    def test_unsafe_reward_misspecified_on_robot(self, fx):
        sw = fx["switch"]
        bad = RewardFunction.state_based(sw.robot_domain, {"sUnsafe": 1.0})
        assert is_misspecified(sw.robot_domain, bad, sw.ground_truth)

    def test_safe_reward_not_misspecified_on_robot(self, fx):
        # honest direct reading: the robot presses the other button and still
        # satisfies the expectations
        sw = fx["switch"]
        assert not is_misspecified(sw.robot_domain, sw.reward, sw.ground_truth)

    def test_identical_domains_with_sufficient_reward(self, fx):
        sw = fx["switch"]
        assert not is_misspecified(sw.human_domain, sw.reward, sw.ground_truth)

    def test_empty_expectations_not_misspecified(self, fx):
        sw = fx["switch"]
        assert not is_misspecified(sw.robot_domain, sw.reward, ())

    def test_unsupported_forms_raise(self, fx):
        sw = fx["switch"]
        general = (ExpectationElement(frozenset({0, 1}), Cmp.GE, 0.5),)
        with pytest.raises(UnsupportedExpectationForm):
            is_human_sufficient(sw.human_domain, sw.reward, general)
        with pytest.raises(UnsupportedExpectationForm):
            is_misspecified(sw.robot_domain, sw.reward, general)


class TestParams:
    def test_rejects_nonpositive_knobs(self):
        with pytest.raises(ValueError):
            FormulationParams(alpha=0.0)
        with pytest.raises(ValueError):
            FormulationParams(eps_visit=-1.0)
        with pytest.raises(ValueError):
            FormulationParams(value_slack=-1e-9)

    def test_value_band_is_relative(self):
        params = FormulationParams(value_slack=1e-6)
        assert params.value_band(100.0) == pytest.approx(1e-4)
        assert params.value_band(0.1) == pytest.approx(1e-6)
