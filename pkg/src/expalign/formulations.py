"""Occupancy-LP formulations: optimal solve, avoid/visit superset tests, and
the penalty LP that drives the query loop.

All tests share the flow-conservation constraints of the occupancy polytope;
they differ only in the objective and in how the optimal value is pinned.
The avoid/visit candidate supersets come from two LPs per state:

* the visit test maximizes the state's occupancy on top of the reward
  objective while the value is pinned to the optimum; a state no optimal
  policy can visit stays at (numerical) zero and is a forbidden candidate;
* the avoidance test asks for an optimal-value occupancy with the state's
  mass fixed to zero; infeasibility means every optimal policy visits the
  state, making it a goal candidate.

Under the noisy-rational planning variant the same two LPs run with the
value pinned only from below (threshold + EPS_STRICT instead of the optimal
band) and the membership readings swap to "some near-optimal policy" forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .mdp import (
    Cmp,
    Domain,
    ExpectationSet,
    NoisyRationalPlanning,
    OccupancyVector,
    OptimalPlanning,
    PlanningFunction,
    Policy,
    RewardFunction,
    occupancy_of_policy,
)
from .simplex import LpProblem, LpOutcome, Rel, Status, solve

# LPs cannot express strict inequalities; "value strictly above threshold" is
# encoded as >= threshold + EPS_STRICT wherever the noisy variant needs it.
EPS_STRICT = 1e-6


class UnsupportedExpectationForm(ValueError):
    """Raised for expectation elements outside the singleton avoid/visit forms."""


@dataclass(frozen=True)
class FormulationParams:
    """Shared numeric knobs for every formulation.

    alpha boosts the visit-test objective; any positive value gives the same
    memberships because the value constraint pins the reward term.  value_slack
    widens the optimal-value equality into a two-sided relative band; the
    default keeps it exact, because any visible slack lets the visit test trade
    value for occupancy at rate slack/cost and misreport forbidden candidates
    whose detour cost is small.  eps_visit is the occupancy level at which a
    state counts as visited by the query LP; d_threshold is where a penalty
    variable counts as positive.
    """

    alpha: float = 1.0
    eps_visit: float = 1e-4
    value_slack: float = 0.0
    d_threshold: float = 1e-7

    def __post_init__(self):
        if self.alpha <= 0 or self.eps_visit <= 0 or self.d_threshold <= 0:
            raise ValueError("alpha, eps_visit and d_threshold must be positive")
        if self.value_slack < 0:
            raise ValueError("value_slack must be nonnegative")

    def value_band(self, vstar: float) -> float:
        return self.value_slack * max(1.0, abs(vstar))


DEFAULT_PARAMS = FormulationParams()


def flow_rows(domain: Domain) -> list[tuple[np.ndarray, Rel, float]]:
    """Flow-conservation equalities over the (state, action) occupancy variables."""
    s, a = domain.num_states, domain.num_actions
    n = s * a
    outflow = np.zeros((s, n))
    for i in range(s):
        outflow[i, i * a : (i + 1) * a] = 1.0
    matrix = outflow - domain.gamma * domain.kernel.reshape(n, s).T
    rhs = np.zeros(s)
    rhs[domain.start] = 1.0
    return [(matrix[i], Rel.EQ, float(rhs[i])) for i in range(s)]


def _state_mass_row(domain: Domain, state: int) -> np.ndarray:
    row = np.zeros(domain.num_states * domain.num_actions)
    row[state * domain.num_actions : (state + 1) * domain.num_actions] = 1.0
    return row


def _solve_expect_optimal(problem: LpProblem, what: str) -> LpOutcome:
    outcome = solve(problem)
    if outcome.status is not Status.OPTIMAL:
        raise RuntimeError(
            f"{what}: solver reported {outcome.status.value}, which is impossible "
            "for a non-empty bounded occupancy polytope"
        )
    return outcome


@dataclass(frozen=True)
class OptimalSolveResult:
    value: float
    occupancy: OccupancyVector
    policy: Policy


def solve_optimal(
    domain: Domain, reward: RewardFunction, params: FormulationParams = DEFAULT_PARAMS
) -> OptimalSolveResult:
    """Optimal start-state value and an optimal policy via the occupancy LP.

    The LP supplies the optimal plan; the returned occupancy is then
    re-derived from the extracted policy by a direct linear solve, which keeps
    the flow/mass identities tight to machine precision instead of solver
    feasibility tolerance.
    """
    problem = LpProblem.build(reward.flat(), flow_rows(domain))
    outcome = _solve_expect_optimal(problem, "optimal-value LP")
    table = outcome.point.reshape(domain.num_states, domain.num_actions)
    policy = extract_policy(table, params.d_threshold)
    occupancy = occupancy_of_policy(domain, policy)
    value = float(np.sum(occupancy.table * reward.values))
    if abs(value - outcome.objective_value) > 1e-6 * max(1.0, abs(value)):
        raise RuntimeError(
            f"LP objective {outcome.objective_value} and re-derived value {value} disagree"
        )
    return OptimalSolveResult(value=value, occupancy=occupancy, policy=policy)


def _value_rows(
    reward: RewardFunction, vstar: float, params: FormulationParams
) -> list[tuple[np.ndarray, Rel, float]]:
    band = params.value_band(vstar)
    r = reward.flat()
    return [(r, Rel.GE, vstar - band), (r, Rel.LE, vstar + band)]


def test_forbidden_candidate(
    domain: Domain,
    reward: RewardFunction,
    vstar: float,
    state: int,
    params: FormulationParams = DEFAULT_PARAMS,
) -> tuple[bool, float]:
    """Visit test: can any optimal policy place mass on `state`?

    Maximizes reward plus alpha times the state's occupancy subject to the
    flow rows and the pinned optimal value.  Returns (in_superset, achieved):
    the state is a forbidden candidate iff the achieved occupancy stays at or
    below d_threshold.
    """
    objective = reward.flat() + params.alpha * _state_mass_row(domain, state)
    rows = flow_rows(domain) + _value_rows(reward, vstar, params)
    outcome = _solve_expect_optimal(LpProblem.build(objective, rows), "visit test")
    achieved = float(_state_mass_row(domain, state) @ outcome.point)
    return achieved <= params.d_threshold, achieved


def test_goal_candidate(
    domain: Domain,
    reward: RewardFunction,
    vstar: float,
    state: int,
    params: FormulationParams = DEFAULT_PARAMS,
) -> bool:
    """Avoidance test: does some optimal policy avoid `state` entirely?

    Asks for an occupancy at the pinned optimal value with the state's mass
    constrained to zero.  Infeasibility means every optimal policy visits the
    state, so it is a goal candidate.
    """
    rows = flow_rows(domain) + _value_rows(reward, vstar, params)
    rows.append((_state_mass_row(domain, state), Rel.EQ, 0.0))
    outcome = solve(LpProblem.build(reward.flat(), rows))
    if outcome.status is Status.UNBOUNDED:
        raise RuntimeError("avoidance test: unbounded LP over a bounded polytope")
    return outcome.status is Status.INFEASIBLE


@dataclass(frozen=True)
class StateEvidence:
    """Raw per-state test results backing a superset membership decision."""

    best_occupancy: float
    avoidable: bool


@dataclass(frozen=True)
class SupersetResult:
    forbidden_candidates: frozenset[int]
    goal_candidates: frozenset[int]
    per_state_evidence: Mapping[int, StateEvidence] = field(default_factory=dict)


def compute_supersets(
    domain: Domain,
    reward: RewardFunction,
    planning: PlanningFunction = OptimalPlanning(),
    params: FormulationParams = DEFAULT_PARAMS,
) -> SupersetResult:
    """Avoid/visit candidate supersets inferred from the specified reward.

    OptimalPlanning: forbidden candidates are states no optimal policy visits,
    goal candidates are states every optimal policy visits; the two sets are
    disjoint and the start state is always a goal candidate.

    NoisyRationalPlanning(t): the value constraint relaxes to >= t +
    EPS_STRICT and the readings swap to existential form: a state is a
    forbidden candidate if some near-optimal policy avoids it, and a goal
    candidate if some near-optimal policy visits it.  The sets may overlap.

    Per-state tests are independent pure LP solves, so callers may fan them
    out across workers if they wish.
    """
    vstar = solve_optimal(domain, reward, params).value
    forbidden: set[int] = set()
    goal: set[int] = set()
    evidence: dict[int, StateEvidence] = {}

    if isinstance(planning, NoisyRationalPlanning):
        threshold = planning.value_threshold
        if threshold > vstar + 1e-9 * max(1.0, abs(vstar)):
            raise ValueError(
                f"noisy-rational threshold {threshold} exceeds the optimal value {vstar}"
            )
        value_rows = [(reward.flat(), Rel.GE, threshold + EPS_STRICT)]
    elif isinstance(planning, OptimalPlanning):
        value_rows = _value_rows(reward, vstar, params)
    else:
        raise TypeError(f"unknown planning function {planning!r}")

    base_rows = flow_rows(domain)
    r = reward.flat()
    for state in range(domain.num_states):
        mass = _state_mass_row(domain, state)
        visit = _solve_expect_optimal(
            LpProblem.build(r + params.alpha * mass, base_rows + value_rows),
            "visit test",
        )
        best = float(mass @ visit.point)
        avoid_rows = base_rows + value_rows + [(mass, Rel.EQ, 0.0)]
        avoid = solve(LpProblem.build(r, avoid_rows))
        avoidable = avoid.status is not Status.INFEASIBLE
        evidence[state] = StateEvidence(best_occupancy=best, avoidable=avoidable)
        if isinstance(planning, NoisyRationalPlanning):
            if avoidable:
                forbidden.add(state)
            if best > params.d_threshold:
                goal.add(state)
        else:
            if best <= params.d_threshold:
                forbidden.add(state)
            if not avoidable:
                goal.add(state)

    result = SupersetResult(frozenset(forbidden), frozenset(goal), evidence)
    if isinstance(planning, OptimalPlanning):
        if result.forbidden_candidates & result.goal_candidates:
            raise RuntimeError("forbidden and goal candidates overlap under optimal planning")
        if domain.start not in result.goal_candidates:
            raise RuntimeError("the start state must always be a goal candidate")
    return result


FORBIDDEN_KIND = "forbidden"
GOAL_KIND = "goal"


@dataclass(frozen=True)
class QueryLp:
    """The penalty LP plus the bookkeeping needed to read it back.

    penalty_index maps (candidate state, constraint kind) to the column of
    its penalty variable; occupancy variables occupy the first
    num_states * num_actions columns.  Keys carry the kind because the two
    candidate sets may overlap under noisy-rational planning.
    """

    problem: LpProblem
    penalty_index: Mapping[tuple[int, str], int]
    num_occupancy_vars: int


def build_query_lp(
    robot: Domain,
    forbidden_candidates: Iterable[int],
    goal_candidates: Iterable[int],
    confirmed_forbidden: Iterable[int],
    confirmed_goal: Iterable[int],
    params: FormulationParams = DEFAULT_PARAMS,
) -> QueryLp:
    """Feasibility LP over the robot model with per-candidate penalties.

    Candidate constraints are soft: a forbidden candidate's penalty equals its
    occupancy mass, a goal candidate's penalty covers its shortfall below
    eps_visit.  Confirmed states get the hard forms (mass exactly 0 / at
    least eps_visit).  The objective maximizes minus the penalty total, so a
    policy satisfying everything drives all penalties to zero.

    A state may not be both candidate and confirmed for the same kind.
    Cross-kind overlap is legal: it arises from noisy-rational supersets, and
    contradictory confirmations simply make the LP infeasible.
    """
    fc = sorted(set(forbidden_candidates))
    gc = sorted(set(goal_candidates))
    hf = sorted(set(confirmed_forbidden))
    hg = sorted(set(confirmed_goal))
    if set(fc) & set(hf) or set(gc) & set(hg):
        raise ValueError("a state cannot be candidate and confirmed for the same kind")

    n_occ = robot.num_states * robot.num_actions
    penalty_keys = [(s, FORBIDDEN_KIND) for s in fc] + [(s, GOAL_KIND) for s in gc]
    n = n_occ + len(penalty_keys)
    penalty_index = {key: n_occ + i for i, key in enumerate(penalty_keys)}

    def widen(row: np.ndarray) -> np.ndarray:
        out = np.zeros(n)
        out[:n_occ] = row
        return out

    rows: list[tuple[np.ndarray, Rel, float]] = [
        (widen(r), rel, rhs) for r, rel, rhs in flow_rows(robot)
    ]
    for s in fc:
        row = widen(_state_mass_row(robot, s))
        row[penalty_index[(s, FORBIDDEN_KIND)]] = -1.0
        rows.append((row, Rel.EQ, 0.0))
    for s in gc:
        row = widen(_state_mass_row(robot, s))
        row[penalty_index[(s, GOAL_KIND)]] = 1.0
        rows.append((row, Rel.GE, params.eps_visit))
    for s in hf:
        rows.append((widen(_state_mass_row(robot, s)), Rel.EQ, 0.0))
    for s in hg:
        rows.append((widen(_state_mass_row(robot, s)), Rel.GE, params.eps_visit))

    objective = np.zeros(n)
    objective[n_occ:] = -1.0
    return QueryLp(LpProblem.build(objective, rows), penalty_index, n_occ)


def extract_policy(
    occupancy: OccupancyVector | np.ndarray, visit_threshold: float = 1e-7
) -> Policy:
    """Conditional-action policy induced by an occupancy table.

    States with mass above visit_threshold choose proportionally to their
    occupancy split; unvisited states default to the lowest-index action
    (they carry no flow from the start state, so the choice is irrelevant).
    """
    table = occupancy.table if isinstance(occupancy, OccupancyVector) else np.asarray(occupancy)
    mass = table.sum(axis=1)
    rows = np.zeros_like(table, dtype=float)
    visited = mass > visit_threshold
    rows[visited] = table[visited] / mass[visited, None]
    rows[~visited, 0] = 1.0
    # Round-off in the LP point can leave rows summing to 1 +/- 1e-12.
    rows /= rows.sum(axis=1, keepdims=True)
    return Policy(rows)


def _split_expectations(
    expectations: ExpectationSet,
) -> tuple[list[int], list[int]]:
    avoid, visit = [], []
    for e in expectations:
        if len(e.subset) == 1 and e.op is Cmp.EQ and e.k == 0.0:
            avoid.append(next(iter(e.subset)))
        elif len(e.subset) == 1 and e.op is Cmp.GT and e.k == 0.0:
            visit.append(next(iter(e.subset)))
        else:
            raise UnsupportedExpectationForm(
                f"only singleton avoid (=0) and visit (>0) elements are supported, got {e}"
            )
    return avoid, visit


def is_human_sufficient(
    domain: Domain,
    reward: RewardFunction,
    expectations: ExpectationSet,
    params: FormulationParams = DEFAULT_PARAMS,
) -> bool:
    """Does every optimal policy of (domain, reward) satisfy every element?

    Discharged by the LP tests: each avoid state must be a forbidden
    candidate and each visit state a goal candidate of the model.
    """
    avoid, visit = _split_expectations(expectations)
    if not avoid and not visit:
        return True
    vstar = solve_optimal(domain, reward, params).value
    return all(
        test_forbidden_candidate(domain, reward, vstar, s, params)[0] for s in avoid
    ) and all(test_goal_candidate(domain, reward, vstar, s, params) for s in visit)


def is_misspecified(
    robot: Domain,
    reward: RewardFunction,
    expectations: ExpectationSet,
    params: FormulationParams = DEFAULT_PARAMS,
) -> bool:
    """Does some policy optimal in the robot model violate some element?"""
    avoid, visit = _split_expectations(expectations)
    if not avoid and not visit:
        return False
    vstar = solve_optimal(robot, reward, params).value
    if any(not test_forbidden_candidate(robot, reward, vstar, s, params)[0] for s in avoid):
        return True
    return any(not test_goal_candidate(robot, reward, vstar, s, params) for s in visit)
