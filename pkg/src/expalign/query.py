"""The interactive refinement loop over avoid/visit candidate supersets.

A session starts from the supersets inferred from the user's model and
reward, then repeatedly solves the robot-side penalty LP.  Candidates whose
penalty comes back positive are surfaced as queries; answers either confirm a
state (its constraint turns hard) or drop it from the candidate pool.  The
loop ends when a penalty-free policy appears, the hard constraints become
infeasible, or the candidates run out.

Sessions are single-owner mutable state: interactive frontends (the terminal
and the HTTP service) park a session on its pending queries and resume it by
calling step() with the collected answers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Protocol

from .formulations import (
    DEFAULT_PARAMS,
    FormulationParams,
    build_query_lp,
    compute_supersets,
    extract_policy,
)
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
from .simplex import Status, solve


class QueryKind(Enum):
    FORBIDDEN = "forbidden"
    GOAL = "goal"


class OracleAnswer(Enum):
    MUST_AVOID = "must_avoid"
    MUST_VISIT = "must_visit"
    NEITHER = "neither"


class SessionStatus(Enum):
    AWAITING_ANSWERS = "awaiting_answers"
    SOLVED = "solved"
    NO_SOLUTION = "no_solution"
    EXHAUSTED = "exhausted"


class AnswerMismatch(ValueError):
    """Answers do not cover exactly the pending queries, or carry an invalid verdict."""


class IllegalState(RuntimeError):
    """Operation not permitted in the session's current status."""


@dataclass(frozen=True)
class QueryRecord:
    state: int
    kind: QueryKind
    answer: OracleAnswer
    iteration: int


@dataclass
class QuerySession:
    robot: Domain
    params: FormulationParams
    forbidden_candidates: set[int]
    goal_candidates: set[int]
    confirmed_forbidden: set[int] = field(default_factory=set)
    confirmed_goal: set[int] = field(default_factory=set)
    pending: list[tuple[int, QueryKind]] = field(default_factory=list)
    query_log: list[QueryRecord] = field(default_factory=list)
    status: SessionStatus = SessionStatus.AWAITING_ANSWERS
    iteration: int = 0
    policy: Policy | None = None
    occupancy: OccupancyVector | None = None
    instance_name: str | None = None
    # Noisy-rational supersets may overlap across kinds; optimal ones may not.
    allow_kind_overlap: bool = False

    def queried_states(self) -> set[int]:
        return {rec.state for rec in self.query_log}

    def _check_invariants(self) -> None:
        if self.forbidden_candidates & self.confirmed_forbidden:
            raise RuntimeError("a state is both candidate and confirmed forbidden")
        if self.goal_candidates & self.confirmed_goal:
            raise RuntimeError("a state is both candidate and confirmed goal")
        if not self.allow_kind_overlap:
            sets = [
                self.forbidden_candidates,
                self.goal_candidates,
                self.confirmed_forbidden,
                self.confirmed_goal,
            ]
            for i in range(len(sets)):
                for j in range(i + 1, len(sets)):
                    if sets[i] & sets[j]:
                        raise RuntimeError("session state sets lost pairwise disjointness")
        queries = [(rec.state, rec.kind) for rec in self.query_log]
        if len(queries) != len(set(queries)):
            raise RuntimeError("a state was queried twice for the same kind")
        if not self.allow_kind_overlap and len({s for s, _ in queries}) != len(queries):
            raise RuntimeError("a state was queried twice")
        bound = self.robot.num_states * (2 if self.allow_kind_overlap else 1)
        if self.iteration > bound:
            raise RuntimeError("query rounds exceeded the state count bound")


def start_session(
    human: Domain,
    reward: RewardFunction,
    robot: Domain,
    planning: PlanningFunction = OptimalPlanning(),
    params: FormulationParams = DEFAULT_PARAMS,
    instance_name: str | None = None,
) -> QuerySession:
    """Infer supersets from the user's model, then run the first LP round."""
    if human.states != robot.states or human.actions != robot.actions:
        raise ValueError("user and robot models must share state and action spaces")
    supersets = compute_supersets(human, reward, planning, params)
    session = QuerySession(
        robot=robot,
        params=params,
        forbidden_candidates=set(supersets.forbidden_candidates),
        goal_candidates=set(supersets.goal_candidates),
        instance_name=instance_name,
        allow_kind_overlap=isinstance(planning, NoisyRationalPlanning),
    )
    _advance(session)
    return session


def step(
    session: QuerySession,
    answers: Mapping[tuple[int, QueryKind], OracleAnswer],
) -> QuerySession:
    """Apply one round of answers, then re-solve the penalty LP.

    Confirmed states move to the hard-constraint sets; "neither" answers drop
    the state entirely.  Answers must cover exactly the pending queries.
    """
    if session.status is not SessionStatus.AWAITING_ANSWERS:
        raise IllegalState(f"session is {session.status.value}, not awaiting answers")
    expected = set(session.pending)
    got = set(answers.keys())
    if expected != got:
        def show(keys):
            return sorted((state, kind.value) for state, kind in keys)

        raise AnswerMismatch(
            "answers must cover exactly the pending queries; "
            f"missing={show(expected - got)} extra={show(got - expected)}"
        )
    for (state, kind), answer in answers.items():
        if answer is OracleAnswer.MUST_AVOID and kind is not QueryKind.FORBIDDEN:
            raise AnswerMismatch(f"must_avoid is only a valid answer to a forbidden query ({state})")
        if answer is OracleAnswer.MUST_VISIT and kind is not QueryKind.GOAL:
            raise AnswerMismatch(f"must_visit is only a valid answer to a goal query ({state})")

    session.iteration += 1
    for (state, kind), answer in sorted(answers.items(), key=lambda kv: kv[0][0]):
        if kind is QueryKind.FORBIDDEN:
            session.forbidden_candidates.discard(state)
            if answer is OracleAnswer.MUST_AVOID:
                session.confirmed_forbidden.add(state)
        else:
            session.goal_candidates.discard(state)
            if answer is OracleAnswer.MUST_VISIT:
                session.confirmed_goal.add(state)
        session.query_log.append(QueryRecord(state, kind, answer, session.iteration))
    session._check_invariants()
    session.pending = []
    _advance(session)
    return session


def _advance(session: QuerySession) -> None:
    """Solve the penalty LP for the current sets and update the status."""
    layout = build_query_lp(
        session.robot,
        session.forbidden_candidates,
        session.goal_candidates,
        session.confirmed_forbidden,
        session.confirmed_goal,
        session.params,
    )
    outcome = solve(layout.problem)
    if outcome.status is Status.INFEASIBLE:
        session.status = SessionStatus.NO_SOLUTION
        return
    if outcome.status is not Status.OPTIMAL:
        raise RuntimeError(f"query LP reported {outcome.status.value}")

    positive = [
        (state, QueryKind(kind))
        for (state, kind), col in layout.penalty_index.items()
        if outcome.point[col] > session.params.d_threshold
    ]
    if not positive:
        table = outcome.point[: layout.num_occupancy_vars].reshape(
            session.robot.num_states, session.robot.num_actions
        )
        policy = extract_policy(table, session.params.d_threshold)
        session.policy = policy
        session.occupancy = occupancy_of_policy(session.robot, policy)
        session.status = SessionStatus.SOLVED
        return
    if not session.forbidden_candidates and not session.goal_candidates:
        # Unreachable under the re-solve semantics (no candidates means no
        # penalty variables), kept for parity with the algorithm's final
        # no-solution return.
        session.status = SessionStatus.EXHAUSTED
        return
    session.pending = sorted(positive, key=lambda sk: (sk[0], sk[1] is QueryKind.GOAL))
    session.status = SessionStatus.AWAITING_ANSWERS


class Oracle(Protocol):
    def answer(self, state: int, kind: QueryKind) -> OracleAnswer: ...


@dataclass(frozen=True)
class GroundTruthOracle:
    """Answers queries from a known expectation set (the evaluation stand-in).

    Deterministic and consistent: a state is confirmed exactly when the truth
    set contains the matching avoid/visit element.
    """

    avoid_states: frozenset[int]
    visit_states: frozenset[int]

    @classmethod
    def from_expectations(cls, expectations: ExpectationSet) -> "GroundTruthOracle":
        avoid, visit = set(), set()
        for e in expectations:
            if len(e.subset) == 1 and e.op is Cmp.EQ and e.k == 0.0:
                avoid.update(e.subset)
            elif len(e.subset) == 1 and e.op is Cmp.GT and e.k == 0.0:
                visit.update(e.subset)
            else:
                raise ValueError(f"ground-truth oracle needs avoid/visit elements, got {e}")
        return cls(frozenset(avoid), frozenset(visit))

    def answer(self, state: int, kind: QueryKind) -> OracleAnswer:
        if kind is QueryKind.FORBIDDEN and state in self.avoid_states:
            return OracleAnswer.MUST_AVOID
        if kind is QueryKind.GOAL and state in self.visit_states:
            return OracleAnswer.MUST_VISIT
        return OracleAnswer.NEITHER


def run_to_completion(
    human: Domain,
    reward: RewardFunction,
    robot: Domain,
    oracle: Oracle,
    planning: PlanningFunction = OptimalPlanning(),
    params: FormulationParams = DEFAULT_PARAMS,
    instance_name: str | None = None,
) -> QuerySession:
    """Drive a session with an oracle until it reaches a terminal status."""
    session = start_session(human, reward, robot, planning, params, instance_name)
    while session.status is SessionStatus.AWAITING_ANSWERS:
        answers = {
            (state, kind): oracle.answer(state, kind) for state, kind in session.pending
        }
        step(session, answers)
    return session
