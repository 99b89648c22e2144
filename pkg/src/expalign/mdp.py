"""Core MDP types: domains, rewards, policies, discounted occupancy frequencies.

A model is a (Domain, RewardFunction) pair.  The same Domain type is
instantiated twice per planning problem: once for what the user believes the
agent can do, once for what the agent can actually do.  Both instances must
share state and action index spaces.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

PROB_TOL = 1e-9

# Numerical defaults shared by every module: occupancy/flow residuals,
# expectation satisfaction, and relative optimality in the enumeration oracle.
@dataclass(frozen=True)
class Tolerances:
    occupancy: float = 1e-7
    expectation: float = 1e-6
    optimality: float = 1e-8


DEFAULT_TOLERANCES = Tolerances()

Transition = tuple[tuple[tuple[int, float], ...], ...]  # [state][action] -> ((succ, p), ...)


@dataclass(frozen=True)
class Domain:
    """States, actions, a sparse stochastic kernel, discount and start state."""

    states: tuple[str, ...]
    actions: tuple[str, ...]
    transitions: Transition
    gamma: float
    start: int

    def __post_init__(self):
        if not self.states:
            raise ValueError("domain needs at least one state")
        if not self.actions:
            raise ValueError("domain needs at least one action")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0 <= self.start < len(self.states):
            raise ValueError(f"start index {self.start} out of range")
        if len(self.transitions) != len(self.states):
            raise ValueError("transitions must cover every state")
        for s, per_action in enumerate(self.transitions):
            if len(per_action) != len(self.actions):
                raise ValueError(f"state {self.states[s]!r} must cover every action")
            for a, succs in enumerate(per_action):
                total = 0.0
                for succ, p in succs:
                    if not 0 <= succ < len(self.states):
                        raise ValueError(
                            f"successor index {succ} out of range for "
                            f"({self.states[s]!r}, {self.actions[a]!r})"
                        )
                    if p < 0:
                        raise ValueError(
                            f"negative probability for ({self.states[s]!r}, {self.actions[a]!r})"
                        )
                    total += p
                if abs(total - 1.0) > PROB_TOL:
                    raise ValueError(
                        f"transition probabilities for ({self.states[s]!r}, "
                        f"{self.actions[a]!r}) sum to {total}, expected 1"
                    )

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_actions(self) -> int:
        return len(self.actions)

    @cached_property
    def kernel(self) -> np.ndarray:
        """Dense (S, A, S) transition array, built once on demand."""
        k = np.zeros((self.num_states, self.num_actions, self.num_states))
        for s, per_action in enumerate(self.transitions):
            for a, succs in enumerate(per_action):
                for succ, p in succs:
                    k[s, a, succ] += p
        k.setflags(write=False)
        return k

    def state_index(self, name: str) -> int:
        try:
            return self.states.index(name)
        except ValueError:
            raise KeyError(f"unknown state {name!r}") from None

    def action_index(self, name: str) -> int:
        try:
            return self.actions.index(name)
        except ValueError:
            raise KeyError(f"unknown action {name!r}") from None

    @classmethod
    def build(
        cls,
        states: Sequence[str],
        actions: Sequence[str],
        transitions: Mapping[tuple[str, str], Sequence[tuple[str, float]]],
        gamma: float,
        start: str,
    ) -> "Domain":
        """Construct from name-keyed transitions; missing (s, a) pairs are rejected."""
        states = tuple(states)
        actions = tuple(actions)
        s_idx = {s: i for i, s in enumerate(states)}
        a_idx = {a: i for i, a in enumerate(actions)}
        table: list[list[tuple[tuple[int, float], ...]]] = [
            [() for _ in actions] for _ in states
        ]
        for (s, a), succs in transitions.items():
            table[s_idx[s]][a_idx[a]] = tuple((s_idx[t], float(p)) for t, p in succs)
        for s in states:
            for a in actions:
                if not table[s_idx[s]][a_idx[a]]:
                    raise ValueError(f"missing transitions for ({s!r}, {a!r})")
        return cls(
            states=states,
            actions=actions,
            transitions=tuple(tuple(row) for row in table),
            gamma=float(gamma),
            start=s_idx[start],
        )


def _frozen_array(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RewardFunction:
    """Dense per-(state, action) reward table."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values)
        if arr.ndim != 2:
            raise ValueError("reward table must be 2-dimensional (states x actions)")
        if not np.all(np.isfinite(arr)):
            raise ValueError("reward values must be finite")
        object.__setattr__(self, "values", arr)

    def __eq__(self, other):
        return isinstance(other, RewardFunction) and np.array_equal(self.values, other.values)

    @classmethod
    def state_based(
        cls, domain: Domain, per_state: Mapping[str, float] | Sequence[float]
    ) -> "RewardFunction":
        """Reward attached to states alone: the same value across all actions."""
        if isinstance(per_state, Mapping):
            vec = np.zeros(domain.num_states)
            for name, v in per_state.items():
                vec[domain.state_index(name)] = v
        else:
            vec = np.asarray(per_state, dtype=float)
            if vec.shape != (domain.num_states,):
                raise ValueError("per-state vector has wrong length")
        return cls(np.repeat(vec[:, None], domain.num_actions, axis=1))

    def is_state_based(self) -> bool:
        return bool(np.all(self.values == self.values[:, :1]))

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


@dataclass(frozen=True, eq=False)
class Policy:
    """Row-stochastic (S, A) action choice; deterministic policies are one-hot rows."""

    rows: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.rows)
        if arr.ndim != 2:
            raise ValueError("policy must be 2-dimensional (states x actions)")
        if np.any(arr < -PROB_TOL):
            raise ValueError("policy probabilities must be nonnegative")
        sums = arr.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > PROB_TOL):
            raise ValueError("policy rows must sum to 1")
        object.__setattr__(self, "rows", arr)

    def __eq__(self, other):
        return isinstance(other, Policy) and np.array_equal(self.rows, other.rows)

    @classmethod
    def deterministic(cls, choices: Sequence[int], num_actions: int) -> "Policy":
        rows = np.zeros((len(choices), num_actions))
        rows[np.arange(len(choices)), list(choices)] = 1.0
        return cls(rows)

    def is_deterministic(self) -> bool:
        return bool(np.all(np.isin(self.rows, (0.0, 1.0))))

    def choices(self) -> tuple[int, ...]:
        """Per-state argmax action; exact choice vector for deterministic policies."""
        return tuple(int(a) for a in np.argmax(self.rows, axis=1))


@dataclass(frozen=True, eq=False)
class OccupancyVector:
    """Discounted visitation mass per (state, action); total mass is 1/(1-gamma).

    Entries within round-off of zero are clamped to exact 0 so downstream
    membership tests stay stable; anything below -1e-9 is rejected.
    """

    table: np.ndarray

    def __post_init__(self):
        arr = np.array(self.table, dtype=float)
        if arr.ndim != 2:
            raise ValueError("occupancy table must be 2-dimensional")
        if np.any(arr < -PROB_TOL):
            raise ValueError("occupancy entries must be nonnegative")
        arr[(arr < 0.0) & (arr > -PROB_TOL)] = 0.0
        arr.setflags(write=False)
        object.__setattr__(self, "table", arr)

    @cached_property
    def state_marginals(self) -> np.ndarray:
        m = self.table.sum(axis=1)
        m.setflags(write=False)
        return m

    def state_mass(self, state: int) -> float:
        return float(self.state_marginals[state])

    def total_mass(self) -> float:
        return float(self.table.sum())


def check_flow(domain: Domain, table: np.ndarray, tol: float | None = None) -> None:
    """Assert the occupancy flow identity at every state.

    For each state s:  sum_a x(s,a) = [s == start] + gamma * sum_{s',a'} x(s',a') T(s',a',s)
    """
    tol = DEFAULT_TOLERANCES.occupancy if tol is None else tol
    inflow = np.einsum("sa,sap->p", table, domain.kernel)
    residual = table.sum(axis=1) - domain.gamma * inflow
    residual[domain.start] -= 1.0
    worst = float(np.max(np.abs(residual)))
    if worst > tol:
        raise ValueError(f"flow conservation violated: max residual {worst:.3e}")
    mass_err = abs(table.sum() - 1.0 / (1.0 - domain.gamma))
    if mass_err > tol:
        raise ValueError(f"occupancy mass off by {mass_err:.3e}")


def occupancy_of_policy(domain: Domain, policy: Policy) -> OccupancyVector:
    """Exact discounted occupancy of a policy via the flow linear system.

    Solves (I - gamma * P_pi^T) mu = e_start for the state marginals, then
    splits mass across actions by the policy rows.  No LP involved.
    """
    if policy.rows.shape != (domain.num_states, domain.num_actions):
        raise ValueError("policy shape does not match domain")
    p_pi = np.einsum("sa,sap->sp", policy.rows, domain.kernel)
    lhs = np.eye(domain.num_states) - domain.gamma * p_pi.T
    rhs = np.zeros(domain.num_states)
    rhs[domain.start] = 1.0
    mu = np.linalg.solve(lhs, rhs)
    residual = float(np.max(np.abs(lhs @ mu - rhs)))
    if residual > 1e-6:
        raise RuntimeError(f"occupancy solve residual {residual:.3e} exceeds 1e-6")
    # Unreachable states carry pure round-off; snap them so membership tests
    # downstream see exact zeros.
    mu[np.abs(mu) < 1e-12] = 0.0
    table = mu[:, None] * policy.rows
    check_flow(domain, table)
    return OccupancyVector(table)


def evaluate_policy(domain: Domain, reward: RewardFunction, policy: Policy) -> float:
    """Value at the start state: the occupancy/reward inner product."""
    if reward.values.shape != (domain.num_states, domain.num_actions):
        raise ValueError("reward shape does not match domain")
    occ = occupancy_of_policy(domain, policy)
    return float(np.sum(occ.table * reward.values))


class Cmp(Enum):
    """Relational operator of an expectation element."""

    LT = "<"
    GT = ">"
    LE = "<="
    GE = ">="
    EQ = "="


@dataclass(frozen=True)
class ExpectationElement:
    """A bound on cumulative occupancy over a state subset.

    Avoid constraints are written <{s}, =, 0>; visit constraints <{s}, >, 0>.
    """

    subset: frozenset[int]
    op: Cmp
    k: float

    def __post_init__(self):
        object.__setattr__(self, "subset", frozenset(self.subset))
        if not self.subset:
            raise ValueError("expectation subset must be non-empty")
        if not 0.0 <= self.k <= 1.0:
            raise ValueError(f"expectation threshold must lie in [0, 1], got {self.k}")

    @classmethod
    def avoid(cls, state: int) -> "ExpectationElement":
        return cls(frozenset({state}), Cmp.EQ, 0.0)

    @classmethod
    def visit(cls, state: int) -> "ExpectationElement":
        return cls(frozenset({state}), Cmp.GT, 0.0)


ExpectationSet = Sequence[ExpectationElement]


def check_expectation(
    occ: OccupancyVector, element: ExpectationElement, tol: float | None = None
) -> bool:
    """Evaluate one expectation element against an occupancy vector.

    Tolerance semantics keep the avoid form (= 0) strict up to numerical
    noise: EQ holds iff |total - k| <= tol, GT iff total > k + tol, and
    symmetrically for the other operators.
    """
    tol = DEFAULT_TOLERANCES.expectation if tol is None else tol
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    total = float(sum(occ.state_mass(s) for s in element.subset))
    k = element.k
    if element.op is Cmp.EQ:
        return abs(total - k) <= tol
    if element.op is Cmp.GT:
        return total > k + tol
    if element.op is Cmp.LT:
        return total < k - tol
    if element.op is Cmp.GE:
        return total >= k - tol
    return total <= k + tol  # Cmp.LE


def is_expectation_aligned(
    robot: Domain,
    policy: Policy,
    expectations: ExpectationSet,
    tol: float | None = None,
) -> bool:
    """True iff the policy satisfies every element when run in the robot domain."""
    occ = occupancy_of_policy(robot, policy)
    return all(check_expectation(occ, e, tol) for e in expectations)


class PlanningVariant:
    """Marker base for the user's anticipated planning behaviour."""


@dataclass(frozen=True)
class OptimalPlanning(PlanningVariant):
    """The user anticipates exactly the optimal policies."""


@dataclass(frozen=True)
class NoisyRationalPlanning(PlanningVariant):
    """The user anticipates any policy whose value clears a threshold.

    The threshold must not exceed the optimal start-state value of the model
    it is applied to; this is checked at the point of use.
    """

    value_threshold: float


PlanningFunction = PlanningVariant

BRUTE_FORCE_LIMIT = 10**6


def enumerate_deterministic_policies(domain: Domain) -> Iterable[Policy]:
    count = domain.num_actions ** domain.num_states
    if count > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"{count} deterministic policies exceed the enumeration guard "
            f"({BRUTE_FORCE_LIMIT}); the oracle is for small instances only"
        )
    for choices in itertools.product(range(domain.num_actions), repeat=domain.num_states):
        yield Policy.deterministic(choices, domain.num_actions)


def brute_force_optimal_set(
    domain: Domain, reward: RewardFunction, tol: float | None = None
) -> list[Policy]:
    """Enumeration oracle: all deterministic policies within tol of the best value.

    tol defaults to 1e-8 * max(1, |V*|).  Intended as the independent check
    for everything the LP modules claim about optimal behaviour.
    """
    scored = [
        (evaluate_policy(domain, reward, pi), pi)
        for pi in enumerate_deterministic_policies(domain)
    ]
    best = max(v for v, _ in scored)
    if tol is None:
        tol = DEFAULT_TOLERANCES.optimality * max(1.0, abs(best))
    return [pi for v, pi in scored if v >= best - tol]
