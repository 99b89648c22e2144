"""Independent oracles and random-instance generators for the test suite.

Everything here deliberately avoids the code paths it is used to check:
policy values come from iterative Bellman sweeps, optimal behaviour from
value iteration, LP optima from exhaustive basic-solution enumeration, and
superset derivations from policy enumeration.
"""

from __future__ import annotations

import itertools
import random

import numpy as np

from expalign.mdp import (
    Domain,
    Policy,
    RewardFunction,
    brute_force_optimal_set,
    occupancy_of_policy,
)
from expalign.simplex import LpProblem, Rel


def bellman_policy_value(domain: Domain, reward: RewardFunction, policy: Policy) -> float:
    """Start-state value by fixed-point iteration (no occupancy involved)."""
    r_pi = (policy.rows * reward.values).sum(axis=1)
    p_pi = np.einsum("sa,sap->sp", policy.rows, domain.kernel)
    v = np.zeros(domain.num_states)
    for _ in range(100_000):
        nxt = r_pi + domain.gamma * p_pi @ v
        if np.max(np.abs(nxt - v)) < 1e-13:
            v = nxt
            break
        v = nxt
    return float(v[domain.start])


def value_iteration(domain: Domain, reward: RewardFunction, tol: float = 1e-13):
    """Optimal value function and Q table by value iteration."""
    q = np.zeros((domain.num_states, domain.num_actions))
    v = np.zeros(domain.num_states)
    for _ in range(200_000):
        q = reward.values + domain.gamma * np.einsum("sap,p->sa", domain.kernel, v)
        nxt = q.max(axis=1)
        if np.max(np.abs(nxt - v)) < tol:
            v = nxt
            break
        v = nxt
    return v, q


def greedy_action_sets(q: np.ndarray, tol: float = 1e-10) -> list[set[int]]:
    best = q.max(axis=1)
    return [set(np.nonzero(q[s] >= best[s] - tol)[0]) for s in range(q.shape[0])]


def lp_reference_optimum(problem: LpProblem):
    """(status, objective) by enumerating basic solutions.

    Valid for problems whose feasible set is bounded (the random corpus adds
    box rows), where optimality is attained at a basic feasible solution.
    """
    n = problem.num_vars
    columns = [np.asarray(c.coeffs, dtype=float) for c in problem.constraints]
    rels = [c.rel for c in problem.constraints]
    b = np.array([c.rhs for c in problem.constraints])
    m = len(columns)
    a = np.array(columns).reshape(m, n)
    extra = []
    for i, rel in enumerate(rels):
        if rel is Rel.EQ:
            continue
        col = np.zeros(m)
        col[i] = 1.0 if rel is Rel.LE else -1.0
        extra.append(col)
    full = np.hstack([a, np.array(extra).T]) if extra else a
    total = full.shape[1]
    c_ext = np.zeros(total)
    c_ext[:n] = problem.objective

    best = None
    for basis in itertools.combinations(range(total), m):
        sub = full[:, basis]
        try:
            x_b = np.linalg.solve(sub, b)
        except np.linalg.LinAlgError:
            continue
        if np.any(x_b < -1e-9):
            continue
        value = float(c_ext[list(basis)] @ x_b)
        if best is None or value > best:
            best = value
    if best is None:
        return "infeasible", None
    return "optimal", best


def seeded_rng(seed: int) -> random.Random:
    return random.Random(seed)


def random_domain(
    rng: random.Random, num_states: int, num_actions: int, gamma: float = 0.9
) -> Domain:
    """Random sparse kernel with transition probabilities bounded below 0.3.

    The lower bound keeps every reachable state's occupancy well above the
    1e-6 comparison level used by the superset oracle checks.
    """
    states = [f"s{i}" for i in range(num_states)]
    actions = [f"a{j}" for j in range(num_actions)]
    trans = {}
    for s in states:
        for a in actions:
            if num_states >= 2 and rng.random() < 0.5:
                succ = rng.sample(range(num_states), 2)
                p = rng.uniform(0.3, 0.7)
                trans[(s, a)] = [(states[succ[0]], p), (states[succ[1]], 1.0 - p)]
            else:
                trans[(s, a)] = [(states[rng.randrange(num_states)], 1.0)]
    return Domain.build(states, actions, trans, gamma, states[0])


def random_reward(rng: random.Random, domain: Domain, lo=-1.0, hi=1.0) -> RewardFunction:
    values = np.array(
        [[rng.uniform(lo, hi) for _ in domain.actions] for _ in domain.states]
    )
    return RewardFunction(values)


def perturb_domain(rng: random.Random, domain: Domain, redirects: int = 1) -> Domain:
    """A slightly different world: a few (state, action) arcs point elsewhere."""
    table = [list(per_action) for per_action in domain.transitions]
    for _ in range(redirects):
        s = rng.randrange(domain.num_states)
        a = rng.randrange(domain.num_actions)
        table[s][a] = ((rng.randrange(domain.num_states), 1.0),)
    return Domain(
        states=domain.states,
        actions=domain.actions,
        transitions=tuple(tuple(row) for row in table),
        gamma=domain.gamma,
        start=domain.start,
    )


def brute_force_supersets(
    domain: Domain, reward: RewardFunction, level: float = 1e-6
) -> tuple[frozenset[int], frozenset[int]]:
    """Enumeration-derived candidate sets: unvisited-by-all / visited-by-all."""
    optimal = brute_force_optimal_set(domain, reward)
    marginals = [occupancy_of_policy(domain, pi).state_marginals for pi in optimal]
    forbidden = frozenset(
        s
        for s in range(domain.num_states)
        if all(m[s] <= level for m in marginals)
    )
    goal = frozenset(
        s
        for s in range(domain.num_states)
        if all(m[s] > level for m in marginals)
    )
    return forbidden, goal
