"""Proxy-reward baseline: price the inferred candidate sets and just optimize.

The candidate supersets stand in for the posterior of the original
inverse-reward-design method: goal candidates get a high positive reward,
forbidden candidates a negative one, and the robot model is solved for that
proxy.  Reported timing covers only the proxy solve, not the superset
computation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .formulations import DEFAULT_PARAMS, FormulationParams, SupersetResult, compute_supersets, solve_optimal
from .benchmarks import BenchmarkInstance
from .mdp import ExpectationElement, OccupancyVector, Policy, RewardFunction, check_expectation


@dataclass(frozen=True)
class BaselineOutcome:
    policy: Policy
    occupancy: OccupancyVector
    violated_elements: tuple[ExpectationElement, ...]
    solve_time_ms: float


def run_ird(
    instance: BenchmarkInstance,
    supersets: SupersetResult | None = None,
    reward_high: float = 10.0,
    reward_low: float = -10.0,
    params: FormulationParams = DEFAULT_PARAMS,
) -> BaselineOutcome:
    """Optimize the proxy reward in the robot model, then count violations.

    Violations are recomputed against the ground truth from the resulting
    occupancy; nothing is read back from the solve itself.
    """
    if not (reward_high > 0 > reward_low):
        raise ValueError("reward_high must be positive and reward_low negative")
    if supersets is None:
        supersets = compute_supersets(
            instance.human_domain, instance.reward, params=params
        )
    robot = instance.robot_domain
    values = np.zeros(robot.num_states)
    for s in supersets.goal_candidates:
        values[s] = reward_high
    for s in supersets.forbidden_candidates:
        values[s] = reward_low
    proxy = RewardFunction.state_based(robot, values)

    started = time.perf_counter()
    result = solve_optimal(robot, proxy, params)
    elapsed_ms = (time.perf_counter() - started) * 1000.0

    violated = tuple(
        e for e in instance.ground_truth if not check_expectation(result.occupancy, e)
    )
    return BaselineOutcome(
        policy=result.policy,
        occupancy=result.occupancy,
        violated_elements=violated,
        solve_time_ms=elapsed_ms,
    )
