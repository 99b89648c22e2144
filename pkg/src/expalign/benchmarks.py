"""Benchmark instances: micro-fixtures, five grid-world families with a
diverging user model, ground-truth expectation sets, and JSON round-tripping.

Grid semantics shared by every family: 4-connected moves, deterministic
transitions with bump-stays, absorbing goal cells, +1 per step at the goal
and 0 elsewhere, gamma = 0.95.  The user-model divergence lives entirely in
the transition structure (walls present in only one of the two models).

Every generated instance guarantees two things, re-drawing until both hold:
the specified reward is sufficient in the user model (all optimal policies
meet the ground truth there), and the ground truth is satisfiable in the
robot model (some policy reaches the goal while avoiding every hazard).
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .formulations import DEFAULT_PARAMS, FormulationParams, is_human_sufficient
from .mdp import Cmp, Domain, ExpectationElement, RewardFunction
from .query import QueryKind

GRID_GAMMA = 0.95
ACTIONS = ("up", "down", "left", "right")
MOVES = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}

KIND_FLOOR = "floor"
KIND_WALL = "wall"
KIND_GOAL = "goal"
KIND_FORBIDDEN = "forbidden"
KIND_WALKWAY = "walkway"
KIND_PUDDLE = "puddle"
KIND_DOOR = "door"
KIND_START = "start"
CELL_KINDS = {
    KIND_FLOOR,
    KIND_WALL,
    KIND_GOAL,
    KIND_FORBIDDEN,
    KIND_WALKWAY,
    KIND_PUDDLE,
    KIND_DOOR,
    KIND_START,
}

Cell = tuple[int, int]


class GenerationFailed(RuntimeError):
    pass


class InstanceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GridLayout:
    """Render metadata: non-floor cells only, keyed by (row, col)."""

    width: int
    height: int
    cells: tuple[tuple[int, int, str], ...]

    def __post_init__(self):
        for r, c, kind in self.cells:
            if kind not in CELL_KINDS:
                raise ValueError(f"unknown cell kind {kind!r} at ({r}, {c})")
            if not (0 <= r < self.height and 0 <= c < self.width):
                raise ValueError(f"cell ({r}, {c}) outside the {self.width}x{self.height} grid")
        object.__setattr__(self, "cells", tuple(sorted(self.cells)))


@dataclass(frozen=True)
class BenchmarkInstance:
    name: str
    seed: int
    robot_domain: Domain
    human_domain: Domain
    reward: RewardFunction
    ground_truth: tuple[ExpectationElement, ...]
    layout: GridLayout | None = None

    def __post_init__(self):
        if (
            self.robot_domain.states != self.human_domain.states
            or self.robot_domain.actions != self.human_domain.actions
            or self.robot_domain.start != self.human_domain.start
        ):
            raise ValueError("robot and user models must share state/action spaces and start")
        avoid = set()
        visit = set()
        for e in self.ground_truth:
            if e.op is Cmp.EQ and e.k == 0.0:
                avoid |= e.subset
            elif e.op is Cmp.GT and e.k == 0.0:
                visit |= e.subset
        if avoid & visit:
            raise ValueError("ground-truth goal and forbidden states must be disjoint")

    def truth_avoid_states(self) -> frozenset[int]:
        out = set()
        for e in self.ground_truth:
            if e.op is Cmp.EQ and e.k == 0.0:
                out |= e.subset
        return frozenset(out)

    def truth_visit_states(self) -> frozenset[int]:
        out = set()
        for e in self.ground_truth:
            if e.op is Cmp.GT and e.k == 0.0:
                out |= e.subset
        return frozenset(out)


def query_prompt(instance: BenchmarkInstance, state: int, kind: QueryKind) -> str:
    """The English question shown to the user for one pending query."""
    name = instance.robot_domain.states[state]
    verb = "avoid" if kind is QueryKind.FORBIDDEN else "visit"
    if instance.layout is not None and "," in name:
        r, c = name.split(",")
        return f"Do I need to {verb} cell ({r}, {c})?"
    return f"Do I need to {verb} state '{name}'?"


# ---------------------------------------------------------------------------
# Micro-fixtures


def _absorbing(trans: dict, state: str, actions: Sequence[str]) -> None:
    for a in actions:
        trans[(state, a)] = [(state, 1.0)]


def _switch_domain(flipped: bool) -> Domain:
    trans: dict = {}
    safe, unsafe = ("sUnsafe", "sSafe") if flipped else ("sSafe", "sUnsafe")
    trans[("s0", "b1")] = [(safe, 1.0)]
    trans[("s0", "b2")] = [(unsafe, 1.0)]
    _absorbing(trans, "sSafe", ("b1", "b2"))
    _absorbing(trans, "sUnsafe", ("b1", "b2"))
    return Domain.build(["s0", "sSafe", "sUnsafe"], ["b1", "b2"], trans, 0.9, "s0")


def _corridor_domain(robot: bool) -> Domain:
    states = ["s0", "W", "A", "g"]
    actions = ["aW", "aA", "aG"]
    trans: dict = {}
    for mid in ("W", "A"):
        trans[(mid, "aG")] = [("g", 1.0)]
        trans[(mid, "aW")] = [(mid, 1.0)]
        trans[(mid, "aA")] = [(mid, 1.0)]
    _absorbing(trans, "g", actions)
    trans[("s0", "aG")] = [("s0", 1.0)]
    if robot:  # the route through W is real; the user believes only A works
        trans[("s0", "aW")] = [("W", 1.0)]
        trans[("s0", "aA")] = [("s0", 1.0)]
    else:
        trans[("s0", "aW")] = [("s0", 1.0)]
        trans[("s0", "aA")] = [("A", 1.0)]
    return Domain.build(states, actions, trans, 0.9, "s0")


def fixtures() -> dict[str, BenchmarkInstance]:
    """The three canonical micro-instances used across the test suite."""
    single_dom = Domain.build(["s0"], ["a"], {("s0", "a"): [("s0", 1.0)]}, 0.9, "s0")
    single = BenchmarkInstance(
        name="single",
        seed=0,
        robot_domain=single_dom,
        human_domain=single_dom,
        reward=RewardFunction.state_based(single_dom, {"s0": 1.0}),
        ground_truth=(),
    )

    human = _switch_domain(False)
    robot = _switch_domain(True)
    switch = BenchmarkInstance(
        name="switch",
        seed=0,
        robot_domain=robot,
        human_domain=human,
        reward=RewardFunction.state_based(human, {"sSafe": 1.0}),
        ground_truth=(
            ExpectationElement.visit(human.state_index("sSafe")),
            ExpectationElement.avoid(human.state_index("sUnsafe")),
        ),
    )

    ch = _corridor_domain(robot=False)
    cr = _corridor_domain(robot=True)
    corridor = BenchmarkInstance(
        name="corridor",
        seed=0,
        robot_domain=cr,
        human_domain=ch,
        reward=RewardFunction.state_based(ch, {"g": 1.0}),
        ground_truth=(ExpectationElement.visit(ch.state_index("g")),),
    )
    return {"single": single, "switch": switch, "corridor": corridor}


def button_frame_rewards(
    instance: BenchmarkInstance, b1_value: float, b2_value: float
) -> tuple[RewardFunction, RewardFunction]:
    """Rewards written by naming button outcomes, realized in each model.

    The user prices "where b1 leads" and "where b2 leads"; each model grounds
    those descriptions at its own successor states.  On the switch fixture the
    two groundings disagree, which is what makes every sufficient reward of
    this form go wrong on the robot side.
    """
    out = []
    for dom in (instance.human_domain, instance.robot_domain):
        s0 = dom.start
        values: dict[str, float] = {}
        for action, value in (("b1", b1_value), ("b2", b2_value)):
            succs = dom.transitions[s0][dom.action_index(action)]
            if len(succs) != 1:
                raise ValueError("button outcomes must be deterministic")
            values[dom.states[succs[0][0]]] = value
        out.append(RewardFunction.state_based(dom, values))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Grid generation


@dataclass
class _GridDraft:
    """One family draw before assembly and validation."""

    robot_walls: set[Cell]
    human_walls: set[Cell]
    start: Cell
    goal: Cell
    hazard_candidates_hint: set[Cell] | None = None
    special: dict[Cell, str] = field(default_factory=dict)
    hazard_count: int = 1
    hazard_kind: str = KIND_FORBIDDEN
    fixed_hazards: set[Cell] | None = None


class _RetryGeneration(Exception):
    pass


def _cell_name(cell: Cell) -> str:
    return f"{cell[0]},{cell[1]}"


def _grid_domain(
    width: int,
    height: int,
    states: Sequence[Cell],
    walls: set[Cell],
    goal: Cell,
    start: Cell,
    slip: float = 0.0,
) -> Domain:
    """Deterministic 4-connected movement with bump-stays and absorbing goal.

    slip is a hook for lateral slip dynamics; it stays 0 in every generated
    instance.
    """
    state_set = set(states)
    names = [_cell_name(c) for c in states]
    trans: dict = {}
    lateral = {"up": ("left", "right"), "down": ("left", "right"),
               "left": ("up", "down"), "right": ("up", "down")}

    def target(cell: Cell, action: str) -> Cell:
        dr, dc = MOVES[action]
        nxt = (cell[0] + dr, cell[1] + dc)
        if nxt not in state_set or nxt in walls:
            return cell
        return nxt

    for cell in states:
        for action in ACTIONS:
            if cell == goal:
                trans[(_cell_name(cell), action)] = [(_cell_name(cell), 1.0)]
                continue
            if slip <= 0.0:
                trans[(_cell_name(cell), action)] = [(_cell_name(target(cell, action)), 1.0)]
            else:
                mix: dict[str, float] = {}
                outcomes = [(action, 1.0 - slip)] + [
                    (side, slip / 2.0) for side in lateral[action]
                ]
                for move, p in outcomes:
                    dest = _cell_name(target(cell, move))
                    mix[dest] = mix.get(dest, 0.0) + p
                trans[(_cell_name(cell), action)] = sorted(mix.items())
    return Domain.build(names, ACTIONS, trans, GRID_GAMMA, _cell_name(start))


def _bfs_dist(width: int, height: int, walls: set[Cell], blocked: set[Cell], src: Cell) -> dict[Cell, int]:
    dist = {src: 0}
    dq = deque([src])
    while dq:
        cell = dq.popleft()
        for dr, dc in MOVES.values():
            nxt = (cell[0] + dr, cell[1] + dc)
            if not (0 <= nxt[0] < height and 0 <= nxt[1] < width):
                continue
            if nxt in walls or nxt in blocked or nxt in dist:
                continue
            dist[nxt] = dist[cell] + 1
            dq.append(nxt)
    return dist


def _off_shortest_path_cells(
    width: int, height: int, walls: set[Cell], start: Cell, goal: Cell
) -> set[Cell]:
    """Cells that lie on no shortest start-to-goal route in the given grid."""
    d_start = _bfs_dist(width, height, walls, set(), start)
    d_goal = _bfs_dist(width, height, walls, set(), goal)
    if goal not in d_start:
        raise _RetryGeneration("goal unreachable in the user grid")
    best = d_start[goal]
    out = set()
    for r in range(height):
        for c in range(width):
            cell = (r, c)
            if cell in walls:
                continue
            on_path = (
                cell in d_start
                and cell in d_goal
                and d_start[cell] + d_goal[cell] == best
            )
            if not on_path:
                out.add(cell)
    return out


def _all_cells(width: int, height: int) -> list[Cell]:
    return [(r, c) for r in range(height) for c in range(width)]


def _pick_floor(rng: random.Random, width: int, height: int, excluded: set[Cell]) -> Cell:
    options = [c for c in _all_cells(width, height) if c not in excluded]
    if not options:
        raise _RetryGeneration("no free cell left to place an item")
    return options[rng.randrange(len(options))]


def _draft_walkway(rng: random.Random, width: int, height: int) -> _GridDraft:
    # A wall line splits the grid.  The user knows the ordinary door through
    # it but not the walkway cells.  In half the draws the walkway has
    # replaced the old passage, so the real wall line only opens at the
    # walkway and the believed door is gone: those instances force queries.
    wall_col = rng.randrange(1, width - 1)
    line = {(r, wall_col) for r in range(height)}
    n_open = 2 if height < 6 else rng.randint(2, 3)
    openings = rng.sample(range(height), k=min(height, n_open))
    door = (openings[0], wall_col)
    walkways = {(r, wall_col) for r in openings[1:]}
    door_real = rng.random() < 0.5
    robot_walls = line - walkways - ({door} if door_real else set())
    human_walls = line - {door}
    start = (rng.randrange(height), rng.randrange(0, wall_col))
    goal = (rng.randrange(height), rng.randrange(wall_col + 1, width))
    special = {door: KIND_DOOR}
    special.update({w: KIND_WALKWAY for w in walkways})
    return _GridDraft(
        robot_walls=robot_walls,
        human_walls=human_walls,
        start=start,
        goal=goal,
        special=special,
        hazard_count=rng.randint(1, 3),
    )


def _block_believed_route(
    rng: random.Random,
    width: int,
    height: int,
    human_walls: set[Cell],
    robot_walls: set[Cell],
    start: Cell,
    goal: Cell,
) -> None:
    """Drop one real-world obstacle onto a cell the user's plan relies on.

    Prefers a cell whose removal disconnects the user's shortest-path web so
    the conflict actually surfaces during the query loop.
    """
    off = _off_shortest_path_cells(width, height, human_walls, start, goal)
    web = [
        c
        for c in _all_cells(width, height)
        if c not in off and c not in human_walls and c not in (start, goal)
    ]
    rng.shuffle(web)
    for cell in web:
        d = _bfs_dist(width, height, human_walls | {cell}, off | robot_walls, start)
        if goal not in d:
            robot_walls.add(cell)
            human_walls.discard(cell)
            return
    if web:
        cell = web[0]
        robot_walls.add(cell)
        human_walls.discard(cell)


def _draft_obstacles(rng: random.Random, width: int, height: int) -> _GridDraft:
    count = max(2, (width * height) // 8)
    cells = _all_cells(width, height)
    obstacles = set(rng.sample(cells, k=count))
    robot_walls = set(obstacles)
    human_walls = set(obstacles)
    for _ in range(rng.randint(0, 2)):
        cell = _pick_floor(rng, width, height, set())
        if rng.random() < 0.5:
            robot_walls.add(cell)   # real obstacle the user does not know about
            human_walls.discard(cell)
        else:
            human_walls.add(cell)   # imagined obstacle that is not really there
            robot_walls.discard(cell)
    both = robot_walls | human_walls
    start = _pick_floor(rng, width, height, both)
    goal = _pick_floor(rng, width, height, both | {start})
    # Most draws also park one unknown obstacle right on the believed route.
    if rng.random() < 0.7:
        _block_believed_route(rng, width, height, human_walls, robot_walls, start, goal)
    return _GridDraft(
        robot_walls=robot_walls,
        human_walls=human_walls,
        start=start,
        goal=goal,
        hazard_count=rng.randint(1, 3),
    )


def _draft_four_rooms(rng: random.Random, width: int, height: int) -> _GridDraft:
    mid_r, mid_c = height // 2, width // 2
    walls = {(mid_r, c) for c in range(width)} | {(r, mid_c) for r in range(height)}
    arms = [
        [(r, mid_c) for r in range(0, mid_r)],
        [(r, mid_c) for r in range(mid_r + 1, height)],
        [(mid_r, c) for c in range(0, mid_c)],
        [(mid_r, c) for c in range(mid_c + 1, width)],
    ]
    doors = [arm[rng.randrange(len(arm))] for arm in arms]
    robot_walls = walls - set(doors)
    closed = rng.sample(doors, k=rng.randint(1, 2))
    human_walls = robot_walls | set(closed)
    both = walls
    start = _pick_floor(rng, width, height, both)
    goal = _pick_floor(rng, width, height, both | {start})
    return _GridDraft(
        robot_walls=robot_walls,
        human_walls=human_walls,
        start=start,
        goal=goal,
        special={d: KIND_DOOR for d in doors},
        hazard_count=rng.randint(1, 3),
    )


def _draft_puddle(rng: random.Random, width: int, height: int) -> _GridDraft:
    anchor = (rng.randrange(height), rng.randrange(width))
    puddle = {anchor}
    for _ in range(rng.randint(1, 3)):
        base = list(puddle)[rng.randrange(len(puddle))]
        dr, dc = MOVES[ACTIONS[rng.randrange(4)]]
        nxt = (base[0] + dr, base[1] + dc)
        if 0 <= nxt[0] < height and 0 <= nxt[1] < width:
            puddle.add(nxt)
    # Terrain walls hug the puddle; the user believes the terrain sits one
    # cell off, so their wall positions are shifted copies.
    border = set()
    for cell in puddle:
        for dr, dc in MOVES.values():
            nxt = (cell[0] + dr, cell[1] + dc)
            if 0 <= nxt[0] < height and 0 <= nxt[1] < width and nxt not in puddle:
                border.add(nxt)
    terrain = set(rng.sample(sorted(border), k=min(len(border), rng.randint(1, 3))))
    shift = MOVES[ACTIONS[rng.randrange(4)]]
    shifted = set()
    for cell in terrain:
        nxt = (cell[0] + shift[0], cell[1] + shift[1])
        if 0 <= nxt[0] < height and 0 <= nxt[1] < width and nxt not in puddle:
            shifted.add(nxt)
    robot_walls = terrain
    human_walls = shifted
    both = robot_walls | human_walls | puddle
    start = _pick_floor(rng, width, height, both)
    goal = _pick_floor(rng, width, height, both | {start})
    if rng.random() < 0.5:
        _block_believed_route(rng, width, height, human_walls, robot_walls, start, goal)
    return _GridDraft(
        robot_walls=robot_walls,
        human_walls=human_walls,
        start=start,
        goal=goal,
        special={p: KIND_PUDDLE for p in puddle},
        hazard_kind=KIND_PUDDLE,
        fixed_hazards=puddle,
    )


def _draft_maze(rng: random.Random, width: int, height: int) -> _GridDraft:
    rooms = [(r, c) for r in range(0, height, 2) for c in range(0, width, 2)]
    room_set = set(rooms)
    carved: set[Cell] = set()
    visited = {rooms[0]}
    stack = [rooms[0]]
    while stack:
        cell = stack[-1]
        neighbours = []
        for dr, dc in MOVES.values():
            nxt = (cell[0] + 2 * dr, cell[1] + 2 * dc)
            if nxt in room_set and nxt not in visited:
                neighbours.append(nxt)
        if not neighbours:
            stack.pop()
            continue
        nxt = neighbours[rng.randrange(len(neighbours))]
        carved.add(((cell[0] + nxt[0]) // 2, (cell[1] + nxt[1]) // 2))
        visited.add(nxt)
        stack.append(nxt)
    walls = {c for c in _all_cells(width, height) if c not in room_set and c not in carved}
    closable = sorted(carved)
    closed = set(rng.sample(closable, k=min(len(closable), rng.randint(1, 3))))
    robot_walls = walls
    human_walls = walls | closed
    start = rooms[rng.randrange(len(rooms))]
    goal = rooms[rng.randrange(len(rooms))]
    if goal == start:
        goal = rooms[(rooms.index(start) + 1) % len(rooms)]
    return _GridDraft(
        robot_walls=robot_walls,
        human_walls=human_walls,
        start=start,
        goal=goal,
        hazard_count=rng.randint(0, 2),
    )


_FAMILIES: dict[str, tuple[Callable[[random.Random, int, int], _GridDraft], int]] = {
    "walkway": (_draft_walkway, 4),
    "obstacles": (_draft_obstacles, 4),
    "four_rooms": (_draft_four_rooms, 5),
    "puddle": (_draft_puddle, 5),
    "maze": (_draft_maze, 3),
}

FAMILIES = tuple(_FAMILIES)
GENERATION_ATTEMPTS = 20


def _derive_seed(family: str, width: int, height: int, seed: int) -> int:
    key = f"{family}:{width}:{height}:{seed}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def _assemble(
    family: str,
    width: int,
    height: int,
    seed: int,
    rng: random.Random,
    draft: _GridDraft,
    params: FormulationParams,
) -> BenchmarkInstance:
    both_walls = draft.robot_walls & draft.human_walls
    states = [c for c in _all_cells(width, height) if c not in both_walls]
    protected = {draft.start, draft.goal}
    if protected & (draft.robot_walls | draft.human_walls):
        raise _RetryGeneration("start or goal landed on a wall")

    if draft.fixed_hazards is not None:
        hazards = set(draft.fixed_hazards)
        if protected & hazards:
            raise _RetryGeneration("start or goal landed in a hazard")
    else:
        safe = _off_shortest_path_cells(
            width, height, draft.human_walls, draft.start, draft.goal
        )
        options = sorted(
            safe - protected - draft.robot_walls - draft.human_walls - set(draft.special)
        )
        if len(options) < draft.hazard_count:
            raise _RetryGeneration("not enough off-route cells for the hazards")
        hazards = set(
            options[i] for i in rng.sample(range(len(options)), k=draft.hazard_count)
        )

    robot = _grid_domain(width, height, states, draft.robot_walls, draft.goal, draft.start)
    human = _grid_domain(width, height, states, draft.human_walls, draft.goal, draft.start)
    reward = RewardFunction.state_based(human, {_cell_name(draft.goal): 1.0})

    goal_idx = human.state_index(_cell_name(draft.goal))
    truth = [ExpectationElement.visit(goal_idx)]
    truth += [ExpectationElement.avoid(human.state_index(_cell_name(h))) for h in sorted(hazards)]

    # The ground truth must be reachable in the real world: some route hits
    # the goal without touching a hazard.
    reach = _bfs_dist(width, height, draft.robot_walls, hazards, draft.start)
    if draft.goal not in reach:
        raise _RetryGeneration("truth not satisfiable in the robot grid")
    if not is_human_sufficient(human, reward, truth, params):
        raise _RetryGeneration("reward not sufficient in the user model")

    cells = []
    for cell in _all_cells(width, height):
        kind = None
        if cell == draft.start:
            kind = KIND_START
        elif cell == draft.goal:
            kind = KIND_GOAL
        elif cell in hazards:
            kind = draft.hazard_kind
        elif cell in draft.special:
            kind = draft.special[cell]
        elif cell in draft.robot_walls:
            kind = KIND_WALL
        if kind is not None:
            cells.append((cell[0], cell[1], kind))

    return BenchmarkInstance(
        name=f"{family}-{width}x{height}-s{seed}",
        seed=seed,
        robot_domain=robot,
        human_domain=human,
        reward=reward,
        ground_truth=tuple(truth),
        layout=GridLayout(width=width, height=height, cells=tuple(cells)),
    )


def generate(
    family: str,
    width: int,
    height: int,
    seed: int,
    params: FormulationParams = DEFAULT_PARAMS,
) -> BenchmarkInstance:
    """Deterministic instance generation: a pure function of the arguments."""
    if family not in _FAMILIES:
        raise ValueError(f"unknown family {family!r}; pick one of {sorted(_FAMILIES)}")
    draft_fn, min_size = _FAMILIES[family]
    if width < min_size or height < min_size:
        raise ValueError(f"{family} needs at least a {min_size}x{min_size} grid")
    rng = random.Random(_derive_seed(family, width, height, seed))
    reasons = []
    for attempt in range(GENERATION_ATTEMPTS):
        try:
            draft = draft_fn(rng, width, height)
            return _assemble(family, width, height, seed, rng, draft, params)
        except _RetryGeneration as exc:
            reasons.append(str(exc))
    raise GenerationFailed(
        f"could not generate {family} {width}x{height} seed {seed} after "
        f"{GENERATION_ATTEMPTS} attempts; reasons: {reasons}"
    )


# ---------------------------------------------------------------------------
# Serialization

_OP_TO_TEXT = {Cmp.EQ: "=", Cmp.GT: ">", Cmp.LT: "<", Cmp.GE: ">=", Cmp.LE: "<="}
_TEXT_TO_OP = {v: k for k, v in _OP_TO_TEXT.items()}


def _domain_triples(domain: Domain) -> list[list]:
    triples = []
    for s, per_action in enumerate(domain.transitions):
        for a, succs in enumerate(per_action):
            for succ, p in sorted(succs):
                triples.append([domain.states[s], domain.actions[a], domain.states[succ], p])
    return triples


def instance_to_obj(instance: BenchmarkInstance) -> dict:
    dom = instance.robot_domain
    if instance.reward.is_state_based():
        reward = [
            [dom.states[s], float(v)]
            for s, v in enumerate(instance.reward.values[:, 0])
            if v != 0.0
        ]
    else:
        reward = [
            [dom.states[s], dom.actions[a], float(v)]
            for (s, a), v in np.ndenumerate(instance.reward.values)
            if v != 0.0
        ]
    obj = {
        "name": instance.name,
        "seed": instance.seed,
        "gamma": dom.gamma,
        "s0": dom.states[dom.start],
        "states": list(dom.states),
        "actions": list(dom.actions),
        "robot_transitions": _domain_triples(instance.robot_domain),
        "human_transitions": _domain_triples(instance.human_domain),
        "reward": reward,
        "expectations": [
            {
                "states": sorted(dom.states[s] for s in e.subset),
                "op": _OP_TO_TEXT[e.op],
                "k": float(e.k),
            }
            for e in instance.ground_truth
        ],
    }
    if instance.layout is not None:
        obj["layout"] = {
            "width": instance.layout.width,
            "height": instance.layout.height,
            "cells": [[r, c, kind] for r, c, kind in instance.layout.cells],
        }
    return obj


def serialize(instance: BenchmarkInstance, indent: int | None = 2) -> str:
    return json.dumps(instance_to_obj(instance), indent=indent)


def _require(obj: Mapping, key: str, types) -> object:
    if key not in obj:
        raise InstanceFormatError(f"missing field '{key}'")
    value = obj[key]
    if not isinstance(value, types):
        raise InstanceFormatError(f"field '{key}' has the wrong type")
    return value


def _domain_from_triples(
    triples: Iterable, states: list[str], actions: list[str], gamma: float, s0: str, which: str
) -> Domain:
    table: dict[tuple[str, str], list[tuple[str, float]]] = {
        (s, a): [] for s in states for a in actions
    }
    for entry in triples:
        if not (isinstance(entry, list) and len(entry) == 4):
            raise InstanceFormatError(f"{which} entries must be [state, action, state, p]")
        s, a, succ, p = entry
        if (s, a) not in table:
            raise InstanceFormatError(f"{which} references unknown pair ({s!r}, {a!r})")
        if succ not in states:
            raise InstanceFormatError(f"{which} references unknown successor {succ!r}")
        table[(s, a)].append((succ, float(p)))
    try:
        return Domain.build(states, actions, table, gamma, s0)
    except (ValueError, KeyError) as exc:
        raise InstanceFormatError(f"invalid {which}: {exc}") from exc


def instance_from_obj(obj: Mapping) -> BenchmarkInstance:
    name = str(_require(obj, "name", str))
    seed = int(_require(obj, "seed", int))
    gamma = float(_require(obj, "gamma", (int, float)))
    s0 = str(_require(obj, "s0", str))
    states = [str(s) for s in _require(obj, "states", list)]
    actions = [str(a) for a in _require(obj, "actions", list)]
    if s0 not in states:
        raise InstanceFormatError(f"s0 {s0!r} is not a listed state")

    robot = _domain_from_triples(
        _require(obj, "robot_transitions", list), states, actions, gamma, s0, "robot_transitions"
    )
    human = _domain_from_triples(
        _require(obj, "human_transitions", list), states, actions, gamma, s0, "human_transitions"
    )

    values = np.zeros((len(states), len(actions)))
    s_idx = {s: i for i, s in enumerate(states)}
    a_idx = {a: i for i, a in enumerate(actions)}
    for entry in _require(obj, "reward", list):
        if isinstance(entry, list) and len(entry) == 2:
            s, v = entry
            if s not in s_idx:
                raise InstanceFormatError(f"reward references unknown state {s!r}")
            values[s_idx[s], :] = float(v)
        elif isinstance(entry, list) and len(entry) == 3:
            s, a, v = entry
            if s not in s_idx or a not in a_idx:
                raise InstanceFormatError(f"reward references unknown pair ({s!r}, {a!r})")
            values[s_idx[s], a_idx[a]] = float(v)
        else:
            raise InstanceFormatError("reward entries must be [state, value] or [state, action, value]")

    truth = []
    for entry in _require(obj, "expectations", list):
        if not isinstance(entry, Mapping):
            raise InstanceFormatError("expectations entries must be objects")
        op_text = str(_require(entry, "op", str))
        if op_text not in _TEXT_TO_OP:
            raise InstanceFormatError(f"unknown expectation operator {op_text!r}")
        subset = set()
        for s in _require(entry, "states", list):
            if s not in s_idx:
                raise InstanceFormatError(f"expectation references unknown state {s!r}")
            subset.add(s_idx[s])
        try:
            truth.append(
                ExpectationElement(frozenset(subset), _TEXT_TO_OP[op_text],
                                   float(_require(entry, "k", (int, float))))
            )
        except ValueError as exc:
            raise InstanceFormatError(f"invalid expectation: {exc}") from exc

    layout = None
    if "layout" in obj and obj["layout"] is not None:
        lay = obj["layout"]
        if not isinstance(lay, Mapping):
            raise InstanceFormatError("field 'layout' has the wrong type")
        cells = []
        for entry in _require(lay, "cells", list):
            if not (isinstance(entry, list) and len(entry) == 3):
                raise InstanceFormatError("layout cells must be [row, col, kind]")
            cells.append((int(entry[0]), int(entry[1]), str(entry[2])))
        try:
            layout = GridLayout(
                width=int(_require(lay, "width", int)),
                height=int(_require(lay, "height", int)),
                cells=tuple(cells),
            )
        except ValueError as exc:
            raise InstanceFormatError(f"invalid layout: {exc}") from exc

    try:
        return BenchmarkInstance(
            name=name,
            seed=seed,
            robot_domain=robot,
            human_domain=human,
            reward=RewardFunction(values),
            ground_truth=tuple(truth),
            layout=layout,
        )
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc


def deserialize(text: str) -> BenchmarkInstance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise InstanceFormatError("instance file must hold a JSON object")
    return instance_from_obj(obj)
