"""Self-contained dense two-phase simplex for the occupancy LP family.

Maximization over nonnegative variables with EQ/LE/GE row constraints; this
is the only LP shape the planning formulations need.  Bland's smallest-index
pivot rule keeps the solver deterministic and cycle-free.  Problem sizes stay
small (roughly 1.5k variables / rows at the largest benchmark grids), where a
dense tableau is simple and fast enough.
"""

from __future__ import annotations

import itertools
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

PIVOT_TOL = 1e-9
FEASIBILITY_TOL = 1e-8
ZERO_SNAP = 1e-9  # |x| below this is reported as exact 0


class Rel(Enum):
    EQ = "="
    LE = "<="
    GE = ">="


class Status(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class SimplexIterationError(RuntimeError):
    """Pivot budget exhausted; raised instead of misreporting a status."""


class SimplexNumericalError(RuntimeError):
    """The tableau lost feasibility beyond tolerance; never silently returned."""


@dataclass(frozen=True)
class LpConstraint:
    coeffs: np.ndarray
    rel: Rel
    rhs: float


@dataclass(frozen=True)
class LpProblem:
    """max objective . x  subject to row constraints, all variables >= 0."""

    num_vars: int
    objective: np.ndarray
    constraints: tuple[LpConstraint, ...]

    @classmethod
    def build(
        cls,
        objective: Sequence[float],
        constraints: Sequence[tuple[Sequence[float], Rel, float]],
    ) -> "LpProblem":
        obj = np.asarray(objective, dtype=float)
        rows = []
        for coeffs, rel, rhs in constraints:
            arr = np.asarray(coeffs, dtype=float)
            if arr.shape != obj.shape:
                raise ValueError("constraint length does not match objective")
            if not np.isfinite(rhs):
                raise ValueError("constraint rhs must be finite")
            rows.append(LpConstraint(arr, rel, float(rhs)))
        if not np.all(np.isfinite(obj)):
            raise ValueError("objective coefficients must be finite")
        return cls(num_vars=obj.shape[0], objective=obj, constraints=tuple(rows))


@dataclass(frozen=True)
class LpOutcome:
    status: Status
    objective_value: float | None
    point: np.ndarray | None
    iterations: int


_dump_state: ContextVar[dict | None] = ContextVar("lp_dump_state", default=None)


@contextmanager
def dump_problems(directory: str | Path):
    """Write every problem passed to solve() under `directory` in LP text format."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    token = _dump_state.set({"dir": directory, "count": itertools.count()})
    try:
        yield directory
    finally:
        _dump_state.reset(token)


def to_lp_text(problem: LpProblem, name: str = "problem") -> str:
    """Render in the fixed-column LP interchange format (objective, rows, bounds)."""

    def terms(coeffs: np.ndarray) -> str:
        parts = [
            f"{'-' if c < 0 else '+'} {abs(c):.12g} x{j}"
            for j, c in enumerate(coeffs)
            if c != 0.0
        ]
        return " ".join(parts) if parts else "0 x0"

    lines = [f"\\ {name}", "Maximize", f" obj: {terms(problem.objective)}", "Subject To"]
    for i, con in enumerate(problem.constraints):
        lines.append(f" c{i}: {terms(con.coeffs)} {con.rel.value} {con.rhs:.12g}")
    lines.append("Bounds")
    for j in range(problem.num_vars):
        lines.append(f" x{j} >= 0")
    lines.append("End")
    return "\n".join(lines) + "\n"


def _entering(z_row: np.ndarray, allowed: np.ndarray) -> int:
    """Bland: the lowest-index allowed column with an improving reduced cost."""
    candidates = np.nonzero((z_row < -PIVOT_TOL) & allowed)[0]
    return int(candidates[0]) if candidates.size else -1


def _leaving(tableau: np.ndarray, basis: list[int], col: int) -> int:
    """Minimum-ratio row; ties broken by the smallest basic-variable index."""
    column = tableau[:, col]
    eligible = column > PIVOT_TOL
    if not np.any(eligible):
        return -1
    ratios = np.full(column.shape, np.inf)
    ratios[eligible] = tableau[eligible, -1] / column[eligible]
    best = float(np.min(ratios))
    tied = np.nonzero(ratios <= best + 1e-12 * (1.0 + abs(best)))[0]
    return int(min(tied, key=lambda i: basis[i]))


class _Tableau:
    def __init__(self, rows: np.ndarray, basis: list[int], cap: int):
        self.t = rows
        self.basis = basis
        self.cap = cap
        self.iterations = 0

    def pivot(self, row: int, col: int, z_row: np.ndarray) -> None:
        self.iterations += 1
        if self.iterations > self.cap:
            raise SimplexIterationError(
                f"simplex exceeded the pivot budget of {self.cap} iterations"
            )
        t = self.t
        pivot_row = t[row] / t[row, col]
        t -= np.outer(t[:, col], pivot_row)
        t[row] = pivot_row
        z_row -= z_row[col] * pivot_row
        # Ratio-test rounding can leave the rhs a hair negative; keep it clean
        # so later ratio tests stay valid.
        rhs = t[:, -1]
        rhs[(rhs < 0) & (rhs > -PIVOT_TOL)] = 0.0
        self.basis[row] = col

    def run(self, z_row: np.ndarray, allowed: np.ndarray) -> str:
        while True:
            col = _entering(z_row[:-1], allowed)
            if col < 0:
                return "optimal"
            row = _leaving(self.t, self.basis, col)
            if row < 0:
                return "unbounded"
            self.pivot(row, col, z_row)


def _reduced_costs(t: np.ndarray, basis: list[int], c_ext: np.ndarray) -> np.ndarray:
    z = np.zeros(t.shape[1])
    z[:-1] = -c_ext
    for i, bv in enumerate(basis):
        if c_ext[bv] != 0.0:
            z += c_ext[bv] * t[i]
    return z


def solve(problem: LpProblem, iteration_cap: int | None = None) -> LpOutcome:
    """Two-phase simplex.  Returns optimal/infeasible/unbounded, never guesses.

    Raises SimplexIterationError when the pivot budget (default
    50 * (num_vars + num_constraints)) runs out and SimplexNumericalError if
    an allegedly optimal point fails the feasibility check, so callers can
    never silently misclassify a membership test.
    """
    n = problem.num_vars
    m = len(problem.constraints)
    for con in problem.constraints:
        if con.coeffs.shape != (n,):
            raise ValueError("constraint coefficient length mismatch")
    if iteration_cap is None:
        iteration_cap = 50 * (n + m)

    a = np.array([con.coeffs for con in problem.constraints], dtype=float).reshape(m, n)
    b = np.array([con.rhs for con in problem.constraints], dtype=float)
    rels = [con.rel for con in problem.constraints]
    flip = b < 0
    a[flip] *= -1
    b[flip] *= -1
    rels = [
        (Rel.GE if rel is Rel.LE else Rel.LE if rel is Rel.GE else Rel.EQ) if f else rel
        for rel, f in zip(rels, flip)
    ]

    le_rows = [i for i, r in enumerate(rels) if r is Rel.LE]
    ge_rows = [i for i, r in enumerate(rels) if r is Rel.GE]
    art_rows = [i for i, r in enumerate(rels) if r is not Rel.LE]
    n_slack, n_surplus, n_art = len(le_rows), len(ge_rows), len(art_rows)
    total = n + n_slack + n_surplus + n_art

    t = np.zeros((m, total + 1))
    t[:, :n] = a
    t[:, -1] = b
    basis = [-1] * m
    for k, i in enumerate(le_rows):
        t[i, n + k] = 1.0
        basis[i] = n + k
    for k, i in enumerate(ge_rows):
        t[i, n + n_slack + k] = -1.0
    art_start = n + n_slack + n_surplus
    for k, i in enumerate(art_rows):
        t[i, art_start + k] = 1.0
        basis[i] = art_start + k

    tab = _Tableau(t, basis, iteration_cap)
    is_artificial = np.zeros(total, dtype=bool)
    is_artificial[art_start:] = True

    # Phase 1: maximize -(sum of artificials); feasible iff that sum reaches ~0.
    c1 = np.zeros(total)
    c1[art_start:] = -1.0
    z = _reduced_costs(t, basis, c1)
    # Artificials start basic and may never re-enter once they leave.
    verdict = tab.run(z, ~is_artificial)
    if verdict == "unbounded":
        raise SimplexNumericalError("phase 1 reported an unbounded direction")
    artificial_mass = sum(t[i, -1] for i in range(m) if basis[i] >= art_start)
    if artificial_mass > FEASIBILITY_TOL:
        if _dump_state.get() is not None:
            _write_dump(problem)
        return LpOutcome(Status.INFEASIBLE, None, None, tab.iterations)

    # Drive any zero-level artificials out of the basis; rows that offer no
    # pivot column are redundant and keep a harmless artificial at level 0.
    for i in range(m):
        if basis[i] >= art_start:
            cols = np.nonzero(np.abs(t[i, :art_start]) > PIVOT_TOL)[0]
            if cols.size:
                tab.pivot(i, int(cols[0]), z)

    # Phase 2: the real objective over the feasible basis.
    c2 = np.zeros(total)
    c2[:n] = problem.objective
    z = _reduced_costs(t, basis, c2)
    verdict = tab.run(z, ~is_artificial)
    if verdict == "unbounded":
        if _dump_state.get() is not None:
            _write_dump(problem)
        return LpOutcome(Status.UNBOUNDED, None, None, tab.iterations)

    x = np.zeros(total)
    for i, bv in enumerate(basis):
        x[bv] = t[i, -1]
    point = x[:n].copy()
    point[np.abs(point) < ZERO_SNAP] = 0.0
    point[point < 0] = 0.0
    _check_primal(problem, point)
    if _dump_state.get() is not None:
        _write_dump(problem)
    return LpOutcome(
        Status.OPTIMAL,
        float(problem.objective @ point),
        point,
        tab.iterations,
    )


def _check_primal(problem: LpProblem, point: np.ndarray) -> None:
    for i, con in enumerate(problem.constraints):
        value = float(con.coeffs @ point)
        tol = FEASIBILITY_TOL * (1.0 + abs(con.rhs))
        err = (
            abs(value - con.rhs)
            if con.rel is Rel.EQ
            else value - con.rhs
            if con.rel is Rel.LE
            else con.rhs - value
        )
        if err > tol:
            raise SimplexNumericalError(
                f"constraint {i} violated by {err:.3e} in an allegedly optimal point"
            )


def _write_dump(problem: LpProblem) -> None:
    state = _dump_state.get()
    idx = next(state["count"])
    path = state["dir"] / f"{idx:04d}.lp"
    path.write_text(to_lp_text(problem, name=f"dump {idx}"))
