"""Suite runner: per-instance records, CSV reports, and the table1 preset."""

from __future__ import annotations

import csv
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .benchmarks import BenchmarkInstance, generate
from .formulations import DEFAULT_PARAMS, FormulationParams, compute_supersets
from .ird import run_ird
from .mdp import OptimalPlanning, PlanningFunction, check_expectation
from .query import GroundTruthOracle, QuerySession, SessionStatus, run_to_completion

# Grid sizes per family mirroring the published table; 5 seeds per cell.
TABLE1_SIZES: dict[str, tuple[tuple[int, int], ...]] = {
    "walkway": ((4, 4), (5, 5), (9, 9), (11, 11)),
    "obstacles": ((4, 4), (5, 5), (9, 9), (11, 11)),
    "four_rooms": ((5, 5), (7, 7), (9, 9), (12, 12)),
    "puddle": ((5, 5), (7, 7), (9, 9), (11, 11)),
    "maze": ((3, 3), (5, 5), (7, 7), (9, 9)),
}
TABLE1_SEEDS = (1, 2, 3, 4, 5)

REPORT_COLUMNS = (
    "family",
    "width",
    "height",
    "seed",
    "method",
    "queries",
    "violations",
    "solved",
    "wall_time_ms",
)

# Soft per-instance wall-clock budget; runs past it are recorded unsolved.
TIME_BUDGET_S = 30 * 60


@dataclass(frozen=True)
class RunRecord:
    family: str
    width: int
    height: int
    seed: int
    method: str
    queries: int | None
    violations: int
    solved: bool
    wall_time_ms: float
    timed_out: bool = False

    def __post_init__(self):
        if self.method == "align" and self.solved and self.violations != 0:
            raise RuntimeError("a solved align run must have zero violations")


def count_violations(instance: BenchmarkInstance, session: QuerySession) -> int:
    """Ground-truth violations of a solved session, recomputed from scratch."""
    if session.occupancy is None:
        return len(instance.ground_truth)
    return sum(
        0 if check_expectation(session.occupancy, e) else 1 for e in instance.ground_truth
    )


def run_align_record(
    instance: BenchmarkInstance,
    planning: PlanningFunction = OptimalPlanning(),
    params: FormulationParams = DEFAULT_PARAMS,
    time_budget_s: float = TIME_BUDGET_S,
    family: str = "",
    seed: int | None = None,
) -> tuple[RunRecord, QuerySession]:
    width, height = _dims(instance)
    oracle = GroundTruthOracle(instance.truth_avoid_states(), instance.truth_visit_states())
    started = time.perf_counter()
    session = run_to_completion(
        instance.human_domain,
        instance.reward,
        instance.robot_domain,
        oracle,
        planning,
        params,
        instance_name=instance.name,
    )
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    timed_out = elapsed_ms > time_budget_s * 1000.0
    solved = session.status is SessionStatus.SOLVED and not timed_out
    record = RunRecord(
        family=family or instance.name,
        width=width,
        height=height,
        seed=instance.seed if seed is None else seed,
        method="align",
        queries=len(session.query_log),
        violations=count_violations(instance, session) if solved else len(instance.ground_truth),
        solved=solved,
        wall_time_ms=elapsed_ms,
        timed_out=timed_out,
    )
    return record, session


def run_ird_record(
    instance: BenchmarkInstance,
    reward_high: float = 10.0,
    reward_low: float = -10.0,
    params: FormulationParams = DEFAULT_PARAMS,
    supersets=None,
    family: str = "",
    seed: int | None = None,
):
    width, height = _dims(instance)
    outcome = run_ird(instance, supersets, reward_high, reward_low, params)
    record = RunRecord(
        family=family or instance.name,
        width=width,
        height=height,
        seed=instance.seed if seed is None else seed,
        method="ird",
        queries=None,
        violations=len(outcome.violated_elements),
        solved=True,
        wall_time_ms=outcome.solve_time_ms,
    )
    return record, outcome


def _dims(instance: BenchmarkInstance) -> tuple[int, int]:
    if instance.layout is not None:
        return instance.layout.width, instance.layout.height
    n = instance.robot_domain.num_states
    return n, 1


def _run_cell(task) -> list[RunRecord]:
    family, width, height, seed, methods, reward_high, reward_low = task
    instance = generate(family, width, height, seed)
    records = []
    if "align" in methods:
        rec, _ = run_align_record(instance, family=family, seed=seed)
        records.append(rec)
    if "ird" in methods:
        supersets = compute_supersets(instance.human_domain, instance.reward)
        rec, _ = run_ird_record(
            instance, reward_high, reward_low, supersets=supersets, family=family, seed=seed
        )
        records.append(rec)
    return records


def run_suite(
    families: dict[str, tuple[tuple[int, int], ...]] | None = None,
    seeds: tuple[int, ...] = TABLE1_SEEDS,
    methods: tuple[str, ...] = ("align", "ird"),
    reward_high: float = 10.0,
    reward_low: float = -10.0,
    jobs: int = 1,
) -> list[RunRecord]:
    """Run every (family, size, seed, method) combination of the grid."""
    families = TABLE1_SIZES if families is None else families
    tasks = [
        (family, width, height, seed, methods, reward_high, reward_low)
        for family, sizes in families.items()
        for width, height in sizes
        for seed in seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            grouped = list(pool.map(_run_cell, tasks))
    else:
        grouped = [_run_cell(t) for t in tasks]
    return [rec for group in grouped for rec in group]


def write_report(records: list[RunRecord], out_dir: str | Path) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = out_dir / "report.csv"
    with report.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for rec in records:
            row = asdict(rec)
            writer.writerow(
                [
                    row["family"],
                    row["width"],
                    row["height"],
                    row["seed"],
                    row["method"],
                    "" if row["queries"] is None else row["queries"],
                    row["violations"],
                    str(row["solved"]).lower(),
                    f"{row['wall_time_ms']:.3f}",
                ]
            )
    summary = out_dir / "summary.csv"
    with summary.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "family",
                "width",
                "height",
                "method",
                "runs",
                "queries_mean",
                "queries_std",
                "violations_mean",
                "violations_std",
                "wall_time_ms_mean",
                "wall_time_ms_std",
                "solved_rate",
            ]
        )
        for key, rows in _group_cells(records).items():
            family, width, height, method = key
            queries = [r.queries for r in rows if r.queries is not None]
            violations = [r.violations for r in rows]
            times = [r.wall_time_ms for r in rows]
            writer.writerow(
                [
                    family,
                    width,
                    height,
                    method,
                    len(rows),
                    _fmt(_mean(queries)),
                    _fmt(_std(queries)),
                    _fmt(_mean(violations)),
                    _fmt(_std(violations)),
                    _fmt(_mean(times)),
                    _fmt(_std(times)),
                    f"{sum(r.solved for r in rows) / len(rows):.2f}",
                ]
            )
    return report, summary


def _group_cells(records):
    grouped: dict[tuple, list[RunRecord]] = {}
    for rec in records:
        grouped.setdefault((rec.family, rec.width, rec.height, rec.method), []).append(rec)
    return dict(sorted(grouped.items()))


def _mean(values):
    return statistics.fmean(values) if values else None


def _std(values):
    return statistics.stdev(values) if len(values) > 1 else 0.0 if values else None


def _fmt(value):
    return "" if value is None else f"{value:.3f}"


def render_table(records: list[RunRecord]) -> str:
    """Aligned text table of per-cell means, one row per (family, size, method)."""
    header = ("family", "size", "method", "queries", "violations", "time_ms", "solved")
    rows = [header]
    for (family, width, height, method), cell in _group_cells(records).items():
        queries = [r.queries for r in cell if r.queries is not None]
        q_text = ""
        if queries:
            q_text = f"{_mean(queries):.2f} ± {_std(queries):.2f}"
        v = [r.violations for r in cell]
        t = [r.wall_time_ms for r in cell]
        rows.append(
            (
                family,
                f"{width}x{height}",
                method,
                q_text,
                f"{_mean(v):.2f} ± {_std(v):.2f}",
                f"{_mean(t):.1f}",
                f"{sum(r.solved for r in cell)}/{len(cell)}",
            )
        )
    widths = [max(len(str(row[i])) for row in rows) for i in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(str(cell).ljust(widths[j]) for j, cell in enumerate(row)))
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
