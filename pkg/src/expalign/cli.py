"""Command-line harness: generate instances, run methods, sweep suites,
answer queries interactively, and launch the HTTP service.

Exit codes: 0 success, 1 error, 2 the query loop ended without a solution.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import benchmarks, simplex
from .benchmarks import (
    BenchmarkInstance,
    GenerationFailed,
    InstanceFormatError,
    deserialize,
    fixtures,
    generate,
    query_prompt,
    serialize,
)
from .harness import (
    TABLE1_SIZES,
    render_table,
    run_align_record,
    run_ird_record,
    run_suite,
    write_report,
)
from .mdp import NoisyRationalPlanning, OptimalPlanning
from .query import OracleAnswer, QueryKind

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_SOLUTION = 2


@dataclass
class InteractiveOracle:
    """Terminal oracle: prints each query, reads y / n / neither from stdin."""

    instance: BenchmarkInstance

    def answer(self, state: int, kind: QueryKind) -> OracleAnswer:
        prompt = query_prompt(self.instance, state, kind)
        while True:
            sys.stdout.write(f"{prompt} [y/n] ")
            sys.stdout.flush()
            line = sys.stdin.readline()
            if not line:
                raise EOFError("stdin closed while a query was pending")
            sys.stdout.write("\n")
            text = line.strip().lower()
            if text in ("y", "yes"):
                return (
                    OracleAnswer.MUST_AVOID
                    if kind is QueryKind.FORBIDDEN
                    else OracleAnswer.MUST_VISIT
                )
            if text in ("n", "no", "neither", ""):
                return OracleAnswer.NEITHER
            sys.stdout.write("please answer y, n or neither\n")


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like 5x5, got {text!r}")


def _parse_planning(text: str):
    if text == "optimal":
        return OptimalPlanning()
    if text.startswith("noisy:"):
        return NoisyRationalPlanning(float(text.split(":", 1)[1]))
    raise argparse.ArgumentTypeError(
        f"planning must be 'optimal' or 'noisy:THRESHOLD', got {text!r}"
    )


def _load_instance(path: str) -> BenchmarkInstance:
    return deserialize(Path(path).read_text())


def cmd_gen(args) -> int:
    if args.fixture:
        instance = fixtures()[args.fixture]
    else:
        if not args.family or not args.size:
            print("gen needs either --fixture or both --family and --size", file=sys.stderr)
            return EXIT_ERROR
        width, height = args.size
        instance = generate(args.family, width, height, args.seed)
    Path(args.out).write_text(serialize(instance))
    print(f"wrote {instance.name} to {args.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    instance = _load_instance(args.instance)
    planning = args.planning

    def execute() -> int:
        if args.method == "ird":
            record, _ = run_ird_record(instance, args.reward_high, args.reward_low)
            payload = asdict(record)
            payload["status"] = "solved"
            _emit(payload, args.pretty)
            return EXIT_OK
        if args.oracle == "interactive":
            from .query import run_to_completion

            session = run_to_completion(
                instance.human_domain,
                instance.reward,
                instance.robot_domain,
                InteractiveOracle(instance),
                planning,
                instance_name=instance.name,
            )
            from .harness import RunRecord, count_violations
            from .query import SessionStatus

            solved = session.status is SessionStatus.SOLVED
            record = RunRecord(
                family=instance.name,
                width=instance.layout.width if instance.layout else instance.robot_domain.num_states,
                height=instance.layout.height if instance.layout else 1,
                seed=instance.seed,
                method="align",
                queries=len(session.query_log),
                violations=count_violations(instance, session) if solved else len(instance.ground_truth),
                solved=solved,
                wall_time_ms=0.0,
            )
            payload = asdict(record)
            payload["status"] = session.status.value
            _emit(payload, args.pretty)
            return EXIT_OK if solved else EXIT_NO_SOLUTION
        record, session = run_align_record(instance, planning)
        payload = asdict(record)
        payload["status"] = session.status.value
        _emit(payload, args.pretty)
        return EXIT_OK if record.solved else EXIT_NO_SOLUTION

    if args.dump_lp:
        with simplex.dump_problems(args.dump_lp):
            return execute()
    return execute()


def _emit(payload: dict, pretty: bool) -> None:
    if pretty:
        width = max(len(k) for k in payload)
        for key, value in payload.items():
            print(f"{key.ljust(width)}  {value}")
    else:
        print(json.dumps(payload))


def cmd_suite(args) -> int:
    if args.preset == "table1":
        families = dict(TABLE1_SIZES)
    else:
        if not args.families or not args.sizes:
            print("custom suites need --families and --sizes", file=sys.stderr)
            return EXIT_ERROR
        families = {fam: tuple(args.sizes) for fam in args.families}
    seeds = tuple(range(1, args.seeds + 1))
    records = run_suite(
        families,
        seeds=seeds,
        methods=tuple(args.methods),
        reward_high=args.reward_high,
        reward_low=args.reward_low,
        jobs=args.jobs,
    )
    report, summary = write_report(records, args.out)
    print(f"wrote {report} and {summary} ({len(records)} records)")
    if args.pretty:
        print(render_table(records))
    return EXIT_OK


def cmd_interactive(args) -> int:
    instance = _load_instance(args.instance)
    from .harness import count_violations
    from .query import SessionStatus, run_to_completion

    print(f"instance {instance.name}: answer each query with y (confirm) or n (neither)")
    session = run_to_completion(
        instance.human_domain,
        instance.reward,
        instance.robot_domain,
        InteractiveOracle(instance),
        args.planning,
        instance_name=instance.name,
    )
    print(f"status: {session.status.value} after {len(session.query_log)} queries")
    if session.status is SessionStatus.SOLVED:
        dom = instance.robot_domain
        for s, choice in enumerate(session.policy.choices()):
            mass = session.occupancy.state_mass(s)
            if mass > 1e-7:
                print(f"  {dom.states[s]}: {dom.actions[choice]} (occupancy {mass:.4f})")
        print(f"ground-truth violations: {count_violations(instance, session)}")
        return EXIT_OK
    return EXIT_NO_SOLUTION


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, load_instance_dir

    instances = load_instance_dir(args.instances) if args.instances else {}
    ui_dir = args.ui
    if ui_dir is None and Path("frontend/dist").is_dir():
        ui_dir = "frontend/dist"
    app = create_app(instances, ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="expalign")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a benchmark instance file")
    gen.add_argument("--family", choices=sorted(benchmarks.FAMILIES))
    gen.add_argument("--size", type=_parse_size, help="grid size, e.g. 5x5")
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("--fixture", choices=("single", "switch", "corridor"))
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="run one method on one instance")
    run.add_argument("--instance", required=True)
    run.add_argument("--method", choices=("align", "ird"), default="align")
    run.add_argument("--oracle", choices=("truth", "interactive"), default="truth")
    run.add_argument("--planning", type=_parse_planning, default=OptimalPlanning())
    run.add_argument("--reward-high", type=float, default=10.0)
    run.add_argument("--reward-low", type=float, default=-10.0)
    run.add_argument("--dump-lp", metavar="DIR", help="dump every solved LP to DIR")
    run.add_argument("--pretty", action="store_true")
    run.set_defaults(func=cmd_run)

    suite = sub.add_parser("suite", help="run a family/size/seed grid of experiments")
    suite.add_argument("--preset", choices=("table1",))
    suite.add_argument("--families", nargs="+", choices=sorted(benchmarks.FAMILIES))
    suite.add_argument("--sizes", nargs="+", type=_parse_size)
    suite.add_argument("--seeds", type=int, default=5)
    suite.add_argument("--methods", nargs="+", choices=("align", "ird"), default=["align", "ird"])
    suite.add_argument("--reward-high", type=float, default=10.0)
    suite.add_argument("--reward-low", type=float, default=-10.0)
    suite.add_argument("--jobs", type=int, default=1)
    suite.add_argument("--out", required=True)
    suite.add_argument("--pretty", action="store_true")
    suite.set_defaults(func=cmd_suite)

    inter = sub.add_parser("interactive", help="answer alignment queries in the terminal")
    inter.add_argument("--instance", required=True)
    inter.add_argument("--planning", type=_parse_planning, default=OptimalPlanning())
    inter.set_defaults(func=cmd_interactive)

    serve = sub.add_parser("serve", help="launch the HTTP query service")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--instances", metavar="DIR")
    serve.add_argument("--ui", metavar="DIR", help="static UI bundle to serve under /")
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        return args.func(args)
    except (InstanceFormatError, GenerationFailed, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
