#!/usr/bin/env python3
"""Run the full benchmark grid and print the summary table.

Equivalent to `expalign suite --preset table1 --out results/table1 --pretty`,
kept as a script so the sweep is one command away.
"""

import argparse
import sys

from expalign.harness import TABLE1_SIZES, render_table, run_suite, write_report


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/table1")
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    records = run_suite(
        TABLE1_SIZES, seeds=tuple(range(1, args.seeds + 1)), jobs=args.jobs
    )
    report, summary = write_report(records, args.out)
    print(render_table(records))
    print(f"\nwrote {report} and {summary}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
