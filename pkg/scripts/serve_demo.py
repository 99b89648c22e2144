#!/usr/bin/env python3
"""Start the query service with a handful of generated grid instances.

Generates one instance per family into a temp directory, then serves them
(plus the built-in fixtures) so the browser UI has something to show.
"""

import argparse
import sys
import tempfile
from pathlib import Path

import uvicorn

from expalign.benchmarks import generate, serialize
from expalign.service import create_app, load_instance_dir

DEMO_INSTANCES = [
    ("walkway", 5, 5, 1),
    ("obstacles", 5, 5, 2),
    ("four_rooms", 7, 7, 1),
    ("puddle", 5, 5, 3),
    ("maze", 7, 7, 1),
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--ui", default="frontend/dist")
    args = parser.parse_args()

    tmp = Path(tempfile.mkdtemp(prefix="expalign-demo-"))
    for family, width, height, seed in DEMO_INSTANCES:
        instance = generate(family, width, height, seed)
        (tmp / f"{instance.name}.json").write_text(serialize(instance))
    print(f"instances in {tmp}")

    ui = args.ui if Path(args.ui).is_dir() else None
    if ui is None:
        print("note: frontend/dist not found; serving the API only")
    app = create_app(load_instance_dir(tmp), ui_dir=ui)
    uvicorn.run(app, host="127.0.0.1", port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
