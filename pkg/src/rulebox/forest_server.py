"""Serve a built-in forest over the prediction-oracle protocol.

Run as ``python -m rulebox.forest_server --data train.csv --label-column
class ...``.  The forest is retrained from the given data and seed on
startup (training is deterministic, so a seed-replay record is all the
persistence the protocol needs), then stdin/stdout speak the wire
protocol documented in :mod:`rulebox.blackbox`.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .blackbox import BlackBoxModel, ForestConfig, train_forest
from .tabular import load_dataset


def serve(model: BlackBoxModel, stdin=None, stdout=None) -> int:
    """Protocol loop; returns a process exit code."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    hello = stdin.readline()
    if not hello.startswith("HELLO "):
        print(f"bad handshake line: {hello!r}", file=sys.stderr)
        return 1
    fields = dict(part.split("=", 1) for part in hello.split()[1:])
    if int(fields["m"]) != model.input_dim or int(fields["c"]) != model.num_categories:
        print(
            f"dimension mismatch: got {hello.strip()!r}, serving "
            f"m={model.input_dim} c={model.num_categories}",
            file=sys.stderr,
        )
        return 1
    stdout.write("READY\n")
    stdout.flush()

    while True:
        line = stdin.readline()
        if not line:
            return 0
        if not line.startswith("BATCH "):
            print(f"expected BATCH framing, got {line!r}", file=sys.stderr)
            return 1
        count = int(line.split()[1])
        rows = np.empty((count, model.input_dim), dtype=float)
        for i in range(count):
            row = stdin.readline()
            if not row:
                print("input ended mid-batch", file=sys.stderr)
                return 1
            rows[i] = [float(cell) for cell in row.strip().split(",")]
        labels = model.predict(rows) if count else []
        for label in labels:
            stdout.write(f"{int(label)}\n")
        stdout.flush()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", required=True, help="training csv with a label column")
    parser.add_argument("--label-column", required=True)
    parser.add_argument("--delimiter", default=",")
    parser.add_argument("--trees", type=int, default=200)
    parser.add_argument("--max-depth", type=int, default=None)
    parser.add_argument("--min-leaf", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    train = load_dataset(args.data, delimiter=args.delimiter,
                         label_column=args.label_column)
    config = ForestConfig(num_trees=args.trees, max_depth=args.max_depth,
                          min_leaf=args.min_leaf, seed=args.seed)
    model = train_forest(train, config)
    return serve(model)


if __name__ == "__main__":
    sys.exit(main())
