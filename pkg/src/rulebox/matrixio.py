"""Plain-text storage for contribution and factor matrices.

Format (one logical value per line, ``\\n`` endings, UTF-8):

    rulebox-matrix 1
    rows <R>
    cols <C>
    target <category or dash>
    labels <comma-joined 0/1, or dash>
    <R lines of C space-separated floats>

Floats are written with ``repr`` so a save/load round trip is exact.
"""

from __future__ import annotations

import numpy as np

from .errors import ParseError
from .explain import ContributionMatrix

_MAGIC = "rulebox-matrix 1"


def _fmt(v) -> str:
    return repr(float(v))


def save_matrix(path, values, target=None, labels=None):
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    lines = [_MAGIC, f"rows {values.shape[0]}", f"cols {values.shape[1]}"]
    lines.append(f"target {int(target)}" if target is not None else "target -")
    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape != (values.shape[1],):
            raise ValueError("labels length must match the column count")
        lines.append("labels " + ",".join(str(int(bool(v))) for v in labels))
    else:
        lines.append("labels -")
    for row in values:
        lines.append(" ".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix(path):
    """Returns (values, target, labels); target/labels are None when absent."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MAGIC:
        raise ParseError("not a rulebox matrix file", row=1)
    try:
        rows = int(lines[1].removeprefix("rows "))
        cols = int(lines[2].removeprefix("cols "))
    except (IndexError, ValueError):
        raise ParseError("malformed matrix header", row=2) from None
    if len(lines) < 5 + rows:
        raise ParseError("matrix file truncated", row=len(lines))
    target_field = lines[3].removeprefix("target ")
    target = None if target_field == "-" else int(target_field)
    labels_field = lines[4].removeprefix("labels ")
    if labels_field == "-":
        labels = None
    else:
        labels = np.array([c == "1" for c in labels_field.split(",")], dtype=bool)
        if labels.shape != (cols,):
            raise ParseError("labels length must match the column count", row=5)
    values = np.empty((rows, cols))
    for i in range(rows):
        parts = lines[5 + i].split(" ")
        if len(parts) != cols:
            raise ParseError(f"expected {cols} values", row=6 + i)
        try:
            values[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(str(exc), row=6 + i) from None
    return values, target, labels


def save_contribution_matrix(path, matrix: ContributionMatrix):
    save_matrix(path, matrix.values, target=matrix.target_category, labels=matrix.labels)


def load_contribution_matrix(path) -> ContributionMatrix:
    values, target, labels = load_matrix(path)
    if target is None or labels is None:
        raise ParseError("contribution matrix requires target and labels", row=4)
    return ContributionMatrix(values=values, target_category=target, labels=labels)
