"""Numerical tabular datasets and model-induced labelings.

A :class:`Dataset` is an immutable N x m block of finite reals with named
attribute columns, optionally carrying ground-truth labels used only to
train built-in models.  A :class:`LabeledDataset` attaches a classifier's
own labeling, which induces the per-category partition the rest of the
toolkit approximates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateSplit,
    EmptyDataset,
    NonFiniteValue,
    ParseError,
    RuleboxError,
)


@dataclass(frozen=True)
class Dataset:
    """An N x m table of finite real values.

    ``source_labels`` are 1-based ground-truth category ids, present only
    when the input file had a label column; they are used for training
    built-in models and for stratified splitting, never for explanation.
    """

    attribute_names: tuple[str, ...]
    rows: np.ndarray  # shape (N, m), float64
    source_labels: np.ndarray | None = None  # shape (N,), int, values in 1..C
    source_category_names: tuple[str, ...] = ()

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))
        if rows.ndim != 2:
            raise ValueError("rows must be a 2-d array")
        n, m = rows.shape
        if n < 1 or m < 1:
            raise EmptyDataset("dataset must have at least one row and one column")
        if m != len(self.attribute_names):
            raise ValueError("attribute_names length does not match row width")
        if len(set(self.attribute_names)) != m or any(
            not name for name in self.attribute_names
        ):
            raise ValueError("attribute names must be unique and non-empty")
        if not np.isfinite(rows).all():
            raise NonFiniteValue("dataset contains NaN or infinite values")
        rows.setflags(write=False)
        if self.source_labels is not None:
            labels = np.asarray(self.source_labels, dtype=int)
            if labels.shape != (n,):
                raise ValueError("source_labels length does not match row count")
            labels.setflags(write=False)
            object.__setattr__(self, "source_labels", labels)
        object.__setattr__(
            self, "source_category_names", tuple(self.source_category_names)
        )

    @property
    def num_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def num_attributes(self) -> int:
        return self.rows.shape[1]

    def constant_attributes(self) -> list[int]:
        """Indices of zero-variance attributes (retained but flagged)."""
        return [
            j
            for j in range(self.num_attributes)
            if self.rows[:, j].min() == self.rows[:, j].max()
        ]

    def take(self, indices: np.ndarray) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        labels = None if self.source_labels is None else self.source_labels[idx]
        return Dataset(
            self.attribute_names,
            self.rows[idx].copy(),
            labels,
            self.source_category_names,
        )


@dataclass(frozen=True)
class LabeledDataset:
    """A dataset together with the black box's own label for every row."""

    dataset: Dataset
    model_labels: np.ndarray  # shape (N,), values in 1..C
    category_names: tuple[str, ...]

    def __post_init__(self):
        labels = np.asarray(self.model_labels, dtype=int)
        labels.setflags(write=False)
        object.__setattr__(self, "model_labels", labels)
        object.__setattr__(self, "category_names", tuple(self.category_names))
        if labels.shape != (self.dataset.num_rows,):
            raise ValueError("model_labels length does not match dataset size")
        c = len(self.category_names)
        if c < 1:
            raise ValueError("need at least one category")
        if labels.min() < 1 or labels.max() > c:
            raise ValueError(f"model labels must lie in 1..{c}")

    @property
    def num_categories(self) -> int:
        return len(self.category_names)

    def members_of(self, category: int) -> np.ndarray:
        """Row indices the model assigns to ``category``."""
        return np.flatnonzero(self.model_labels == category)

    def partition_sizes(self) -> list[int]:
        return [
            int((self.model_labels == c).sum())
            for c in range(1, self.num_categories + 1)
        ]


def _parse_cell(text: str, row: int, column: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {text!r} as a real number", row, column)
    if not math.isfinite(value):
        raise NonFiniteValue(f"non-finite value {text!r}", row, column)
    return value


def _label_order(values: list[str]) -> list[str]:
    # Numeric label columns sort numerically ("10" after "2"); anything
    # else falls back to lexicographic order.
    unique = sorted(set(values))
    try:
        return sorted(unique, key=float)
    except ValueError:
        return unique


def load_dataset(
    path,
    delimiter: str = ",",
    label_column: str | None = None,
    has_header: bool = True,
) -> Dataset:
    """Load a delimiter-separated text file into a :class:`Dataset`.

    The header row names the attributes; without one, names are generated
    as ``x1..xm``.  ``label_column`` names the ground-truth column, which
    is removed from the attributes and mapped to category ids 1..C in
    sorted order of its distinct values.
    """
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter=delimiter)
        records = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not records:
        raise EmptyDataset(f"{path} contains no rows")

    if has_header:
        header = [cell.strip() for cell in records[0]]
        body = records[1:]
        first_data_row = 2
    else:
        header = [f"x{j + 1}" for j in range(len(records[0]))]
        body = records
        first_data_row = 1
    if not body:
        raise EmptyDataset(f"{path} contains a header but no data rows")

    label_index = None
    if label_column is not None:
        if label_column not in header:
            raise ParseError(f"label column {label_column!r} not found in header")
        label_index = header.index(label_column)

    names = [name for j, name in enumerate(header) if j != label_index]
    if not names:
        raise EmptyDataset(f"{path} has no attribute columns besides the label")
    if len(set(names)) != len(names) or any(not n for n in names):
        raise ParseError("attribute names must be unique and non-empty")

    width = len(header)
    values = np.empty((len(body), len(names)), dtype=float)
    raw_labels: list[str] = []
    for i, record in enumerate(body):
        if len(record) != width:
            raise ParseError(
                f"expected {width} columns, found {len(record)}",
                first_data_row + i,
                len(record) + 1,
            )
        k = 0
        for j, cell in enumerate(record):
            if j == label_index:
                raw_labels.append(cell.strip())
                continue
            values[i, k] = _parse_cell(cell.strip(), first_data_row + i, j + 1)
            k += 1

    labels = None
    category_names: tuple[str, ...] = ()
    if label_index is not None:
        order = _label_order(raw_labels)
        to_id = {name: c + 1 for c, name in enumerate(order)}
        labels = np.array([to_id[v] for v in raw_labels], dtype=int)
        category_names = tuple(order)
    return Dataset(tuple(names), values, labels, category_names)


def save_dataset(dataset: Dataset, path, delimiter: str = ",", label_column: str | None = None) -> None:
    """Write a dataset in the canonical on-disk form (UTF-8, ``\\n``, reals).

    Values are written with ``repr`` so a reload is bit-identical.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        header = list(dataset.attribute_names)
        if label_column is not None:
            if dataset.source_labels is None:
                raise RuleboxError("dataset has no source labels to write")
            header.append(label_column)
        handle.write(delimiter.join(header) + "\n")
        for i in range(dataset.num_rows):
            cells = [repr(float(v)) for v in dataset.rows[i]]
            if label_column is not None:
                c = int(dataset.source_labels[i])
                if dataset.source_category_names:
                    cells.append(dataset.source_category_names[c - 1])
                else:
                    cells.append(str(c))
            handle.write(delimiter.join(cells) + "\n")


def _stratified_counts(class_sizes: np.ndarray, n_train: int, fraction: float) -> np.ndarray:
    """Allocate ``n_train`` slots across classes, proportional to size.

    Largest-remainder rounding keeps the total exact; ties go to the
    larger class, then the lower class id.
    """
    base = np.floor(fraction * class_sizes).astype(int)
    remainder = fraction * class_sizes - base
    missing = n_train - int(base.sum())
    if missing > 0:
        order = sorted(
            range(len(class_sizes)),
            key=lambda c: (-remainder[c], -class_sizes[c], c),
        )
        for c in order[:missing]:
            base[c] += 1
    elif missing < 0:
        order = sorted(
            range(len(class_sizes)),
            key=lambda c: (remainder[c], class_sizes[c], c),
        )
        for c in order[:-missing]:
            base[c] -= 1
    return base


def split(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled train/test split.

    ``|train| = floor(train_fraction * N)``; the remainder is the test
    side.  When source labels are present the split is stratified so both
    sides keep the class mix of small datasets.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n = dataset.num_rows
    n_train = int(math.floor(train_fraction * n))
    if n_train < 1 or n - n_train < 1:
        raise DegenerateSplit(
            f"fraction {train_fraction} leaves an empty side for N={n}"
        )
    rng = np.random.default_rng(seed)
    if dataset.source_labels is None:
        perm = rng.permutation(n)
        train_idx, test_idx = perm[:n_train], perm[n_train:]
    else:
        classes = np.unique(dataset.source_labels)
        sizes = np.array([(dataset.source_labels == c).sum() for c in classes])
        counts = _stratified_counts(sizes, n_train, train_fraction)
        train_parts, test_parts = [], []
        for c, want in zip(classes, counts):
            members = np.flatnonzero(dataset.source_labels == c)
            members = members[rng.permutation(len(members))]
            train_parts.append(members[:want])
            test_parts.append(members[want:])
        train_idx = np.concatenate(train_parts)
        test_idx = np.concatenate(test_parts)
    return dataset.take(train_idx), dataset.take(test_idx)


def label_with(dataset: Dataset, model) -> LabeledDataset:
    """Label every row with the model's own prediction."""
    labels = model.predict(dataset.rows)
    if dataset.source_category_names and len(
        dataset.source_category_names
    ) == model.num_categories:
        names = dataset.source_category_names
    else:
        names = tuple(str(c) for c in range(1, model.num_categories + 1))
    return LabeledDataset(dataset, labels, names)
