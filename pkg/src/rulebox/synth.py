"""Synthetic datasets labeled by planted rectangle rules.

Rows are drawn uniformly; rectangle i labels its members with category
i+1 (first match wins) and everything unmatched falls into one final
category.  Because the ground-truth rule is known exactly, these
datasets let the whole pipeline be checked end to end: rules extracted
for a model trained on this data should rediscover the planted
rectangles up to discretization resolution.
"""

from __future__ import annotations

import numpy as np

from .rules import Interval, Rectangle
from .tabular import Dataset


def example_rectangles(num_attributes: int = 4) -> tuple:
    """One planted rule: category 1 iff x1 > 0.5 and x2 <= 0.75.

    Thresholds sit on population quartiles of the uniform draw, so a
    quartile discretization can represent the rule exactly.
    """
    if num_attributes < 2:
        raise ValueError("need at least 2 attributes")
    return (Rectangle(((0, Interval(0.5, np.inf)),
                       (1, Interval(-np.inf, 0.75)))),)


def planted_dataset(rectangles, num_rows: int, num_attributes: int,
                    seed: int = 0, low: float = 0.0, high: float = 1.0,
                    attribute_names=None, category_names=None) -> Dataset:
    """Uniform rows on [low, high) labeled by the planted rectangles.

    Categories: rectangle i -> i+1, fallback -> len(rectangles)+1.
    """
    rectangles = tuple(rectangles)
    if not rectangles:
        raise ValueError("need at least one rectangle")
    rng = np.random.default_rng(seed)
    rows = rng.uniform(low, high, size=(num_rows, num_attributes))
    labels = np.full(num_rows, len(rectangles) + 1, dtype=int)
    unassigned = np.ones(num_rows, dtype=bool)
    for i, rectangle in enumerate(rectangles):
        inside = rectangle.contains_rows(rows) & unassigned
        labels[inside] = i + 1
        unassigned &= ~inside
    if attribute_names is None:
        attribute_names = tuple(f"x{j + 1}" for j in range(num_attributes))
    if category_names is None:
        category_names = tuple(f"rule_{i + 1}" for i in range(len(rectangles)))
        category_names += ("other",)
    return Dataset(attribute_names=tuple(attribute_names), rows=rows,
                   source_labels=labels,
                   source_category_names=tuple(category_names))
