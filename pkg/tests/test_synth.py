"""Synthetic datasets with planted rectangle labels."""

import numpy as np
import pytest

from rulebox import Interval, Rectangle, example_rectangles, planted_dataset


class TestExampleRectangles:
    def test_planted_rule(self):
        (rect,) = example_rectangles()
        assert rect.contains([0.6, 0.7, 0.0, 0.0])
        assert not rect.contains([0.4, 0.7, 0.0, 0.0])
        assert not rect.contains([0.6, 0.8, 0.0, 0.0])
        # boundary membership follows the half-open convention
        assert not rect.contains([0.5, 0.75])
        assert rect.contains([0.51, 0.75])

    def test_needs_two_attributes(self):
        with pytest.raises(ValueError):
            example_rectangles(1)


class TestPlantedDataset:
    def test_labels_match_membership(self):
        rects = example_rectangles()
        data = planted_dataset(rects, num_rows=500, num_attributes=4, seed=3)
        inside = rects[0].contains_rows(data.rows)
        np.testing.assert_array_equal(data.source_labels == 1, inside)
        np.testing.assert_array_equal(data.source_labels == 2, ~inside)

    def test_default_names(self):
        data = planted_dataset(example_rectangles(), num_rows=10, num_attributes=3)
        assert data.attribute_names == ("x1", "x2", "x3")
        assert data.source_category_names == ("rule_1", "other")

    def test_first_match_wins(self):
        # overlapping rectangles: the earlier one claims the overlap
        rects = (Rectangle(((0, Interval(upper=0.6)),)),
                 Rectangle(((0, Interval(upper=0.9)),)))
        data = planted_dataset(rects, num_rows=400, num_attributes=2, seed=1)
        x = data.rows[:, 0]
        np.testing.assert_array_equal(data.source_labels == 1, x <= 0.6)
        np.testing.assert_array_equal(data.source_labels == 2, (x > 0.6) & (x <= 0.9))
        np.testing.assert_array_equal(data.source_labels == 3, x > 0.9)
        assert data.source_category_names == ("rule_1", "rule_2", "other")

    def test_deterministic(self):
        a = planted_dataset(example_rectangles(), 50, 4, seed=9)
        b = planted_dataset(example_rectangles(), 50, 4, seed=9)
        np.testing.assert_array_equal(a.rows, b.rows)
        np.testing.assert_array_equal(a.source_labels, b.source_labels)

    def test_range_and_shape(self):
        data = planted_dataset(example_rectangles(), 200, 5, seed=0,
                               low=-2.0, high=3.0)
        assert data.rows.shape == (200, 5)
        assert data.rows.min() >= -2.0
        assert data.rows.max() < 3.0

    def test_custom_names(self):
        data = planted_dataset(example_rectangles(), 10, 2, seed=0,
                               attribute_names=("u", "v"),
                               category_names=("in", "out"))
        assert data.attribute_names == ("u", "v")
        assert data.source_category_names == ("in", "out")

    def test_empty_rectangle_list_rejected(self):
        with pytest.raises(ValueError):
            planted_dataset((), 10, 2)
