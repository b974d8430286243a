"""Fidelity metrics, purity summaries, and report round trips."""

import numpy as np
import pytest
from sklearn.metrics import f1_score, precision_score, recall_score

from rulebox import (
    CategoryExplanation,
    CategoryMetrics,
    Clustering,
    Dataset,
    ExtractionParams,
    FidelityReport,
    Interval,
    LabeledDataset,
    ParseError,
    Rectangle,
    RectangleSource,
    build_report,
    category_f1,
    macro_f1,
    parse_structured_report,
    purity_summary,
    render_report,
)


def source(cluster_id=0):
    return RectangleSource(cluster_id=cluster_id, base_indices=(0,), weights=(1.0,))


def labeled(rows, labels, names=("cat_1", "cat_2")):
    data = Dataset(attribute_names=("x", "y")[: rows.shape[1]], rows=rows)
    return LabeledDataset(dataset=data, model_labels=labels, category_names=names)


class TestCategoryF1:
    def test_agrees_with_sklearn(self):
        rng = np.random.default_rng(0)
        rows = rng.uniform(0.0, 1.0, size=(80, 2))
        labels = np.where(rows[:, 0] > 0.4, 1, 2)
        explanation = CategoryExplanation(
            category=1,
            rectangles=(Rectangle(((0, Interval(lower=0.5)),)),),
            sources=(source(),),
        )
        data = labeled(rows, labels)
        precision, recall, f1 = category_f1(explanation, data)
        actual = labels == 1
        predicted = rows[:, 0] > 0.5
        assert precision == pytest.approx(precision_score(actual, predicted))
        assert recall == pytest.approx(recall_score(actual, predicted))
        assert f1 == pytest.approx(f1_score(actual, predicted))

    def test_brute_force_counts(self):
        # 8 rows checked by hand: 2 tp, 1 fp, 1 fn
        rows = np.array([[1.0], [2.0], [3.0], [4.0], [5.0], [6.0], [7.0], [8.0]])
        labels = np.array([1, 1, 1, 2, 2, 2, 2, 2])
        explanation = CategoryExplanation(
            category=1,
            rectangles=(Rectangle(((0, Interval(1.5, 4.5)),)),),
            sources=(source(),),
        )
        data = Dataset(attribute_names=("x",), rows=rows)
        data = LabeledDataset(dataset=data, model_labels=labels,
                              category_names=("cat_1", "cat_2"))
        precision, recall, f1 = category_f1(explanation, data)
        assert precision == pytest.approx(2 / 3)
        assert recall == pytest.approx(2 / 3)
        assert f1 == pytest.approx(2 / 3)

    def test_empty_prediction_scores_zero(self):
        rows = np.array([[1.0], [2.0]])
        labels = np.array([1, 2])
        explanation = CategoryExplanation(category=1, unexplained=True)
        data = Dataset(attribute_names=("x",), rows=rows)
        data = LabeledDataset(dataset=data, model_labels=labels,
                              category_names=("cat_1", "cat_2"))
        assert category_f1(explanation, data) == (0.0, 0.0, 0.0)


class TestMacroF1:
    def test_unweighted_mean(self):
        values = [0.25, 0.5, 1.0]
        assert macro_f1(values) == pytest.approx(sum(values) / 3, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            macro_f1([])


class TestBuildReport:
    def setup_method(self):
        rng = np.random.default_rng(1)
        self.rows = rng.uniform(0.0, 1.0, size=(60, 2))
        self.labels = np.where(self.rows[:, 0] > 0.5, 1, 2)
        self.data = labeled(self.rows, self.labels)
        self.explanations = {
            1: CategoryExplanation(category=1,
                                   rectangles=(Rectangle(((0, Interval(lower=0.5)),)),),
                                   sources=(source(0),)),
            2: CategoryExplanation(category=2,
                                   rectangles=(Rectangle(((0, Interval(upper=0.5)),)),),
                                   sources=(source(1),)),
        }

    def test_perfect_rules_score_one(self):
        report = build_report(self.explanations, self.data, "train", "forest")
        assert report.macro_f1 == pytest.approx(1.0)
        assert [m.category for m in report.per_category] == [1, 2]
        assert all(m.f1 == 1.0 for m in report.per_category)

    def test_macro_is_mean_of_categories(self):
        explanations = dict(self.explanations)
        explanations[2] = CategoryExplanation(category=2, unexplained=True)
        report = build_report(explanations, self.data, "test", "forest")
        per = [m.f1 for m in report.per_category]
        assert report.macro_f1 == pytest.approx(sum(per) / len(per), abs=1e-12)
        assert report.per_category[1].f1 == 0.0

    def test_coverage_must_be_exact(self):
        with pytest.raises(ValueError):
            build_report({1: self.explanations[1]}, self.data, "train", "forest")
        extra = dict(self.explanations)
        extra[3] = CategoryExplanation(category=3, unexplained=True)
        with pytest.raises(ValueError):
            build_report(extra, self.data, "train", "forest")

    def test_split_validation(self):
        with pytest.raises(ValueError):
            build_report(self.explanations, self.data, "validation", "forest")

    def test_report_consistency_enforced(self):
        metrics = CategoryMetrics(category=1, precision=1.0, recall=1.0, f1=1.0,
                                  rectangle_count=1, constraint_count=1)
        with pytest.raises(ValueError):
            FidelityReport(per_category=(metrics,), macro_f1=0.5,
                           dataset_split="train", model_descriptor="forest")


def clustering_with(purities):
    purities = np.asarray(purities, dtype=float)
    r = purities.size
    return Clustering(assignments=np.zeros(1, dtype=int),
                      centroids=np.zeros((r, 1)),
                      inertia=0.0,
                      sizes=np.ones(r, dtype=int),
                      purities=purities,
                      majority=np.ones(r, dtype=bool))


class TestPuritySummary:
    def test_single_clustering(self):
        summary = purity_summary({2: clustering_with([1.0, 0.5])})
        median, mean, low = summary[2]
        assert median == pytest.approx(0.75)
        assert mean == pytest.approx(0.75)
        assert low == pytest.approx(0.5)

    def test_pooled_across_seeds(self):
        summary = purity_summary({
            3: [clustering_with([1.0, 1.0, 0.8]), clustering_with([0.6, 1.0, 1.0])]
        })
        median, mean, low = summary[3]
        pooled = [1.0, 1.0, 0.8, 0.6, 1.0, 1.0]
        assert median == pytest.approx(np.median(pooled))
        assert mean == pytest.approx(np.mean(pooled))
        assert low == pytest.approx(0.6)

    def test_keys_sorted(self):
        summary = purity_summary({
            5: clustering_with([1.0]),
            2: clustering_with([0.9]),
        })
        assert list(summary) == [2, 5]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            purity_summary({})


class TestRenderReport:
    def setup_method(self):
        rows = np.array([[0.2, 1.0], [0.8, 2.0], [0.9, 3.0], [0.1, 4.0]])
        labels = np.array([2, 1, 1, 2])
        self.data = labeled(rows, labels)
        self.explanations = {
            1: CategoryExplanation(
                category=1,
                rectangles=(Rectangle(((0, Interval(lower=0.5)),)),),
                sources=(RectangleSource(cluster_id=3, base_indices=(2, 0),
                                         weights=(0.75, 0.25)),)),
            2: CategoryExplanation(category=2, unexplained=True),
        }
        self.params = {1: ExtractionParams(r=4, theta_w=0.3, k_theta=2, r_max=6,
                                           kmeans_restarts=5, seed=9)}
        self.report = build_report(self.explanations, self.data, "test", "forest(50)")

    def test_text_mentions_rules_and_scores(self):
        text = render_report(self.report, self.explanations, format="text",
                             attribute_names=("x", "y"),
                             category_names=("red", "blue"), params=self.params)
        assert "macro F1" in text
        assert "red" in text and "blue" in text
        assert "no rule extracted" in text
        assert "0.5 < x" in text
        assert "r=4" in text

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            render_report(self.report, self.explanations, format="yaml")

    def test_structured_round_trip(self):
        text = render_report(self.report, self.explanations, format="structured",
                             attribute_names=("x", "y"), params=self.params)
        report, explanations, params = parse_structured_report(text)
        assert report == self.report
        assert explanations == self.explanations
        assert params == self.params

    def test_structured_is_byte_identical(self):
        first = render_report(self.report, self.explanations, format="structured",
                              attribute_names=("x", "y"), params=self.params)
        second = render_report(self.report, self.explanations, format="structured",
                               attribute_names=("x", "y"), params=self.params)
        assert first.encode() == second.encode()

    def test_round_trip_then_render_is_byte_identical(self):
        first = render_report(self.report, self.explanations, format="structured",
                              attribute_names=("x", "y"), params=self.params)
        report, explanations, params = parse_structured_report(first)
        second = render_report(report, explanations, format="structured",
                               attribute_names=("x", "y"), params=params)
        assert first == second

    def test_parse_rejects_foreign_payloads(self):
        with pytest.raises(ParseError):
            parse_structured_report('{"format": "something-else"}')
        good = render_report(self.report, self.explanations, format="structured")
        import json

        payload = json.loads(good)
        payload["version"] = 99
        with pytest.raises(ParseError):
            parse_structured_report(json.dumps(payload))

    def test_interval_bounds_survive_round_trip_exactly(self):
        # awkward floats must come back bit for bit
        bounds = (0.1 + 0.2, 1.0 / 3.0)
        explanation = CategoryExplanation(
            category=1,
            rectangles=(Rectangle(((0, Interval(bounds[0], bounds[1] + 1)),
                                   (1, Interval(upper=bounds[1])))),),
            sources=(source(),))
        explanations = {1: explanation,
                        2: CategoryExplanation(category=2, unexplained=True)}
        report = build_report(explanations, self.data, "train", "m")
        text = render_report(report, explanations, format="structured")
        _, parsed, _ = parse_structured_report(text)
        parsed_rect = parsed[1].rectangles[0]
        assert parsed_rect.constraints[0][1].lower == bounds[0]
        assert parsed_rect.constraints[1][1].upper == bounds[1]
