"""Fidelity metrics and reports for extracted rule sets.

The model's own labels are the ground truth: for category c, truth is
"the model assigns instance to c" and prediction is "the rectangle
union for c contains the instance".  Per-category precision/recall/F1
aggregate into an unweighted macro F1 over all categories, counting
unexplained categories as 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .rules import (CategoryExplanation, ExtractionParams, Interval, Rectangle,
                    RectangleSource)
from .tabular import LabeledDataset

REPORT_FORMAT = "rulebox-report"
REPORT_VERSION = 1


@dataclass(frozen=True)
class CategoryMetrics:
    category: int
    precision: float
    recall: float
    f1: float
    rectangle_count: int
    constraint_count: int


@dataclass(frozen=True)
class FidelityReport:
    per_category: tuple  # CategoryMetrics, ascending category id
    macro_f1: float
    dataset_split: str   # "train" or "test"
    model_descriptor: str

    def __post_init__(self):
        if self.dataset_split not in ("train", "test"):
            raise ValueError("dataset_split must be 'train' or 'test'")
        mean = sum(m.f1 for m in self.per_category) / max(len(self.per_category), 1)
        if abs(mean - self.macro_f1) > 1e-9:
            raise ValueError("macro_f1 must equal the mean per-category F1")


def binary_counts(actual: np.ndarray, predicted: np.ndarray) -> tuple:
    actual = np.asarray(actual, dtype=bool)
    predicted = np.asarray(predicted, dtype=bool)
    tp = int(np.sum(actual & predicted))
    fp = int(np.sum(~actual & predicted))
    fn = int(np.sum(actual & ~predicted))
    return tp, fp, fn


def _prf(tp: int, fp: int, fn: int) -> tuple:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
    return precision, recall, f1


def category_f1(explanation: CategoryExplanation, data: LabeledDataset) -> tuple:
    """(precision, recall, F1) of one category's rule set against the model."""
    actual = data.model_labels == explanation.category
    predicted = explanation.contains_rows(data.dataset.rows)
    return _prf(*binary_counts(actual, predicted))


def macro_f1(f1_values) -> float:
    values = [float(v) for v in f1_values]
    if not values:
        raise ValueError("need at least one category")
    return sum(values) / len(values)


def build_report(explanations: dict, data: LabeledDataset, dataset_split: str,
                 model_descriptor: str) -> FidelityReport:
    """Evaluate every category's explanation on one split.

    ``explanations`` maps category id -> CategoryExplanation and must
    cover each of the data's categories exactly once.
    """
    categories = sorted(explanations)
    if categories != list(range(1, data.num_categories + 1)):
        raise ValueError("explanations must cover categories 1..C")
    metrics = []
    for category in categories:
        precision, recall, f1 = category_f1(explanations[category], data)
        explanation = explanations[category]
        metrics.append(CategoryMetrics(
            category=category, precision=precision, recall=recall, f1=f1,
            rectangle_count=len(explanation.rectangles),
            constraint_count=explanation.num_constraints))
    return FidelityReport(per_category=tuple(metrics),
                          macro_f1=macro_f1(m.f1 for m in metrics),
                          dataset_split=dataset_split,
                          model_descriptor=model_descriptor)


def purity_summary(clusterings: dict) -> dict:
    """Per r: (median, mean, min) over the pooled cluster purities.

    ``clusterings`` maps r to one clustering or to an iterable of them
    (several seeds or categories pooled together).
    """
    if not clusterings:
        raise ValueError("need at least one clustering")
    summary = {}
    for r in sorted(clusterings):
        entry = clusterings[r]
        members = entry if isinstance(entry, (list, tuple)) else [entry]
        purities = np.concatenate([np.asarray(c.purities, dtype=float)
                                   for c in members])
        summary[r] = (float(np.median(purities)), float(purities.mean()),
                      float(purities.min()))
    return summary


def _rectangle_payload(rectangle: Rectangle, source: RectangleSource) -> dict:
    constraints = []
    for index, interval in rectangle.constraints:
        if interval.lower != -math.inf:
            constraints.append({"attribute": index, "op": ">",
                                "bound": float(interval.lower)})
        if interval.upper != math.inf:
            constraints.append({"attribute": index, "op": "<=",
                                "bound": float(interval.upper)})
    return {
        "constraints": constraints,
        "source": {
            "cluster_id": source.cluster_id,
            "base_indices": list(source.base_indices),
            "weights": [float(w) for w in source.weights],
        },
    }


def _params_payload(params: ExtractionParams) -> dict:
    return {
        "r": params.r, "theta_w": float(params.theta_w), "k_theta": params.k_theta,
        "r_max": params.r_max, "kmeans_restarts": params.kmeans_restarts,
        "seed": params.seed,
    }


def render_report(report: FidelityReport, explanations: dict, format: str = "text",
                  attribute_names=(), category_names=None, params=None) -> str:
    """Render a fidelity report with its rule sets.

    ``format="text"`` gives a human-readable table; ``"structured"``
    gives versioned JSON with stable key order, byte-identical across
    runs with identical inputs.  ``params`` optionally maps category id
    to the ExtractionParams used.
    """
    params = params or {}

    if format == "structured":
        categories = []
        for metrics in report.per_category:
            explanation = explanations[metrics.category]
            entry = {
                "category": metrics.category,
                "precision": float(metrics.precision),
                "recall": float(metrics.recall),
                "f1": float(metrics.f1),
                "unexplained": explanation.unexplained,
                "rectangles": [_rectangle_payload(rect, src)
                               for rect, src in zip(explanation.rectangles,
                                                    explanation.sources)],
            }
            if category_names is not None:
                entry["category_name"] = category_names[metrics.category - 1]
            if metrics.category in params:
                entry["params"] = _params_payload(params[metrics.category])
            categories.append(entry)
        payload = {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "dataset_split": report.dataset_split,
            "model": report.model_descriptor,
            "macro_f1": float(report.macro_f1),
            "attribute_names": list(attribute_names),
            "categories": categories,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    if format != "text":
        raise ValueError("format must be 'text' or 'structured'")

    lines = [f"model: {report.model_descriptor}",
             f"split: {report.dataset_split}",
             f"macro F1: {report.macro_f1:.4f}", ""]
    for metrics in report.per_category:
        explanation = explanations[metrics.category]
        name = (f" ({category_names[metrics.category - 1]})"
                if category_names is not None else "")
        lines.append(f"category {metrics.category}{name}: "
                     f"precision {metrics.precision:.4f} recall {metrics.recall:.4f} "
                     f"F1 {metrics.f1:.4f} "
                     f"[{metrics.rectangle_count} rectangles, "
                     f"{metrics.constraint_count} constraints]")
        if metrics.category in params:
            p = params[metrics.category]
            lines.append(f"  (r={p.r}, theta_w={repr(float(p.theta_w))}, "
                         f"k_theta={p.k_theta})")
        if explanation.unexplained:
            lines.append("  no rule extracted")
        else:
            for rectangle in explanation.rectangles:
                lines.append("  " + rectangle.describe(attribute_names))
        lines.append("")
    return "\n".join(lines)


def parse_structured_report(text: str):
    """Inverse of render_report(..., format="structured").

    Returns (report, explanations, params) with params possibly missing
    categories that carried none.
    """
    payload = json.loads(text)
    if payload.get("format") != REPORT_FORMAT:
        raise ParseError("not a rulebox report")
    if payload.get("version") != REPORT_VERSION:
        raise ParseError(f"unsupported report version {payload.get('version')}")

    explanations = {}
    params = {}
    metrics = []
    for entry in payload["categories"]:
        category = entry["category"]
        rectangles = []
        sources = []
        for item in entry["rectangles"]:
            lower = {}
            upper = {}
            for c in item["constraints"]:
                if c["op"] == ">":
                    lower[c["attribute"]] = c["bound"]
                elif c["op"] == "<=":
                    upper[c["attribute"]] = c["bound"]
                else:
                    raise ParseError(f"unknown op {c['op']!r}")
            constraints = tuple(
                (a, Interval(lower.get(a, -math.inf), upper.get(a, math.inf)))
                for a in sorted(set(lower) | set(upper)))
            rectangles.append(Rectangle(constraints))
            src = item["source"]
            sources.append(RectangleSource(
                cluster_id=src["cluster_id"],
                base_indices=tuple(src["base_indices"]),
                weights=tuple(src["weights"])))
        explanation = CategoryExplanation(
            category=category, rectangles=tuple(rectangles),
            sources=tuple(sources), unexplained=entry["unexplained"])
        explanations[category] = explanation
        if "params" in entry:
            params[category] = ExtractionParams(**entry["params"])
        metrics.append(CategoryMetrics(
            category=category, precision=entry["precision"],
            recall=entry["recall"], f1=entry["f1"],
            rectangle_count=len(rectangles),
            constraint_count=explanation.num_constraints))
    report = FidelityReport(per_category=tuple(metrics),
                            macro_f1=payload["macro_f1"],
                            dataset_split=payload["dataset_split"],
                            model_descriptor=payload["model"])
    return report, explanations, params
