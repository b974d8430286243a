"""Per-instance contribution vectors and the contribution matrix.

For one instance the black box is probed on a cloud of perturbations of
its indicator embedding; a weighted ridge fit of the binary response
(target category or not) on the perturbed bits yields one contribution
per interpretable feature.  Stacking the per-instance vectors column by
column gives the contribution matrix consumed by the factorization
stage.

The perturbation procedure, per instance:

1. embed the instance as bits z0;
2. draw ``num_samples`` masks, flipping every bit independently with
   probability 1/2;
3. map each perturbed z back to instance space by sampling, per
   attribute, a training value uniformly from the bin its bits select;
4. query the model and encode the response as 1 (target) / 0 (rest);
5. weight samples by exp(-d^2 / kernel_width^2) where d is the Hamming
   distance to z0 divided by sqrt(M);
6. solve the weighted ridge least-squares fit of the response on the
   bits (intercept unpenalized).

Everything is deterministic given the configured seed; the matrix
builder derives the per-instance seed as ``seed + j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .features import FeatureCatalog, embed
from .tabular import Dataset, LabeledDataset


@dataclass(frozen=True)
class PerturbationConfig:
    num_samples: int = 1000
    kernel_width: float | None = None  # None -> 0.75 * sqrt(M)
    ridge_strength: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.num_samples < 10:
            raise ValueError("num_samples must be >= 10")
        if self.kernel_width is not None and self.kernel_width <= 0:
            raise ValueError("kernel_width must be positive")
        if self.ridge_strength < 0:
            raise ValueError("ridge_strength must be nonnegative")


@dataclass(frozen=True)
class InstanceExplanation:
    """Fitted surrogate coefficients for one instance and target category.

    ``weighted_agreement`` is the kernel-weighted fraction of perturbed
    samples on which the surrogate's decision (score above 1/2) matches
    the model's binary response; ``sample_f1`` is the F1 of the same
    comparison.  ``degenerate`` marks neighborhoods where every perturbed
    prediction agreed, which forces an all-zero contribution vector.
    """

    contributions: np.ndarray
    intercept: float
    instance_index: int
    target_category: int
    degenerate: bool = False
    weighted_agreement: float = 1.0
    sample_f1: float = 0.0


@dataclass(frozen=True)
class ContributionMatrix:
    """M x N matrix whose column j explains instance j for one category."""

    values: np.ndarray
    target_category: int
    labels: np.ndarray  # (N,) bool: model assigns instance to the target
    intercepts: np.ndarray | None = None
    fidelities: np.ndarray | None = None  # per-instance sample_f1

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("contribution matrix must be 2-d")
        if not np.isfinite(values).all():
            raise ValueError("contribution matrix must be finite")
        labels = np.asarray(self.labels, dtype=bool)
        if labels.shape != (values.shape[1],):
            raise ValueError("labels length must match the column count")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)


class _BinSampler:
    """Maps perturbed bit rows back to instance space.

    Per attribute, the number of zero bits selects a bin between
    consecutive cut points ((-inf, b1], (b1, b2], ..., (bp, inf)); a
    training value is drawn uniformly from that bin.  Bins that captured
    no training value borrow from the nearest populated bin (ties toward
    the lower bin).
    """

    def __init__(self, catalog: FeatureCatalog, train_rows: np.ndarray):
        self.slices = catalog.attribute_slices()
        self.num_attributes = len(catalog.attribute_names)
        self._per_attr = []
        for j in range(self.num_attributes):
            cuts = catalog.cuts(j)
            p = len(cuts)
            values = train_rows[:, j]
            bins = np.searchsorted(cuts, values, side="left")
            order = np.argsort(bins, kind="stable")
            sorted_values = values[order]
            starts = np.searchsorted(bins[order], np.arange(p + 2))
            counts = np.diff(starts)
            populated = np.flatnonzero(counts > 0)
            source = np.empty(p + 1, dtype=int)
            for b in range(p + 1):
                if counts[b] > 0:
                    source[b] = b
                else:
                    source[b] = populated[np.argmin(np.abs(populated - b))]
            self._per_attr.append((p, sorted_values, starts, counts, source))

    def map_back(self, Z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = Z.shape[0]
        X = np.empty((n, self.num_attributes), dtype=float)
        for j in range(self.num_attributes):
            p, sorted_values, starts, counts, source = self._per_attr[j]
            ones = Z[:, self.slices[j]].sum(axis=1) if p else np.zeros(n, dtype=int)
            selected = source[p - ones]
            u = rng.random(n)
            length = counts[selected]
            offset = np.minimum((u * length).astype(int), length - 1)
            X[:, j] = sorted_values[starts[selected] + offset]
        return X


def _kernel_weights(Z: np.ndarray, z0: np.ndarray, kernel_width: float | None) -> np.ndarray:
    m = z0.shape[0]
    hamming = (Z != z0[None, :]).sum(axis=1)
    distance = hamming / math.sqrt(m)
    width = kernel_width if kernel_width is not None else 0.75 * math.sqrt(m)
    return np.exp(-(distance**2) / width**2)


def _binary_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    tp = int(np.sum(y_true & y_pred))
    if tp == 0:
        return 0.0
    fp = int(np.sum(~y_true & y_pred))
    fn = int(np.sum(y_true & ~y_pred))
    return 2 * tp / (2 * tp + fp + fn)


def _fit_targets(Z, weights, labels, targets, ridge):
    """Weighted ridge fits of each target's binary response, sharing the
    factorization of the normal-equation matrix across targets."""
    m = Z.shape[1]
    sw = weights.sum()
    zbar = (weights @ Z) / sw
    Zc = Z - zbar
    ZcW = Zc * weights[:, None]

    todo = []
    results = {}
    for target in targets:
        y = (labels == target).astype(float)
        if y.min() == y.max():
            results[target] = (np.zeros(m), float(y[0]), True)
        else:
            todo.append((target, y))
    if todo:
        A = ZcW.T @ Zc + ridge * np.eye(m)
        B = np.column_stack([ZcW.T @ (y - (weights @ y) / sw) for _, y in todo])
        try:
            coefs = np.linalg.solve(A, B)
        except np.linalg.LinAlgError:
            coefs = np.linalg.lstsq(A, B, rcond=None)[0]
        for col, (target, y) in enumerate(todo):
            beta = coefs[:, col]
            intercept = (weights @ y) / sw - beta @ zbar
            results[target] = (beta, float(intercept), False)
    return results


def _explain_at(model, catalog, sampler, x, targets, config, rng, instance_index):
    z0 = embed(catalog, x)
    m = catalog.size
    flips = rng.integers(0, 2, size=(config.num_samples, m), dtype=np.uint8)
    Z = z0[None, :] ^ flips
    mapped = sampler.map_back(Z, rng)
    predicted = model.predict(mapped)
    weights = _kernel_weights(Z, z0, config.kernel_width)
    fits = _fit_targets(Z.astype(float), weights, predicted, targets, config.ridge_strength)

    explanations = {}
    for target in targets:
        beta, intercept, degenerate = fits[target]
        y = predicted == target
        surrogate = (Z @ beta + intercept) > 0.5
        agree = surrogate == y
        explanations[target] = InstanceExplanation(
            contributions=beta,
            intercept=intercept,
            instance_index=instance_index,
            target_category=target,
            degenerate=degenerate,
            weighted_agreement=float(weights[agree].sum() / weights.sum()),
            sample_f1=_binary_f1(y, surrogate),
        )
    return explanations


def explain_instance(model, catalog: FeatureCatalog, x, target: int,
                     config: PerturbationConfig, train: Dataset) -> InstanceExplanation:
    """Contribution vector of a single instance for one target category."""
    sampler = _BinSampler(catalog, train.rows)
    rng = np.random.default_rng(config.seed)
    return _explain_at(model, catalog, sampler, np.asarray(x, dtype=float),
                       [target], config, rng, -1)[target]


def build_contribution_matrices(model, catalog: FeatureCatalog, data: LabeledDataset,
                                targets, config: PerturbationConfig) -> dict[int, ContributionMatrix]:
    """Contribution matrices for several target categories in one pass.

    The perturbation cloud and model queries per instance are shared
    across targets (the draws do not depend on the target), so asking
    for all categories costs one model sweep instead of C.
    """
    targets = list(targets)
    n = data.dataset.num_rows
    m = catalog.size
    sampler = _BinSampler(catalog, data.dataset.rows)
    columns = {t: np.empty((m, n)) for t in targets}
    intercepts = {t: np.empty(n) for t in targets}
    fidelities = {t: np.empty(n) for t in targets}
    for j in range(n):
        rng = np.random.default_rng(config.seed + j)
        explanations = _explain_at(model, catalog, sampler, data.dataset.rows[j],
                                   targets, config, rng, j)
        for t in targets:
            columns[t][:, j] = explanations[t].contributions
            intercepts[t][j] = explanations[t].intercept
            fidelities[t][j] = explanations[t].sample_f1
    return {
        t: ContributionMatrix(
            values=columns[t],
            target_category=t,
            labels=data.model_labels == t,
            intercepts=intercepts[t],
            fidelities=fidelities[t],
        )
        for t in targets
    }


def build_contribution_matrix(model, catalog: FeatureCatalog, data: LabeledDataset,
                              target: int, config: PerturbationConfig) -> ContributionMatrix:
    """Contribution matrix for one target category."""
    return build_contribution_matrices(model, catalog, data, [target], config)[target]
