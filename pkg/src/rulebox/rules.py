"""Rectangle rules extracted from the factorization.

A rectangle is a conjunction of per-attribute interval constraints
``a_j < x_j <= b_j`` (absent attribute = unconstrained).  Base vectors
are thresholded into rectangles, embedded explanations are clustered,
and per majority cluster the top base vectors are intersected into one
rectangle; the union over majority clusters explains one category.
A grid search over (r, theta_w, k_theta) picks the combination with
the best training F1, preferring simpler rule sets on ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyGrid, TooManyClusters
from .factorization import Factorization
from .features import FeatureCatalog


@dataclass(frozen=True)
class Interval:
    """Half-open interval (lower, upper]: exclusive below, inclusive above.

    A bound of -inf / +inf leaves that side unconstrained.  Anything
    with lower >= upper collapses to the canonical empty interval.
    """

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        lower = float(self.lower)
        upper = float(self.upper)
        if not lower < upper:
            lower, upper = math.inf, -math.inf
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def is_empty(self) -> bool:
        return self.lower > self.upper

    def contains(self, value: float) -> bool:
        return self.lower < value <= self.upper

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lower, other.lower), min(self.upper, other.upper))


EMPTY_INTERVAL = Interval(math.inf, -math.inf)


@dataclass(frozen=True)
class Rectangle:
    """Conjunction of interval constraints, one per constrained attribute.

    ``constraints`` is a tuple of (attribute_index, Interval) sorted by
    attribute.  No constraints = the entire instance space; the
    canonical EMPTY_RECTANGLE (empty=True) contains nothing.
    """

    constraints: tuple = ()
    empty: bool = False

    def __post_init__(self):
        if self.empty:
            if self.constraints:
                raise ValueError("the empty rectangle stores no constraints")
            return
        seen = -1
        for index, interval in self.constraints:
            if index <= seen:
                raise ValueError("constraints must be sorted by attribute index")
            if index < 0:
                raise ValueError("negative attribute index")
            if interval.is_empty:
                raise ValueError("empty intervals collapse to EMPTY_RECTANGLE")
            seen = index

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def contains(self, x) -> bool:
        if self.empty:
            return False
        x = np.asarray(x, dtype=float)
        return all(interval.contains(float(x[index]))
                   for index, interval in self.constraints)

    def contains_rows(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if self.empty:
            return np.zeros(rows.shape[0], dtype=bool)
        mask = np.ones(rows.shape[0], dtype=bool)
        for index, interval in self.constraints:
            column = rows[:, index]
            mask &= (column > interval.lower) & (column <= interval.upper)
        return mask

    def intersect(self, other: "Rectangle") -> "Rectangle":
        if self.empty or other.empty:
            return EMPTY_RECTANGLE
        merged = dict(self.constraints)
        for index, interval in other.constraints:
            combined = merged[index].intersect(interval) if index in merged else interval
            if combined.is_empty:
                return EMPTY_RECTANGLE
            merged[index] = combined
        return Rectangle(tuple(sorted(merged.items())))

    def describe(self, attribute_names) -> str:
        if self.empty:
            return "(empty)"
        if not self.constraints:
            return "(entire space)"
        parts = []
        for index, interval in self.constraints:
            name = attribute_names[index]
            lo, hi = interval.lower, interval.upper
            if lo == -math.inf:
                parts.append(f"{name} ≤ {repr(hi)}")
            elif hi == math.inf:
                parts.append(f"{repr(lo)} < {name}")
            else:
                parts.append(f"{repr(lo)} < {name} ≤ {repr(hi)}")
        return " & ".join(parts)


EMPTY_RECTANGLE = Rectangle(constraints=(), empty=True)


def rectangle_contains(rect: Rectangle, x) -> bool:
    return rect.contains(x)


def rectangle_from_base(w, theta_w: float, catalog: FeatureCatalog) -> Rectangle:
    """Rectangle encoded by the entries of one base vector above theta_w.

    Entry i < M active means feature i holds: x_j <= b.  Entry i >= M
    active means the complement of feature i - M holds: b < x_j.
    Constraints on one attribute intersect; a contradiction yields the
    empty rectangle; no active entry yields the entire space.
    """
    w = np.asarray(w, dtype=float)
    m = catalog.size
    if w.shape != (2 * m,):
        raise ValueError(f"base vector must have length {2 * m}")
    if (w < 0).any():
        raise ValueError("base vector must be nonnegative")
    if theta_w < 0:
        raise ValueError("theta_w must be nonnegative")
    upper: dict[int, float] = {}
    lower: dict[int, float] = {}
    for i in np.flatnonzero(w > theta_w):
        if i < m:
            attribute, bound = catalog.features[i]
            upper[attribute] = min(upper.get(attribute, math.inf), bound)
        else:
            attribute, bound = catalog.features[i - m]
            lower[attribute] = max(lower.get(attribute, -math.inf), bound)
    constraints = []
    for attribute in sorted(set(upper) | set(lower)):
        interval = Interval(lower.get(attribute, -math.inf),
                            upper.get(attribute, math.inf))
        if interval.is_empty:
            return EMPTY_RECTANGLE
        constraints.append((int(attribute), interval))
    return Rectangle(tuple(constraints))


@dataclass(frozen=True)
class Clustering:
    """K-means result over embedded explanations (columns of H)."""

    assignments: np.ndarray  # (N,) cluster id per column
    centroids: np.ndarray    # (r, k)
    inertia: float
    sizes: np.ndarray        # (r,)
    purities: np.ndarray     # (r,) fraction carrying the cluster's top label
    majority: np.ndarray     # (r,) bool: target labels are a strict majority

    @property
    def num_clusters(self) -> int:
        return self.centroids.shape[0]


def _kmeans_once(points, r, rng, max_iters):
    n = points.shape[0]
    centers = np.empty((r, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, r):
        total = d2.sum()
        if total > 0:
            centers[i] = points[rng.choice(n, p=d2 / total)]
        else:
            centers[i] = points[rng.integers(n)]
        d2 = np.minimum(d2, ((points - centers[i]) ** 2).sum(axis=1))

    assignments = None
    for _ in range(max_iters):
        distances = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assignments = distances.argmin(axis=1)
        sizes = np.bincount(new_assignments, minlength=r)
        empties = np.flatnonzero(sizes == 0)
        if empties.size:
            # revive each empty cluster at a far point, never draining a
            # singleton cluster (n >= r guarantees a donor exists)
            point_d2 = distances[np.arange(n), new_assignments]
            order = iter(np.argsort(-point_d2, kind="stable"))
            for cluster in empties:
                for point in order:
                    if sizes[new_assignments[point]] > 1:
                        sizes[new_assignments[point]] -= 1
                        new_assignments[point] = cluster
                        sizes[cluster] = 1
                        break
        for i in range(r):
            centers[i] = points[new_assignments == i].mean(axis=0)
        if assignments is not None and np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments
    inertia = float(((points - centers[assignments]) ** 2).sum())
    return assignments, centers, inertia


def cluster_embeddings(H, labels, r: int, restarts: int = 10,
                       seed: int = 0) -> Clustering:
    """Best-of-restarts K-means (k-means++ seeding) on the columns of H.

    ``labels`` holds one boolean per column: does the model assign that
    instance to the target category.  Purity counts the most common of
    the two labels; the majority flag requires a strict target majority
    (ties count as non-target).
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2:
        raise ValueError("H must be 2-d")
    labels = np.asarray(labels, dtype=bool)
    points = H.T
    n = points.shape[0]
    if labels.shape != (n,):
        raise ValueError("labels length must match the column count")
    if r < 1:
        raise ValueError("cluster count must be >= 1")
    if r > n:
        raise TooManyClusters(f"{r} clusters requested for {n} columns")

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        candidate = _kmeans_once(points, r, rng, max_iters=300)
        if best is None or candidate[2] < best[2]:
            best = candidate
    assignments, centers, inertia = best

    sizes = np.bincount(assignments, minlength=r)
    target_counts = np.bincount(assignments, weights=labels.astype(float),
                                minlength=r).astype(int)
    purities = np.maximum(target_counts, sizes - target_counts) / sizes
    majority = 2 * target_counts > sizes
    return Clustering(assignments=assignments, centroids=centers, inertia=inertia,
                      sizes=sizes, purities=purities, majority=majority)


@dataclass(frozen=True)
class ExtractionParams:
    r: int
    theta_w: float
    k_theta: int
    r_max: int = 10
    kmeans_restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.r <= self.r_max:
            raise ValueError("need 1 <= r <= r_max")
        if self.theta_w < 0:
            raise ValueError("theta_w must be nonnegative")
        if self.k_theta < 1:
            raise ValueError("k_theta must be >= 1")
        if self.kmeans_restarts < 1:
            raise ValueError("kmeans_restarts must be >= 1")


@dataclass(frozen=True)
class RectangleSource:
    """Provenance of one extracted rectangle."""

    cluster_id: int
    base_indices: tuple  # chosen base vector columns, heaviest first
    weights: tuple       # centroid entries at those columns


@dataclass(frozen=True)
class CategoryExplanation:
    """Union of rectangles explaining one category.

    ``unexplained`` is set when no rectangle survived (no majority
    cluster, or every candidate collapsed to the empty rectangle); the
    union then contains nothing.
    """

    category: int
    rectangles: tuple = ()
    sources: tuple = ()
    unexplained: bool = False

    def __post_init__(self):
        if len(self.rectangles) != len(self.sources):
            raise ValueError("rectangles and sources must align")
        if self.unexplained != (len(self.rectangles) == 0):
            raise ValueError("unexplained flag must match an empty rule list")

    @property
    def num_constraints(self) -> int:
        return sum(r.num_constraints for r in self.rectangles)

    def contains(self, x) -> bool:
        return any(r.contains(x) for r in self.rectangles)

    def contains_rows(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        mask = np.zeros(rows.shape[0], dtype=bool)
        for rectangle in self.rectangles:
            mask |= rectangle.contains_rows(rows)
        return mask


def _top_indices(centroid, k_theta):
    order = np.argsort(-np.asarray(centroid, dtype=float), kind="stable")
    return order[:k_theta]


def rules_from_cluster(centroid, W, k_theta: int, theta_w: float,
                       catalog: FeatureCatalog) -> Rectangle:
    """Intersection of the rectangles of the cluster's top base vectors.

    The k_theta largest centroid entries (ties toward the lower index)
    pick the base vectors; their rectangles at threshold theta_w are
    intersected attribute-wise.
    """
    W = np.asarray(W, dtype=float)
    if not 1 <= k_theta <= W.shape[1]:
        raise ValueError("need 1 <= k_theta <= number of base vectors")
    rectangle = Rectangle()
    for l in _top_indices(centroid, k_theta):
        rectangle = rectangle.intersect(rectangle_from_base(W[:, l], theta_w, catalog))
    return rectangle


def _assemble(clustering, W, k_theta, theta_w, catalog, category):
    rectangles = []
    sources = []
    for cluster_id in np.flatnonzero(clustering.majority):
        centroid = clustering.centroids[cluster_id]
        rectangle = rules_from_cluster(centroid, W, k_theta, theta_w, catalog)
        if rectangle.empty or rectangle in rectangles:
            continue
        chosen = _top_indices(centroid, k_theta)
        rectangles.append(rectangle)
        sources.append(RectangleSource(
            cluster_id=int(cluster_id),
            base_indices=tuple(int(l) for l in chosen),
            weights=tuple(float(centroid[l]) for l in chosen),
        ))
    return CategoryExplanation(category=category, rectangles=tuple(rectangles),
                               sources=tuple(sources), unexplained=not rectangles)


def extract_category(H, W, labels, catalog: FeatureCatalog,
                     params: ExtractionParams, category: int = 0) -> CategoryExplanation:
    """One category's rule set at fixed extraction parameters.

    Clusters the embedded explanations, builds a rectangle per majority
    cluster, and unions the survivors (empty rectangles and exact
    duplicates are dropped).
    """
    clustering = cluster_embeddings(H, labels, params.r, params.kmeans_restarts,
                                    params.seed)
    return _assemble(clustering, np.asarray(W, dtype=float), params.k_theta,
                     params.theta_w, catalog, category)


def default_theta_grid(W) -> tuple:
    """Deciles of the positive entries of W; (0,) when W has none."""
    positive = np.asarray(W, dtype=float).ravel()
    positive = positive[positive > 0]
    if positive.size == 0:
        return (0.0,)
    deciles = np.quantile(positive, np.arange(1, 10) / 10)
    return tuple(float(v) for v in np.unique(deciles))


def _binary_f1(actual: np.ndarray, predicted: np.ndarray) -> float:
    tp = int(np.sum(actual & predicted))
    if tp == 0:
        return 0.0
    fp = int(np.sum(~actual & predicted))
    fn = int(np.sum(actual & ~predicted))
    return 2 * tp / (2 * tp + fp + fn)


def search_params(factorization: Factorization, labels, catalog: FeatureCatalog,
                  rows, r_max: int = 10, theta_grid=None, seed: int = 0,
                  restarts: int = 10, category: int = 0):
    """Exhaustive search of (r, theta_w, k_theta) maximizing training F1.

    Grid: r in 1..r_max (capped at the column count, since clusters
    cannot outnumber instances), theta_w over theta_grid (default: the
    deciles of W's positive entries), k_theta in 1..k.  Ties prefer
    fewer rectangles, then fewer total constraints, then smaller r, then
    the earlier grid point.  Returns (best params, its explanation).
    """
    W, H = factorization.W, factorization.H
    labels = np.asarray(labels, dtype=bool)
    rows = np.asarray(rows, dtype=float)
    k = factorization.rank
    n = H.shape[1]
    if theta_grid is None:
        theta_grid = default_theta_grid(W)
    theta_grid = tuple(float(t) for t in theta_grid)
    if r_max < 1 or not theta_grid:
        raise EmptyGrid("need r_max >= 1 and a non-empty theta grid")

    mask_cache: dict[Rectangle, np.ndarray] = {}

    def union_mask(explanation):
        mask = np.zeros(rows.shape[0], dtype=bool)
        for rectangle in explanation.rectangles:
            if rectangle not in mask_cache:
                mask_cache[rectangle] = rectangle.contains_rows(rows)
            mask |= mask_cache[rectangle]
        return mask

    best_key = None
    best = None
    for r in range(1, min(r_max, n) + 1):
        clustering = cluster_embeddings(H, labels, r, restarts, seed)
        for theta_w in theta_grid:
            for k_theta in range(1, k + 1):
                explanation = _assemble(clustering, W, k_theta, theta_w,
                                        catalog, category)
                f1 = _binary_f1(labels, union_mask(explanation))
                key = (f1, -len(explanation.rectangles),
                       -explanation.num_constraints, -r)
                if best_key is None or key > best_key:
                    best_key = key
                    best = (ExtractionParams(r=r, theta_w=theta_w, k_theta=k_theta,
                                             r_max=r_max, kmeans_restarts=restarts,
                                             seed=seed), explanation)
    return best
