"""The interpretable feature space: half-bounded interval indicators.

Each feature is an indicator ``1[x_j <= b]`` where b is an empirical
quantile of the training values of attribute j.  An instance embeds into
{0,1}^M by evaluating every indicator; the complement ``b < x_j`` never
needs its own feature because a zero bit already encodes it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange, NoUsableFeatures, ParseError
from .tabular import Dataset


def _fmt(value: float) -> str:
    """Shortest exact decimal form of a float (repr round-trips)."""
    return repr(float(value))


@dataclass(frozen=True)
class FeatureCatalog:
    """Ordered indicator features plus the per-attribute cut points.

    ``features[i] = (j, b)`` means bit i is ``1[x_j <= b]``.  Features
    are ordered by attribute index, then ascending bound, so the cuts of
    one attribute occupy a contiguous slice.
    """

    attribute_names: tuple[str, ...]
    features: tuple[tuple[int, float], ...]
    bins_per_attribute: int | None = None

    def __post_init__(self):
        if not self.features:
            raise NoUsableFeatures("catalog has no features")
        last = (-1, 0.0)
        for j, b in self.features:
            if not 0 <= j < len(self.attribute_names):
                raise ValueError(f"feature references unknown attribute {j}")
            if j == last[0] and b <= last[1]:
                raise ValueError("bounds must be strictly increasing per attribute")
            if j < last[0]:
                raise ValueError("features must be ordered by attribute")
            last = (j, b)

    @property
    def size(self) -> int:
        return len(self.features)

    def cuts(self, attribute: int) -> np.ndarray:
        """Ascending bounds of one attribute (possibly empty)."""
        return np.array([b for j, b in self.features if j == attribute])

    def attribute_slices(self) -> list[slice]:
        """Per attribute, the slice of feature indices it owns."""
        slices = []
        start = 0
        for j in range(len(self.attribute_names)):
            stop = start
            while stop < len(self.features) and self.features[stop][0] == j:
                stop += 1
            slices.append(slice(start, stop))
            start = stop
        return slices


def build_catalog(train: Dataset, q: int) -> FeatureCatalog:
    """Quantile-discretize every attribute of the training split.

    Per attribute the bounds are the q-1 empirical quantiles (linear
    interpolation between order statistics); duplicate quantiles collapse
    to a single bound and zero-variance attributes contribute nothing.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    probs = np.arange(1, q) / q
    features: list[tuple[int, float]] = []
    for j in range(train.num_attributes):
        column = train.rows[:, j]
        if column.min() == column.max():
            continue
        bounds = np.unique(np.quantile(column, probs))
        features.extend((j, float(b)) for b in bounds)
    if not features:
        raise NoUsableFeatures("every attribute is constant")
    return FeatureCatalog(train.attribute_names, tuple(features), q)


def embed(catalog: FeatureCatalog, x) -> np.ndarray:
    """Map an instance to its indicator bits (dtype uint8, length M)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (len(catalog.attribute_names),):
        raise ValueError("instance width does not match the catalog")
    attrs = np.fromiter((j for j, _ in catalog.features), dtype=int, count=catalog.size)
    bounds = np.fromiter((b for _, b in catalog.features), dtype=float, count=catalog.size)
    return (x[attrs] <= bounds).astype(np.uint8)


def embed_all(catalog: FeatureCatalog, rows: np.ndarray) -> np.ndarray:
    """Embed a batch of rows; shape (n, M)."""
    attrs = np.fromiter((j for j, _ in catalog.features), dtype=int, count=catalog.size)
    bounds = np.fromiter((b for _, b in catalog.features), dtype=float, count=catalog.size)
    return (rows[:, attrs] <= bounds[None, :]).astype(np.uint8)


def feature_description(catalog: FeatureCatalog, i: int, complemented: bool = False) -> str:
    """Human-readable constraint for feature i or its complement."""
    if not 0 <= i < catalog.size:
        raise IndexOutOfRange(f"feature index {i} outside 0..{catalog.size - 1}")
    j, b = catalog.features[i]
    name = catalog.attribute_names[j]
    if complemented:
        return f"{_fmt(b)} < {name}"
    return f"{name} ≤ {_fmt(b)}"


def save_catalog(catalog: FeatureCatalog, path) -> None:
    """One line per feature: ``attribute_index,attribute_name,bound``."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for j, b in catalog.features:
            name = catalog.attribute_names[j]
            if "," in name:
                raise ParseError(f"attribute name {name!r} contains the delimiter")
            handle.write(f"{j},{name},{_fmt(b)}\n")


def load_catalog(path, attribute_names) -> FeatureCatalog:
    """Rebuild a catalog from its serialized form.

    The caller supplies the full attribute-name list (the file only
    mentions attributes that produced features); names are checked
    against it.
    """
    names = tuple(attribute_names)
    features = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                idx_text, rest = line.split(",", 1)
                name, bound_text = rest.rsplit(",", 1)
                j = int(idx_text)
                bound = float(bound_text)
            except ValueError:
                raise ParseError(f"malformed catalog line {line!r}", lineno, 1)
            if not 0 <= j < len(names) or names[j] != name:
                raise ParseError(
                    f"catalog line {lineno}: attribute {j} is not named {name!r}"
                )
            features.append((j, bound))
    return FeatureCatalog(names, tuple(features), None)
