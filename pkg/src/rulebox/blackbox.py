"""The classifier under explanation.

Two concrete kinds: a built-in random forest trained from scratch (bagged
axis-aligned trees, Gini splits, majority vote) and a wrapper around an
external process speaking the line-based prediction-oracle protocol.  The
rest of the toolkit only ever calls :meth:`BlackBoxModel.predict`.
"""

from __future__ import annotations

import math
import os
import selectors
import shlex
import subprocess
from dataclasses import dataclass

import numpy as np

from .errors import (
    HandshakeFailure,
    InsufficientData,
    OracleFailure,
    SingleClassTraining,
    SpawnFailure,
)
from .tabular import Dataset


class BlackBoxModel:
    """A classifier queried only through batch predictions.

    Predictions are 1-based category ids; repeat calls on the same row
    must agree.
    """

    kind: str = "abstract"

    def __init__(self, num_categories: int, input_dim: int):
        if num_categories < 1:
            raise ValueError("num_categories must be >= 1")
        if input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        self.num_categories = num_categories
        self.input_dim = input_dim

    def predict(self, rows) -> np.ndarray:
        raise NotImplementedError

    def _check_rows(self, rows) -> np.ndarray:
        batch = np.asarray(rows, dtype=float)
        if batch.ndim == 1:
            batch = batch.reshape(1, -1) if batch.size else batch.reshape(0, self.input_dim)
        if batch.ndim != 2 or (batch.size and batch.shape[1] != self.input_dim):
            raise ValueError(f"expected rows of width {self.input_dim}")
        if batch.size and not np.isfinite(batch).all():
            raise ValueError("prediction rows must be finite")
        return batch


class FunctionModel(BlackBoxModel):
    """Wrap a plain ``rows -> labels`` function; handy for synthetic models."""

    kind = "function"

    def __init__(self, fn, num_categories: int, input_dim: int):
        super().__init__(num_categories, input_dim)
        self._fn = fn

    def predict(self, rows) -> np.ndarray:
        batch = self._check_rows(rows)
        if batch.shape[0] == 0:
            return np.zeros(0, dtype=int)
        labels = np.asarray(self._fn(batch), dtype=int)
        if labels.shape != (batch.shape[0],):
            raise ValueError("model function returned a wrong-shaped batch")
        return labels


@dataclass(frozen=True)
class ForestConfig:
    """Hyperparameters of the built-in random forest."""

    num_trees: int = 200
    max_depth: int | None = None
    min_leaf: int = 1
    features_per_split: int | None = None  # None -> ceil(sqrt(m))
    seed: int = 0

    def __post_init__(self):
        if self.num_trees < 1:
            raise ValueError("num_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 when set")


class _Tree:
    """One decision tree, stored as flat node arrays for batch prediction."""

    __slots__ = ("feature", "threshold", "left", "right", "label")

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.label: list[int] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.label.append(0)
        return len(self.feature) - 1

    def finalize(self):
        self.feature = np.asarray(self.feature, dtype=np.intp)
        self.threshold = np.asarray(self.threshold, dtype=float)
        self.left = np.asarray(self.left, dtype=np.intp)
        self.right = np.asarray(self.right, dtype=np.intp)
        self.label = np.asarray(self.label, dtype=np.intp)

    def predict(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        node = np.zeros(n, dtype=np.intp)
        active = self.feature[node] >= 0
        rows = np.arange(n)
        while active.any():
            cur = node[active]
            go_left = X[rows[active], self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return self.label[node]


def _majority(counts: np.ndarray) -> int:
    # counts indexed by category id starting at 1; argmax ties resolve to
    # the smallest id.
    return int(np.argmax(counts[1:])) + 1


def _best_threshold(x: np.ndarray, y: np.ndarray, totals: np.ndarray, min_leaf: int):
    """Best Gini split of one feature; returns (weighted_gini, threshold).

    Candidate thresholds are midpoints between consecutive distinct
    sorted values; the first (lowest) threshold wins ties.
    """
    n = x.shape[0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    onehot = (y[order][:, None] == np.arange(1, totals.shape[0] + 1)[None, :])
    prefix = np.cumsum(onehot, axis=0)

    cut = np.arange(min_leaf, n - min_leaf + 1)
    cut = cut[xs[cut] > xs[cut - 1]]
    if cut.size == 0:
        return None
    left = prefix[cut - 1].astype(float)
    right = totals[None, :] - left
    nl = cut.astype(float)
    nr = n - nl
    gini_l = 1.0 - (left**2).sum(axis=1) / nl**2
    gini_r = 1.0 - (right**2).sum(axis=1) / nr**2
    weighted = (nl * gini_l + nr * gini_r) / n
    best = int(np.argmin(weighted))
    threshold = 0.5 * (xs[cut[best] - 1] + xs[cut[best]])
    return float(weighted[best]), float(threshold)


class _TreeBuilder:
    def __init__(self, X, y, num_categories, config: ForestConfig, rng, features_per_split):
        self.X = X
        self.y = y
        self.C = num_categories
        self.config = config
        self.rng = rng
        self.fps = features_per_split
        self.tree = _Tree()

    def build(self) -> _Tree:
        self._grow(np.arange(self.X.shape[0]), 0)
        self.tree.finalize()
        return self.tree

    def _grow(self, idx: np.ndarray, depth: int) -> int:
        node = self.tree._new_node()
        y = self.y[idx]
        counts = np.bincount(y, minlength=self.C + 1)
        self.tree.label[node] = _majority(counts)
        n = idx.shape[0]
        pure = counts.max() == n
        depth_capped = self.config.max_depth is not None and depth >= self.config.max_depth
        if pure or depth_capped or n < 2 * self.config.min_leaf:
            return node

        totals = counts[1:]
        parent_gini = 1.0 - float((totals.astype(float) ** 2).sum()) / n**2
        chosen = np.sort(self.rng.choice(self.X.shape[1], size=self.fps, replace=False))
        best = None
        for j in chosen:
            found = _best_threshold(self.X[idx, j], y, totals, self.config.min_leaf)
            if found is None:
                continue
            gini, threshold = found
            if gini >= parent_gini:
                continue
            if best is None or gini < best[0]:
                best = (gini, int(j), threshold)
        if best is None:
            return node

        _, feature, threshold = best
        self.tree.feature[node] = feature
        self.tree.threshold[node] = threshold
        mask = self.X[idx, feature] <= threshold
        self.tree.left[node] = self._grow(idx[mask], depth + 1)
        self.tree.right[node] = self._grow(idx[~mask], depth + 1)
        return node


class ForestModel(BlackBoxModel):
    """Bagged ensemble of Gini decision trees with majority voting."""

    kind = "builtin_forest"

    def __init__(self, trees: list[_Tree], num_categories: int, input_dim: int,
                 config: ForestConfig):
        super().__init__(num_categories, input_dim)
        self.trees = trees
        self.config = config

    def predict(self, rows) -> np.ndarray:
        batch = self._check_rows(rows)
        n = batch.shape[0]
        if n == 0:
            return np.zeros(0, dtype=int)
        votes = np.zeros((n, self.num_categories), dtype=np.int32)
        rows_idx = np.arange(n)
        for tree in self.trees:
            votes[rows_idx, tree.predict(batch) - 1] += 1
        return np.argmax(votes, axis=1) + 1

    def describe(self) -> str:
        c = self.config
        depth = "none" if c.max_depth is None else c.max_depth
        per_split = c.features_per_split
        if per_split is None:
            per_split = math.ceil(math.sqrt(self.input_dim))
        return (
            f"forest(trees={c.num_trees},max_depth={depth},min_leaf={c.min_leaf},"
            f"features_per_split={per_split},seed={c.seed})"
        )


def train_forest(train: Dataset, config: ForestConfig) -> ForestModel:
    """Train the built-in forest on a dataset with source labels.

    Deterministic for a fixed seed: per-tree generators are spawned from
    one seed sequence, bootstrap then node-level feature subsets consume
    each stream in build order.
    """
    if train.source_labels is None:
        raise SingleClassTraining("training data has no source labels")
    y = train.source_labels
    if np.unique(y).size < 2:
        raise SingleClassTraining("training data has a single class")
    n, m = train.rows.shape
    if n < config.min_leaf:
        raise InsufficientData(f"{n} rows is fewer than min_leaf={config.min_leaf}")

    num_categories = int(y.max())
    fps = config.features_per_split
    if fps is None:
        fps = math.ceil(math.sqrt(m))
    fps = min(fps, m)

    X = train.rows
    streams = np.random.SeedSequence(config.seed).spawn(config.num_trees)
    trees = []
    for stream in streams:
        rng = np.random.default_rng(stream)
        sample = rng.integers(0, n, size=n)
        builder = _TreeBuilder(X[sample], y[sample], num_categories, config, rng, fps)
        trees.append(builder.build())
    return ForestModel(trees, num_categories, m, config)


# --- external prediction oracle -------------------------------------------

_DEFAULT_TIMEOUT = 30.0


class _LineReader:
    """Reads '\\n'-terminated lines from a pipe with a timeout."""

    def __init__(self, pipe):
        self._pipe = pipe
        self._buffer = bytearray()
        self._selector = selectors.DefaultSelector()
        self._selector.register(pipe, selectors.EVENT_READ)
        self._eof = False

    def readline(self, timeout: float) -> str | None:
        """Next line without its newline, or None on EOF."""
        while True:
            newline = self._buffer.find(b"\n")
            if newline >= 0:
                line = self._buffer[:newline]
                del self._buffer[: newline + 1]
                return line.decode("utf-8")
            if self._eof:
                return None if not self._buffer else self._drain()
            if not self._selector.select(timeout):
                raise OracleFailure(f"oracle reply timed out after {timeout}s")
            chunk = os.read(self._pipe.fileno(), 65536)
            if not chunk:
                self._eof = True
            else:
                self._buffer.extend(chunk)

    def _drain(self) -> str:
        line = self._buffer.decode("utf-8")
        self._buffer.clear()
        return line

    def close(self):
        self._selector.close()


class OracleModel(BlackBoxModel):
    """Classifier behind the line-based prediction-oracle protocol.

    Handshake: we send ``HELLO m=<m> c=<C>``, the oracle replies
    ``READY``.  Batches are framed ``BATCH <n>`` followed by n rows of
    comma-joined reals; the oracle answers with n lines each holding a
    1-based category id.  Anything else raises :class:`OracleFailure`.
    Access is serialized per connection.
    """

    kind = "external_oracle"

    def __init__(self, command, num_categories: int, input_dim: int,
                 timeout: float = _DEFAULT_TIMEOUT):
        super().__init__(num_categories, input_dim)
        self.command = command
        self.timeout = timeout
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            self._process = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                bufsize=0,
            )
        except OSError as exc:
            raise SpawnFailure(f"cannot start oracle {argv!r}: {exc}") from exc
        self._reader = _LineReader(self._process.stdout)
        self._handshake()

    def _handshake(self):
        try:
            self._send(f"HELLO m={self.input_dim} c={self.num_categories}\n")
            reply = self._reader.readline(self.timeout)
        except OracleFailure as exc:
            self.close()
            raise HandshakeFailure(str(exc)) from exc
        if reply is None:
            code = self._process.poll()
            self.close()
            raise HandshakeFailure(f"oracle exited before READY (code {code})")
        if reply.strip() != "READY":
            self.close()
            raise HandshakeFailure(f"expected READY, got {reply!r}")

    def _send(self, text: str):
        try:
            self._process.stdin.write(text.encode("utf-8"))
        except (BrokenPipeError, ValueError, OSError) as exc:
            raise OracleFailure(f"oracle pipe closed: {exc}") from exc

    def predict(self, rows) -> np.ndarray:
        batch = self._check_rows(rows)
        n = batch.shape[0]
        if n == 0:
            return np.zeros(0, dtype=int)
        if self._process is None:
            raise OracleFailure("oracle connection is closed")
        if self._process.poll() is not None:
            raise OracleFailure(
                f"oracle process is gone (exit code {self._process.returncode})"
            )
        lines = [f"BATCH {n}\n"]
        for row in batch:
            lines.append(",".join(repr(float(v)) for v in row) + "\n")
        self._send("".join(lines))

        labels = np.empty(n, dtype=int)
        for i in range(n):
            reply = self._reader.readline(self.timeout)
            if reply is None:
                raise OracleFailure(
                    f"oracle closed its output after {i} of {n} replies"
                )
            try:
                label = int(reply.strip())
            except ValueError:
                raise OracleFailure(f"malformed oracle reply {reply!r}")
            if not 1 <= label <= self.num_categories:
                raise OracleFailure(
                    f"oracle label {label} outside 1..{self.num_categories}"
                )
            labels[i] = label
        return labels

    def close(self):
        if getattr(self, "_process", None) is None:
            return
        try:
            if self._process.stdin:
                self._process.stdin.close()
        except OSError:
            pass
        if self._process.poll() is None:
            self._process.terminate()
            try:
                self._process.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self._process.kill()
                self._process.wait()
        self._reader.close()
        self._process = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def connect_oracle(command, num_categories: int, input_dim: int,
                   timeout: float = _DEFAULT_TIMEOUT) -> OracleModel:
    """Spawn an external oracle process and complete the handshake."""
    return OracleModel(command, num_categories, input_dim, timeout)
