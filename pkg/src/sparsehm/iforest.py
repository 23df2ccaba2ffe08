"""Isolation forest written from scratch, plus degradation-stage segmentation.

Trees are stored as flat heap arrays (children of node ``k`` sit at
``2k+1`` and ``2k+2``) so that growth and traversal run inside the
compiled kernels. All randomness for a tree is drawn up front from its own
generator, spawned from ``random_state``; the result is bit-identical
whichever backend grows it and however many workers are used.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ParameterError
from .sparsity import EULER_GAMMA

#: harmonic numbers are summed exactly up to this index
EXACT_HARMONIC_MAX = 20


def harmonic(k: int) -> float:
    """H(k) = 1 + 1/2 + ... + 1/k, with H(0) = 0.

    Exact summation up to k = 20; above that the asymptotic expansion
    ``ln k + gamma + 1/(2k) - 1/(12k^2) + 1/(120k^4) - 1/(252k^6)``, whose
    error stays below 1e-12 in that range.
    """
    if k < 0:
        raise ParameterError("harmonic number of a negative index")
    if k <= EXACT_HARMONIC_MAX:
        return math.fsum(1.0 / i for i in range(1, k + 1))
    k = float(k)
    return math.log(k) + EULER_GAMMA + 1.0 / (2 * k) - 1.0 / (12 * k**2) + 1.0 / (120 * k**4) - 1.0 / (252 * k**6)


def average_path_length(n: int) -> float:
    """c(n): mean unsuccessful-search depth in a binary search tree of n keys.

    ``c(0) = c(1) = 0`` and ``c(2) = 1``.
    """
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * harmonic(n - 1) - 2.0 * (n - 1) / n


def c_table(n_max: int) -> np.ndarray:
    return np.array([average_path_length(i) for i in range(n_max + 1)])


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 256
    max_sample_fraction: float = 0.5
    max_features_fraction: float = 1.0
    random_state: int = 42
    outlier_threshold: float | None = None  # None: 99th percentile of baseline scores
    min_consecutive_for_stage: int = 10
    window: int = 25

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ParameterError("n_estimators must be >= 1")
        for name in ("max_sample_fraction", "max_features_fraction"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ParameterError(f"{name} must lie in (0, 1], got {v}")
        if self.min_consecutive_for_stage < 1:
            raise ParameterError("min_consecutive_for_stage must be >= 1")
        if self.window < 1:
            raise ParameterError("window must be >= 1")


@dataclass(frozen=True)
class IsolationTree:
    """One tree in heap layout.

    ``feature[k]`` is the split feature of node ``k``, ``kernels.LEAF`` for
    a leaf and ``kernels.UNUSED`` for a slot the tree never reached.
    """

    feature: np.ndarray
    threshold: np.ndarray
    size: np.ndarray
    height_limit: int

    @property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature == kernels.LEAF)

    @property
    def height(self) -> int:
        used = np.flatnonzero(self.feature != kernels.UNUSED)
        return int(np.floor(np.log2(used.max() + 1))) if used.size else 0

    def path_lengths(self, x: np.ndarray, table: np.ndarray) -> np.ndarray:
        return kernels.tree_path_lengths(x, self.feature, self.threshold, self.size, table)

    @classmethod
    def from_nodes(cls, nodes: dict[int, tuple], height_limit: int) -> "IsolationTree":
        """Build a tree by hand: ``{k: ("split", feature, value) | ("leaf", size)}``."""
        m = kernels.heap_size(height_limit)
        feature = np.full(m, kernels.UNUSED, dtype=np.int64)
        threshold = np.zeros(m)
        size = np.zeros(m, dtype=np.int64)
        for k, node in nodes.items():
            if node[0] == "split":
                feature[k], threshold[k] = int(node[1]), float(node[2])
            else:
                feature[k], size[k] = kernels.LEAF, int(node[1])
        return cls(feature, threshold, size, height_limit)


@dataclass
class IsolationForest:
    trees: list[IsolationTree]
    subsample_size: int
    n_features: int
    _table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.trees:
            raise ParameterError("a forest needs at least one tree")
        if self.subsample_size < 2:
            raise ParameterError("subsample_size must be >= 2")
        self._table = c_table(self.subsample_size)

    def mean_path_length(self, points) -> np.ndarray:
        x = _as_points(points)
        if x.shape[1] != self.n_features:
            raise ParameterError(f"forest expects {self.n_features} features, got {x.shape[1]}")
        total = np.zeros(x.shape[0])
        for tree in self.trees:
            total += tree.path_lengths(x, self._table)
        return total / len(self.trees)

    def score_samples(self, points) -> np.ndarray:
        """Anomaly score ``2 ** (-E[h] / c(psi))`` of every point, in (0, 1)."""
        r = self.mean_path_length(points) / average_path_length(self.subsample_size)
        # scalar libm pow: numpy's vectorised pow may differ in the last bit
        # depending on the SIMD path taken, which would break exact reruns
        return np.fromiter((math.pow(2.0, -v) for v in r), dtype=np.float64, count=r.size)

    def score(self, point) -> float:
        return float(self.score_samples(np.atleast_2d(np.asarray(point, dtype=np.float64)))[0])


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ParameterError("points must be a 2-D array (n_points, n_features)")
    if not np.all(np.isfinite(x)):
        raise ParameterError("points must be finite")
    return x


def _grow(x, psi, n_sub_features, height_limit, seed):
    rng = np.random.default_rng(seed)
    rows = rng.choice(x.shape[0], size=psi, replace=False)
    features = np.sort(rng.choice(x.shape[1], size=n_sub_features, replace=False))
    m = kernels.heap_size(height_limit)
    u_feat = rng.random(m)
    u_split = 1.0 - rng.random(m)  # (0, 1]: the split never lands on the minimum
    arrays = kernels.grow_tree(x[rows], features, u_feat, u_split, height_limit)
    return IsolationTree(*arrays, height_limit=height_limit)


def fit(points, config: ForestConfig = ForestConfig(), jobs: int = 1) -> IsolationForest:
    """Grow ``config.n_estimators`` isolation trees.

    Each tree sees ``ceil(max_sample_fraction * n)`` points drawn without
    replacement (at least two) and a random subset of
    ``ceil(max_features_fraction * d)`` features.
    """
    x = _as_points(points)
    n, d = x.shape
    if n < 2:
        raise ParameterError("isolation forest needs at least 2 points")
    psi = min(n, max(2, math.ceil(config.max_sample_fraction * n)))
    n_sub = max(1, math.ceil(config.max_features_fraction * d))
    height_limit = math.ceil(math.log2(psi))
    seeds = np.random.SeedSequence(config.random_state).spawn(config.n_estimators)

    def grow(seed):
        return _grow(x, psi, n_sub, height_limit, seed)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trees = list(pool.map(grow, seeds))
    else:
        trees = [grow(s) for s in seeds]
    return IsolationForest(trees, psi, d)


def windowed_features(series, window: int = 25) -> np.ndarray:
    """Per point: value, mean and (population) std over the trailing window.

    The first ``window - 1`` points have no full trailing window; they reuse
    the statistics of the first full one so that start-up does not look
    anomalous.
    """
    v = np.asarray(series, dtype=np.float64)
    if v.ndim != 1 or not np.all(np.isfinite(v)):
        raise ParameterError("series must be a finite 1-D array")
    out = np.empty((v.size, 3))
    out[:, 0] = v
    for i in range(v.size):
        w = v[max(0, i - window + 1) : max(i + 1, min(window, v.size))]
        out[i, 1:] = w.mean(), w.std()
    return out


@dataclass(frozen=True)
class StageReport:
    scores: np.ndarray
    outlier_flags: np.ndarray
    stage_boundaries: tuple[int, ...]
    threshold: float

    @property
    def n_stages(self) -> int:
        return len(self.stage_boundaries) + 1


def segment_stages(
    scores,
    config: ForestConfig = ForestConfig(),
    baseline_count: int | None = None,
    file_index=None,
) -> StageReport:
    """Split a score series into stages at long runs of outliers.

    A point is an outlier when its score exceeds the threshold: either
    ``config.outlier_threshold`` or, when that is None, the 99th percentile
    of the first ``baseline_count`` scores. Every maximal run of at least
    ``min_consecutive_for_stage`` outliers opens a new stage at its first
    point. Boundaries are positions, or entries of ``file_index`` if given.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or not np.all(np.isfinite(s)):
        raise ParameterError("scores must be a finite 1-D array")
    if config.outlier_threshold is not None:
        thr = float(config.outlier_threshold)
    else:
        if baseline_count is None or not 1 <= baseline_count <= s.size:
            raise ParameterError("adaptive threshold needs 1 <= baseline_count <= len(scores)")
        thr = float(np.quantile(s[:baseline_count], 0.99))
    flags = s > thr
    ids = np.arange(s.size) if file_index is None else np.asarray(file_index)
    bounds = []
    start = None
    for i, f in enumerate(np.append(flags, False)):
        if f and start is None:
            start = i
        elif not f and start is not None:
            if i - start >= config.min_consecutive_for_stage:
                bounds.append(int(ids[start]))
            start = None
    return StageReport(s, flags, tuple(bounds), thr)
