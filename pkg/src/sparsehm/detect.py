"""Healthy-baseline statistics and first-fault-occurrence-time (FFOT) detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateBaselineError, ParameterError
from .health_index import HiSeries

MIN_BASELINE = 30
DEFAULT_MC_RUNS = 10_000
_MC_CHUNK = 2_000


@dataclass(frozen=True)
class LillieforsResult:
    statistic: float
    critical_value: float
    passed: bool


@dataclass(frozen=True)
class BaselineModel:
    mean: float
    std: float
    n: int
    lilliefors_statistic: float
    lilliefors_critical: float
    lilliefors_pass: bool

    @property
    def upper(self) -> float:
        return self.mean + 3.0 * self.std

    @property
    def lower(self) -> float:
        return self.mean - 3.0 * self.std


@dataclass(frozen=True)
class FfotResult:
    ffot_index: int | None
    position: int | None
    upper: float
    lower: float
    exceedance_run: int


def lilliefors_critical_value(n: int, alpha: float = 0.05, mc_runs: int = DEFAULT_MC_RUNS, seed: int = 0) -> float:
    """Monte Carlo (1 - alpha) quantile of the KS distance under normality."""
    rng = np.random.default_rng(seed)
    stats = []
    left = mc_runs
    while left > 0:
        m = min(left, _MC_CHUNK)
        stats.append(kernels.ks_normal_rows(rng.standard_normal((m, n))))
        left -= m
    return float(np.quantile(np.concatenate(stats), 1.0 - alpha))


def lilliefors_test(samples, alpha: float = 0.05, mc_runs: int = DEFAULT_MC_RUNS, seed: int = 0) -> LillieforsResult:
    """KS test against the normal with estimated mean and std.

    The critical value is simulated rather than read from a table, so the
    result depends only on ``(n, alpha, mc_runs, seed)``.

    Raises:
        ParameterError: fewer than 30 samples.
        DegenerateBaselineError: zero variance.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.size < MIN_BASELINE:
        raise ParameterError(f"Lilliefors test needs at least {MIN_BASELINE} samples")
    if np.ptp(x) == 0:
        raise DegenerateBaselineError("baseline has zero variance")
    stat = float(kernels.ks_normal_rows(x[None, :])[0])
    crit = lilliefors_critical_value(x.size, alpha, mc_runs, seed)
    return LillieforsResult(stat, crit, stat < crit)


def _values(series) -> np.ndarray:
    return np.asarray(series.value if isinstance(series, HiSeries) else series, dtype=np.float64)


def fit_baseline(series, k: int = 300, alpha: float = 0.05, mc_runs: int = DEFAULT_MC_RUNS, seed: int = 0) -> BaselineModel:
    """Mean/std of the first ``k`` points (gaps ignored) plus a Lilliefors verdict."""
    if k < MIN_BASELINE:
        raise ParameterError(f"baseline needs k >= {MIN_BASELINE}, got {k}")
    v = _values(series)
    if v.size < k:
        raise ParameterError(f"series has {v.size} points, baseline asks for {k}")
    head = v[:k]
    head = head[np.isfinite(head)]
    if head.size < MIN_BASELINE:
        raise ParameterError("too many gaps in the baseline range")
    # a constant head can still give std ~ 1e-17 from rounding in the mean
    if np.ptp(head) == 0:
        raise DegenerateBaselineError("baseline has zero variance")
    std = float(np.std(head, ddof=1))
    lf = lilliefors_test(head, alpha, mc_runs, seed)
    return BaselineModel(float(np.mean(head)), std, int(head.size), lf.statistic, lf.critical_value, lf.passed)


def detect_ffot(series, baseline: BaselineModel, run_length: int = 3) -> FfotResult:
    """First point that starts ``run_length`` consecutive 3-sigma exceedances.

    Both thresholds are active. Gaps (NaN) count as inside the band and
    therefore break a run. ``ffot_index`` is the file id when a
    :class:`HiSeries` is given, else the position.
    """
    if run_length < 1:
        raise ParameterError("run_length must be >= 1")
    v = _values(series)
    upper, lower = baseline.upper, baseline.lower
    # |v - mean| keeps the two thresholds exactly symmetric
    outside = np.isfinite(v) & (np.abs(v - baseline.mean) > 3.0 * baseline.std)
    run = 0
    pos = None
    for i, flag in enumerate(outside):
        run = run + 1 if flag else 0
        if run == run_length:
            pos = i - run_length + 1
            break
    ffot = None
    if pos is not None:
        ffot = int(series.file_index[pos]) if isinstance(series, HiSeries) else pos
    return FfotResult(ffot, pos, upper, lower, run_length)
