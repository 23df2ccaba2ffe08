"""Classical sparsity measures, each computed along two independent routes.

Every public measure returns a :class:`MeasureResult` holding the textbook
value (``direct_value``) and the value obtained as a ratio of power means
(``mpmf_value``). Agreement between the two is checked in the test-suite
and is cheap enough to monitor in production.

The ``*_values`` helpers evaluate only the direct route but accept a batch
of row vectors; the attribute laboratory relies on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError, SingularIdentityError
from .mpmf import power_mean

EULER_GAMMA = 0.57721566490153286061
_DEN_FLOOR = 1e-300


@dataclass(frozen=True)
class MeasureResult:
    direct_value: float
    mpmf_value: float

    @property
    def relative_gap(self) -> float:
        return abs(self.direct_value - self.mpmf_value) / max(abs(self.direct_value), _DEN_FLOOR)

    @property
    def value(self) -> float:
        return self.direct_value

    def __float__(self) -> float:
        return self.direct_value


def as_envelope(x) -> np.ndarray:
    """Validate an envelope vector: 1-D, finite, strictly positive, length >= 2."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DomainError(f"envelope must be 1-D, got shape {arr.shape}")
    if arr.size < 2:
        raise DomainError("envelope needs at least two samples")
    if not np.all(np.isfinite(arr)):
        raise DomainError("envelope contains non-finite values")
    if not np.all(arr > 0):
        raise DomainError("envelope must be strictly positive")
    return arr


def factorial_root(p: float) -> float:
    """``(p!) ** (1/p)`` with ``p! = Gamma(p + 1)``; the p -> 0 limit is ``exp(-gamma)``."""
    if p == 0:
        return math.exp(-EULER_GAMMA)
    return math.exp(math.lgamma(p + 1.0) / p)


def _product_root(rows: np.ndarray) -> np.ndarray:
    """N-th root of the product, accumulated as mantissa/exponent pairs.

    Deliberately avoids ``mean(log x)`` so it stays independent of the
    power-mean route.
    """
    n = rows.shape[-1]
    mant = np.ones(rows.shape[:-1])
    expo = np.zeros(rows.shape[:-1])
    m, e = np.frexp(rows)
    for start in range(0, n, 64):
        chunk = np.prod(m[..., start : start + 64], axis=-1)
        mant, e_c = np.frexp(mant * chunk)
        expo += e_c + e[..., start : start + 64].sum(axis=-1)
    return np.exp2((expo + np.log2(mant)) / n)


# ---------------------------------------------------------------------------
# batch direct routes (reduce over the last axis)
# ---------------------------------------------------------------------------


def sk_values(x):
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    return (np.sum(x**2, axis=-1) / n) / (np.sum(x, axis=-1) / n) ** 2


def lplq_values(x, p: float = 2.0, q: float = 1.0):
    _check_lplq(p, q)
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    norm_p = np.sum(x**p, axis=-1) ** (1.0 / p)
    if q == 0:
        return n ** (-1.0 / p) * norm_p / _product_root(x) - factorial_root(p) / math.exp(-EULER_GAMMA)
    norm_q = np.sum(x**q, axis=-1) ** (1.0 / q)
    return n ** (1.0 / q - 1.0 / p) * norm_p / norm_q - factorial_root(p) / factorial_root(q)


def pq_values(x, p: float = 1.0, q: float = 2.0):
    _check_pq(p, q)
    x = np.asarray(x, dtype=np.float64)
    return -(np.mean(x**p, axis=-1) ** (1.0 / p)) * np.mean(x**q, axis=-1) ** (-1.0 / q)


def si_values(x):
    x = np.asarray(x, dtype=np.float64)
    return _product_root(x) / (np.sum(x, axis=-1) / x.shape[-1])


def sne_values(x):
    x = np.asarray(x, dtype=np.float64)
    r = x / np.mean(x, axis=-1, keepdims=True)
    return np.mean(r * np.log(r), axis=-1)


def gini_values(x):
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    ordered = np.sort(x, axis=-1)
    weights = (n - np.arange(1, n + 1) + 0.5) / n
    return 1.0 - 2.0 * np.sum(ordered / np.sum(np.abs(x), axis=-1, keepdims=True) * weights, axis=-1)


def _check_lplq(p, q):
    if not (p > 0 and q >= 0 and p > q):
        raise ParameterError(f"Lp/Lq index needs p > q >= 0 and p > 0, got p={p}, q={q}")


def _check_pq(p, q):
    if not (0 < p <= 1 and q > 1):
        raise ParameterError(f"pq-mean needs 0 < p <= 1 and q > 1, got p={p}, q={q}")


# ---------------------------------------------------------------------------
# dual-route measures
# ---------------------------------------------------------------------------


def spectral_kurtosis(x) -> MeasureResult:
    """Normalised fourth moment of the envelope, ``[Gamma(X,2)/Gamma(X,1)]**2``."""
    x = as_envelope(x)
    mp = (power_mean(x, 2.0) / power_mean(x, 1.0)) ** 2
    return MeasureResult(float(sk_values(x)), mp)


def lp_lq_norm_index(x, p: float = 2.0, q: float = 1.0) -> MeasureResult:
    """Normalised Lp/Lq norm ratio minus its Gaussian-envelope offset.

    ``q = 0`` replaces the Lq norm by the geometric mean.
    """
    _check_lplq(p, q)
    x = as_envelope(x)
    offset = factorial_root(p) / factorial_root(q)
    if q == 0:
        den = math.exp(float(np.mean(np.log(x))))  # exp(Gamma(ln X, 1)) == Gamma(X, 0)
    else:
        den = power_mean(x, q)
    mp = power_mean(x, p) / den - offset
    return MeasureResult(float(lplq_values(x, p, q)), mp)


def pq_mean(x, p: float = 1.0, q: float = 2.0) -> MeasureResult:
    """Negated ratio ``-Gamma(X,p)/Gamma(X,q)``; closer to zero means sparser."""
    _check_pq(p, q)
    x = as_envelope(x)
    mp = -power_mean(x, p) / power_mean(x, q)
    return MeasureResult(float(pq_values(x, p, q)), mp)


def smoothness_index(x) -> MeasureResult:
    """Geometric over arithmetic mean, in (0, 1]."""
    x = as_envelope(x)
    mp = power_mean(x, 0.0) / power_mean(x, 1.0)  # Gamma(X, 0) = exp(Gamma(ln X, 1))
    return MeasureResult(float(si_values(x)), mp)


def spectral_negative_entropy(x) -> MeasureResult:
    """Mean of ``r ln r`` with ``r = X / mean(X)``; zero for a flat envelope."""
    x = as_envelope(x)
    r = x / power_mean(x, 1.0)
    # Gamma(., 1) of a signed vector is its arithmetic mean
    mp = float(np.mean(r * np.log(r))) / power_mean([1.0], 1.0)
    return MeasureResult(float(sne_values(x)), mp)


def sne_via_si_identity(x) -> float:
    """SNE recovered from the smoothness index through the SNE/SI identity.

    Raises:
        SingularIdentityError: for a constant vector, where ln(SI) vanishes.
    """
    x = as_envelope(x)
    if np.ptp(x) == 0:
        raise SingularIdentityError("constant vector: ln(SI) = 0 makes the identity singular")
    am = power_mean(x, 1.0)
    log_si_split = float(np.mean(np.log(x))) - math.log(am)
    if log_si_split == 0:
        raise SingularIdentityError("ln(SI) underflowed to zero")
    num = float(np.mean(x * np.log(x / am)))
    log_si = math.log(smoothness_index(x).direct_value)
    return num / (am * log_si_split) * log_si


def gini_index(x) -> MeasureResult:
    """Gini index with ascending order and half-sample weights, in [0, 1)."""
    x = as_envelope(x)
    n = x.size
    ordered = np.sort(x)
    w = 2.0 * (n - np.arange(1, n + 1) + 0.5) / n
    mp = 1.0 - power_mean(w * ordered, 1.0) / power_mean(x, 1.0)
    return MeasureResult(float(gini_values(x)), mp)


MEASURES = {
    "SK": spectral_kurtosis,
    "LPLQ": lp_lq_norm_index,
    "PQ": pq_mean,
    "SI": smoothness_index,
    "SNE": spectral_negative_entropy,
    "GI": gini_index,
}
