"""Health indexes built as ratios of power means.

Two building blocks are supported:

* PHI - weighted *sums* of power means over weighted sums,
  ``lam * sum(p_m G(x, a_m)) / sum(q_n G(x, b_n)) + c``
* MHI - weighted *products*, ``lam * prod(p_m G(x, a_m)) / prod(q_n G(x, b_n)) + c``

and a GHI is any sum of them. The four ready-made indexes HI1-HI4 are
available through :func:`eval_hi` and, for structural checks, as
:class:`IndexSpec` objects through :func:`hi_spec`.

Before any power mean is taken the squared envelope is scaled to unit mean
and shifted by the slip coefficient ``tau`` (see :func:`prepare_vector`).
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateEnvelopeError,
    DomainError,
    EvaluationError,
    ParameterError,
    SparsehmError,
)
from .mpmf import power_mean
from .sigprep import Band, Signal, squared_envelope

DEFAULT_TAU = 0.065
_DEN_FLOOR = 1e-300


class Transform(str, enum.Enum):
    IDENTITY = "identity"
    LOG_EXP = "log_exp"  # exp(Gamma(ln x, 1)), i.e. the geometric mean


class Kind(str, enum.Enum):
    PHI = "PHI"
    MHI = "MHI"


@dataclass(frozen=True)
class MpmfTerm:
    weight: float
    exponent: float
    transform: Transform = Transform.IDENTITY

    def __post_init__(self):
        object.__setattr__(self, "transform", Transform(self.transform))
        if self.transform is Transform.LOG_EXP and self.exponent != 0:
            raise ParameterError("log_exp terms stand for the exponent-0 mean")

    def evaluate(self, x: np.ndarray) -> float:
        if self.transform is Transform.LOG_EXP:
            return math.exp(float(np.mean(np.log(x))))
        return power_mean(x, self.exponent)


def _check_weights(terms: Sequence[MpmfTerm], where: str) -> None:
    if not terms:
        raise ParameterError(f"{where} needs at least one term")
    total = math.fsum(t.weight for t in terms)
    if abs(total - 1.0) > 1e-12:
        raise ParameterError(f"{where} weights sum to {total!r}, expected 1")
    if all(t.weight == 0 for t in terms):
        raise ParameterError(f"{where} weights are all zero")


@dataclass(frozen=True)
class IndexSpec:
    kind: Kind
    numerator: tuple[MpmfTerm, ...]
    denominator: tuple[MpmfTerm, ...]
    lam: float = 1.0
    offset_c: float = 0.0
    slip_tau: float = DEFAULT_TAU
    normalize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "numerator", tuple(self.numerator))
        object.__setattr__(self, "denominator", tuple(self.denominator))
        _check_weights(self.numerator, "numerator")
        _check_weights(self.denominator, "denominator")
        if self.slip_tau < 0:
            raise ParameterError("slip_tau must be >= 0")
        if self.slip_tau == 0 and any(t.exponent <= 0 for t in self.numerator + self.denominator):
            raise ParameterError("slip_tau must be > 0 when an exponent <= 0 is used")

    # -- plain-text configuration -------------------------------------------

    def to_config(self) -> dict[str, str]:
        def fmt(values):
            return ", ".join(repr(float(v)) for v in values)

        out = {
            "kind": self.kind.value,
            "lambda": repr(float(self.lam)),
            "offset": repr(float(self.offset_c)),
            "tau": repr(float(self.slip_tau)),
            "normalize": "true" if self.normalize else "false",
        }
        for side, terms in (("numerator", self.numerator), ("denominator", self.denominator)):
            out[f"{side}_weights"] = fmt(t.weight for t in terms)
            out[f"{side}_exponents"] = fmt(t.exponent for t in terms)
            out[f"{side}_transforms"] = ", ".join(t.transform.value for t in terms)
        return out

    @classmethod
    def from_config(cls, section: Mapping[str, str]) -> "IndexSpec":
        def floats(key):
            return [float(v) for v in str(section[key]).split(",") if v.strip()]

        def terms(side):
            w = floats(f"{side}_weights")
            e = floats(f"{side}_exponents")
            key = f"{side}_transforms"
            tr = [v.strip() for v in section[key].split(",")] if key in section else ["identity"] * len(w)
            if not len(w) == len(e) == len(tr):
                raise ParameterError(f"{side}: weights, exponents and transforms differ in length")
            return tuple(MpmfTerm(a, b, Transform(c)) for a, b, c in zip(w, e, tr))

        try:
            return cls(
                kind=Kind(section.get("kind", "PHI").strip().upper()),
                numerator=terms("numerator"),
                denominator=terms("denominator"),
                lam=float(section.get("lambda", 1.0)),
                offset_c=float(section.get("offset", 0.0)),
                slip_tau=float(section.get("tau", DEFAULT_TAU)),
                normalize=str(section.get("normalize", "true")).strip().lower() in ("1", "true", "yes", "on"),
            )
        except KeyError as exc:
            raise ParameterError(f"index spec is missing key {exc}") from None


@dataclass
class HiSeries:
    file_index: np.ndarray
    value: np.ndarray
    index_name: str
    errors: dict[int, str] = field(default_factory=dict)

    @property
    def gaps(self) -> np.ndarray:
        return ~np.isfinite(self.value)

    def __len__(self) -> int:
        return self.value.size


def prepare_vector(se, tau: float = DEFAULT_TAU, normalize: bool = True) -> np.ndarray:
    """Scale a squared envelope to unit mean (optionally) and add ``tau``.

    Raises:
        DegenerateEnvelopeError: zero mean.
        DomainError: negative/non-finite input, or a non-positive result.
    """
    se = np.asarray(se, dtype=np.float64)
    if se.ndim != 1 or se.size == 0:
        raise DomainError("squared envelope must be a non-empty 1-D array")
    if not np.all(np.isfinite(se)) or np.any(se < 0):
        raise DomainError("squared envelope must be finite and non-negative")
    if normalize:
        m = float(np.mean(se))
        if m <= 0:
            raise DegenerateEnvelopeError("squared envelope has zero mean")
        se = se / m
    out = se + tau
    if not np.all(out > 0):
        raise DomainError("prepared vector has non-positive entries; raise tau")
    return out


def _ratio(num: float, den: float) -> float:
    if not abs(den) > _DEN_FLOOR:
        raise EvaluationError("degenerate denominator")
    return num / den


def _prepared(spec: IndexSpec, se) -> np.ndarray:
    return prepare_vector(se, spec.slip_tau, spec.normalize)


def eval_phi(spec: IndexSpec, se) -> float:
    if spec.kind is not Kind.PHI:
        raise ParameterError("eval_phi needs a PHI spec")
    x = _prepared(spec, se)
    num = math.fsum(t.weight * t.evaluate(x) for t in spec.numerator)
    den = math.fsum(t.weight * t.evaluate(x) for t in spec.denominator)
    return spec.lam * _ratio(num, den) + spec.offset_c


def eval_mhi(spec: IndexSpec, se) -> float:
    if spec.kind is not Kind.MHI:
        raise ParameterError("eval_mhi needs an MHI spec")
    x = _prepared(spec, se)
    num = math.prod(t.weight * t.evaluate(x) for t in spec.numerator)
    den = math.prod(t.weight * t.evaluate(x) for t in spec.denominator)
    return spec.lam * _ratio(num, den) + spec.offset_c


def eval_spec(spec: IndexSpec, se) -> float:
    return eval_phi(spec, se) if spec.kind is Kind.PHI else eval_mhi(spec, se)


def eval_ghi(specs: Iterable[IndexSpec], se) -> float:
    """Sum of PHI and MHI constituents; an empty list gives 0."""
    return math.fsum(eval_spec(s, se) for s in specs)


def eval_hi(which: int, se, tau: float = DEFAULT_TAU, normalize: bool = True, hi2_variant: str = "printed") -> float:
    """One of the four ready-made indexes, each in [0, 1).

    ``hi2_variant="alternate"`` replaces HI2's repeated Gamma(X,-2) numerator
    term with Gamma(X,-1).
    """
    x = prepare_vector(se, tau, normalize)
    g_m2 = power_mean(x, -2.0)
    g_m1 = power_mean(x, -1.0)
    if which == 1:
        return 1.0 - (g_m2 + g_m1) / (g_m1 + power_mean(x, 1.0))
    g_0 = math.exp(float(np.mean(np.log(x))))
    if which == 2:
        if hi2_variant == "printed":
            num = g_m2 + g_m2
        elif hi2_variant == "alternate":
            num = g_m2 + g_m1
        else:
            raise ParameterError(f"unknown HI2 variant {hi2_variant!r}")
        return 1.0 - num / (g_0 + g_m1)
    if which == 3:
        return 1.0 - (g_m2 * g_m2) / (g_0 * g_m1)
    if which == 4:
        return 1.0 - (g_0 * g_m2) / (power_mean(x, 1.0) * g_m1)
    raise ParameterError(f"health index must be 1..4, got {which}")


def hi_spec(which: int, tau: float = DEFAULT_TAU, normalize: bool = True) -> IndexSpec:
    """HI1..HI4 restated in the PHI/MHI paradigm (lam = -1, c = 1, half weights)."""
    T = MpmfTerm
    geo = T(0.5, 0.0, Transform.LOG_EXP)
    table = {
        1: (Kind.PHI, (T(0.5, -2.0), T(0.5, -1.0)), (T(0.5, -1.0), T(0.5, 1.0))),
        2: (Kind.PHI, (T(0.5, -2.0), T(0.5, -2.0)), (geo, T(0.5, -1.0))),
        3: (Kind.MHI, (T(0.5, -2.0), T(0.5, -2.0)), (geo, T(0.5, -1.0))),
        4: (Kind.MHI, (geo, T(0.5, -2.0)), (T(0.5, 1.0), T(0.5, -1.0))),
    }
    if which not in table:
        raise ParameterError(f"health index must be 1..4, got {which}")
    kind, num, den = table[which]
    return IndexSpec(kind, num, den, lam=-1.0, offset_c=1.0, slip_tau=tau, normalize=normalize)


def _file_entries(files) -> list[tuple[int, Signal | None]]:
    entries = []
    for pos, item in enumerate(files):
        if isinstance(item, tuple):
            entries.append((int(item[0]), item[1]))
        else:
            entries.append((pos, item))
    return entries


def hi_series(
    files,
    band: Band,
    which: int | IndexSpec = 1,
    tau: float = DEFAULT_TAU,
    jobs: int = 1,
    name: str | None = None,
) -> HiSeries:
    """Evaluate a health index on every file of a run, in file order.

    ``files`` holds :class:`Signal` objects or ``(file_id, Signal | None)``
    pairs; ``None`` marks an unreadable file. Per-file failures become NaN
    gaps (reason kept in ``HiSeries.errors``) instead of aborting the run.
    """
    entries = _file_entries(files)
    rates = {s.sample_rate for _, s in entries if s is not None}
    if len(rates) > 1:
        raise ParameterError(f"files have mixed sample rates: {sorted(rates)}")

    if isinstance(which, IndexSpec):
        label = name or "custom"

        def one(sig):
            return eval_spec(which, squared_envelope(sig, band))
    else:
        label = name or f"HI{which}"

        def one(sig):
            return eval_hi(which, squared_envelope(sig, band), tau)

    def job(entry):
        fid, sig = entry
        if sig is None:
            return fid, math.nan, "unreadable file"
        try:
            return fid, float(one(sig)), None
        except SparsehmError as exc:
            return fid, math.nan, str(exc)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(job, entries))
    else:
        results = [job(e) for e in entries]

    ids = np.array([r[0] for r in results], dtype=np.int64)
    values = np.array([r[1] for r in results], dtype=np.float64)
    errors = {r[0]: r[2] for r in results if r[2] is not None}
    return HiSeries(ids, values, label, errors)
