"""Randomised laboratory for the six sparse attributes plus non-negativity.

Each check draws positive vectors (length 4, 16 or 64, entries log-uniform
on [1e-3, 1e3]) from a per-trial generator seeded by
``(seed, attribute, trial)``, applies the attribute's transformation and
compares sparsity before and after. The first violating trial stops the
check and is returned as a :class:`Counterexample` that
:func:`recheck` can replay.

Two conventions are configurable:

* ``oriented`` - compare raw values (default, ``False``) or values
  multiplied by -1 for measures tagged ``LOWER_IS_SPARSER``.
* ``quantifier`` for the Bill Gates check - ``"forall"`` (default)
  demands that sparsity grow with the boosted element from every offset
  on the grid; ``"exists"`` only asks for one offset beyond which it grows.

A strict inequality counts as violated only when contradicted by more than
``1e-12 * max(1, |S|)``; exact ties pass.
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import xlogy

from .errors import ParameterError
from .sparsity import gini_values, lplq_values, pq_values, si_values, sk_values, sne_values

STRICT_TOL = 1e-12
SCALING_TOL = 1e-9
CLONING_TOL = 1e-10
NONNEG_TOL = 1e-12
LENGTHS = (4, 16, 64)
LOG_RANGE = (math.log(1e-3), math.log(1e3))
CLONE_COPIES = (2, 3, 5)
BETA_GRID = np.concatenate([[0.0], np.logspace(-3, 6, 10)])
ALPHA_GRID = np.logspace(-3, 6, 10)


class Orientation(str, enum.Enum):
    HIGHER_IS_SPARSER = "HigherIsSparser"
    LOWER_IS_SPARSER = "LowerIsSparser"


class Attribute(str, enum.Enum):
    NONNEGATIVITY = "Nonnegativity"
    D1 = "D1_RobinHood"
    D2 = "D2_Scaling"
    D3 = "D3_RisingTide"
    D4 = "D4_Cloning"
    P1 = "P1_BillGates"
    P2 = "P2_Babies"

    @property
    def short(self) -> str:
        return "Nonneg" if self is Attribute.NONNEGATIVITY else self.value.split("_")[0]


ATTRIBUTES = tuple(Attribute)


@dataclass(frozen=True)
class MeasureUnderTest:
    """A sparsity measure as seen by the laboratory.

    ``fn`` maps a positive vector to a real; it is only ever called on 1-D
    arrays. ``zero_fn(x)`` returns the measure of ``x`` with a zero
    appended, i.e. its extended-domain value; without it the Babies check
    is inconclusive.
    """

    name: str
    fn: Callable[[np.ndarray], float]
    orientation: Orientation = Orientation.HIGHER_IS_SPARSER
    zero_fn: Callable[[np.ndarray], float] | None = None

    def sign(self, oriented: bool) -> float:
        return -1.0 if oriented and self.orientation is Orientation.LOWER_IS_SPARSER else 1.0

    def __call__(self, x) -> float:
        return float(self.fn(np.asarray(x, dtype=np.float64)))


def _sne_with_zero(x):
    y = np.append(x, 0.0)
    r = y / y.mean()
    return float(np.mean(xlogy(r, r)))


def _append_zero(fn):
    return lambda x: float(fn(np.append(x, 0.0)))


def builtin_measures() -> dict[str, MeasureUnderTest]:
    H, L = Orientation.HIGHER_IS_SPARSER, Orientation.LOWER_IS_SPARSER
    return {
        "SI": MeasureUnderTest("SI", si_values, L, lambda x: 0.0),
        "SNE": MeasureUnderTest("SNE", sne_values, H, _sne_with_zero),
        "GI": MeasureUnderTest("GI", gini_values, H, _append_zero(gini_values)),
        "SK": MeasureUnderTest("SK", sk_values, H, _append_zero(sk_values)),
        "LPLQ": MeasureUnderTest("LPLQ", lplq_values, H, _append_zero(lplq_values)),
        "PQ": MeasureUnderTest("PQ", pq_values, H, _append_zero(pq_values)),
    }


@dataclass(frozen=True)
class Counterexample:
    """Replayable witness: the vector, the transformation parameters and both sides."""

    vector: tuple[float, ...]
    params: dict
    lhs: float
    rhs: float

    def to_json(self) -> str:
        return json.dumps({"vector": list(self.vector), "params": self.params, "lhs": self.lhs, "rhs": self.rhs})

    @classmethod
    def from_json(cls, text: str) -> "Counterexample":
        d = json.loads(text)
        return cls(tuple(d["vector"]), d["params"], d["lhs"], d["rhs"])


@dataclass(frozen=True)
class AttributeVerdict:
    attribute: Attribute
    holds: bool | None  # None: inconclusive
    counterexample: Counterexample | None
    trials: int
    measure: str = ""
    settings: dict = field(default_factory=dict)

    @property
    def mark(self) -> str:
        return {True: "✓", False: "✗", None: "?"}[self.holds]


# ---------------------------------------------------------------------------
# evaluation of one instance: returns (lhs, rhs, violated)
# ---------------------------------------------------------------------------


def _strict_violation(bigger: float, smaller: float) -> bool:
    """True when ``bigger > smaller`` is contradicted beyond the tie tolerance."""
    return smaller - bigger > STRICT_TOL * max(1.0, abs(bigger), abs(smaller))


def _eval_nonneg(m, x, p, oriented):
    s = m(x)
    return s, 0.0, s < -NONNEG_TOL


def _eval_robin_hood(m, x, p, oriented):
    i, j, a = p["i"], p["j"], p["alpha"]
    y = x.copy()
    y[i] -= a
    y[j] += a
    k = m.sign(oriented)
    lhs, rhs = k * m(y), k * m(x)
    return lhs, rhs, _strict_violation(rhs, lhs)  # wants lhs < rhs


def _eval_scaling(m, x, p, oriented):
    lhs, rhs = m(p["alpha"] * x), m(x)
    return lhs, rhs, abs(lhs - rhs) > SCALING_TOL * max(1.0, abs(rhs))


def _eval_rising_tide(m, x, p, oriented):
    k = m.sign(oriented)
    lhs, rhs = k * m(x + p["alpha"]), k * m(x)
    return lhs, rhs, _strict_violation(rhs, lhs)


def _eval_cloning(m, x, p, oriented):
    lhs, rhs = m(np.tile(x, p["copies"])), m(x)
    return lhs, rhs, abs(lhs - rhs) > CLONING_TOL * max(abs(rhs), 1e-300)


def _bumped(m, x, i, amount):
    y = x.copy()
    y[i] += amount
    return m(y)


def _eval_bill_gates(m, x, p, oriented):
    k = m.sign(oriented)
    i = p["i"]
    if p["quantifier"] == "forall":
        lhs = k * _bumped(m, x, i, p["beta"] + p["alpha"])
        rhs = k * _bumped(m, x, i, p["beta"])
        return lhs, rhs, _strict_violation(lhs, rhs)  # wants lhs > rhs
    # "exists": the counterexample states that no beta on the grid works;
    # lhs/rhs report the smallest increment seen for the best beta
    scale = float(np.max(x))
    best = -math.inf
    for beta in BETA_GRID * scale:
        base = k * _bumped(m, x, i, beta)
        worst = min(k * _bumped(m, x, i, beta + a) - base for a in ALPHA_GRID * scale)
        if worst > -STRICT_TOL * max(1.0, abs(base)):
            return worst, 0.0, False
        best = max(best, worst)
    return best, 0.0, True


def _eval_babies(m, x, p, oriented):
    k = m.sign(oriented)
    lhs, rhs = k * float(m.zero_fn(x)), k * m(x)
    return lhs, rhs, _strict_violation(lhs, rhs)


_EVAL = {
    Attribute.NONNEGATIVITY: _eval_nonneg,
    Attribute.D1: _eval_robin_hood,
    Attribute.D2: _eval_scaling,
    Attribute.D3: _eval_rising_tide,
    Attribute.D4: _eval_cloning,
    Attribute.P1: _eval_bill_gates,
    Attribute.P2: _eval_babies,
}


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _rng(seed: int, attribute: Attribute, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, ATTRIBUTES.index(attribute), trial])


def sample_vector(rng: np.random.Generator) -> np.ndarray:
    n = LENGTHS[rng.integers(len(LENGTHS))]
    return np.exp(rng.uniform(*LOG_RANGE, size=n))


def _draw(attribute: Attribute, rng, quantifier: str) -> tuple[np.ndarray, list[dict]]:
    """One trial's vector and the parameter sets to test on it."""
    x = sample_vector(rng)
    n = x.size
    if attribute is Attribute.D1:
        i, j = rng.choice(n, size=2, replace=False)
        if x[i] < x[j]:
            i, j = j, i
        alpha = rng.uniform(0.0, (x[i] - x[j]) / 2)
        return x, [{"i": int(i), "j": int(j), "alpha": float(alpha)}] if alpha > 0 else []
    if attribute in (Attribute.D2, Attribute.D3):
        return x, [{"alpha": float(np.exp(rng.uniform(*LOG_RANGE)))}]
    if attribute is Attribute.D4:
        return x, [{"copies": c} for c in CLONE_COPIES]
    if attribute is Attribute.P1:
        i = int(rng.integers(n))
        if quantifier == "exists":
            return x, [{"i": i, "quantifier": "exists"}]
        scale = float(np.max(x))
        return x, [
            {"i": i, "beta": float(b), "alpha": float(a), "quantifier": "forall"}
            for b in BETA_GRID * scale
            for a in ALPHA_GRID * scale
        ]
    return x, [{}]


def _check(m, attribute, trials, seed, oriented=False, quantifier="forall") -> AttributeVerdict:
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if quantifier not in ("forall", "exists"):
        raise ParameterError("quantifier must be 'forall' or 'exists'")
    settings = {"oriented": oriented, "seed": seed}
    if attribute is Attribute.P1:
        settings["quantifier"] = quantifier
    if attribute is Attribute.P2 and m.zero_fn is None:
        return AttributeVerdict(attribute, None, None, 0, m.name, settings)
    evaluate = _EVAL[attribute]
    for t in range(trials):
        x, param_sets = _draw(attribute, _rng(seed, attribute, t), quantifier)
        for p in param_sets:
            lhs, rhs, violated = evaluate(m, x, p, oriented)
            if violated:
                cx = Counterexample(tuple(float(v) for v in x), dict(p, trial=t), float(lhs), float(rhs))
                return AttributeVerdict(attribute, False, cx, t + 1, m.name, settings)
    return AttributeVerdict(attribute, True, None, trials, m.name, settings)


def check_nonnegativity(m: MeasureUnderTest, trials: int = 10_000, seed: int = 0) -> AttributeVerdict:
    """S(x) >= -1e-12 on every sampled vector (raw values, no orientation)."""
    return _check(m, Attribute.NONNEGATIVITY, trials, seed)


def check_robin_hood(m: MeasureUnderTest, trials: int = 10_000, seed: int = 0, oriented: bool = False) -> AttributeVerdict:
    """Moving ``alpha < (x_i - x_j)/2`` from a larger to a smaller entry must lower S."""
    return _check(m, Attribute.D1, trials, seed, oriented)


def check_scaling(m: MeasureUnderTest, trials: int = 10_000, seed: int = 0) -> AttributeVerdict:
    """``|S(alpha x) - S(x)| <= 1e-9 max(1, |S(x)|)`` for alpha in [1e-3, 1e3]."""
    return _check(m, Attribute.D2, trials, seed)


def check_rising_tide(m: MeasureUnderTest, trials: int = 10_000, seed: int = 0, oriented: bool = False) -> AttributeVerdict:
    """Adding ``alpha > 0`` to every entry must lower S."""
    return _check(m, Attribute.D3, trials, seed, oriented)


def check_cloning(m: MeasureUnderTest, trials: int = 10_000, seed: int = 0) -> AttributeVerdict:
    """S of 2, 3 and 5 concatenated copies equals S(x) within 1e-10 relative."""
    return _check(m, Attribute.D4, trials, seed)


def check_bill_gates(
    m: MeasureUnderTest, trials: int = 10_000, seed: int = 0, oriented: bool = False, quantifier: str = "forall"
) -> AttributeVerdict:
    """Growing one entry must raise S; see the module notes for the two quantifiers.

    Offsets are ``max(x) * {0, 1e-3, ..., 1e6}`` and increments
    ``max(x) * {1e-3, ..., 1e6}``.
    """
    return _check(m, Attribute.P1, trials, seed, oriented, quantifier)


def check_babies(m: MeasureUnderTest, trials: int = 10_000, seed: int = 0, oriented: bool = False) -> AttributeVerdict:
    """Appending a zero must raise S; inconclusive without ``zero_fn``."""
    return _check(m, Attribute.P2, trials, seed, oriented)


def recheck(m: MeasureUnderTest, verdict: AttributeVerdict) -> bool:
    """Replay a failing verdict's counterexample; True if it still violates."""
    cx = verdict.counterexample
    if cx is None:
        raise ParameterError("verdict has no counterexample")
    params = {k: v for k, v in cx.params.items() if k != "trial"}
    x = np.array(cx.vector, dtype=np.float64)
    _, _, violated = _EVAL[verdict.attribute](m, x, params, verdict.settings.get("oriented", False))
    return violated


# ---------------------------------------------------------------------------
# table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttributeTable:
    rows: dict[str, dict[Attribute, AttributeVerdict]]

    def marks(self, measure: str) -> list[str]:
        return [self.rows[measure][a].mark for a in ATTRIBUTES]

    def render_text(self) -> str:
        width = max([len(n) for n in self.rows] + [7])
        head = "Measure".ljust(width) + "  " + "  ".join(a.short.center(6) for a in ATTRIBUTES)
        lines = [head, "-" * len(head)]
        for name in self.rows:
            lines.append(name.ljust(width) + "  " + "  ".join(m.center(6) for m in self.marks(name)))
        return "\n".join(lines) + "\n"

    def csv_rows(self) -> list[list[str]]:
        out = [["measure", "attribute", "holds", "trials", "counterexample"]]
        for name, verdicts in self.rows.items():
            for a in ATTRIBUTES:
                v = verdicts[a]
                holds = {True: "true", False: "false", None: "inconclusive"}[v.holds]
                cx = v.counterexample.to_json() if v.counterexample else ""
                out.append([name, a.value, holds, str(v.trials), cx])
        return out


def attribute_table(
    measures: list[MeasureUnderTest],
    trials: int = 10_000,
    seed: int = 0,
    oriented: bool = False,
    quantifier: str = "forall",
    jobs: int = 1,
) -> AttributeTable:
    """Run all seven checks on every measure; the result does not depend on ``jobs``."""
    tasks = [(m, a) for m in measures for a in ATTRIBUTES]

    def run(task):
        m, a = task
        return _check(m, a, trials, seed, oriented, quantifier)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            verdicts = list(pool.map(run, tasks))
    else:
        verdicts = [run(t) for t in tasks]
    rows: dict[str, dict[Attribute, AttributeVerdict]] = {m.name: {} for m in measures}
    for (m, a), v in zip(tasks, verdicts):
        rows[m.name][a] = v
    return AttributeTable(rows)
