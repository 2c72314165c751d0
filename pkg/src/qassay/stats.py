"""Chi-squared classification of measured distributions.

Three templates are tested: a point mass (classical state), the uniform
distribution over all 2^k outcomes, and the cat distribution with equal
weight on all-zeros and all-ones.  The point-mass and cat templates put zero
probability on most outcomes, where the Pearson statistic is undefined; those
outcomes are pooled into a single off-template bin that is given the small
pseudo-probability ``1 / (2 * shots)`` and the on-template cells are scaled by
the complement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .errors import DomainError, InsufficientShots, TooFewQubits, TooManyBins
from .sim import OutcomeDistribution

MINIMUM_SHOTS = 256
DEFAULT_ALPHA = 0.05
MAX_UNIFORM_QUBITS = 16

_EPS = 1e-16
_FPMIN = 1e-300
_MAX_ITER = 100_000


class TemplateKind(str, Enum):
    CLASSICAL = "classical"
    UNIFORM = "uniform"
    CAT = "cat"

    def __str__(self) -> str:
        return self.value


# classification precedence when more than one template fits
PRECEDENCE = (TemplateKind.CLASSICAL, TemplateKind.CAT, TemplateKind.UNIFORM)


def _lower_series(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_fraction(a: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if a <= 0:
        raise DomainError("shape parameter must be positive")
    if x < 0:
        raise DomainError("x must be non-negative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _lower_series(a, x)))
    return min(1.0, max(0.0, _upper_fraction(a, x)))


def chisq_pvalue(statistic: float, dof: int) -> float:
    """Upper-tail probability of the chi-squared distribution."""
    if dof < 1:
        raise DomainError("dof must be >= 1")
    if not math.isfinite(statistic):
        raise DomainError("statistic must be finite")
    if statistic < 0:
        raise DomainError(f"negative statistic {statistic}")
    return regularized_gamma_q(dof / 2.0, statistic / 2.0)


def pearson(observed: Sequence[float], expected: Sequence[float]) -> float:
    return float(sum((o - e) ** 2 / e for o, e in zip(observed, expected)))


@dataclass(frozen=True)
class ChiSquareResult:
    template: TemplateKind
    statistic: float
    dof: int
    p_value: float
    pooled_bins: int
    mode: Optional[str] = None
    alpha: float = DEFAULT_ALPHA

    @property
    def passed(self) -> bool:
        # reject exactly when p < alpha
        return not self.p_value < self.alpha

    def to_dict(self) -> dict:
        out = {
            "template": self.template.value,
            "statistic": self.statistic,
            "dof": self.dof,
            "p_value": self.p_value,
            "pooled_bins": self.pooled_bins,
            "alpha": self.alpha,
        }
        if self.mode is not None:
            out["mode"] = self.mode
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ChiSquareResult":
        return cls(TemplateKind(d["template"]), float(d["statistic"]), int(d["dof"]),
                   float(d["p_value"]), int(d.get("pooled_bins", 0)), d.get("mode"),
                   float(d.get("alpha", DEFAULT_ALPHA)))


def off_template_mass(shots: int) -> float:
    return 1.0 / (2.0 * shots)


def _check_shots(d: OutcomeDistribution) -> None:
    if d.shots < MINIMUM_SHOTS:
        raise InsufficientShots(f"{d.shots} shots < minimum {MINIMUM_SHOTS}")


def mode_of(d: OutcomeDistribution) -> str:
    if not d.counts:
        return "0" * d.width
    top = max(d.counts.values())
    return min(k for k, v in d.counts.items() if v == top)


def test_classical(d: OutcomeDistribution, alpha: float = DEFAULT_ALPHA,
                   epsilon: Optional[float] = None) -> ChiSquareResult:
    """Point mass at the most frequent outcome vs everything else."""
    _check_shots(d)
    if d.width < 1:
        raise TooFewQubits("classical test needs at least one measured qubit")
    S = d.shots
    eps = off_template_mass(S) if epsilon is None else epsilon
    mode = mode_of(d)
    on = d.counts.get(mode, 0)
    stat = pearson([on, S - on], [S * (1 - eps), S * eps])
    return ChiSquareResult(TemplateKind.CLASSICAL, stat, 1, chisq_pvalue(stat, 1),
                           (1 << d.width) - 1, mode, alpha)


def test_uniform(d: OutcomeDistribution, alpha: float = DEFAULT_ALPHA) -> ChiSquareResult:
    _check_shots(d)
    k = d.width
    if k > MAX_UNIFORM_QUBITS:
        raise TooManyBins(f"{k} qubits -> {1 << k} bins exceeds the {MAX_UNIFORM_QUBITS}-qubit limit")
    if k < 1:
        raise TooFewQubits("uniform test needs at least one measured qubit")
    bins = 1 << k
    expected = d.shots / bins
    observed_sq = sum((v - expected) ** 2 for v in d.counts.values())
    absent = bins - len(d.counts)
    stat = (observed_sq + absent * expected * expected) / expected
    return ChiSquareResult(TemplateKind.UNIFORM, stat, bins - 1, chisq_pvalue(stat, bins - 1), 0, None, alpha)


def test_cat(d: OutcomeDistribution, alpha: float = DEFAULT_ALPHA,
             epsilon: Optional[float] = None) -> ChiSquareResult:
    """All-zeros and all-ones at (1 - eps)/2 each, one pooled off-template bin."""
    _check_shots(d)
    k = d.width
    if k < 2:
        raise TooFewQubits("cat test needs at least two qubits")
    S = d.shots
    eps = off_template_mass(S) if epsilon is None else epsilon
    zeros = d.counts.get("0" * k, 0)
    ones = d.counts.get("1" * k, 0)
    half = S * (1 - eps) / 2
    stat = pearson([zeros, ones, S - zeros - ones], [half, half, S * eps])
    return ChiSquareResult(TemplateKind.CAT, stat, 2, chisq_pvalue(stat, 2), (1 << k) - 2, None, alpha)


TESTS = {
    TemplateKind.CLASSICAL: test_classical,
    TemplateKind.UNIFORM: test_uniform,
    TemplateKind.CAT: test_cat,
}


def applicable(kind: TemplateKind, width: int) -> bool:
    if kind is TemplateKind.CAT:
        return width >= 2
    if kind is TemplateKind.UNIFORM:
        return 1 <= width <= MAX_UNIFORM_QUBITS
    return width >= 1


def classify(d: OutcomeDistribution, alpha: float = DEFAULT_ALPHA
             ) -> tuple[Optional[TemplateKind], dict[TemplateKind, ChiSquareResult]]:
    """Run every applicable test; return the winning template (or None) and all results."""
    results = {kind: TESTS[kind](d, alpha) for kind in PRECEDENCE if applicable(kind, d.width)}
    for kind in PRECEDENCE:
        if kind in results and results[kind].passed:
            return kind, results
    return None, results


# keep pytest from collecting these when imported into test modules
for _fn in (test_classical, test_uniform, test_cat):
    _fn.__test__ = False
