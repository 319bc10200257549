"""The Silver Stepsize Schedule, its partial sums and rate sequence.

Steps are 0-indexed.  A schedule of level ``k`` has horizon
``n = 2**k - 1``; step ``t`` is ``1 + rho**(nu(t + 1) - 1)`` where ``nu`` is
the 2-adic valuation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Tuple

import mpmath

from .exact_scalar import (
    ONE,
    CertScalar,
    Interval,
    RadicalScalar,
    c_enclosure,
    radical_sign,
    rho_pow,
)

__all__ = [
    "Schedule",
    "RateInfo",
    "IterationBound",
    "valuation",
    "silver_step",
    "schedule_direct",
    "schedule_recursive",
    "step_sum",
    "rate",
    "iteration_bound",
    "horizon",
    "level_of_horizon",
]


def horizon(k: int) -> int:
    return (1 << k) - 1


def level_of_horizon(n: int) -> int:
    """Inverse of ``horizon``; raises ``ValueError`` unless ``n = 2**k - 1``."""
    if n < 0 or (n + 1) & n:
        raise ValueError(
            f"horizon {n} is not of the form 2^k - 1; rates are only proved at such horizons"
        )
    return (n + 1).bit_length() - 1


@dataclass(frozen=True)
class Schedule:
    steps: Tuple[RadicalScalar, ...]
    k: int

    def __post_init__(self):
        if len(self.steps) != horizon(self.k):
            raise ValueError(f"level {self.k} needs {horizon(self.k)} steps, got {len(self.steps)}")
        if any(radical_sign(a) <= 0 for a in self.steps):
            raise ValueError("stepsizes must be positive")

    @property
    def n(self) -> int:
        return len(self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def __getitem__(self, t):
        return self.steps[t]

    def __iter__(self):
        return iter(self.steps)

    def as_floats(self) -> list:
        return [float(a) for a in self.steps]


def valuation(t: int) -> int:
    """2-adic valuation: largest ``v`` with ``2**v`` dividing ``t``."""
    if t <= 0:
        raise ValueError("valuation is defined for positive integers only")
    return (t & -t).bit_length() - 1


def silver_step(t: int) -> RadicalScalar:
    if t < 0:
        raise ValueError("step index must be non-negative")
    return ONE + rho_pow(valuation(t + 1) - 1)


def schedule_direct(k: int) -> Schedule:
    if k < 1:
        raise ValueError("level k must be >= 1")
    return Schedule(tuple(silver_step(t) for t in range(horizon(k))), k)


def schedule_recursive(k: int) -> Schedule:
    if k < 1:
        raise ValueError("level k must be >= 1")
    steps: Tuple[RadicalScalar, ...] = (RadicalScalar(0, 1),)
    for j in range(1, k):
        steps = steps + (ONE + rho_pow(j - 1),) + steps
    return Schedule(steps, k)


def step_sum(k: int) -> RadicalScalar:
    """Exact sum of the first ``2**k - 1`` steps (always ``rho**k - 1``).

    Every step has integer coordinates in ``(1, sqrt 2)``, so the running
    sum is kept as a pair of Python ints, one term per step.
    """
    if k < 1:
        raise ValueError("level k must be >= 1")
    table = [silver_step((1 << v) - 1) for v in range(k)]
    if any(a.a.denominator != 1 or a.b.denominator != 1 for a in table):
        raise ArithmeticError("expected integer step coordinates")
    ca = [int(a.a) for a in table]
    cb = [int(a.b) for a in table]
    sa = sb = 0
    for t in range(1, horizon(k) + 1):
        v = (t & -t).bit_length() - 1
        sa += ca[v]
        sb += cb[v]
    total = RadicalScalar(sa, sb)
    if total != rho_pow(k) - 1:
        raise ArithmeticError(f"step sum at level {k} is {total}, expected rho^{k} - 1")
    return total


@dataclass(frozen=True)
class RateInfo:
    k: int
    r: Interval
    c: CertScalar
    upper_bound: Interval | None  # None at k = 0 where the bound is infinite

    @property
    def n(self) -> int:
        return horizon(self.k)

    def within_bound(self) -> bool:
        return self.upper_bound is None or self.r.hi <= self.upper_bound.lo


def _asymptotic_bound(n: int, bits: int) -> Interval:
    """Enclosure of ``1 / (2 n**log2(rho))`` rounded outward to ``bits``."""
    iv = mpmath.iv
    saved = iv.prec
    iv.prec = bits + 32
    try:
        rho = 1 + iv.sqrt(2)
        expo = iv.log(rho) / iv.log(2)
        val = 1 / (2 * iv.exp(expo * iv.log(n)))
        lo = _mpf_to_fraction(val.a)
        hi = _mpf_to_fraction(val.b)
    finally:
        iv.prec = saved
    return Interval.hull(Interval.from_fraction(lo, bits), Interval.from_fraction(hi, bits))


def _mpf_to_fraction(x) -> Fraction:
    man, exp = mpmath.mpf(x).man_exp
    return Fraction(man) * (Fraction(2) ** exp)


def rate(k: int, bits: int = 256) -> RateInfo:
    """Certified enclosure of ``r_k = 1 / (1 + sqrt(4 rho**(2k) - 3))``.

    ``r_k = 1 / (2 c_k)``; level 0 is admitted with ``r_0 = 1/2``.
    """
    if k < 0:
        raise ValueError("level must be non-negative")
    if bits < 64:
        raise ValueError("bits must be at least 64")
    r = c_enclosure(k, bits).scale(Fraction(2)).reciprocal()
    ub = _asymptotic_bound(horizon(k), bits) if k >= 1 else None
    return RateInfo(k=k, r=r, c=CertScalar.symbol(k), upper_bound=ub)


class IterationBound(NamedTuple):
    n: int
    k: int
    closed_form: float


def iteration_bound(M: float, R2: float, eps: float, bits: int = 256) -> IterationBound:
    """Smallest horizon ``n = 2**k - 1`` with ``r_k * M * R2 <= eps``.

    The closed form ``(M R2 / (2 eps))**log_rho(2)`` is returned alongside.
    """
    if not (M > 0 and R2 > 0 and eps > 0):
        raise ValueError("M, R2 and eps must all be positive")
    target = Fraction(eps) / (Fraction(M) * Fraction(R2))
    k = 0
    while rate(k, bits).r.hi > target:
        k += 1
    closed = (M * R2 / (2 * eps)) ** (mpmath.log(2) / mpmath.log(1 + mpmath.sqrt(2)))
    return IterationBound(horizon(k), k, float(closed))
