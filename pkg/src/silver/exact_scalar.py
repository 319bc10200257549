"""Exact arithmetic over Q(sqrt 2) and the certificate coefficient ring.

``RadicalScalar`` is an element ``a + b*sqrt2`` of the quadratic field with
rational ``a, b``.  ``CertScalar`` lives in ``Q(sqrt2)[C_1, C_2, ...]`` modulo
``C_k**2 = C_k + rho**(2k) - 1``, where ``C_k`` stands for the real number
``c_k = (1 + sqrt(4 rho**(2k) - 3)) / 2``.  Every element has a unique
multilinear canonical form, so equality is coefficient equality.

Signs of field elements are decided exactly.  Signs of ring elements that
involve the ``C_k`` symbols are decided with outward-rounded fixed-point
interval arithmetic at increasing precision.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import isqrt
from typing import Dict, FrozenSet, Iterable, Iterator, Tuple, Union

__all__ = [
    "RadicalScalar",
    "CertScalar",
    "Interval",
    "Sign",
    "SignVerdict",
    "PrecisionExhausted",
    "RHO",
    "SQRT2",
    "radical_sign",
    "ring_mul",
    "ring_sign",
    "ring_eval",
    "rho_pow",
    "c_enclosure",
    "decimal_str",
    "decimal_of",
]

Number = Union[int, Fraction]


class PrecisionExhausted(ArithmeticError):
    """Interval evaluation could not separate a value from zero."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


# --------------------------------------------------------------------------
# Q(sqrt 2)
# --------------------------------------------------------------------------


class RadicalScalar:
    """Immutable ``a + b*sqrt(2)`` with rational ``a`` and ``b``."""

    __slots__ = ("a", "b", "_hash")

    def __init__(self, a: Number | str = 0, b: Number | str = 0) -> None:
        object.__setattr__(self, "a", _frac(a))
        object.__setattr__(self, "b", _frac(b))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("RadicalScalar is immutable")

    @classmethod
    def coerce(cls, x) -> "RadicalScalar":
        if isinstance(x, RadicalScalar):
            return x
        return cls(_frac(x), 0)

    # -- predicates -------------------------------------------------------

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_rational(self) -> bool:
        return self.b == 0

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __eq__(self, other) -> bool:
        if isinstance(other, RadicalScalar):
            return self.a == other.a and self.b == other.b
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        return NotImplemented

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = hash((self.a, self.b)) if self.b else hash(self.a)
            object.__setattr__(self, "_hash", h)
        return h

    # -- field operations -------------------------------------------------

    def __add__(self, other):
        if isinstance(other, RadicalScalar):
            return RadicalScalar(self.a + other.a, self.b + other.b)
        if isinstance(other, (int, Fraction)):
            return RadicalScalar(self.a + other, self.b)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self) -> "RadicalScalar":
        return RadicalScalar(-self.a, -self.b)

    def __sub__(self, other):
        if isinstance(other, RadicalScalar):
            return RadicalScalar(self.a - other.a, self.b - other.b)
        if isinstance(other, (int, Fraction)):
            return RadicalScalar(self.a - other, self.b)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, Fraction)):
            return RadicalScalar(other - self.a, -self.b)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, RadicalScalar):
            a, b, c, d = self.a, self.b, other.a, other.b
            return RadicalScalar(a * c + 2 * b * d, a * d + b * c)
        if isinstance(other, (int, Fraction)):
            return RadicalScalar(self.a * other, self.b * other)
        return NotImplemented

    __rmul__ = __mul__

    def conjugate(self) -> "RadicalScalar":
        """Galois conjugate ``a - b*sqrt2``."""
        return RadicalScalar(self.a, -self.b)

    def norm(self) -> Fraction:
        """Field norm ``a**2 - 2 b**2``; zero only for the zero element."""
        return self.a * self.a - 2 * self.b * self.b

    def inverse(self) -> "RadicalScalar":
        nrm = self.norm()
        if nrm == 0:
            raise ZeroDivisionError("inverse of zero in Q(sqrt2)")
        return RadicalScalar(self.a / nrm, -self.b / nrm)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return RadicalScalar(self.a / other, self.b / other)
        if isinstance(other, RadicalScalar):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return RadicalScalar(other) * self.inverse()
        return NotImplemented

    def __pow__(self, e: int) -> "RadicalScalar":
        if not isinstance(e, int):
            return NotImplemented
        base = self
        if e < 0:
            base, e = self.inverse(), -e
        result = RadicalScalar(1)
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    # -- order / numerics -------------------------------------------------

    def sign(self) -> int:
        return radical_sign(self)

    def __lt__(self, other):
        return (self - RadicalScalar.coerce(other)).sign() < 0

    def __le__(self, other):
        return (self - RadicalScalar.coerce(other)).sign() <= 0

    def __gt__(self, other):
        return (self - RadicalScalar.coerce(other)).sign() > 0

    def __ge__(self, other):
        return (self - RadicalScalar.coerce(other)).sign() >= 0

    def enclose(self, bits: int) -> "Interval":
        if self.b == 0:
            return Interval.from_fraction(self.a, bits)
        return Interval.from_fraction(self.a, bits) + _sqrt2_interval(bits).scale(self.b)

    def __float__(self) -> float:
        if self.b == 0:
            return float(self.a)
        return float(self.enclose(128).mid)

    # -- text -------------------------------------------------------------

    def __repr__(self) -> str:
        return f"RadicalScalar({str(self.a)!r}, {str(self.b)!r})"

    def __str__(self) -> str:
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}*sqrt2"
        op = "+" if self.b > 0 else "-"
        return f"{self.a} {op} {abs(self.b)}*sqrt2"

    @classmethod
    def parse(cls, text: str) -> "RadicalScalar":
        """Inverse of ``str``; accepts ``p/q + r/s*sqrt2`` and its variants."""
        s = text.replace(" ", "")
        if not s:
            raise ValueError("empty scalar")
        a = Fraction(0)
        b = Fraction(0)
        for term in re.findall(r"[+-]?[^+-]+", s):
            if term.endswith("*sqrt2"):
                b += Fraction(term[: -len("*sqrt2")])
            elif term in ("sqrt2", "+sqrt2"):
                b += 1
            elif term == "-sqrt2":
                b -= 1
            else:
                a += Fraction(term)
        return cls(a, b)


def radical_sign(x: RadicalScalar) -> int:
    """Exact sign of ``a + b*sqrt2`` using rational comparisons only."""
    a, b = x.a, x.b
    sa = (a > 0) - (a < 0)
    sb = (b > 0) - (b < 0)
    if sb == 0:
        return sa
    if sa == 0 or sa == sb:
        return sb
    # opposite signs: compare a**2 with 2 b**2
    d = a * a - 2 * b * b
    return sa if d > 0 else sb


SQRT2 = RadicalScalar(0, 1)
RHO = RadicalScalar(1, 1)
ONE = RadicalScalar(1)
ZERO = RadicalScalar(0)


@lru_cache(maxsize=None)
def rho_pow(k: int) -> RadicalScalar:
    """Exact ``rho**k``; negative powers use ``rho**-1 = sqrt2 - 1``."""
    if k < 0:
        return RadicalScalar(-1, 1) ** (-k)
    return RHO**k


# --------------------------------------------------------------------------
# fixed-point interval arithmetic
# --------------------------------------------------------------------------


def _floordiv_pow2(x: int, s: int) -> int:
    return x >> s


def _ceildiv_pow2(x: int, s: int) -> int:
    return -((-x) >> s)


class Interval:
    """Closed interval ``[lo, hi] * 2**-bits`` with integer endpoints.

    Every operation rounds outward to the grid ``2**-bits``.  Results at a
    finer grid are contained in results at a coarser one, so enclosures of
    the same expression are nested as ``bits`` grows.
    """

    __slots__ = ("_lo", "_hi", "bits")

    def __init__(self, lo: int, hi: int, bits: int) -> None:
        if lo > hi:
            raise ValueError("empty interval")
        self._lo = lo
        self._hi = hi
        self.bits = bits

    @classmethod
    def from_fraction(cls, q: Fraction, bits: int) -> "Interval":
        num = q.numerator << bits
        den = q.denominator
        return cls(num // den, -((-num) // den), bits)

    @classmethod
    def hull(cls, a: "Interval", b: "Interval") -> "Interval":
        a._check(b)
        return cls(min(a._lo, b._lo), max(a._hi, b._hi), a.bits)

    @property
    def lo(self) -> Fraction:
        return Fraction(self._lo, 1 << self.bits)

    @property
    def hi(self) -> Fraction:
        return Fraction(self._hi, 1 << self.bits)

    @property
    def mid(self) -> Fraction:
        return Fraction(self._lo + self._hi, 1 << (self.bits + 1))

    @property
    def width(self) -> Fraction:
        return Fraction(self._hi - self._lo, 1 << self.bits)

    def contains(self, q) -> bool:
        return self.lo <= q <= self.hi

    def excludes_zero(self) -> bool:
        return self._lo > 0 or self._hi < 0

    def subset_of(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def _check(self, other: "Interval") -> None:
        if other.bits != self.bits:
            raise ValueError("interval precision mismatch")

    def __add__(self, other: "Interval") -> "Interval":
        self._check(other)
        return Interval(self._lo + other._lo, self._hi + other._hi, self.bits)

    def __neg__(self) -> "Interval":
        return Interval(-self._hi, -self._lo, self.bits)

    def __sub__(self, other: "Interval") -> "Interval":
        return self + (-other)

    def __mul__(self, other: "Interval") -> "Interval":
        self._check(other)
        p = (self._lo * other._lo, self._lo * other._hi, self._hi * other._lo, self._hi * other._hi)
        b = self.bits
        return Interval(_floordiv_pow2(min(p), b), _ceildiv_pow2(max(p), b), b)

    def scale(self, q: Fraction) -> "Interval":
        """Multiply by an exact rational, rounding outward once."""
        q = _frac(q)
        num, den = q.numerator, q.denominator
        ends = (self._lo * num, self._hi * num)
        lo, hi = min(ends), max(ends)
        return Interval(lo // den, -((-hi) // den), self.bits)

    def reciprocal(self) -> "Interval":
        if self._lo <= 0 <= self._hi:
            raise ZeroDivisionError("interval contains zero")
        one = 1 << (2 * self.bits)
        lo = one // self._hi
        hi = -((-one) // self._lo)
        return Interval(lo, hi, self.bits)

    def sqrt(self) -> "Interval":
        if self._lo < 0:
            raise ValueError("sqrt of interval with negative part")
        b = self.bits
        lo = isqrt(self._lo << b)
        top = self._hi << b
        hi = isqrt(top)
        if hi * hi < top:
            hi += 1
        return Interval(lo, hi, b)

    def __repr__(self) -> str:
        return f"Interval([{float(self.lo)!r}, {float(self.hi)!r}], bits={self.bits})"


@lru_cache(maxsize=64)
def _sqrt2_interval(bits: int) -> Interval:
    return Interval(2 << bits, 2 << bits, bits).sqrt()


@lru_cache(maxsize=1024)
def c_enclosure(k: int, bits: int) -> Interval:
    """Enclosure of ``c_k = (1 + sqrt(4 rho**(2k) - 3)) / 2``."""
    radicand = (4 * rho_pow(2 * k) - 3).enclose(bits)
    root = radicand.sqrt()
    return (Interval.from_fraction(Fraction(1), bits) + root).scale(Fraction(1, 2))


# --------------------------------------------------------------------------
# Q(sqrt2)[C_1, C_2, ...] / (C_k^2 - C_k - rho^{2k} + 1)
# --------------------------------------------------------------------------

Monomial = FrozenSet[int]
_EMPTY: Monomial = frozenset()


def _monomial_key(m: Monomial) -> Tuple[int, Tuple[int, ...]]:
    return (len(m), tuple(sorted(m)))


@lru_cache(maxsize=None)
def _square_shift(k: int) -> RadicalScalar:
    """Constant term of the reduction ``C_k**2 = C_k + (rho**(2k) - 1)``."""
    return rho_pow(2 * k) - 1


@lru_cache(maxsize=65536)
def _monomial_product(m1: Monomial, m2: Monomial) -> Tuple[Tuple[Monomial, RadicalScalar], ...]:
    """Canonical expansion of ``m1 * m2`` as (monomial, coefficient) pairs."""
    common = m1 & m2
    base = m1 ^ m2
    if not common:
        return ((base, ONE),)
    out: Dict[Monomial, RadicalScalar] = {}
    common_list = sorted(common)
    # each repeated C_k contributes either C_k or the constant rho^{2k} - 1
    for r in range(len(common_list) + 1):
        for keep in combinations(common_list, r):
            coef = ONE
            for k in common_list:
                if k not in keep:
                    coef = coef * _square_shift(k)
            m = base | frozenset(keep)
            out[m] = out.get(m, ZERO) + coef
    return tuple(out.items())


class CertScalar:
    """Immutable element of the certificate ring in canonical form."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Dict[Monomial, RadicalScalar] | None = None) -> None:
        clean: Dict[Monomial, RadicalScalar] = {}
        for m, c in (terms or {}).items():
            # C_0 = c_0 = 1
            m = frozenset(m) - {0}
            c = clean.get(m, ZERO) + RadicalScalar.coerce(c)
            if c:
                clean[m] = c
            else:
                clean.pop(m, None)
        self.terms: Dict[Monomial, RadicalScalar] = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: Dict[Monomial, RadicalScalar]) -> "CertScalar":
        obj = cls.__new__(cls)
        obj.terms = terms
        obj._hash = None
        return obj

    @classmethod
    def const(cls, x) -> "CertScalar":
        x = RadicalScalar.coerce(x)
        return cls._raw({_EMPTY: x} if x else {})

    @classmethod
    def symbol(cls, k: int) -> "CertScalar":
        """The symbol ``C_k``; ``C_0`` is the constant 1."""
        if k < 0:
            raise ValueError("level must be non-negative")
        if k == 0:
            return cls.const(1)
        return cls._raw({frozenset((k,)): ONE})

    @classmethod
    def coerce(cls, x) -> "CertScalar":
        if isinstance(x, CertScalar):
            return x
        return cls.const(x)

    @property
    def level(self) -> int:
        """Largest symbol index present (0 for field elements)."""
        return max((max(m) for m in self.terms if m), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_constant(self) -> bool:
        return all(not m for m in self.terms)

    def constant_part(self) -> RadicalScalar:
        return self.terms.get(_EMPTY, ZERO)

    def as_radical(self) -> RadicalScalar:
        if not self.is_constant():
            raise ValueError("element involves C symbols")
        return self.constant_part()

    def __eq__(self, other) -> bool:
        if isinstance(other, CertScalar):
            return self.terms == other.terms
        if isinstance(other, (RadicalScalar, int, Fraction)):
            return self.terms == CertScalar.const(other).terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __add__(self, other):
        if not isinstance(other, CertScalar):
            if isinstance(other, (RadicalScalar, int, Fraction)):
                other = CertScalar.const(other)
            else:
                return NotImplemented
        out = dict(self.terms)
        for m, c in other.terms.items():
            prev = out.get(m)
            if prev is None:
                out[m] = c
            else:
                s = prev + c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return CertScalar._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "CertScalar":
        return CertScalar._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, CertScalar):
            if isinstance(other, (RadicalScalar, int, Fraction)):
                other = CertScalar.const(other)
            else:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, x) -> "CertScalar":
        x = RadicalScalar.coerce(x)
        if not x:
            return CertScalar._raw({})
        return CertScalar._raw({m: c * x for m, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (RadicalScalar, int, Fraction)):
            return self.scale(other)
        if isinstance(other, CertScalar):
            return ring_mul(self, other)
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "CertScalar":
        if not isinstance(e, int) or e < 0:
            return NotImplemented
        out = CertScalar.const(1)
        for _ in range(e):
            out = out * self
        return out

    def sorted_terms(self) -> Iterator[Tuple[Monomial, RadicalScalar]]:
        for m in sorted(self.terms, key=_monomial_key):
            yield m, self.terms[m]

    def __repr__(self) -> str:
        return f"CertScalar({str(self)!r})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        if self.is_constant():
            return str(self.constant_part())
        parts = []
        for m, c in self.sorted_terms():
            syms = "*".join(f"C{k}" for k in sorted(m))
            if not m:
                parts.append(f"({c})")
            elif c == 1:
                parts.append(syms)
            else:
                parts.append(f"({c})*{syms}")
        return " + ".join(parts)

    @classmethod
    def parse(cls, text: str) -> "CertScalar":
        """Inverse of ``str``: ``(coef)*C1*C2 + C3 + (coef) + ...``."""
        s = text.strip()
        if "C" not in s:
            return cls.const(RadicalScalar.parse(s))
        terms: Dict[Monomial, RadicalScalar] = {}
        for term in _split_top_level(s):
            coef = ONE
            if term.startswith("("):
                close = term.index(")")
                coef = RadicalScalar.parse(term[1:close])
                term = term[close + 1 :].lstrip("*")
            syms = [t for t in term.split("*") if t]
            if not all(re.fullmatch(r"C\d+", t) for t in syms):
                raise ValueError(f"cannot parse CertScalar: {text!r}")
            m = frozenset(int(t[1:]) for t in syms)
            terms[m] = terms.get(m, ZERO) + coef
        return cls(terms)


def _split_top_level(s: str) -> list:
    parts, depth, cur = [], 0, []
    i = 0
    while i < len(s):
        ch = s[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and s.startswith(" + ", i):
            parts.append("".join(cur).strip())
            cur = []
            i += 3
            continue
        cur.append(ch)
        i += 1
    parts.append("".join(cur).strip())
    return parts


def ring_mul(x: CertScalar, y: CertScalar) -> CertScalar:
    """Product in canonical form, reducing every ``C_k**2``."""
    if len(x.terms) == 1 and _EMPTY in x.terms:
        return y.scale(x.terms[_EMPTY])
    if len(y.terms) == 1 and _EMPTY in y.terms:
        return x.scale(y.terms[_EMPTY])
    out: Dict[Monomial, RadicalScalar] = {}
    for m1, c1 in x.terms.items():
        for m2, c2 in y.terms.items():
            c12 = c1 * c2
            for m, c in _monomial_product(m1, m2):
                val = c12 * c if c != ONE else c12
                prev = out.get(m)
                out[m] = val if prev is None else prev + val
    return CertScalar({m: c for m, c in out.items() if c})


def ring_eval(x: CertScalar | RadicalScalar, bits: int = 256) -> Interval:
    """Interval enclosure of ``x`` under ``C_k -> c_k``."""
    if bits < 64:
        raise ValueError("bits must be at least 64")
    if isinstance(x, RadicalScalar):
        return x.enclose(bits)
    acc = Interval(0, 0, bits)
    for m, c in x.terms.items():
        term = c.enclose(bits)
        for k in sorted(m):
            term = term * c_enclosure(k, bits)
        acc = acc + term
    return acc


class Sign(enum.Enum):
    NEGATIVE = -1
    ZERO = 0
    POSITIVE = 1


@dataclass(frozen=True)
class SignVerdict:
    verdict: Sign
    certified_precision: int  # 0 means decided exactly, no intervals

    @property
    def value(self) -> int:
        return self.verdict.value


def ring_sign(x: CertScalar | RadicalScalar, max_bits: int = 4096) -> SignVerdict:
    """Sign of ``x`` under the real embedding.

    Zero is reported only for the canonical zero.  Field elements are
    decided exactly; otherwise precision doubles from 64 bits until the
    enclosure excludes zero, and ``PrecisionExhausted`` is raised past
    ``max_bits``.
    """
    if max_bits < 64:
        raise ValueError("max_bits must be at least 64")
    if isinstance(x, RadicalScalar):
        x = CertScalar.const(x)
    if x.is_zero():
        return SignVerdict(Sign.ZERO, 0)
    if x.is_constant():
        return SignVerdict(Sign(radical_sign(x.constant_part())), 0)
    bits = 64
    while True:
        iv = ring_eval(x, bits)
        if iv.excludes_zero():
            return SignVerdict(Sign.POSITIVE if iv.lo > 0 else Sign.NEGATIVE, bits)
        if bits >= max_bits:
            raise PrecisionExhausted(f"sign of {x} unresolved at {bits} bits")
        bits = min(2 * bits, max_bits)



def decimal_str(x: CertScalar | RadicalScalar | Fraction | int, digits: int = 17) -> str:
    """Faithful decimal rounding of ``x`` to ``digits`` significant digits."""
    if isinstance(x, (int, Fraction)):
        x = RadicalScalar(x)
    return decimal_of(lambda bits: ring_eval(x, bits), digits)


def decimal_of(enclose, digits: int = 17) -> str:
    """Decimal string from ``enclose(bits) -> Interval``, refining until faithful."""
    import decimal

    bits = 64 + int(3.33 * digits)
    while True:
        iv = enclose(bits)
        if iv.width == 0 and iv.lo == 0:
            return "0"
        mag = max(abs(iv.lo), abs(iv.hi))
        # stop once the enclosure is far below one unit in the last digit
        if mag > 0 and iv.width * 10 ** (digits + 2) <= mag:
            break
        if bits > 1 << 16:
            raise PrecisionExhausted("cannot resolve decimal digits")
        bits *= 2
    mid = iv.mid
    with decimal.localcontext() as ctx:
        ctx.prec = digits
        val = decimal.Decimal(mid.numerator) / decimal.Decimal(mid.denominator)
    return str(val)
