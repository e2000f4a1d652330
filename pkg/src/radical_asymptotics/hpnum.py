"""Arbitrary-precision real arithmetic with an explicit precision contract.

Values are thin immutable wrappers around MPFR floats (via gmpy2).  Every
operation computes at the maximum working precision of its operands, with
round-to-nearest, so precision is never silently lost.  Working precision
for a whole run is chosen once through :class:`PrecisionPolicy`, which
budgets guard bits linearly against the planned iteration count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

__all__ = [
    "DomainError",
    "PrecisionError",
    "PrecisionPolicy",
    "HPReal",
    "working_context",
    "real",
    "sqrt",
    "ln",
    "cos",
    "pi",
    "to_decimal",
    "parse",
]

_LOG2_10 = math.log2(10)


class DomainError(ValueError):
    """Input outside an operation's mathematical domain (x/0, sqrt(-1), ln(0))."""


class PrecisionError(ValueError):
    """A precision policy that cannot honor its accuracy contract."""


def required_guard_bits(iterations: int) -> int:
    """Guard bits for a run of `iterations` steps: 10 + ceil(log2(N+1)).

    Each map step is well-conditioned (relative error amplification <= 1),
    so rounding accumulates at most linearly and a logarithmic-plus-slack
    budget is safe.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    return 10 + math.ceil(math.log2(iterations + 2))


@dataclass(frozen=True)
class PrecisionPolicy:
    """Decimal-digit accuracy target plus a guard-bit budget.

    working_bits = ceil(target_digits * log2(10)) + guard_bits.
    """

    target_digits: int
    guard_bits: int = 32

    def __post_init__(self) -> None:
        if self.target_digits < 1:
            raise PrecisionError("target_digits must be positive")
        if self.guard_bits < 0:
            raise PrecisionError("guard_bits must be nonnegative")

    @classmethod
    def for_iterations(cls, target_digits: int, iterations: int,
                       extra_guard: int = 0) -> "PrecisionPolicy":
        """Policy whose guard bits cover a planned run of `iterations` steps."""
        return cls(target_digits, required_guard_bits(iterations) + extra_guard)

    @property
    def working_bits(self) -> int:
        return math.ceil(self.target_digits * _LOG2_10) + self.guard_bits

    def covers(self, iterations: int) -> bool:
        """Whether the guard budget suffices for `iterations` steps."""
        return self.guard_bits >= required_guard_bits(iterations)


def _bits(prec) -> int:
    """Accept either a bit count or a PrecisionPolicy."""
    if isinstance(prec, PrecisionPolicy):
        return prec.working_bits
    bits = int(prec)
    if bits < 2:
        raise PrecisionError(f"working precision must be >= 2 bits, got {bits}")
    return bits


def working_context(prec) -> gmpy2.context:
    """A round-to-nearest MPFR context at the given precision (bits or policy)."""
    return gmpy2.context(precision=_bits(prec))


def _to_mpfr(value, bits: int) -> mpfr:
    with working_context(bits):
        if isinstance(value, HPReal):
            return mpfr(value.value)
        if isinstance(value, Fraction):
            return mpfr(gmpy2.mpq(value.numerator, value.denominator))
        if isinstance(value, float):
            raise TypeError("refusing float input (53-bit noise); "
                            "pass int, Fraction, str, or HPReal")
        if isinstance(value, str):
            return mpfr(value)
        return mpfr(value)  # int, mpfr, mpq, mpz


class HPReal:
    """An immutable real number carried at an explicit binary precision.

    Binary operations take the maximum precision of their operands; int and
    Fraction operands are exact and inherit the partner's precision.  Floats
    are rejected to keep 53-bit noise out.
    """

    __slots__ = ("value",)

    def __init__(self, value, prec_bits=None):
        if prec_bits is None:
            if isinstance(value, HPReal):
                object.__setattr__(self, "value", value.value)
                return
            if isinstance(value, mpfr):
                object.__setattr__(self, "value", value)
                return
            raise TypeError("prec_bits required unless value is HPReal or mpfr")
        object.__setattr__(self, "value", _to_mpfr(value, _bits(prec_bits)))

    def __setattr__(self, name, val):  # pragma: no cover - immutability guard
        raise AttributeError("HPReal is immutable")

    @property
    def prec_bits(self) -> int:
        return self.value.precision

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other):
        """Return (rhs, result precision, rhs_is_exact_rational) or NotImplemented.

        Exact rational operands (int, Fraction) are flagged so the operation
        can run in exact rational arithmetic and round only once; gmpy2 would
        otherwise round the operand to working precision before the op.
        """
        if isinstance(other, HPReal):
            return other.value, max(self.prec_bits, other.prec_bits), False
        if isinstance(other, int):
            return gmpy2.mpq(other), self.prec_bits, True
        if isinstance(other, Fraction):
            return gmpy2.mpq(other.numerator, other.denominator), self.prec_bits, True
        if isinstance(other, float):
            raise TypeError("refusing float operand; use int, Fraction, or HPReal")
        return NotImplemented, 0, False

    def _binop(self, other, op, reflected=False):
        rhs, bits, exact = self._coerce(other)
        if rhs is NotImplemented:
            return NotImplemented
        lhs = gmpy2.mpq(self.value) if exact else self.value
        a, b = (rhs, lhs) if reflected else (lhs, rhs)
        with working_context(bits):
            if exact:
                return HPReal(mpfr(op(a, b)))  # op is exact in mpq; one rounding
            return HPReal(op(a, b))

    def __add__(self, other):
        return self._binop(other, gmpy2.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binop(other, gmpy2.sub)

    def __rsub__(self, other):
        return self._binop(other, gmpy2.sub, reflected=True)

    def __mul__(self, other):
        return self._binop(other, gmpy2.mul)

    __rmul__ = __mul__

    def __truediv__(self, other):
        rhs, _, _ = self._coerce(other)
        if rhs is not NotImplemented and rhs == 0:
            raise DomainError("division by zero")
        return self._binop(other, gmpy2.div)

    def __rtruediv__(self, other):
        if self.value == 0:
            raise DomainError("division by zero")
        return self._binop(other, gmpy2.div, reflected=True)

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if self.value == 0 and n < 0:
            raise DomainError("zero to a negative power")
        with working_context(self.prec_bits):
            return HPReal(self.value ** n)

    def __neg__(self):
        with working_context(self.prec_bits):
            return HPReal(-self.value)

    def __abs__(self):
        with working_context(self.prec_bits):
            return HPReal(abs(self.value))

    # -- comparisons (numeric, precision-agnostic) ---------------------------

    def _cmp_value(self, other):
        if isinstance(other, HPReal):
            return other.value
        if isinstance(other, int):
            return other
        if isinstance(other, Fraction):
            return gmpy2.mpq(other.numerator, other.denominator)
        return NotImplemented

    def __eq__(self, other):
        rhs = self._cmp_value(other)
        return NotImplemented if rhs is NotImplemented else self.value == rhs

    def __lt__(self, other):
        rhs = self._cmp_value(other)
        return NotImplemented if rhs is NotImplemented else self.value < rhs

    def __le__(self, other):
        rhs = self._cmp_value(other)
        return NotImplemented if rhs is NotImplemented else self.value <= rhs

    def __gt__(self, other):
        rhs = self._cmp_value(other)
        return NotImplemented if rhs is NotImplemented else self.value > rhs

    def __ge__(self, other):
        rhs = self._cmp_value(other)
        return NotImplemented if rhs is NotImplemented else self.value >= rhs

    __hash__ = None  # numeric equality across precisions makes hashing a trap

    def __float__(self):
        return float(self.value)

    def __repr__(self):
        shown = min(20, max(2, math.floor(self.prec_bits / _LOG2_10)))
        return f"HPReal({to_decimal(self, shown)}, prec_bits={self.prec_bits})"


def real(value, prec) -> HPReal:
    """Construct an HPReal from int/Fraction/str at the given precision."""
    return HPReal(value, _bits(prec))


def sqrt(a: HPReal) -> HPReal:
    if a.value < 0:
        raise DomainError("sqrt of a negative number")
    with working_context(a.prec_bits):
        return HPReal(gmpy2.sqrt(a.value))


def ln(a: HPReal) -> HPReal:
    if a.value <= 0:
        raise DomainError("ln of a nonpositive number")
    with working_context(a.prec_bits):
        return HPReal(gmpy2.log(a.value))


def cos(a: HPReal) -> HPReal:
    with working_context(a.prec_bits):
        return HPReal(gmpy2.cos(a.value))


def pi(prec) -> HPReal:
    with working_context(prec):
        return HPReal(gmpy2.const_pi())


def _format_digits(mantissa: str, exp: int, digits: int) -> str:
    """Assemble a positional or scientific string from mpfr digits output."""
    sign = ""
    if mantissa.startswith("-"):
        sign, mantissa = "-", mantissa[1:]
    mantissa = mantissa.ljust(digits, "0")
    if 0 < exp <= digits:
        head, tail = mantissa[:exp], mantissa[exp:]
        return f"{sign}{head}.{tail}" if tail else f"{sign}{head}"
    if -4 < exp <= 0:
        return f"{sign}0.{'0' * (-exp)}{mantissa}"
    return f"{sign}0.{mantissa}e{exp}"


def to_decimal(a: HPReal, digits: int, truncate: bool = False) -> str:
    """Render `a` with `digits` significant decimal digits.

    Default rounds to nearest (round-trip faithful at the stated digit
    count).  With truncate=True the final digit is chopped toward zero
    instead, the convention used when quoting constants ending in "...".
    """
    if digits < 1:
        raise ValueError("digits must be positive")
    if a.value == 0:
        return _format_digits("0" * digits, 1, digits)
    if not gmpy2.is_finite(a.value):
        raise DomainError("cannot render a non-finite value")
    if truncate:
        # Render guard digits correctly rounded, then chop.  The guard tail
        # matches the exact expansion unless it sits within 10^-(digits+10)
        # of a rounding boundary, far below every tolerance used here.
        mantissa, exp, _ = a.value.digits(10, digits + 10)
        neg = mantissa.startswith("-")
        body = mantissa[1:] if neg else mantissa
        body = body[:digits]
        return _format_digits(("-" if neg else "") + body, exp, digits)
    mantissa, exp, _ = a.value.digits(10, digits)
    return _format_digits(mantissa, exp, digits)


def parse(s: str, prec) -> HPReal:
    """Parse a decimal string at the given precision (bits or policy)."""
    return HPReal(s.strip(), _bits(prec))
