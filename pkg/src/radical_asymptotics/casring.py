"""Exact scalar arithmetic for series coefficients.

Three layers: big rationals (`Rat`, an alias of `fractions.Fraction`), the
quadratic extension Q(sqrt 2) (`QSqrt2`), and polynomials in the formal
constant symbol C over that field (`CPoly`).  Everything is immutable and
exact; sqrt 2 only becomes a float at the final numeric-evaluation step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

from . import hpnum
from .hpnum import HPReal

__all__ = [
    "Rat",
    "QSqrt2",
    "CPoly",
    "SQRT2",
    "C_SYMBOL",
    "DEGREE_CAP",
    "DegreeCapError",
    "eval_cpoly",
    "format_cpoly",
    "require_table_degree",
]

Rat = Fraction

ScalarLike = Union[int, Fraction, "QSqrt2"]

# Table and ansatz coefficients never exceed degree 4 in C; a higher degree
# in a solved value signals an ansatz bug.  Intermediate products inside the
# functional-equation sides legitimately reach degree 8, so the ring itself
# only guards against runaway growth past that.
DEGREE_CAP = 4
_INTERNAL_DEGREE_LIMIT = 9


class DegreeCapError(ValueError):
    """Polynomial degree exceeded the allowed cap."""


def _as_frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected int or Fraction, got {type(x).__name__}")


@dataclass(frozen=True)
class QSqrt2:
    """An element a + b*sqrt(2) of Q(sqrt 2), with a and b exact rationals."""

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    @staticmethod
    def of(x: ScalarLike) -> "QSqrt2":
        if isinstance(x, QSqrt2):
            return x
        return QSqrt2(_as_frac(x), Fraction(0))

    def __post_init__(self):
        object.__setattr__(self, "a", _as_frac(self.a))
        object.__setattr__(self, "b", _as_frac(self.b))

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_rational(self) -> bool:
        return self.b == 0

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __add__(self, other):
        o = QSqrt2.of(other) if isinstance(other, (int, Fraction, QSqrt2)) else None
        if o is None:
            return NotImplemented
        return QSqrt2(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return QSqrt2(-self.a, -self.b)

    def __sub__(self, other):
        o = QSqrt2.of(other) if isinstance(other, (int, Fraction, QSqrt2)) else None
        if o is None:
            return NotImplemented
        return QSqrt2(self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        return -(self - other)

    def __mul__(self, other):
        o = QSqrt2.of(other) if isinstance(other, (int, Fraction, QSqrt2)) else None
        if o is None:
            return NotImplemented
        return QSqrt2(self.a * o.a + 2 * self.b * o.b,
                      self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def inverse(self) -> "QSqrt2":
        # (a + b sqrt2)^-1 = (a - b sqrt2)/(a^2 - 2 b^2); the norm is nonzero
        # for nonzero elements because sqrt2 is irrational.
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in Q(sqrt2)")
        norm = self.a * self.a - 2 * self.b * self.b
        return QSqrt2(self.a / norm, -self.b / norm)

    def __truediv__(self, other):
        o = QSqrt2.of(other) if isinstance(other, (int, Fraction, QSqrt2)) else None
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        return QSqrt2.of(other) * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        out = QSqrt2(Fraction(1))
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def sign(self) -> int:
        """Sign of the real number a + b*sqrt(2)."""
        if self.is_zero():
            return 0
        if self.b == 0:
            return 1 if self.a > 0 else -1
        if self.a == 0:
            return 1 if self.b > 0 else -1
        # a and b both nonzero: compare a against -b*sqrt2 via squares
        if self.a > 0 and self.b > 0:
            return 1
        if self.a < 0 and self.b < 0:
            return -1
        positive_a = self.a > 0
        if self.a * self.a > 2 * self.b * self.b:
            return 1 if positive_a else -1
        return -1 if positive_a else 1

    def value_hp(self, prec) -> HPReal:
        """Numeric value a + b*sqrt(2) at the given working precision."""
        root = hpnum.sqrt(hpnum.real(2, prec))
        return hpnum.real(self.a, prec) + root * hpnum.real(self.b, prec)

    def __repr__(self):
        return f"QSqrt2({self.a}, {self.b})"


SQRT2 = QSqrt2(Fraction(0), Fraction(1))


class CPoly:
    """A polynomial in the formal constant C with QSqrt2 coefficients.

    Coefficients are stored low degree first with no trailing zeros; the
    zero polynomial is the empty tuple.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[ScalarLike] = ()):
        normalized = [QSqrt2.of(c) for c in coeffs]
        while normalized and normalized[-1].is_zero():
            normalized.pop()
        if len(normalized) - 1 > _INTERNAL_DEGREE_LIMIT:
            raise DegreeCapError(
                f"degree {len(normalized) - 1} exceeds internal limit "
                f"{_INTERNAL_DEGREE_LIMIT}")
        object.__setattr__(self, "coeffs", tuple(normalized))

    def __setattr__(self, name, value):  # pragma: no cover - immutability
        raise AttributeError("CPoly is immutable")

    @staticmethod
    def of(x) -> "CPoly":
        if isinstance(x, CPoly):
            return x
        return CPoly([QSqrt2.of(x)])

    @property
    def degree(self) -> int:
        """Degree, with the zero polynomial at -1."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def coeff(self, i: int) -> QSqrt2:
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return QSqrt2()

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        n = max(len(self.coeffs), len(o.coeffs))
        return CPoly([self.coeff(i) + o.coeff(i) for i in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return CPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        n = max(len(self.coeffs), len(o.coeffs))
        return CPoly([self.coeff(i) - o.coeff(i) for i in range(n)])

    def __rsub__(self, other):
        return -(self - other)

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if self.is_zero() or o.is_zero():
            return CPoly()
        out = [QSqrt2() for _ in range(len(self.coeffs) + len(o.coeffs) - 1)]
        for i, ci in enumerate(self.coeffs):
            if ci.is_zero():
                continue
            for j, cj in enumerate(o.coeffs):
                out[i + j] = out[i + j] + ci * cj
        return CPoly(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, (int, Fraction, QSqrt2)):
            s = QSqrt2.of(scalar)
            if s.is_zero():
                raise ZeroDivisionError("division of CPoly by zero scalar")
            inv = s.inverse()
            return CPoly([c * inv for c in self.coeffs])
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        out = CPoly.of(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, QSqrt2)):
            other = CPoly.of(other)
        if not isinstance(other, CPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    @staticmethod
    def _lift(other):
        if isinstance(other, CPoly):
            return other
        if isinstance(other, (int, Fraction, QSqrt2)):
            return CPoly.of(other)
        return None

    def __repr__(self):
        return f"CPoly({format_cpoly(self)})"


C_SYMBOL = CPoly([QSqrt2(), QSqrt2(Fraction(1))])


def require_table_degree(p: CPoly, cap: int = DEGREE_CAP) -> CPoly:
    """Assert that a solved or tabulated coefficient stays within the cap."""
    if p.degree > cap:
        raise DegreeCapError(
            f"coefficient degree {p.degree} exceeds table cap {cap}")
    return p


def eval_cpoly(p: CPoly, c: HPReal, prec=None) -> HPReal:
    """Evaluate p at C := c by Horner's rule, with sqrt2 at working precision."""
    bits = c.prec_bits if prec is None else hpnum.working_context(prec).precision
    if p.is_zero():
        return hpnum.real(0, bits)
    acc = p.coeffs[-1].value_hp(bits)
    for q in reversed(p.coeffs[:-1]):
        acc = acc * c + q.value_hp(bits)
    return acc


# -- pretty printer -----------------------------------------------------------
#
# Two fixed layouts:
#   rational-only polynomials expand per term:  (2/3)*C^3 - (3/4)*C^2 + ... + 7/576
#   polynomials touching sqrt2 factor out one common denominator:
#       -(8*sqrt2*C^2 - 8*C + sqrt2)/32
# The factored form scales every coefficient to an integer combination of
# 1 and sqrt2, pulls the overall sign from the leading term, and divides
# once at the end.


def _pow_str(i: int) -> str:
    if i == 0:
        return ""
    if i == 1:
        return "C"
    return f"C^{i}"


def _frac_str(x: Fraction, parens: bool) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    s = f"{x.numerator}/{x.denominator}"
    return f"({s})" if parens else s


def _expanded_rational(p: CPoly) -> str:
    parts = []
    for i in range(p.degree, -1, -1):
        c = p.coeff(i).a
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        pw = _pow_str(i)
        if not pw:
            body = _frac_str(mag, parens=False)
        elif mag == 1:
            body = pw
        else:
            body = f"{_frac_str(mag, parens=True)}*{pw}"
        parts.append((sign, body))
    first_sign, first_body = parts[0]
    out = first_body if first_sign == "+" else f"-{first_body}"
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def _int_qsqrt2_term(q: QSqrt2, power: int) -> str:
    """Render one integer-coefficient term of the factored form (unsigned)."""
    a, b = q.a.numerator, q.b.numerator
    pw = _pow_str(power)
    if a and b:
        inner = f"{a} + {b}*sqrt2" if b > 0 else f"{a} - {-b}*sqrt2"
        return f"({inner})*{pw}" if pw else f"({inner})"
    if b:
        mag = abs(b)
        stem = "sqrt2" if mag == 1 else f"{mag}*sqrt2"
        return f"{stem}*{pw}" if pw else stem
    mag = abs(a)
    if not pw:
        return str(mag)
    return pw if mag == 1 else f"{mag}*{pw}"


def format_cpoly(p: CPoly) -> str:
    if p.is_zero():
        return "0"
    if all(c.is_rational() for c in p.coeffs):
        return _expanded_rational(p)
    scale = math.lcm(*(d for c in p.coeffs
                       for d in (c.a.denominator, c.b.denominator)))
    scaled = [c * scale for c in p.coeffs]
    lead = scaled[-1]
    negate = lead.sign() < 0
    if negate:
        scaled = [-c for c in scaled]
    parts = []
    for i in range(len(scaled) - 1, -1, -1):
        c = scaled[i]
        if c.is_zero():
            continue
        # mixed terms take their sign from the leading component
        sgn = c.sign()
        parts.append(("-" if sgn < 0 else "+",
                      _int_qsqrt2_term(c if sgn > 0 else -c, i)))
    first_sign, first_body = parts[0]
    inner = first_body if first_sign == "+" else f"-{first_body}"
    for sign, body in parts[1:]:
        inner += f" {sign} {body}"
    single_term = len(parts) == 1
    if scale == 1:
        if not negate:
            return inner
        return f"-{inner}" if single_term else f"-({inner})"
    wrapped = inner if single_term and "*" not in inner else f"({inner})"
    return f"{'-' if negate else ''}{wrapped}/{scale}"
