"""Analysis of the convergent radical maps near their limits.

Covers the product and scaled-difference routes to the intrinsic constant of
the simple radical map (limit phi), the gap bound phi - x_k < phi^-k, the
half-angle map's cosine closed form with its 4^k scaled limit pi^2/2, and a
numeric probe of the double radical map whose finer asymptotics have no
reference value.

The quantities here are differences against a limit and shrink geometrically,
so computing them at the caller's working precision would cancel away all
information.  Each routine derives how many extra bits the cancellation
destroys (log2 of the geometric rate times the index), works internally at
that boosted precision, and rounds results back to the requested precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import gmpy2

from . import hpnum
from .hpnum import HPReal, working_context
from .maps import MAPS

__all__ = [
    "GoldenReport",
    "phi",
    "paris_product",
    "paris_scaled",
    "verify_bound",
    "cos_map_check",
    "double_radical_explore",
    "golden_report",
]

# geometric rates of the three gap sequences, as bits per step
_RATE_2PHI = math.log2(1 + math.sqrt(5.0))          # phi - x_k ~ (2 phi)^-k
_RATE_PHI = math.log2((1 + math.sqrt(5.0)) / 2)     # the bound phi^-k itself
_RATE_DOUBLE = math.log2(1 + math.sqrt(3.0))        # (1+sqrt3) - x_k
_SLACK_BITS = 32


def _boosted(policy, per_step: float, steps: int) -> int:
    return working_context(policy).precision + math.ceil(per_step * steps) + _SLACK_BITS


def _round_to(x: HPReal, policy) -> HPReal:
    return HPReal(x, working_context(policy).precision)


def phi(prec) -> HPReal:
    """(1 + sqrt 5)/2 computed directly, never by iterating the map."""
    return (1 + hpnum.sqrt(hpnum.real(5, prec))) / 2


def _simple_trajectory(n: int, bits: int):
    """Yield (k, x_k) for the simple radical map at k = 1..n, raw mpfr."""
    step = MAPS["simple-radical"].step
    with working_context(bits):
        x = gmpy2.mpfr(1)
        yield 1, x
        for k in range(2, n + 1):
            x = step(x)
            yield k, x


def paris_product(n: int, policy) -> HPReal:
    """prod_{k=2}^{n} 2 phi/(phi + x_k); increasing in n, geometric tail."""
    if n < 2:
        raise ValueError("the product starts at k = 2")
    bits = working_context(policy).precision + _SLACK_BITS
    ph = phi(bits)
    with working_context(bits):
        two_phi = 2 * ph.value
        prod = gmpy2.mpfr(1)
        for k, x in _simple_trajectory(n, bits):
            if k >= 2:
                prod *= two_phi / (ph.value + x)
        return _round_to(HPReal(prod), policy)


def paris_scaled(n: int, policy) -> HPReal:
    """(2 phi)^n (phi - x_n)/2, the scaled-gap route to the same constant.

    phi - x_n loses ~1.7 n bits to cancellation; computed boosted.
    """
    if n < 2:
        raise ValueError("the scaled form starts at n = 2")
    bits = _boosted(policy, _RATE_2PHI, n)
    ph = phi(bits)
    with working_context(bits):
        x_n = None
        for _, x in _simple_trajectory(n, bits):
            x_n = x
        two_phi = 2 * ph.value
        value = (two_phi ** n) * (ph.value - x_n) / 2
        return _round_to(HPReal(value), policy)


def verify_bound(k_max: int, policy) -> List[Tuple[int, HPReal, HPReal, bool]]:
    """Rows (k, y_k, phi^-k, ok) for y_k = phi - x_k.

    ok means y_1 = 1/phi at k = 1 (the chain starts with equality there) and
    0 < y_k < phi^-k strictly for k >= 2.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    bits = _boosted(policy, _RATE_2PHI, k_max)
    ph = phi(bits)
    rows = []
    with working_context(bits):
        inv_phi = 1 / ph.value
        for k, x in _simple_trajectory(k_max, bits):
            gap = ph.value - x
            bound = inv_phi ** k
            if k == 1:
                # y_1 = phi - 1 = 1/phi exactly; allow rounding of the two routes
                ok = abs(gap - inv_phi) <= abs(inv_phi) * gmpy2.exp2(10 - bits)
            else:
                ok = bool(0 < gap < bound)
            rows.append((k, _round_to(HPReal(gap), policy),
                         _round_to(HPReal(bound), policy), ok))
    return rows


def cos_map_check(k_max: int, policy) -> List[Tuple[int, HPReal, HPReal]]:
    """Rows (k, identity_error, 4^k (1 - x_k)) for the half-angle map.

    identity_error is |x_k - cos(pi/2^k)|; the scaled value increases to
    pi^2/2 with error shrinking about 4x per step.  1 - x_k loses 2k bits
    to cancellation; computed boosted.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    bits = _boosted(policy, 2.0, k_max)
    step = MAPS["half-angle"].step
    rows = []
    with working_context(bits):
        pi_val = gmpy2.const_pi()
        x = gmpy2.mpfr(0)
        for k in range(1, k_max + 1):
            if k > 1:
                x = step(x)
            err = abs(x - gmpy2.cos(pi_val / (2 ** k)))
            scaled = gmpy2.mpfr(4) ** k * (1 - x)
            rows.append((k, _round_to(HPReal(err), policy),
                         _round_to(HPReal(scaled), policy)))
    return rows


def double_radical_explore(n: int, policy) -> Tuple[HPReal, HPReal, HPReal]:
    """(limit gap L - x_n, gap ratio, L^n (L - x_n)) for L = 1 + sqrt 3.

    The gap ratio tends to 1/L, the map's derivative at the limit.  The
    scaled value is reported as data only: no reference value exists for
    its limit, so nothing is asserted about it.
    """
    if n < 2:
        raise ValueError("need n >= 2 for a gap ratio")
    bits = _boosted(policy, _RATE_DOUBLE, n)
    step = MAPS["double-radical"].step
    with working_context(bits):
        limit = 1 + gmpy2.sqrt(gmpy2.mpfr(3))
        x = gmpy2.mpfr(1)
        prev_gap = None
        for _ in range(2, n + 1):
            prev_gap = limit - x
            x = step(x)
        gap = limit - x
        ratio = gap / prev_gap
        scaled = limit ** n * gap
    return (_round_to(HPReal(gap), policy),
            _round_to(HPReal(ratio), policy),
            _round_to(HPReal(scaled), policy))


@dataclass(frozen=True)
class GoldenReport:
    """Both routes to the simple-radical constant plus the gap-bound flags."""

    n: int
    product_value: HPReal
    scaled_value: HPReal
    bound_ok: Tuple[bool, ...]

    def consistent(self, policy) -> bool:
        bits = working_context(policy).precision
        gap = abs(self.product_value - self.scaled_value)
        return gap < hpnum.real(1, bits) / 2 ** (bits - 20)


def golden_report(n: int, policy) -> GoldenReport:
    rows = verify_bound(n, policy)
    return GoldenReport(
        n=n,
        product_value=paris_product(n, policy),
        scaled_value=paris_scaled(n, policy),
        bound_ok=tuple(ok for _, _, _, ok in rows),
    )
