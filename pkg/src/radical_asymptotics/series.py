"""Truncated log-power series algebra and the coefficient solver.

A LogPowSeries is a finite sum of terms c * k^(-d/2) * ln(k)^j with CPoly
coefficients, stored on an integer lattice of twice-exponents d so integer
and half-integer families share one representation.  On top of the algebra
sit the index-shift expansion (k -> k+1), truncated products, reciprocals,
the functional-equation sides for each divergent map, and a triangular
solver that recovers every ansatz coefficient as an exact polynomial in the
intrinsic constant C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, Mapping, Optional, Tuple

from . import hpnum
from .casring import C_SYMBOL, SQRT2, CPoly, QSqrt2, eval_cpoly, format_cpoly
from .hpnum import HPReal

__all__ = [
    "TruncationError",
    "SolveError",
    "LogPowSeries",
    "monomial",
    "shift_expand",
    "mul",
    "square",
    "reciprocal",
    "AnsatzSpec",
    "ansatz_for",
    "REFERENCE_D",
    "CoeffEntry",
    "CoeffTable",
    "series_from_ansatz",
    "functional_sides",
    "solve_coefficients",
    "evaluate_series",
    "omitted_term_magnitude",
]

SOLVABLE_MAPS = ("quad-shift", "root-shift", "product-radical", "add-inverse")

# table depth carried by the reference asymptotics for each map; blocks past
# this depth are derivable but unverified, and get flagged as extended
REFERENCE_D = {
    "quad-shift": 8,
    "product-radical": 8,
    "root-shift": 5,
    "add-inverse": 5,
}

_BLOCK_LETTERS = "pqrstuvw"

# extra log powers the ansatz shapes allow beyond the exponent ladder
_LOG_BUDGET = 4


class TruncationError(ValueError):
    """A series operation asked for more depth than its inputs carry."""


class SolveError(ValueError):
    """Coefficient matching failed: no usable equation or nonzero residual."""


class LogPowSeries:
    """Finite sum over (d, j) -> CPoly of c * k^(-d/2) * ln(k)^j.

    d is a twice-exponent and may be negative (k itself is d = -2, sqrt k
    is d = -1); j is a nonnegative log power.  Terms with d > trunc are
    discarded at construction and remembered in the `dropped` flag.
    Instances are immutable by convention.
    """

    __slots__ = ("terms", "trunc", "dropped")

    def __init__(self, terms: Mapping, trunc: int, dropped: bool = False):
        clean: Dict[Tuple[int, int], CPoly] = {}
        for (d, j), c in terms.items():
            if j < 0:
                raise ValueError(f"negative log power at ({d}, {j})")
            c = CPoly.of(c)
            if c.is_zero():
                continue
            if d > trunc:
                dropped = True
                continue
            clean[(d, j)] = c
        for (d, j) in clean:
            if j > max(d, 0) // 2 + _LOG_BUDGET:
                raise ValueError(
                    f"log power {j} at d={d} exceeds the ansatz budget")
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "trunc", trunc)
        object.__setattr__(self, "dropped", dropped)

    def __setattr__(self, name, value):  # pragma: no cover - immutability
        raise AttributeError("LogPowSeries is immutable")

    def coeff(self, d: int, j: int) -> CPoly:
        return self.terms.get((d, j), CPoly())

    def items(self):
        """Terms sorted by significance: d ascending, then j descending."""
        return sorted(self.terms.items(), key=lambda kv: (kv[0][0], -kv[0][1]))

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "LogPowSeries") -> "LogPowSeries":
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, CPoly()) + c
        return LogPowSeries(out, min(self.trunc, other.trunc),
                            self.dropped or other.dropped)

    def __sub__(self, other: "LogPowSeries") -> "LogPowSeries":
        return self + (-other)

    def __neg__(self) -> "LogPowSeries":
        return LogPowSeries({k: -c for k, c in self.terms.items()},
                            self.trunc, self.dropped)

    def scaled(self, factor) -> "LogPowSeries":
        f = CPoly.of(factor)
        return LogPowSeries({k: c * f for k, c in self.terms.items()},
                            self.trunc, self.dropped)

    def __eq__(self, other):
        if not isinstance(other, LogPowSeries):
            return NotImplemented
        return self.terms == other.terms and self.trunc == other.trunc

    def __repr__(self):
        body = " + ".join(
            f"[{format_cpoly(c)}]*(d={d},j={j})" for (d, j), c in self.items())
        return f"LogPowSeries({body or '0'}; trunc={self.trunc})"


def monomial(d: int, j: int, coeff, trunc: int) -> LogPowSeries:
    return LogPowSeries({(d, j): CPoly.of(coeff)}, trunc)


def zero_series(trunc: int) -> LogPowSeries:
    return LogPowSeries({}, trunc)


# -- index shift --------------------------------------------------------------


@lru_cache(maxsize=None)
def _binom_tail(alpha2: int, depth: int) -> Tuple[Fraction, ...]:
    """Coefficients of (1+u)^(alpha2/2) in u^0..u^depth."""
    alpha = Fraction(alpha2, 2)
    out = [Fraction(1)]
    for m in range(1, depth + 1):
        out.append(out[-1] * (alpha - (m - 1)) / m)
    return tuple(out)


@lru_cache(maxsize=None)
def _log1p_pow(t: int, depth: int) -> Tuple[Fraction, ...]:
    """Coefficients of ln(1+u)^t in u^0..u^depth."""
    if t == 0:
        return (Fraction(1),) + (Fraction(0),) * depth
    base = [Fraction(0)] + [Fraction((-1) ** (m + 1), m) for m in range(1, depth + 1)]
    prev = _log1p_pow(t - 1, depth)
    out = [Fraction(0)] * (depth + 1)
    for a, pa in enumerate(prev):
        if pa == 0:
            continue
        for b in range(1, depth + 1 - a):
            out[a + b] += pa * base[b]
    return tuple(out)


@lru_cache(maxsize=None)
def _shift_monomial(d: int, j: int, room: int) -> Tuple[Tuple[Tuple[int, int], Fraction], ...]:
    """Expansion of (k+1)^(-d/2) * ln(k+1)^j as terms (d + 2m, j') with
    rational weights, for 2m <= room.

    Uses ln(k+1) = ln(k) + ln(1+1/k) and the binomial tail of (1+1/k)^(-d/2).
    """
    depth = room // 2
    binom = _binom_tail(-d, depth)
    out: Dict[Tuple[int, int], Fraction] = {}
    for t in range(j + 1):
        logs = _log1p_pow(t, depth)
        choose = math.comb(j, t)
        for m in range(depth + 1):
            conv = sum((binom[a] * logs[m - a] for a in range(m + 1)),
                       Fraction(0))
            if conv:
                key = (d + 2 * m, j - t)
                out[key] = out.get(key, Fraction(0)) + choose * conv
    return tuple(sorted(out.items()))


def shift_expand(s: LogPowSeries, D: int) -> LogPowSeries:
    """The series s(k+1) re-expanded in powers of k and ln(k) through d <= D."""
    if s.trunc < D:
        raise TruncationError(
            f"input truncated at {s.trunc}, cannot expand through {D}")
    out: Dict[Tuple[int, int], CPoly] = {}
    dropped = s.dropped
    for (d, j), c in s.terms.items():
        room = D - d
        if room < 0:
            dropped = True
            continue
        for (key, w) in _shift_monomial(d, j, room):
            if key[0] > D:
                dropped = True
                continue
            add = c * w
            out[key] = out.get(key, CPoly()) + add
    return LogPowSeries(out, D, dropped)


# -- products and reciprocals -------------------------------------------------


def mul(a: LogPowSeries, b: LogPowSeries, D: int) -> LogPowSeries:
    """Truncated product: d-grades add, log powers add, terms past D drop."""
    if a.trunc < D or b.trunc < D:
        raise TruncationError("operands are truncated shallower than the product")
    out: Dict[Tuple[int, int], CPoly] = {}
    for (d1, j1), c1 in a.terms.items():
        for (d2, j2), c2 in b.terms.items():
            d = d1 + d2
            if d > D:
                continue
            key = (d, j1 + j2)
            out[key] = out.get(key, CPoly()) + c1 * c2
    return LogPowSeries(out, D, a.dropped or b.dropped)


def square(a: LogPowSeries, D: int) -> LogPowSeries:
    return mul(a, a, D)


def reciprocal(a: LogPowSeries, D: int) -> LogPowSeries:
    """Series r with a * r = 1 through d <= D.

    Requires a log-free leading monomial whose coefficient is a plain
    quadratic-field scalar; everything else must sit at strictly larger d.
    """
    if a.is_zero():
        raise ZeroDivisionError("reciprocal of the zero series")
    if a.trunc < D:
        raise TruncationError("operand is truncated shallower than the reciprocal")
    d0 = min(d for d, _ in a.terms)
    lead_keys = [(d, j) for (d, j) in a.terms if d == d0]
    if lead_keys != [(d0, 0)]:
        raise ValueError("leading term carries ln(k); reciprocal undefined here")
    lead = a.terms[(d0, 0)]
    if lead.degree != 0:
        raise ValueError("leading coefficient must be a scalar, free of C")
    lead_scalar = lead.coeff(0)
    inv_lead = lead_scalar.inverse()

    # u = a / (lead * k^(-d0/2)) - 1 has all terms at relative grade >= 1.
    # The factored-out k^(d0/2) lowers result grades by d0, so the geometric
    # series must reach D + d0 to fill the result through D; it must also
    # reach D itself so the first omitted power of u cannot fold back below
    # the requested depth in products.
    rel_trunc = D + max(d0, 0)
    u_terms = {}
    for (d, j), c in a.terms.items():
        if (d, j) == (d0, 0):
            continue
        u_terms[(d - d0, j)] = c * inv_lead
    u = LogPowSeries(u_terms, rel_trunc, a.dropped)

    geom = monomial(0, 0, 1, rel_trunc)
    power = monomial(0, 0, 1, rel_trunc)
    if not u.is_zero():
        min_step = min(d for d, _ in u.terms)
        if min_step <= 0:
            raise ValueError("leading term is not unique at its grade")
        t = 1
        while t * min_step <= rel_trunc:
            power = mul(power, -u, rel_trunc)
            geom = geom + power
            if power.is_zero():
                break
            t += 1

    out = {(d - d0, j): c * inv_lead for (d, j), c in geom.terms.items()}
    return LogPowSeries(out, D, a.dropped)


# -- ansatz shapes ------------------------------------------------------------


@dataclass(frozen=True)
class AnsatzSpec:
    """Shape of one map's asymptotic expansion.

    fixed: the pinned leading terms as (d, j, coefficient).
    slots: the named unknown coefficients as (name, d, j), in solving order.
    D: truncation of the ansatz itself (largest slot d).
    d_match: depth the functional sides must reach to determine every slot;
        the half-power family needs D + 2 because a slot at grade d first
        shows up in the matched equations at grade d + 2.
    """

    map_id: str
    fixed: Tuple[Tuple[int, int, CPoly], ...]
    slots: Tuple[Tuple[str, int, int], ...]
    D: int
    d_match: int

    def slot_names(self) -> Tuple[str, ...]:
        return tuple(name for name, _, _ in self.slots)

    def slot_position(self, name: str) -> Tuple[int, int]:
        for slot_name, d, j in self.slots:
            if slot_name == name:
                return (d, j)
        raise KeyError(name)


def _integer_family_slots(D: int):
    slots = []
    for m in range(1, D // 2 + 1):
        letter = _BLOCK_LETTERS[m - 1]
        for j in range(m, -1, -1):
            slots.append((f"{letter}{j}", 2 * m, j))
    return tuple(slots)


def _half_family_slots(D: int):
    slots = []
    b = 1
    while 2 * b + 1 <= D:
        letter = _BLOCK_LETTERS[b - 1]
        for j in range(b + 1, -1, -1):
            slots.append((f"{letter}{j}", 2 * b + 1, j))
        b += 1
    return tuple(slots)


def ansatz_for(map_id: str, D: Optional[int] = None) -> AnsatzSpec:
    if map_id not in SOLVABLE_MAPS:
        raise ValueError(f"no asymptotic ansatz for map {map_id!r}; "
                         f"supported: {', '.join(SOLVABLE_MAPS)}")
    if D is None:
        D = REFERENCE_D[map_id]
    half = Fraction(1, 2)
    quarter = Fraction(1, 4)
    inv_4rt2 = QSqrt2(Fraction(0), Fraction(1, 8))  # 1/(4 sqrt 2) = sqrt2/8
    if map_id in ("quad-shift", "product-radical"):
        if D < 2 or D % 2 != 0:
            raise ValueError("integer-power family needs even D >= 2")
        sign = 1 if map_id == "quad-shift" else -1
        fixed = (
            (-2, 0, CPoly.of(half)),
            (0, 1, CPoly.of(quarter * sign)),
            (0, 0, C_SYMBOL * sign),
        )
        slots = _integer_family_slots(D)
        d_match = D
    else:
        if D < 3 or D % 2 != 1:
            raise ValueError("half-power family needs odd D >= 3")
        sign = -1 if map_id == "root-shift" else 1
        fixed = (
            (-1, 0, CPoly.of(SQRT2)),
            (1, 1, CPoly.of(inv_4rt2) * sign),
            (1, 0, C_SYMBOL * sign),
        )
        slots = _half_family_slots(D)
        d_match = D + 2
    return AnsatzSpec(map_id, fixed, slots, D, d_match)


def _block_of(name: str) -> int:
    return _BLOCK_LETTERS.index(name[0]) + 1


def _is_extended(map_id: str, name: str) -> bool:
    ref = ansatz_for(map_id)
    return name not in ref.slot_names()


def _head_room(ansatz: AnsatzSpec) -> int:
    """Extra depth needed so products with growing terms (negative d) stay
    exact: a term at d pairs with the k-term (d = -2) to land at d - 2."""
    return max(0, -min(d for d, _, _ in ansatz.fixed))


def series_from_ansatz(ansatz: AnsatzSpec,
                       values: Mapping[str, CPoly]) -> LogPowSeries:
    """The full ansatz series with every slot bound to a value."""
    terms: Dict[Tuple[int, int], CPoly] = {}
    for d, j, c in ansatz.fixed:
        terms[(d, j)] = terms.get((d, j), CPoly()) + c
    for name, d, j in ansatz.slots:
        if name not in values:
            raise SolveError(f"slot {name} has no value bound")
        terms[(d, j)] = terms.get((d, j), CPoly()) + CPoly.of(values[name])
    return LogPowSeries(terms, ansatz.d_match + _head_room(ansatz))


def functional_sides(ansatz: AnsatzSpec, values: Mapping[str, CPoly],
                     D: Optional[int] = None):
    """(lhs, rhs) of the map's implicit one-step relation, as series in k.

    lhs is the k -> k+1 side fully shift-expanded; rhs is the same-index
    side.  On a true asymptotic solution lhs - rhs vanishes through d_match.

    The shifted series is expanded past D by the head room so that its deep
    terms still pair with the growing leading terms inside the products.
    """
    if D is None:
        D = ansatz.d_match
    x = series_from_ansatz(ansatz, values)
    shifted = shift_expand(x, D + _head_room(ansatz))
    map_id = ansatz.map_id
    if map_id == "quad-shift":
        lhs = square(shifted, D) - shifted
        rhs = square(x, D)
    elif map_id == "product-radical":
        lhs = square(shifted, D)
        rhs = square(x, D) + x
    elif map_id == "root-shift":
        lhs = shifted - reciprocal(shifted, D)
        rhs = x
    elif map_id == "add-inverse":
        lhs = shifted
        rhs = x + reciprocal(x, D)
    else:  # pragma: no cover - ansatz_for already filtered
        raise ValueError(f"unsupported map {map_id!r}")
    return lhs, rhs


# -- the solver ---------------------------------------------------------------


@dataclass(frozen=True)
class CoeffEntry:
    name: str
    d: int
    j: int
    value: CPoly
    extended: bool


@dataclass(frozen=True)
class CoeffTable:
    map_id: str
    D: int
    entries: Tuple[CoeffEntry, ...]

    def value(self, name: str) -> CPoly:
        for e in self.entries:
            if e.name == name:
                return e.value
        raise KeyError(name)

    def as_dict(self) -> Dict[str, CPoly]:
        return {e.name: e.value for e in self.entries}

    def to_json_obj(self) -> dict:
        return {
            "map": self.map_id,
            "truncation": self.D,
            "coefficients": [
                {
                    "name": e.name,
                    "d": e.d,
                    "j": e.j,
                    "expr": format_cpoly(e.value),
                    "degrees": [[str(q.a), str(q.b)] for q in e.value.coeffs],
                    "extended": e.extended,
                }
                for e in self.entries
            ],
        }


def _residual(ansatz: AnsatzSpec, values: Mapping[str, CPoly]) -> LogPowSeries:
    lhs, rhs = functional_sides(ansatz, values)
    return lhs - rhs


def solve_coefficients(map_id: str, D: Optional[int] = None) -> CoeffTable:
    """Solve every ansatz slot by triangular matching of the functional sides.

    Strategy: with unsolved slots probed at 0 and 1 (and all-at-once at 1
    and 2 to rule out hidden couplings), each round locates the equations
    that are affine in exactly one remaining slot, solves them exactly, and
    substitutes.  A final pass asserts the residual is identically zero.
    """
    ansatz = ansatz_for(map_id, D)
    names = list(ansatz.slot_names())
    solved: Dict[str, CPoly] = {}
    unsolved = [n for n in names]
    zero = CPoly()
    one = CPoly.of(1)
    two = CPoly.of(2)

    while unsolved:
        base = {n: solved.get(n, zero) for n in names}
        e_zero = _residual(ansatz, base)
        deltas: Dict[str, LogPowSeries] = {}
        for s in unsolved:
            probe = dict(base)
            probe[s] = one
            deltas[s] = _residual(ansatz, probe) - e_zero
        all_one = dict(base)
        all_two = dict(base)
        for s in unsolved:
            all_one[s] = one
            all_two[s] = two
        e_all_one = _residual(ansatz, all_one) - e_zero
        e_all_two = _residual(ansatz, all_two) - e_zero

        positions = sorted(
            {key for dd in deltas.values() for key in dd.terms}
            | set(e_zero.terms),
            key=lambda p: (p[0], -p[1]))

        progressed = []
        for pos in positions:
            touching = [s for s in unsolved if not deltas[s].coeff(*pos).is_zero()]
            if len(touching) != 1:
                continue
            s = touching[0]
            if s in progressed:
                continue
            delta = deltas[s].coeff(*pos)
            # rule out quadratic or cross couplings hiding at this position:
            # a jointly affine residual moves by sum(deltas) at 1 and twice
            # that at 2
            lin = sum((deltas[t].coeff(*pos) for t in unsolved), CPoly())
            if e_all_one.coeff(*pos) != lin:
                continue
            if e_all_two.coeff(*pos) != lin + lin:
                continue
            if delta.degree != 0:
                continue  # slot enters scaled by C here; use a cleaner equation
            value = -(e_zero.coeff(*pos)) / delta.coeff(0)
            solved[s] = value
            progressed.append(s)
        if not progressed:
            raise SolveError(
                f"{map_id}: no equation affine in exactly one unknown; "
                f"unsolved: {', '.join(unsolved)}")
        unsolved = [n for n in unsolved if n not in progressed]

    final = _residual(ansatz, solved)
    if not final.is_zero():
        worst = final.items()[0]
        raise SolveError(
            f"{map_id}: residual not identically zero after solving; "
            f"first surviving term at (d={worst[0][0]}, j={worst[0][1]})")

    entries = []
    for name, d, j in ansatz.slots:
        value = solved[name]
        block = _block_of(name)
        degree_cap = max(4, block + 1)
        if value.degree > degree_cap:
            raise SolveError(
                f"{map_id}: solved {name} has degree {value.degree}, "
                f"beyond the block cap {degree_cap}")
        entries.append(CoeffEntry(name, d, j, value,
                                  _is_extended(map_id, name)))
    return CoeffTable(ansatz.map_id, ansatz.D, tuple(entries))


# -- numerics -----------------------------------------------------------------


def evaluate_series(ansatz: AnsatzSpec, table: CoeffTable, c: HPReal,
                    k: int, policy) -> HPReal:
    """Numeric value of the truncated expansion at index k with C = c."""
    if k < 2:
        raise ValueError("series evaluation needs k >= 2")
    bits = hpnum.working_context(policy).precision
    kv = hpnum.real(k, bits)
    root_k = hpnum.sqrt(kv)
    ln_k = hpnum.ln(kv)
    values = table.as_dict()
    total = hpnum.real(0, bits)
    pieces = list(ansatz.fixed) + [
        (d, j, CPoly.of(values[name])) for name, d, j in ansatz.slots]
    for d, j, coeff in pieces:
        term = eval_cpoly(coeff, c, bits)
        term = term * root_k ** (-d)
        for _ in range(j):
            term = term * ln_k
        total = total + term
    return total


def omitted_term_magnitude(ansatz: AnsatzSpec, k: int, policy) -> HPReal:
    """Magnitude ln(k)^j_next * k^(-d_next/2) of the first omitted block's
    top term, the usual heuristic for the truncation error."""
    bits = hpnum.working_context(policy).precision
    if ansatz.map_id in ("quad-shift", "product-radical"):
        d_next = ansatz.D + 2
        j_next = d_next // 2
    else:
        d_next = ansatz.D + 2
        j_next = (d_next - 1) // 2 + 1
    kv = hpnum.real(k, bits)
    root_k = hpnum.sqrt(kv)
    ln_k = hpnum.ln(kv)
    out = root_k ** (-d_next)
    for _ in range(j_next):
        out = out * ln_k
    return out
