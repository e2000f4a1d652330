"""Numeric extraction of the drift constant C for the divergent maps.

Strategy: run the recurrence deep, to index n, then impose the truncated
expansion as an equation in its one free constant,

    evaluate_series(C; n) = x_n,

and solve for C with Newton's method.  The left side is a polynomial of
degree at most four in C, but every nonlinear occurrence of C is carried
by a coefficient suppressed by at least ln(n)/n, so at the depths accepted
here (n >= 10^3) the equation is a small perturbation of an affine one:
the root near the initial guess is simple and Newton settles in a handful
of steps.

Each estimate carries two error figures.  `modeled_error` is the
first-omitted-term heuristic: the magnitude of the leading term of the
first block beyond the truncation, pushed through the equation's
C-sensitivity at depth n.  `consistency_error` is observational: the same
solve is repeated at the n/10 waypoint of the same trajectory, and the two
estimates' gap is recorded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import gmpy2

from . import hpnum
from .hpnum import HPReal, PrecisionPolicy, working_context
from .casring import CPoly, eval_cpoly
from .maps import MapSpec, UnsupportedMapError, get_map, iterate
from .series import (
    REFERENCE_D,
    SOLVABLE_MAPS,
    AnsatzSpec,
    CoeffTable,
    ansatz_for,
    omitted_term_magnitude,
    solve_coefficients,
)

__all__ = [
    "ConvergenceError",
    "ConstantEstimate",
    "estimate_c",
    "derived_checks",
    "convergence_study",
    "DEFAULT_DEPTH",
    "MIN_DEPTH",
]

DEFAULT_DEPTH = 10 ** 7
MIN_DEPTH = 10 ** 3
_MAX_NEWTON_STEPS = 64


class ConvergenceError(RuntimeError):
    """Newton's method failed to settle within the step budget."""


@dataclass(frozen=True)
class ConstantEstimate:
    """One extracted constant with its error model.

    modeled_error: first-omitted-term truncation heuristic, expressed on
        the C scale (series-space magnitude divided by |dF/dC| at depth n).
    consistency_error: observed |estimate(n) - estimate(n/10)|, both points
        taken from the same trajectory pass.
    """

    map_id: str
    value: HPReal
    n_used: int
    D: int
    modeled_error: HPReal
    consistency_error: HPReal

    def __post_init__(self) -> None:
        if not gmpy2.is_finite(self.value.value):
            raise ValueError("estimate is not finite")
        if not self.modeled_error > 0:
            raise ValueError("modeled_error must be positive")

    def to_json_obj(self, digits: int = 30) -> dict:
        return {
            "map": self.map_id,
            "n": self.n_used,
            "d": self.D,
            "value": hpnum.to_decimal(self.value, digits),
            "modeled_error": hpnum.to_decimal(self.modeled_error, 6),
            "consistency_error": hpnum.to_decimal(self.consistency_error, 6),
        }


def _dpoly(p: CPoly) -> CPoly:
    """Formal derivative with respect to C."""
    return CPoly(tuple(p.coeffs[i] * i for i in range(1, len(p.coeffs))))


def _series_pieces(ansatz: AnsatzSpec, table: CoeffTable):
    """All (d, j, coefficient, d/dC coefficient) terms of the expansion."""
    values = table.as_dict()
    pieces = list(ansatz.fixed)
    pieces += [(d, j, CPoly.of(values[name])) for name, d, j in ansatz.slots]
    return [(d, j, coeff, _dpoly(coeff)) for d, j, coeff in pieces]


def _eval_with_slope(pieces, c: HPReal, k: int, bits: int):
    """Value and dF/dC of the expansion at index k with C = c."""
    kv = hpnum.real(k, bits)
    root_k = hpnum.sqrt(kv)
    ln_k = hpnum.ln(kv)
    f = hpnum.real(0, bits)
    df = hpnum.real(0, bits)
    for d, j, coeff, dcoeff in pieces:
        scale = root_k ** (-d)
        for _ in range(j):
            scale = scale * ln_k
        f = f + eval_cpoly(coeff, c, bits) * scale
        if dcoeff.degree >= 0:
            df = df + eval_cpoly(dcoeff, c, bits) * scale
    return f, df


def _solve_at(pieces, fixed_count: int, x_k: HPReal, k: int,
              bits: int) -> HPReal:
    """Newton solve of evaluate_series(C; k) = x_k for C.

    Starts from C0 = x_k minus the C-free fixed part, per the near-affine
    structure of the equation.  Accepts either the ideal tolerance
    2^-(bits-20) or stagnation: once the correction stops halving, the
    iteration is bouncing on the rounding floor of x_k and the series
    evaluation, and the current iterate is as good as the data allows.
    """
    zero = hpnum.real(0, bits)
    kv = hpnum.real(k, bits)
    root_k = hpnum.sqrt(kv)
    ln_k = hpnum.ln(kv)
    c = x_k
    for d, j, coeff, _ in pieces[:fixed_count]:
        scale = root_k ** (-d)
        for _ in range(j):
            scale = scale * ln_k
        c = c - eval_cpoly(coeff, zero, bits) * scale
    tol = hpnum.real(1, bits) / hpnum.real(2, bits) ** (bits - 20)
    prev = None
    for _ in range(_MAX_NEWTON_STEPS):
        f, df = _eval_with_slope(pieces, c, k, bits)
        if df == 0:
            raise ConvergenceError("flat C-slope; equation is degenerate")
        step = (f - x_k) / df
        c = c - step
        astep = abs(step)
        if astep < tol:
            return c
        if prev is not None and astep + astep >= prev:
            return c
        prev = astep
    raise ConvergenceError(
        f"no convergence in {_MAX_NEWTON_STEPS} Newton steps at k={k}")


def _resolve_map(map_ref: Union[str, MapSpec]) -> MapSpec:
    spec = map_ref if isinstance(map_ref, MapSpec) else get_map(str(map_ref))
    if spec.name not in SOLVABLE_MAPS:
        raise UnsupportedMapError(
            f"{spec.name} has no log-power expansion to extract from")
    return spec


def _resolve_table(spec: MapSpec, D: Optional[int],
                   table: Optional[CoeffTable]) -> Tuple[int, CoeffTable]:
    if table is not None:
        if table.map_id != spec.name:
            raise ValueError(
                f"coefficient table is for {table.map_id}, not {spec.name}")
        if D is not None and D != table.D:
            raise ValueError(
                f"requested truncation {D} != table truncation {table.D}")
        return table.D, table
    if D is None:
        D = REFERENCE_D[spec.name]
    return D, solve_coefficients(spec.name, D)


def _sensitivity_floor(pieces, c: HPReal, k: int, bits: int) -> HPReal:
    _, df = _eval_with_slope(pieces, c, k, bits)
    if df == 0:
        raise ConvergenceError("flat C-slope; equation is degenerate")
    return abs(df)


def estimate_c(map_ref: Union[str, MapSpec],
               n: int = DEFAULT_DEPTH,
               D: Optional[int] = None,
               policy: Optional[PrecisionPolicy] = None,
               *,
               seed=None,
               table: Optional[CoeffTable] = None) -> ConstantEstimate:
    """Extract C for one map by a depth-n run and a series solve.

    The n/10 waypoint is captured in the same pass and solved identically;
    the gap between the two estimates is reported as consistency_error.
    Deterministic: identical arguments give bit-identical results.
    """
    spec = _resolve_map(map_ref)
    if n < MIN_DEPTH:
        raise ValueError(f"estimate needs n >= {MIN_DEPTH}, got {n}")
    if policy is None:
        policy = PrecisionPolicy.for_iterations(40, n)
    D, table = _resolve_table(spec, D, table)
    ansatz = ansatz_for(spec.name, D)
    bits = working_context(policy).precision
    pieces = _series_pieces(ansatz, table)

    waypoint = n // 10
    run = iterate(spec, n, policy, seed=seed, waypoints=(waypoint,))
    c_full = _solve_at(pieces, len(ansatz.fixed), run.value, n, bits)
    c_way = _solve_at(pieces, len(ansatz.fixed),
                      run.waypoints[waypoint], waypoint, bits)

    modeled = omitted_term_magnitude(ansatz, n, policy)
    modeled = modeled / _sensitivity_floor(pieces, c_full, n, bits)
    return ConstantEstimate(
        map_id=spec.name,
        value=c_full,
        n_used=n,
        D=D,
        modeled_error=modeled,
        consistency_error=abs(c_full - c_way),
    )


def derived_checks(e: ConstantEstimate) -> List[Tuple[str, HPReal]]:
    """Published companion values implied by an estimate: 2C for the
    quadratic shift map, C/sqrt(2) for the root shift map."""
    if e.map_id == "quad-shift":
        return [("2C", e.value * 2)]
    if e.map_id == "root-shift":
        root2 = hpnum.sqrt(hpnum.real(2, e.value.prec_bits))
        return [("C/sqrt2", e.value / root2)]
    raise UnsupportedMapError(
        f"no published derived value for {e.map_id}")


def convergence_study(map_ref: Union[str, MapSpec],
                      n_list: Sequence[int],
                      D: Optional[int] = None,
                      policy: Optional[PrecisionPolicy] = None,
                      *,
                      seed=None) -> List[ConstantEstimate]:
    """Estimates at several depths from one shared trajectory pass.

    All depths and their n/10 waypoints are captured in a single run, so
    successive estimates differ only through the series truncation at each
    depth: the gaps validate the first-omitted-term error model.
    """
    spec = _resolve_map(map_ref)
    ns = [int(n) for n in n_list]
    if len(ns) < 2:
        raise ValueError("convergence study needs at least two depths")
    if any(b < a for a, b in zip(ns, ns[1:])):
        raise ValueError("depths must be ascending")
    if ns[0] < MIN_DEPTH:
        raise ValueError(f"estimate needs n >= {MIN_DEPTH}, got {ns[0]}")
    if policy is None:
        policy = PrecisionPolicy.for_iterations(40, ns[-1])
    D, table = _resolve_table(spec, D, table=None)
    ansatz = ansatz_for(spec.name, D)
    bits = working_context(policy).precision
    pieces = _series_pieces(ansatz, table)

    indices = sorted({m for n in ns for m in (n, n // 10)})
    run = iterate(spec, ns[-1], policy, seed=seed, waypoints=indices)
    solved = {m: _solve_at(pieces, len(ansatz.fixed),
                           run.waypoints[m], m, bits)
              for m in indices}

    out = []
    for n in ns:
        modeled = omitted_term_magnitude(ansatz, n, policy)
        modeled = modeled / _sensitivity_floor(pieces, solved[n], n, bits)
        out.append(ConstantEstimate(
            map_id=spec.name,
            value=solved[n],
            n_used=n,
            D=D,
            modeled_error=modeled,
            consistency_error=abs(solved[n] - solved[n // 10]),
        ))
    return out
