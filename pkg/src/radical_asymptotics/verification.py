"""Runnable verification suite for every reference claim the package makes.

Each fixture re-derives one published or mathematically forced result and
reports measured-vs-expected.  The registry is ordered; suite output is
always emitted in fixture-id order regardless of worker scheduling.  All
fixtures are hermetic: no network, no state, deterministic seeds.
"""

from __future__ import annotations

import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import hpnum
from .casring import C_SYMBOL, CPoly, QSqrt2
from .extract import convergence_study, derived_checks, estimate_c
from .golden import cos_map_check, paris_product, paris_scaled, verify_bound
from .hpnum import PrecisionPolicy, parse, real, sqrt, to_decimal
from .maps import get_map, iterate, reciprocal_link_check
from .series import (
    ansatz_for,
    monomial,
    shift_expand,
    solve_coefficients,
)

__all__ = [
    "FixtureResult",
    "FIXTURE_IDS",
    "fixture_title",
    "run_fixture",
    "run_suite",
    "suite_passed",
]

F = Fraction
_C = C_SYMBOL

PARIS_REFERENCE = "1.0986419643941564857346689"

CONSTANT_REFERENCE = {
    "quad-shift": "0.8232354508791921603541165",
    "root-shift": "0.4117221539745403446660605",
    "product-radical": "-1.1751774424585571398132856",
}


def _q(n: int, d: int = 1) -> CPoly:
    return CPoly([QSqrt2(F(n, d), F(0))])


def _r2(n: int, d: int = 1) -> QSqrt2:
    return QSqrt2(F(0), F(n, d))


# -- reference coefficient tables ---------------------------------------------
# The three published tables, transcribed term for term.  The add-inverse
# table has no independent publication; its reference is the root-shift
# table with the recorded per-coefficient sign pattern.

QUAD_SHIFT_TABLE = {
    "p1": _q(1, 8),
    "p0": _C * F(1, 2),
    "q2": _q(-1, 32),
    "q1": -(_C * F(1, 4) - _q(1, 16)),
    "q0": -(_C * _C * F(1, 2) - _C * F(1, 4) - _q(1, 96)),
    "r3": _q(1, 96),
    "r2": _C * F(1, 8) - _q(3, 64),
    "r1": _C * _C * F(1, 2) - _C * F(3, 8) + _q(1, 48),
    "r0": _C ** 3 * F(2, 3) - _C * _C * F(3, 4) + _C * F(1, 12) + _q(7, 576),
    "s4": _q(-1, 256),
    "s3": -(_C * F(1, 16) - _q(11, 384)),
    "s2": -(_C * _C * F(3, 8) - _C * F(11, 32) + _q(5, 128)),
    "s1": -(_C ** 3 - _C * _C * F(11, 8) + _C * F(5, 16) + _q(1, 128)),
    "s0": -(_C ** 4 - _C ** 3 * F(11, 6) + _C * _C * F(5, 8)
            + _C * F(1, 32) - _q(47, 5760)),
}

PRODUCT_RADICAL_TABLE = {
    "p1": _q(1, 8),
    "p0": _C * F(1, 2),
    "q2": _q(1, 32),
    "q1": _C * F(1, 4) - _q(1, 16),
    "q0": _C * _C * F(1, 2) - _C * F(1, 4) - _q(1, 96),
    "r3": _q(1, 96),
    "r2": _C * F(1, 8) - _q(3, 64),
    "r1": _C * _C * F(1, 2) - _C * F(3, 8) + _q(1, 48),
    "r0": _C ** 3 * F(2, 3) - _C * _C * F(3, 4) + _C * F(1, 12) + _q(7, 576),
    "s4": _q(1, 256),
    "s3": _C * F(1, 16) - _q(11, 384),
    "s2": _C * _C * F(3, 8) - _C * F(11, 32) + _q(5, 128),
    "s1": _C ** 3 - _C * _C * F(11, 8) + _C * F(5, 16) + _q(1, 128),
    "s0": _C ** 4 - _C ** 3 * F(11, 6) + _C * _C * F(5, 8)
          + _C * F(1, 32) - _q(47, 5760),
}

ROOT_SHIFT_TABLE = {
    "p2": CPoly([_r2(-1, 128)]),
    "p1": CPoly([_r2(1, 32), QSqrt2(F(-1, 8), F(0))]),
    "p0": CPoly([_r2(-1, 32), QSqrt2(F(1, 4), F(0)), _r2(-1, 4)]),
    "q3": CPoly([_r2(-1, 1024)]),
    "q2": CPoly([_r2(1, 128), QSqrt2(F(-3, 128), F(0))]),
    "q1": CPoly([_r2(-5, 256), QSqrt2(F(1, 8), F(0)), _r2(-3, 32)]),
    "q0": CPoly([_r2(11, 768), QSqrt2(F(-5, 32), F(0)), _r2(1, 4),
                 QSqrt2(F(-1, 4), F(0))]),
}

ADD_INVERSE_SIGNS = {
    "p2": 1, "p1": 1, "p0": 1,
    "q3": -1, "q2": -1, "q1": -1, "q0": -1,
}

# -- reference shift expansions -----------------------------------------------
# Every displayed (k+1)-power expansion: (d, j, depth, {(d', j'): coeff}).

INTEGER_SHIFT_EXPANSIONS = [
    (0, 1, 10, {(0, 1): 1, (2, 0): 1, (4, 0): F(-1, 2), (6, 0): F(1, 3),
                (8, 0): F(-1, 4), (10, 0): F(1, 5)}),
    (2, 1, 10, {(2, 1): 1, (4, 1): -1, (6, 1): 1, (8, 1): -1, (10, 1): 1,
                (4, 0): 1, (6, 0): F(-3, 2), (8, 0): F(11, 6),
                (10, 0): F(-25, 12)}),
    (2, 0, 10, {(2, 0): 1, (4, 0): -1, (6, 0): 1, (8, 0): -1, (10, 0): 1}),
    (4, 2, 10, {(4, 2): 1, (6, 2): -2, (8, 2): 3, (10, 2): -4,
                (6, 1): 2, (8, 1): -5, (10, 1): F(26, 3),
                (8, 0): 1, (10, 0): -3}),
    (4, 1, 10, {(4, 1): 1, (6, 1): -2, (8, 1): 3, (10, 1): -4,
                (6, 0): 1, (8, 0): F(-5, 2), (10, 0): F(13, 3)}),
    (4, 0, 10, {(4, 0): 1, (6, 0): -2, (8, 0): 3, (10, 0): -4}),
    (6, 3, 10, {(6, 3): 1, (8, 3): -3, (10, 3): 6,
                (8, 2): 3, (10, 2): F(-21, 2), (10, 1): 3}),
    (6, 2, 10, {(6, 2): 1, (8, 2): -3, (10, 2): 6,
                (8, 1): 2, (10, 1): -7, (10, 0): 1}),
    (6, 1, 10, {(6, 1): 1, (8, 1): -3, (10, 1): 6,
                (8, 0): 1, (10, 0): F(-7, 2)}),
    (6, 0, 10, {(6, 0): 1, (8, 0): -3, (10, 0): 6}),
    (8, 4, 10, {(8, 4): 1, (10, 4): -4, (10, 3): 4}),
    (8, 3, 10, {(8, 3): 1, (10, 3): -4, (10, 2): 3}),
    (8, 2, 10, {(8, 2): 1, (10, 2): -4, (10, 1): 2}),
    (8, 1, 10, {(8, 1): 1, (10, 1): -4, (10, 0): 1}),
    (8, 0, 10, {(8, 0): 1, (10, 0): -4}),
]

HALF_SHIFT_EXPANSIONS = [
    (-1, 0, 9, {(-1, 0): 1, (1, 0): F(1, 2), (3, 0): F(-1, 8),
                (5, 0): F(1, 16), (7, 0): F(-5, 128), (9, 0): F(7, 256)}),
    (1, 1, 9, {(1, 1): 1, (3, 1): F(-1, 2), (5, 1): F(3, 8),
               (7, 1): F(-5, 16), (9, 1): F(35, 128),
               (3, 0): 1, (5, 0): -1, (7, 0): F(23, 24), (9, 0): F(-11, 12)}),
    (1, 0, 9, {(1, 0): 1, (3, 0): F(-1, 2), (5, 0): F(3, 8),
               (7, 0): F(-5, 16), (9, 0): F(35, 128)}),
    (3, 2, 9, {(3, 2): 1, (5, 2): F(-3, 2), (7, 2): F(15, 8),
               (9, 2): F(-35, 16),
               (5, 1): 2, (7, 1): -4, (9, 1): F(71, 12),
               (7, 0): 1, (9, 0): F(-5, 2)}),
    (3, 1, 9, {(3, 1): 1, (5, 1): F(-3, 2), (7, 1): F(15, 8),
               (9, 1): F(-35, 16),
               (5, 0): 1, (7, 0): -2, (9, 0): F(71, 24)}),
    (3, 0, 9, {(3, 0): 1, (5, 0): F(-3, 2), (7, 0): F(15, 8),
               (9, 0): F(-35, 16)}),
    (5, 3, 9, {(5, 3): 1, (7, 3): F(-5, 2), (9, 3): F(35, 8),
               (7, 2): 3, (9, 2): -9, (9, 1): 3}),
    (5, 2, 9, {(5, 2): 1, (7, 2): F(-5, 2), (9, 2): F(35, 8),
               (7, 1): 2, (9, 1): -6, (9, 0): 1}),
    (5, 1, 9, {(5, 1): 1, (7, 1): F(-5, 2), (9, 1): F(35, 8),
               (7, 0): 1, (9, 0): -3}),
    (5, 0, 9, {(5, 0): 1, (7, 0): F(-5, 2), (9, 0): F(35, 8)}),
]


@dataclass(frozen=True)
class FixtureResult:
    fixture_id: str
    title: str
    passed: bool
    measured: str
    expected: str
    seconds: float

    def to_json_obj(self) -> dict:
        return {
            "id": self.fixture_id,
            "title": self.title,
            "passed": self.passed,
            "measured": self.measured,
            "expected": self.expected,
            "seconds": round(self.seconds, 3),
        }


# -- fixtures -------------------------------------------------------------
# Each returns (passed, measured, expected).


def _fx_paris_product() -> Tuple[bool, str, str]:
    policy = PrecisionPolicy(30)
    got = paris_product(60, policy)
    ref = parse(PARIS_REFERENCE, 256)
    err = abs(got - ref)
    return (err < parse("1e-24", 64),
            to_decimal(got, 26),
            f"within 1e-24 of {PARIS_REFERENCE}")


def _fx_finite_identity() -> Tuple[bool, str, str]:
    policy = PrecisionPolicy(40)
    bits = policy.working_bits
    bound = real(1, bits) / real(2, bits) ** (bits - 20)
    worst = real(0, bits)
    for n in range(2, 65):
        gap = abs(paris_product(n, policy) - paris_scaled(n, policy))
        if gap > worst:
            worst = gap
    return (worst < bound,
            f"max product-vs-scaled gap {to_decimal(worst, 3)} over n=2..64",
            f"< 2^-({bits}-20)")


def _fx_gap_bound() -> Tuple[bool, str, str]:
    rows = verify_bound(200, PrecisionPolicy(40))
    ok = all(flag for _, _, _, flag in rows)
    return (ok and len(rows) == 200,
            f"{sum(1 for r in rows if r[3])}/200 rows hold",
            "equality at k=1, strict 0 < gap < phi^-k for 2 <= k <= 200")


def _fx_cosine_closed_form() -> Tuple[bool, str, str]:
    rows = cos_map_check(40, PrecisionPolicy(40))
    tol = parse("1e-30", 64)
    ids_ok = all(err < tol for _, err, _ in rows)
    bits = rows[0][2].prec_bits
    half_pi_sq = hpnum.pi(bits) ** 2 / 2
    devs = [abs(scaled - half_pi_sq) for _, _, scaled in rows]
    ratios = [devs[k - 1] / devs[k] for k in range(5, len(devs))]
    rate_ok = all(F(7, 2) < r < F(9, 2) for r in ratios)
    worst_id = max(err for _, err, _ in rows)
    return (ids_ok and rate_ok,
            f"max identity error {to_decimal(worst_id, 3)}; "
            f"rate span [{to_decimal(min(ratios), 4)}, "
            f"{to_decimal(max(ratios), 4)}]",
            "identity < 1e-30 for k <= 40; per-step factor in 4 +- 0.5 "
            "for k >= 5")


def _fx_coefficient_tables() -> Tuple[bool, str, str]:
    quad = solve_coefficients("quad-shift").as_dict()
    root = solve_coefficients("root-shift").as_dict()
    product = solve_coefficients("product-radical").as_dict()
    addinv = solve_coefficients("add-inverse").as_dict()

    quad_ok = quad == QUAD_SHIFT_TABLE
    root_ok = root == ROOT_SHIFT_TABLE
    product_ok = product == PRODUCT_RADICAL_TABLE
    fixed = ansatz_for("product-radical").fixed
    product_fixed_ok = fixed == (
        (-2, 0, _q(1, 2)), (0, 1, _q(-1, 4)), (0, 0, -_C))
    signs_ok = (set(addinv) == set(ROOT_SHIFT_TABLE) and all(
        addinv[name] == ROOT_SHIFT_TABLE[name] * ADD_INVERSE_SIGNS[name]
        for name in addinv))
    passed = quad_ok and root_ok and product_ok and product_fixed_ok and signs_ok
    return (passed,
            f"quad 14/14 {'exact' if quad_ok else 'MISMATCH'}, "
            f"root 7/7 {'exact' if root_ok else 'MISMATCH'}, "
            f"product 17-term display {'exact' if product_ok and product_fixed_ok else 'MISMATCH'}, "
            f"add-inverse signs {'exact' if signs_ok else 'MISMATCH'}",
            "every derived coefficient equals its reference, with the "
            "recorded sign pattern for add-inverse")


def _fx_shift_expansions() -> Tuple[bool, str, str]:
    cases = INTEGER_SHIFT_EXPANSIONS + HALF_SHIFT_EXPANSIONS
    bad = []
    for d, j, depth, expected in cases:
        got = shift_expand(monomial(d, j, 1, depth + 6), depth)
        want = {key: CPoly.of(v) for key, v in expected.items()}
        if got.terms != want:
            bad.append((d, j))
    # spot-check the three coefficients most sensitive to the convolution
    marks = (
        INTEGER_SHIFT_EXPANSIONS[1][3][(8, 0)] == F(11, 6),
        INTEGER_SHIFT_EXPANSIONS[1][3][(10, 0)] == F(-25, 12),
        HALF_SHIFT_EXPANSIONS[0][3][(7, 0)] == F(-5, 128),
    )
    return (not bad and all(marks),
            f"{len(cases) - len(bad)}/{len(cases)} expansions "
            f"coefficient-exact" + (f"; failed {bad}" if bad else ""),
            "all displayed integer-power and half-power shift expansions")


def _constant_fixture(map_id: str, tol: str) -> Tuple[bool, str, str]:
    est = estimate_c(map_id, 10 ** 7)
    ref = parse(CONSTANT_REFERENCE[map_id], est.value.prec_bits)
    err = abs(est.value - ref)
    return (err < parse(tol, 64),
            f"C = {to_decimal(est.value, 27)} (err {to_decimal(err, 3)})",
            f"within {tol} of {CONSTANT_REFERENCE[map_id]}")


def _fx_quad_shift_constant() -> Tuple[bool, str, str]:
    return _constant_fixture("quad-shift", "1e-18")


def _fx_root_shift_constant() -> Tuple[bool, str, str]:
    est = estimate_c("root-shift", 10 ** 7)
    ref = parse(CONSTANT_REFERENCE["root-shift"], est.value.prec_bits)
    err = abs(est.value - ref)
    (_, scaled), = derived_checks(est)
    scaled_str = to_decimal(scaled, 9)
    ok = err < parse("1e-12", 64) and scaled_str == "0.291131527"
    return (ok,
            f"C = {to_decimal(est.value, 27)} (err {to_decimal(err, 3)}); "
            f"C/sqrt2 = {scaled_str}",
            f"within 1e-12 of {CONSTANT_REFERENCE['root-shift']}; "
            f"C/sqrt2 = 0.291131527 to 9 digits")


def _fx_product_radical_constant() -> Tuple[bool, str, str]:
    passed, measured, expected = _constant_fixture("product-radical", "1e-18")
    est_negative = measured.startswith("C = -")
    return (passed and est_negative, measured, expected + "; sign negative")


def _fx_error_model() -> Tuple[bool, str, str]:
    details = []
    ok = True
    for map_id in ("quad-shift", "root-shift", "product-radical",
                   "add-inverse"):
        low, mid, high = convergence_study(map_id, [10 ** 4, 10 ** 5, 10 ** 6])
        gap_low = abs(mid.value - low.value)
        gap_high = abs(high.value - mid.value)
        within = gap_high < mid.modeled_error * 10
        monotone = ((low.value < mid.value < high.value)
                    or (low.value > mid.value > high.value))
        shrinking = gap_high < gap_low
        ok = ok and within and monotone and shrinking
        details.append(f"{map_id}: gap {to_decimal(gap_high, 3)} vs "
                       f"10x model {to_decimal(mid.modeled_error * 10, 3)}"
                       + ("" if within and monotone and shrinking
                          else " VIOLATED"))
    return (ok, "; ".join(details),
            "|est(1e6) - est(1e5)| < 10 x modeled(1e5); estimates monotone "
            "and decade gaps shrinking, all four divergent maps")


def _fx_reciprocal_link() -> Tuple[bool, str, str]:
    rng = random.Random(128500)
    bound = real(1, 128) / real(2, 128) ** 100
    worst = real(0, 128)
    for _ in range(100):
        x = real(Fraction(rng.randint(10 ** 4, 10 ** 6), 10 ** 5), 128)
        for resid in reciprocal_link_check(x):
            if resid > worst:
                worst = resid
    return (worst < bound,
            f"max residual {to_decimal(worst, 3)} over 100 draws in "
            f"[0.1, 10]",
            "both substitution residuals < 2^-100 at 128 bits")


def _fx_checkpoint_resume() -> Tuple[bool, str, str]:
    spec = get_map("quad-shift")
    policy = PrecisionPolicy.for_iterations(40, 10 ** 5)
    cold = iterate(spec, 10 ** 5, policy)
    ckpts = iterate(spec, 10 ** 5, policy,
                    checkpoint_every=5 * 10 ** 4).checkpoints
    halfway = next(c for c in ckpts if c.k == 5 * 10 ** 4)
    warm = iterate(spec, 10 ** 5, policy, resume=halfway)
    same = (cold.value == warm.value
            and cold.value.prec_bits == warm.value.prec_bits
            and to_decimal(cold.value, 40) == to_decimal(warm.value, 40))
    return (same,
            "cold and resumed runs "
            + ("bit-identical" if same else "DIVERGED"),
            "resume at 5e4 reproduces the cold 1e5 iterate bit for bit")


_REGISTRY: Tuple[Tuple[str, str, object], ...] = (
    ("01-paris-product", "product route to the simple-radical constant",
     _fx_paris_product),
    ("02-finite-identity", "product equals scaled gap at every finite depth",
     _fx_finite_identity),
    ("03-gap-bound", "golden-gap bound with equality only at the seed",
     _fx_gap_bound),
    ("04-cosine-closed-form", "half-angle iterates against the cosine form",
     _fx_cosine_closed_form),
    ("05-coefficient-tables", "exact symbolic coefficient tables",
     _fx_coefficient_tables),
    ("06-shift-expansions", "displayed index-shift expansions",
     _fx_shift_expansions),
    ("07-quad-shift-constant", "quad-shift constant at depth 1e7",
     _fx_quad_shift_constant),
    ("08-root-shift-constant", "root-shift constant and scaled companion",
     _fx_root_shift_constant),
    ("09-product-radical-constant", "product-radical constant at depth 1e7",
     _fx_product_radical_constant),
    ("10-error-model", "first-omitted-term error model across decades",
     _fx_error_model),
    ("11-reciprocal-link", "reciprocal substitution link between shift maps",
     _fx_reciprocal_link),
    ("12-checkpoint-resume", "bit-identical checkpoint resume",
     _fx_checkpoint_resume),
)

FIXTURE_IDS: Tuple[str, ...] = tuple(fid for fid, _, _ in _REGISTRY)
_BY_ID = {fid: (title, fn) for fid, title, fn in _REGISTRY}


def fixture_title(fixture_id: str) -> str:
    return _BY_ID[fixture_id][0]


def run_fixture(fixture_id: str) -> FixtureResult:
    """Execute one fixture and time it."""
    if fixture_id not in _BY_ID:
        raise KeyError(f"unknown fixture {fixture_id!r}; "
                       f"known: {', '.join(FIXTURE_IDS)}")
    title, fn = _BY_ID[fixture_id]
    start = time.perf_counter()
    passed, measured, expected = fn()
    elapsed = time.perf_counter() - start
    return FixtureResult(fixture_id, title, passed, measured, expected,
                         elapsed)


def _worker_budget(requested: Optional[int], count: int) -> int:
    cap = os.environ.get("RADICAL_ASYMPTOTICS_WORKERS")
    if requested is None:
        requested = min(count, os.cpu_count() or 1, 4)
    if requested < 1:
        raise ValueError("workers must be >= 1")
    if cap is not None:
        try:
            cap_n = int(cap)
        except ValueError:
            raise ValueError(
                f"RADICAL_ASYMPTOTICS_WORKERS must be an integer, "
                f"got {cap!r}")
        if cap_n < 1:
            raise ValueError("RADICAL_ASYMPTOTICS_WORKERS must be >= 1")
        requested = min(requested, cap_n)
    return requested


def run_suite(ids: Optional[Sequence[str]] = None,
              workers: Optional[int] = None) -> List[FixtureResult]:
    """Run fixtures (all by default), in parallel when workers allow.

    Results come back ordered by fixture id, not completion time.
    """
    chosen = list(ids) if ids is not None else list(FIXTURE_IDS)
    for fid in chosen:
        if fid not in _BY_ID:
            raise KeyError(f"unknown fixture {fid!r}; "
                           f"known: {', '.join(FIXTURE_IDS)}")
    budget = _worker_budget(workers, len(chosen))
    if budget <= 1 or len(chosen) <= 1:
        results = [run_fixture(fid) for fid in chosen]
    else:
        with ProcessPoolExecutor(max_workers=budget) as pool:
            results = list(pool.map(run_fixture, chosen))
    return sorted(results, key=lambda r: r.fixture_id)


def suite_passed(results: Sequence[FixtureResult]) -> bool:
    return all(r.passed for r in results)
