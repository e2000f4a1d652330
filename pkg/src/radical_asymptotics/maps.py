"""The seven radical recurrence maps and their iteration engine.

Registry of update rules, single-step application with domain checks, a
raw-MPFR hot loop for long runs with checkpoint emission and bit-exact
resume, implicit-form residuals, and the reciprocal link between the
quadratic-shift and root-shift rules.

Checkpoint file format (text, three lines):

    map=<id> k=<index> prec_bits=<p>
    <value: shortest decimal string that reparses to the exact bits>
    checksum=<hex16>

The checksum is the first 16 hex digits (64 bits) of SHA-256 over the
string "<id>|<k>|<prec_bits>|<value>".
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional

import gmpy2
from gmpy2 import mpfr

from . import hpnum
from .hpnum import DomainError, HPReal, working_context

__all__ = [
    "MapSpec",
    "Checkpoint",
    "CheckpointError",
    "UnsupportedMapError",
    "IterateResult",
    "MAPS",
    "MAP_IDS",
    "DEFAULT_CHECKPOINT_EVERY",
    "get_map",
    "apply",
    "iterate",
    "implicit_residual",
    "reciprocal_link_check",
    "write_checkpoint",
    "read_checkpoint",
]

DEFAULT_CHECKPOINT_EVERY = 10 ** 6


class CheckpointError(ValueError):
    """Malformed, corrupt, or mismatched checkpoint."""


class UnsupportedMapError(ValueError):
    """Operation asked of a map that does not support it."""


def _step_simple_radical(x: mpfr) -> mpfr:
    return gmpy2.sqrt(x + 1)


def _step_half_angle(x: mpfr) -> mpfr:
    return gmpy2.sqrt((x + 1) / 2)


def _step_double_radical(x: mpfr) -> mpfr:
    return gmpy2.sqrt(2 * x + 2)


def _step_quad_shift(x: mpfr) -> mpfr:
    return (1 + gmpy2.sqrt(4 * x * x + 1)) / 2


def _step_root_shift(x: mpfr) -> mpfr:
    return (x + gmpy2.sqrt(x * x + 4)) / 2


def _step_product_radical(x: mpfr) -> mpfr:
    return gmpy2.sqrt(x * (x + 1))


def _step_add_inverse(x: mpfr) -> mpfr:
    return x + 1 / x


def _implicit_quad_shift(prev: HPReal, nxt: HPReal) -> HPReal:
    return nxt * nxt - nxt - prev * prev


def _implicit_root_shift(prev: HPReal, nxt: HPReal) -> HPReal:
    return nxt - 1 / nxt - prev


def _implicit_product_radical(prev: HPReal, nxt: HPReal) -> HPReal:
    return nxt * nxt - (prev * prev + prev)


def _implicit_add_inverse(prev: HPReal, nxt: HPReal) -> HPReal:
    return nxt - (prev + 1 / prev)


@dataclass(frozen=True)
class MapSpec:
    """One recurrence: identity, seed and index conventions, update rule.

    start_index is the subscript of the seed itself; iterate(n) applies the
    rule n - start_index times.  Convergent maps carry a finite limit in
    `limit_note`; the divergent ones grow without bound.
    """

    name: str
    start_index: int
    seed: Fraction
    domain_min: Fraction
    domain_strict: bool
    step: Callable[[mpfr], mpfr]
    implicit: Optional[Callable[[HPReal, HPReal], HPReal]]
    divergent: bool
    limit_note: str

    def in_domain(self, x) -> bool:
        if self.domain_strict:
            return x > self.domain_min
        return x >= self.domain_min

    def domain_text(self) -> str:
        op = ">" if self.domain_strict else ">="
        return f"x {op} {self.domain_min}"


MAPS = {
    m.name: m
    for m in [
        MapSpec("simple-radical", 1, Fraction(1), Fraction(-1), False,
                _step_simple_radical, None, False,
                "increases to the golden ratio (1+sqrt5)/2"),
        MapSpec("half-angle", 1, Fraction(0), Fraction(0), False,
                _step_half_angle, None, False,
                "increases to 1 along cosines of halved angles"),
        MapSpec("double-radical", 1, Fraction(1), Fraction(0), False,
                _step_double_radical, None, False,
                "increases to 1+sqrt3; finer asymptotics unknown"),
        MapSpec("quad-shift", 0, Fraction(1), Fraction(0), False,
                _step_quad_shift, _implicit_quad_shift, True,
                "diverges like k/2 + ln(k)/4"),
        MapSpec("root-shift", 0, Fraction(0), Fraction(0), False,
                _step_root_shift, _implicit_root_shift, True,
                "diverges like sqrt(2k)"),
        MapSpec("product-radical", 0, Fraction(1), Fraction(0), False,
                _step_product_radical, _implicit_product_radical, True,
                "diverges like k/2 - ln(k)/4"),
        MapSpec("add-inverse", 0, Fraction(1), Fraction(0), True,
                _step_add_inverse, _implicit_add_inverse, True,
                "diverges like sqrt(2k); inverse-increment form"),
    ]
}

MAP_IDS = tuple(MAPS)


def get_map(name: str) -> MapSpec:
    try:
        return MAPS[name]
    except KeyError:
        known = ", ".join(MAP_IDS)
        raise ValueError(f"unknown map {name!r}; known maps: {known}") from None


def _require_domain(spec: MapSpec, x) -> None:
    if not spec.in_domain(x):
        raise DomainError(f"{spec.name} requires {spec.domain_text()}")


def apply(spec: MapSpec, x: HPReal) -> HPReal:
    """One recurrence step at the operand's working precision."""
    _require_domain(spec, x)
    with working_context(x.prec_bits):
        return HPReal(spec.step(x.value))


@dataclass(frozen=True)
class Checkpoint:
    """A resumable trajectory snapshot; the value string is bit-lossless."""

    map_id: str
    k: int
    value_str: str
    prec_bits: int
    checksum: str

    @staticmethod
    def _digest(map_id: str, k: int, prec_bits: int, value_str: str) -> str:
        payload = f"{map_id}|{k}|{prec_bits}|{value_str}".encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    @classmethod
    def capture(cls, map_id: str, k: int, value: mpfr, prec_bits: int) -> "Checkpoint":
        s = _mpfr_to_string(value)
        return cls(map_id, k, s, prec_bits,
                   cls._digest(map_id, k, prec_bits, s))

    def verify(self) -> None:
        want = self._digest(self.map_id, self.k, self.prec_bits, self.value_str)
        if want != self.checksum:
            raise CheckpointError(
                f"checkpoint checksum mismatch for {self.map_id} at k={self.k}")

    def value(self) -> HPReal:
        return hpnum.parse(self.value_str, self.prec_bits)


def _mpfr_to_string(x: mpfr) -> str:
    """Shortest decimal string that reparses to the same bits at the same
    precision (MPFR's minimal round-trip digit count)."""
    mantissa, exp, _ = x.digits(10, 0)
    if mantissa.startswith("-"):
        return f"-0.{mantissa[1:]}e{exp}"
    return f"0.{mantissa}e{exp}"


def write_checkpoint(cp: Checkpoint, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"map={cp.map_id} k={cp.k} prec_bits={cp.prec_bits}\n")
        fh.write(cp.value_str + "\n")
        fh.write(f"checksum={cp.checksum}\n")


def read_checkpoint(path: str) -> Checkpoint:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh.read().splitlines() if ln.strip()]
    if len(lines) != 3:
        raise CheckpointError(f"checkpoint {path}: expected 3 lines, got {len(lines)}")
    fields = dict(part.split("=", 1) for part in lines[0].split())
    try:
        map_id = fields["map"]
        k = int(fields["k"])
        prec_bits = int(fields["prec_bits"])
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"checkpoint {path}: bad header line") from exc
    if not lines[2].startswith("checksum="):
        raise CheckpointError(f"checkpoint {path}: missing checksum line")
    cp = Checkpoint(map_id, k, lines[1], prec_bits,
                    lines[2].split("=", 1)[1])
    cp.verify()
    return cp


@dataclass
class IterateResult:
    value: HPReal
    checkpoints: list
    waypoints: dict


def iterate(spec: MapSpec, n: int, policy, *,
            seed=None,
            checkpoint_every: Optional[int] = None,
            resume: Optional[Checkpoint] = None,
            waypoints: Iterable[int] = ()) -> IterateResult:
    """Run the trajectory out to index n and return x_n.

    Deterministic for fixed (map, n, precision); resuming from a checkpoint
    reproduces the cold run bit for bit because checkpoint values round-trip
    losslessly.  Requested waypoint indices are captured in the same pass.
    """
    bits = working_context(policy).precision
    if n < spec.start_index:
        raise ValueError(
            f"{spec.name} starts at index {spec.start_index}; n={n} is before it")
    if checkpoint_every is not None and checkpoint_every < 1:
        raise ValueError("checkpoint_every must be >= 1")

    wanted = sorted({w for w in waypoints})
    for w in wanted:
        if w < spec.start_index or w > n:
            raise ValueError(f"waypoint {w} outside [{spec.start_index}, {n}]")

    checkpoints: list = []
    recorded: dict = {}

    with working_context(bits):
        if resume is not None:
            resume.verify()
            if resume.map_id != spec.name:
                raise CheckpointError(
                    f"checkpoint is for {resume.map_id}, not {spec.name}")
            if resume.prec_bits != bits:
                raise CheckpointError(
                    f"checkpoint precision {resume.prec_bits} != working {bits}")
            if not (spec.start_index <= resume.k <= n):
                raise CheckpointError(
                    f"checkpoint index {resume.k} outside [{spec.start_index}, {n}]")
            k = resume.k
            x = mpfr(resume.value_str)
        else:
            seed_frac = spec.seed if seed is None else Fraction(seed)
            if not spec.in_domain(seed_frac):
                raise DomainError(
                    f"{spec.name} seed must satisfy {spec.domain_text()}")
            k = spec.start_index
            x = mpfr(gmpy2.mpq(seed_frac.numerator, seed_frac.denominator))

        wp_iter = iter(wanted)
        next_wp = next(wp_iter, None)
        while next_wp is not None and next_wp < k:
            next_wp = next(wp_iter, None)  # waypoints before a resume point
        if next_wp == k:
            recorded[k] = HPReal(x)
            next_wp = next(wp_iter, None)

        step = spec.step
        while k < n:
            x = step(x)
            k += 1
            if checkpoint_every is not None and k % checkpoint_every == 0:
                checkpoints.append(Checkpoint.capture(spec.name, k, x, bits))
            if k == next_wp:
                recorded[k] = HPReal(x)
                next_wp = next(wp_iter, None)

        return IterateResult(HPReal(x), checkpoints, recorded)


def implicit_residual(spec: MapSpec, x_prev: HPReal, x_next: HPReal) -> HPReal:
    """LHS - RHS of the map's implicit one-step relation; 0 on a trajectory."""
    if spec.implicit is None:
        raise UnsupportedMapError(f"{spec.name} has no implicit form")
    return spec.implicit(x_prev, x_next)


def reciprocal_link_check(x: HPReal):
    """Residuals of the two substitution identities tying the quad-shift and
    root-shift rules through x -> 1/x: each rule applied at x equals x times
    the other rule applied at 1/x."""
    if not x > 0:
        raise DomainError("reciprocal link requires x > 0")
    quad = MAPS["quad-shift"]
    root = MAPS["root-shift"]
    with working_context(x.prec_bits):
        inv = 1 / x
        g_at_x = HPReal(quad.step(x.value))
        f_at_x = HPReal(root.step(x.value))
        f_at_inv = HPReal(root.step(inv.value))
        g_at_inv = HPReal(quad.step(inv.value))
    return abs(g_at_x - x * f_at_inv), abs(f_at_x - x * g_at_inv)
