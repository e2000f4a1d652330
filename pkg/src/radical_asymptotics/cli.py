"""Command-line surface for the package.

Subcommands: iterate, paris, derive-series, estimate-c,
explore-double-radical, verify.  Machine output is JSON (--json); human
output quotes values at the requested digit count with a trailing "..."
marker whenever more digits exist.  An optional key=value config file
mirrors the long flags; explicit flags win.

Exit codes: 0 success, 1 verification failure, 2 usage error,
3 checkpoint/data corruption.
"""

from __future__ import annotations

import argparse
import json
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Dict, List, Optional

from . import golden
from .extract import DEFAULT_DEPTH, derived_checks, estimate_c
from .hpnum import DomainError, HPReal, PrecisionPolicy, parse, to_decimal
from .maps import (
    MAP_IDS,
    Checkpoint,
    CheckpointError,
    UnsupportedMapError,
    get_map,
    iterate,
    read_checkpoint,
    write_checkpoint,
)
from .series import REFERENCE_D, SOLVABLE_MAPS, solve_coefficients
from .verification import FIXTURE_IDS, run_suite, suite_passed

__all__ = ["main"]

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_CORRUPT = 3

_ELLIPSIS = "…"

# expansion order counts solved coefficient blocks; the lattice truncation
# is 2*order for the integer-step family, 2*order + 1 for the half-step one
_DEFAULT_ORDER = {"quad-shift": 4, "product-radical": 4,
                  "root-shift": 2, "add-inverse": 2}


def _depth(text: str) -> int:
    """Depth flag value: a nonnegative integer, scientific notation allowed."""
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if value != value.to_integral_value():
        raise argparse.ArgumentTypeError(f"depth must be an integer: {text!r}")
    n = int(value)
    if n < 0:
        raise argparse.ArgumentTypeError("depth must be >= 0")
    return n


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _bool_key(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_CONVERTERS = {
    "map": str,
    "n": _depth,
    "terms": _depth,
    "digits": _positive_int,
    "order": _positive_int,
    "checkpoint": str,
    "resume": str,
    "json": _bool_key,
    "out": str,
    "suite": str,
    "only": lambda s: [part.strip() for part in s.split(",") if part.strip()],
}


def _load_config(path: str) -> Dict[str, str]:
    entries: Dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, "
                             f"got {line!r}")
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()
    return entries


def _merge_config(args: argparse.Namespace) -> None:
    """Fill options the command line left unset from the config file."""
    if args.config is None:
        return
    entries = _load_config(args.config)
    known = {k for k in vars(args) if k in _CONVERTERS}
    for key, value in entries.items():
        if key not in known:
            raise ValueError(f"config key {key!r} not valid for "
                             f"{args.command!r}")
        if getattr(args, key) is None:
            setattr(args, key, _CONVERTERS[key](value))


def _policy_for(digits: int, iterations: int) -> PrecisionPolicy:
    # working precision never drops below a 10-digit floor even when the
    # display asks for fewer digits
    return PrecisionPolicy.for_iterations(max(digits, 10), iterations)


def _quote(value: HPReal, digits: int) -> str:
    """Digit string plus a continuation marker when digits were dropped."""
    rendered = to_decimal(value, digits)
    if parse(rendered, value.prec_bits) == value:
        return rendered
    return rendered + _ELLIPSIS


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        print(text)
    else:
        Path(out).write_text(text + "\n")


def _emit_json(obj, out: Optional[str]) -> None:
    _emit(json.dumps(obj, indent=2), out)


# -- subcommand handlers --------------------------------------------------


def _cmd_iterate(args: argparse.Namespace) -> int:
    if args.map is None or args.n is None:
        raise ValueError("iterate requires --map and --n")
    digits = args.digits if args.digits is not None else 30
    spec = get_map(args.map)
    policy = _policy_for(digits, args.n)
    resume = read_checkpoint(args.resume) if args.resume else None
    run = iterate(spec, args.n, policy, resume=resume)
    if args.checkpoint:
        snap = Checkpoint.capture(spec.name, args.n, run.value.value,
                                  run.value.prec_bits)
        write_checkpoint(snap, args.checkpoint)
    if args.json:
        _emit_json({
            "map": spec.name,
            "n": args.n,
            "digits": digits,
            "value": to_decimal(run.value, digits),
            "prec_bits": run.value.prec_bits,
        }, args.out)
    else:
        _emit(_quote(run.value, digits), args.out)
    return EXIT_OK


def _cmd_paris(args: argparse.Namespace) -> int:
    terms = args.terms if args.terms is not None else 60
    digits = args.digits if args.digits is not None else 30
    policy = PrecisionPolicy(max(digits, 10))
    value = golden.paris_product(terms, policy)
    if args.json:
        _emit_json({
            "terms": terms,
            "digits": digits,
            "value": to_decimal(value, digits),
        }, args.out)
    else:
        _emit(_quote(value, digits), args.out)
    return EXIT_OK


def _order_to_depth(map_id: str, order: int) -> int:
    if map_id in ("quad-shift", "product-radical"):
        return 2 * order
    return 2 * order + 1


def _cmd_derive_series(args: argparse.Namespace) -> int:
    if args.map is None:
        raise ValueError("derive-series requires --map")
    if args.map not in SOLVABLE_MAPS:
        raise UnsupportedMapError(
            f"{args.map!r} has no log-power expansion; "
            f"choose one of: {', '.join(SOLVABLE_MAPS)}")
    order = args.order if args.order is not None else _DEFAULT_ORDER[args.map]
    table = solve_coefficients(args.map, _order_to_depth(args.map, order))
    if args.json:
        _emit_json(table.to_json_obj(), args.out)
    else:
        from .casring import format_cpoly
        lines = [f"{e.name} = {format_cpoly(e.value)}" for e in table.entries]
        _emit("\n".join(lines), args.out)
    return EXIT_OK


def _cmd_estimate_c(args: argparse.Namespace) -> int:
    if args.map is None:
        raise ValueError("estimate-c requires --map")
    n = args.n if args.n is not None else DEFAULT_DEPTH
    digits = args.digits if args.digits is not None else 30
    order = args.order
    depth_d = None if order is None else _order_to_depth(args.map, order)
    est = estimate_c(args.map, n, D=depth_d,
                     policy=_policy_for(max(digits, 40), n))
    try:
        derived = derived_checks(est)
    except UnsupportedMapError:
        derived = []
    if args.json:
        obj = est.to_json_obj(digits)
        if derived:
            obj["derived"] = {name: to_decimal(v, digits)
                              for name, v in derived}
        _emit_json(obj, args.out)
    else:
        lines = [f"C = {_quote(est.value, digits)}",
                 f"modeled_error = {to_decimal(est.modeled_error, 6)}",
                 f"consistency_error = {to_decimal(est.consistency_error, 6)}"]
        lines += [f"{name} = {_quote(v, digits)}" for name, v in derived]
        _emit("\n".join(lines), args.out)
    return EXIT_OK


def _cmd_explore_double_radical(args: argparse.Namespace) -> int:
    n = args.n if args.n is not None else 32
    digits = args.digits if args.digits is not None else 30
    policy = PrecisionPolicy(max(digits, 10))
    gap, ratio, scaled = golden.double_radical_explore(n, policy)
    if args.json:
        _emit_json({
            "n": n,
            "gap": to_decimal(gap, digits),
            "gap_ratio": to_decimal(ratio, digits),
            "scaled_gap": to_decimal(scaled, digits),
        }, args.out)
    else:
        _emit("\n".join([
            f"gap = {_quote(gap, digits)}",
            f"gap_ratio = {_quote(ratio, digits)}",
            f"scaled_gap = {_quote(scaled, digits)}",
        ]), args.out)
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    suite = args.suite if args.suite is not None else "paper"
    if suite != "paper":
        raise ValueError(f"unknown suite {suite!r}; only 'paper' exists")
    ids = None
    if args.only:
        # repeated --only flags arrive as lists; a config entry arrives flat
        ids = []
        for group in args.only:
            if isinstance(group, str):
                ids.append(group)
            else:
                ids.extend(group)
    results = run_suite(ids)
    ok = suite_passed(results)
    if args.json:
        _emit_json({
            "suite": suite,
            "passed": ok,
            "results": [r.to_json_obj() for r in results],
        }, args.out)
    else:
        lines = []
        for r in results:
            flag = "PASS" if r.passed else "FAIL"
            lines.append(f"[{flag}] {r.fixture_id}  {r.title}  "
                         f"({r.seconds:.2f}s)")
            lines.append(f"       measured: {r.measured}")
            lines.append(f"       expected: {r.expected}")
        lines.append(f"suite: {'PASS' if ok else 'FAIL'} "
                     f"({sum(1 for r in results if r.passed)}/{len(results)})")
        _emit("\n".join(lines), args.out)
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


# -- parser ----------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser, *, with_map: bool = False,
                with_n: bool = False, with_order: bool = False) -> None:
    if with_map:
        sub.add_argument("--map", choices=sorted(MAP_IDS), default=None,
                         help="which recurrence to use")
    if with_n:
        sub.add_argument("--n", type=_depth, default=None,
                         help="iteration depth (scientific notation ok, "
                              "e.g. 1e7)")
    sub.add_argument("--digits", type=_positive_int, default=None,
                     help="decimal digits to display (default 30)")
    if with_order:
        sub.add_argument("--order", type=_positive_int, default=None,
                         help="number of coefficient blocks to solve")
    sub.add_argument("--json", action="store_const", const=True,
                     default=None, help="emit JSON instead of text")
    sub.add_argument("--out", default=None,
                     help="write output to this file instead of stdout")
    sub.add_argument("--config", default=None,
                     help="key=value file supplying defaults for these flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radical-asymptotics",
        description="Iterate radical recurrences, derive their log-power "
                    "expansions, and extract the constants.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("iterate", help="run one recurrence to depth n")
    _add_common(p, with_map=True, with_n=True)
    p.add_argument("--checkpoint", default=None,
                   help="write the final state to this checkpoint file")
    p.add_argument("--resume", default=None,
                   help="resume from this checkpoint file")
    p.set_defaults(handler=_cmd_iterate)

    p = subs.add_parser("paris", help="the simple-radical constant by its "
                                      "product form")
    p.add_argument("--terms", type=_depth, default=None,
                   help="number of product terms (default 60)")
    _add_common(p)
    p.set_defaults(handler=_cmd_paris)

    p = subs.add_parser("derive-series",
                        help="derive a map's coefficient table symbolically")
    _add_common(p, with_map=True, with_order=True)
    p.set_defaults(handler=_cmd_derive_series)

    p = subs.add_parser("estimate-c",
                        help="fit the constant C against a deep iterate")
    _add_common(p, with_map=True, with_n=True, with_order=True)
    p.set_defaults(handler=_cmd_estimate_c)

    p = subs.add_parser("explore-double-radical",
                        help="gap data for the doubled radical map")
    _add_common(p, with_n=True)
    p.set_defaults(handler=_cmd_explore_double_radical)

    p = subs.add_parser("verify", help="run the reference verification suite")
    p.add_argument("--suite", default=None, help="suite name (paper)")
    p.add_argument("--only", action="append", default=None,
                   type=_CONVERTERS["only"], metavar="IDS",
                   help="run only these comma-separated fixture ids")
    _add_common(p)
    p.set_defaults(handler=_cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 for --help
        return int(exc.code or 0)
    try:
        _merge_config(args)
        return args.handler(args)
    except CheckpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except (DomainError, UnsupportedMapError, ValueError, KeyError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
