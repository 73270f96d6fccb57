"""``ftangle`` command line.

Exit codes: 0 success, 1 a checked property failed, 2 bad usage or input,
3 the output file could not be written.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import asdict

from . import commands
from .errors import FtangleError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

_ENTRY = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class UsageError(Exception):
    pass


def _parse_entry(text: str) -> complex:
    s = text.strip().replace(" ", "")
    if not s:
        raise UsageError("empty vector entry")
    if s.endswith(("i", "j")):
        body = s[:-1]
        # split "re+im" at the last sign that is not part of an exponent
        cut = max((k for k in range(1, len(body)) if body[k] in "+-" and body[k - 1] not in "eE"), default=0)
        re_part, im_part = body[:cut], body[cut:]
        if im_part in ("", "+", "-"):
            im_part += "1"
        if (re_part and not _ENTRY.match(re_part)) or not _ENTRY.match(im_part):
            raise UsageError(f"cannot parse complex entry {text!r}")
        value = complex(float(re_part) if re_part else 0.0, float(im_part))
    else:
        if not _ENTRY.match(s):
            raise UsageError(f"cannot parse complex entry {text!r}")
        value = complex(float(s), 0.0)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise UsageError(f"entry {text!r} is not finite")
    return value


def parse_vector(text: str) -> list[complex]:
    """Three comma-separated entries like ``0.5``, ``-0.5i``, ``1e-3+2i``, ``i``."""
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"expected three comma-separated entries, got {len(parts)} in {text!r}")
    return [_parse_entry(part) for part in parts]


def _print_json(doc) -> None:
    json.dump(doc, sys.stdout, indent=2, allow_nan=True)
    sys.stdout.write("\n")


def cmd_measures(args) -> int:
    _print_json(commands.measures_report(parse_vector(args.w), parse_vector(args.z), normalize=args.normalize))
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    try:
        handle = open(args.out, "w", newline="")
    except OSError as exc:
        print(f"ftangle: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    with handle:
        rows = commands.sample_rows(args.n, args.seed, entangled_only=args.entangled_only)
        handle.write(commands.format_rows(rows))
    print(f"wrote {len(rows)} rows to {args.out} "
          f"({int(rows[:, 5].sum())} entangled, {commands.bound_violations(rows)} outside the C-N bounds)")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.n < 1 or not args.tol > 0:
        raise UsageError("--n must be at least 1 and --tol positive")
    report = commands.run_verify(args.n, args.seed, args.tol, fault=args.inject_fault)
    doc = asdict(report)
    details = doc.pop("details")
    _print_json({**doc, **details, "tol": args.tol})
    return EXIT_OK if report.failures == 0 else EXIT_FAIL


def cmd_bures_check(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    if not 0 < args.eta_min < 1:
        raise UsageError("--eta-min must lie strictly between 0 and 1 (the metric degenerates at eta = 0)")
    report = commands.run_bures_check(args.n, args.seed, args.eta_min)
    _print_json(asdict(report))
    for line in report.failures:
        print(f"FAIL {line}", file=sys.stderr)
    return EXIT_OK if not report.failures else EXIT_FAIL


def cmd_canonical(args) -> int:
    _print_json(commands.canonical_dump(parse_vector(args.w), parse_vector(args.z)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ftangle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def state_args(p, normalize=False):
        p.add_argument("--w", required=True, help="complex 3-vector, e.g. '0.5,0.5i,0'")
        p.add_argument("--z", required=True, help="complex 3-vector")
        if normalize:
            p.add_argument("--normalize", action="store_true", help="rescale so |w|^2 + |z|^2 = 1")

    p = sub.add_parser("measures", help="all measures, tangles and invariants of one state (JSON)")
    state_args(p, normalize=True)
    p.set_defaults(func=cmd_measures)

    p = sub.add_parser("sample", help="random states as CSV rows for the concurrence/negativity plane")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--entangled-only", action="store_true", help="keep drawing until n entangled rows exist")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="closed forms against eigensolver oracles")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--inject-fault", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bures-check", help="Bures metric forms, identities and finite differences")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eta-min", type=float, default=0.05)
    p.set_defaults(func=cmd_bures_check)

    p = sub.add_parser("canonical", help="local-unitary canonical X-form of one state (JSON)")
    state_args(p)
    p.set_defaults(func=cmd_canonical)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (AssertionError, ArithmeticError) as exc:
        # failed identity checks, oracle disagreement, eigensolver breakdown
        print(f"ftangle: check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (UsageError, ValueError, FtangleError) as exc:
        print(f"ftangle: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
