"""Command line entry point: ``eqlines <command> ...``.

Exit codes: 0 success, 1 usage error, 2 solver failure (or table mismatch
for ``verify-table3``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction
from typing import Optional, Sequence

from eqlines.pipeline import (
    FORMATS,
    RunConfig,
    SolverFailure,
    bound_for_angle,
    bound_for_dimension,
    known_values,
    render_report,
    table_scan,
    verify_table3,
)
from eqlines.sdp_model import build_equiangular_sdp, export_sdpa
from eqlines.threepoint import DEFAULT_P

EXIT_OK, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad arguments; route it to EXIT_USAGE instead
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _angle(text: str) -> Fraction:
    try:
        a = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a fraction p/q, got {text!r}") from None
    if not 0 < a < 1:
        raise argparse.ArgumentTypeError(f"angle must lie in (0, 1), got {text}")
    return a


def _rows(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="eqlines", description="Upper bounds on equiangular lines in R^n.")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bound", help="bound for one dimension (or one angle)")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--angle", type=_angle)
    b.add_argument("--p", type=int, default=DEFAULT_P)
    b.add_argument("--format", choices=FORMATS, default="csv")

    s = sub.add_parser("scan", help="table of bounds over a range of dimensions")
    s.add_argument("--from", dest="n_min", type=int, required=True)
    s.add_argument("--to", dest="n_max", type=int, required=True)
    s.add_argument("--p", type=int, default=DEFAULT_P)
    s.add_argument("--format", choices=FORMATS, default="csv")
    s.add_argument("--out")
    s.add_argument("--jobs", type=int, default=1)

    e = sub.add_parser("export-sdpa", help="write the SDP in SDPA sparse format")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--angle", type=_angle, required=True)
    e.add_argument("--p", type=int, default=DEFAULT_P)
    e.add_argument("--out", required=True)

    k = sub.add_parser("known", help="tabulated bounds for small dimensions")
    k.add_argument("--n", type=int, required=True)

    v = sub.add_parser("verify-table3", help="recompute rows of the 22..139 table")
    v.add_argument("--rows", type=_rows, required=True)
    return ap


def _cmd_bound(args, out) -> int:
    cfg = RunConfig(p=args.p, format=args.format)
    if args.angle is None:
        out.write(render_report(bound_for_dimension(args.n, cfg), args.format))
        return EXIT_OK
    bound, method, raw = bound_for_angle(args.n, args.angle, cfg)
    angle = f"{args.angle.numerator}/{args.angle.denominator}"
    if args.format == "json":
        out.write(json.dumps({"n": args.n, "angle": angle, "sdp_raw": raw,
                              "per_angle_bound": bound, "method": method}, indent=2) + "\n")
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["n", "angle", "sdp_raw", "per_angle_bound", "method"])
        w.writerow([args.n, angle, f"{raw:.6f}", bound, method])
    return EXIT_OK


def _cmd_scan(args, out) -> int:
    cfg = RunConfig(p=args.p, format=args.format, jobs=args.jobs)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            res = table_scan(args.n_min, args.n_max, cfg, fh)
    else:
        res = table_scan(args.n_min, args.n_max, cfg, out)
    for n, msg in res.errors:
        print(f"error: {msg}", file=sys.stderr)
    return EXIT_OK if res.ok else EXIT_SOLVER


def _cmd_export(args, out) -> int:
    text = export_sdpa(build_equiangular_sdp(args.n, args.angle, args.p))
    with open(args.out, "w") as fh:
        fh.write(text)
    return EXIT_OK


def _cmd_known(args, out) -> int:
    e = known_values(args.n)
    if e is None:
        out.write(f"n={args.n}: not tabulated\n")
        return EXIT_OK
    rng = str(e.lower) if e.lower == e.upper else f"{e.lower}-{e.upper}"
    out.write(f"n={e.n} M(n)={rng} lower={e.lower} upper={e.upper} 1/alpha={e.angle_text}"
              + (f" sdp_bound={e.sdp_bound}" if e.sdp_bound is not None else "") + "\n")
    return EXIT_OK


def _cmd_verify(args, out) -> int:
    rep = verify_table3(args.rows)
    out.write(rep.render())
    for c in rep.failures:
        print(f"FAIL n={c.n} {c.column}: table {c.expected}, computed {c.computed} {c.error}".rstrip(),
              file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_SOLVER


_COMMANDS = {"bound": _cmd_bound, "scan": _cmd_scan, "export-sdpa": _cmd_export,
             "known": _cmd_known, "verify-table3": _cmd_verify}


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args, out)
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
