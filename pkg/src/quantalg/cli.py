"""Command-line front-end.

Exit statuses: 0 when everything checks out, 1 when a check fails, 2 for
usage, file or parse errors.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from . import distributions as dist
from .gmet import validate_space
from .liftings import targets
from .saturation import (SaturationConfig, TermOutsideUniverse, derived_distance, dump_text, dump_tsv,
                         saturate)
from .terms import TermError, parse_term
from .theory import TheoryError
from .theoryfile import TheoryFileError, bundled_names, load_theory
from .verify import SUITES, run_suite

OK, CHECK_FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load(ref: str):
    try:
        return load_theory(ref)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None
    except TheoryFileError as exc:
        raise UsageError(f"{ref}: {exc}") from None


def _config(args, tf) -> SaturationConfig:
    depth = args.depth if args.depth is not None else tf.options.get("depth", 1)
    rounds = args.max_rounds if args.max_rounds is not None else tf.options.get("rounds", 64)
    return SaturationConfig(depth=depth, max_rounds=rounds, closure_denominator=tf.options.get("closure"))


def cmd_validate(args, out) -> int:
    tf = _load(args.theory)
    th = tf.theory
    print(f"theory: {tf.name}", file=out)
    print(f"kind: {th.kind.name}", file=out)
    for fam in th.sig.families:
        params = f", params {{{', '.join(map(str, fam.params))}}}" if fam.parametric else ""
        print(f"op {fam.symbol}/{fam.arity} lifting {fam.lifting}{params}", file=out)
        for p in fam.instances():
            lifting = fam.lifting_at(p)
            if not targets(lifting, th.kind):
                print(f"note: lifting {lifting} may leave {th.kind.name}", file=out)
    print(f"axioms: {len(th.axioms)}", file=out)
    status = OK
    if tf.space is not None:
        report = validate_space(tf.space)
        print(f"space: {len(tf.space)} points", file=out)
        for v in report.violations:
            print(f"violation: {v}", file=out)
        if not report.ok:
            status = CHECK_FAILED
    print("valid" if status == OK else "invalid", file=out)
    return status


def _parse_operand(text: str, sig):
    if text.strip().startswith("{"):
        try:
            return dist.parse_dist(text)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    try:
        return parse_term(text, sig, allow_vars=False)
    except TermError as exc:
        raise UsageError(f"cannot parse term {text!r}: {exc}") from None


def _model_distance(tf, mu, nu):
    if tf.space is None:
        raise UsageError("distribution queries need a theory file with a space")
    rules = {fam.lifting.rule for fam in tf.theory.sig.families if fam.arity == 2}
    try:
        if "kantorovich" in rules:
            return "kantorovich", dist.kantorovich_distance(tf.space, mu, nu)
        return "lk", dist.lk_distance(tf.space, mu, nu)
    except dist.UnknownAtomError as exc:
        raise UsageError(str(exc)) from None


def cmd_dist(args, out) -> int:
    tf = _load(args.theory)
    th = tf.extended()
    s, t = _parse_operand(args.lhs, th.sig), _parse_operand(args.rhs, th.sig)
    if isinstance(s, dist.Dist) or isinstance(t, dist.Dist):
        if not (isinstance(s, dist.Dist) and isinstance(t, dist.Dist)):
            raise UsageError("compare two distributions or two terms, not one of each")
        model, value = _model_distance(tf, s, t)
        print(value, file=out)
        print(f"model: {model}", file=out)
        return OK
    cfg = _config(args, tf)
    r = saturate(th, cfg)
    try:
        value = derived_distance(r, s, t)
    except TermOutsideUniverse as exc:
        raise UsageError(str(exc)) from None
    print(value, file=out)
    print(f"fixpoint: {'yes' if r.fixpoint_reached else 'no'}", file=out)
    return OK if r.fixpoint_reached else CHECK_FAILED


def cmd_saturate(args, out) -> int:
    tf = _load(args.theory)
    r = saturate(tf.extended(), _config(args, tf))
    out.write(dump_tsv(r) if args.format == "tsv" else dump_text(r))
    return OK if r.fixpoint_reached else CHECK_FAILED


def cmd_verify(args, out) -> int:
    depth = args.depth if args.depth is not None else 1
    checks = run_suite(args.suite, seed=args.seed, depth=depth)
    for c in checks:
        print(c.line(), file=out)
    failed = sum(not c.ok for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} passed", file=out)
    return CHECK_FAILED if failed else OK


def cmd_list(args, out) -> int:
    for name in bundled_names():
        print(name, file=out)
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quantalg", description="Quantitative equational reasoning toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def saturation_flags(p):
        p.add_argument("--depth", type=int, default=None, help="term depth bound (default 1)")
        p.add_argument("--max-rounds", type=int, default=None, help="saturation round budget (default 64)")
        p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")

    p = sub.add_parser("validate", help="parse a theory file and validate its space")
    p.add_argument("theory", help="path or bundled theory name")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("dist", help="derived distance between two ground terms")
    p.add_argument("theory")
    p.add_argument("lhs", help="ground term or distribution literal such as {a:1/2, b:1/2}")
    p.add_argument("rhs")
    saturation_flags(p)
    p.set_defaults(func=cmd_dist)

    for name in ("saturate", "dump"):
        p = sub.add_parser(name, help="saturate and print the class table")
        p.add_argument("theory")
        saturation_flags(p)
        p.add_argument("--format", choices=("text", "tsv"), default="text")
        p.set_defaults(func=cmd_saturate)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", choices=SUITES, default="paper")
    saturation_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("list", help="list bundled theory files")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE
    for flag in ("depth", "max_rounds"):
        value = getattr(args, flag, None)
        if value is not None and value < (0 if flag == "depth" else 1):
            print(f"quantalg: error: --{flag.replace('_', '-')} out of range", file=sys.stderr)
            return USAGE
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"quantalg: error: {exc}", file=sys.stderr)
        return USAGE
    except (TheoryError, TermError, ValueError) as exc:
        print(f"quantalg: error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
