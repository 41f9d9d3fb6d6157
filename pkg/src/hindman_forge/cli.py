"""Command-line entry point.

Exit codes: 0 ip/ok, 1 negative-exact (or failed verification), 2 exhausted,
3 truncated, 64 usage or spec errors, 70 internal invariant failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .certify import colouring_violation
from .coloring import hindman_window
from .extract import ContractViolation, extract_basis, partition_via_types
from .forge import (
    ForgeError, ForgeMode, NotIP, QuotientTypeOracle, run_forge, transcript,
    verify_transcript,
)
from .formulas import Atom, render, to_json
from .ip import (
    EXHAUSTED, IP, NOT_IP_EXACT, dip_witness_bounded, iip_witness_bounded, ip_witness_bounded,
    is_ip_quotient, partition_check,
)
from .specs import SpecError, build_context, parse_predicate_arg, parse_semigroup

SCHEMA = "hindman-forge/1"
EXIT_OK, EXIT_NEGATIVE, EXIT_EXHAUSTED, EXIT_TRUNCATED, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3, 64, 70
VERDICT_EXIT = {IP: EXIT_OK, NOT_IP_EXACT: EXIT_NEGATIVE, EXHAUSTED: EXIT_EXHAUSTED}
THREADS_ENV = "HINDMAN_FORGE_THREADS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return value


def _emit(report: dict, out: str | None, stream=None) -> None:
    text = json.dumps({"schema": SCHEMA, **report}, sort_keys=True, ensure_ascii=False)
    print(text, file=stream or sys.stdout)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")


def _context(args):
    S = parse_semigroup(args.semigroup)
    specs = {}
    for i, text in enumerate(args.pred):
        name, spec = parse_predicate_arg(text, f"P{i}")
        if name in specs:
            raise SpecError(f"duplicate predicate name {name!r}")
        specs[name] = spec
    ctx = build_context(S, specs, skip_identity=args.skip_identity)
    return ctx, specs


def _named(ctx, name: str | None, default_index: int = 0) -> Atom:
    if name is None:
        name = ctx.pred_names[default_index]
    if name not in ctx.pred_index:
        raise SpecError(f"unknown predicate {name!r}; have {ctx.pred_names}")
    return Atom(name, ("x",))


# -- commands -------------------------------------------------------------------

def cmd_ip_find(args) -> int:
    ctx, specs = _context(args)
    name = ctx.pred_names[0]
    X = ctx.predicates[name]
    S = ctx.semigroup
    if args.quotient:
        if X.quotient is None:
            raise SpecError(f"predicate {name!r} has no quotient form")
        verdict = is_ip_quotient(X, depth=args.k, skip_identity=args.skip_identity)
    elif args.variant == "iip":
        verdict = iip_witness_bounded(S, X, args.k, args.m, args.N, skip_identity=args.skip_identity)
    elif args.variant == "dip":
        verdict = dip_witness_bounded(S, X, args.k, args.N, skip_identity=args.skip_identity)
    else:
        verdict = ip_witness_bounded(S, X, args.k, args.N, skip_identity=args.skip_identity)
    report = {"command": "ip find", "semigroup": S.to_spec(), "predicate": specs[name],
              "variant": "quotient" if args.quotient else args.variant, **verdict.to_json(S)}
    if args.variant == "iip" and not args.quotient:
        report["bounded_evidence"] = True
    _emit(report, args.out)
    return VERDICT_EXIT[verdict.verdict]


def cmd_ip_partition(args) -> int:
    ctx, specs = _context(args)
    X = ctx.predicates[_named(ctx, args.x, 0).pred]
    Y = ctx.predicates[_named(ctx, args.y, 1).pred]
    report = partition_check(ctx.semigroup, X, Y, args.k, args.N, skip_identity=args.skip_identity)
    _emit({"command": "ip partition", "semigroup": ctx.semigroup.to_spec(), "predicates": specs,
           **report.to_json(ctx.semigroup)}, args.out)
    return EXIT_OK if report.y.is_ip or report.x_minus_y.is_ip else EXIT_EXHAUSTED


def _forge_mode(args, k: int | None = None) -> ForgeMode:
    return ForgeMode.bounded(k or args.k, args.N) if args.bounded else ForgeMode()


def cmd_forge(args) -> int:
    if not args.pred:
        raise SpecError("forge needs --pred")
    ctx, specs = _context(args)
    X = _named(ctx, args.x)
    mode = _forge_mode(args)
    if args.verify:
        return _verify(args.verify, ctx, X, mode, args.window)
    try:
        state, oracle = run_forge(ctx, X, args.stages, mode, window=args.window)
    except NotIP as exc:
        print(f"refusing to start: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    records = transcript(state)
    lines = [json.dumps(r, sort_keys=True, ensure_ascii=False) for r in records]
    to_stdout = args.transcript == "-"
    if to_stdout:
        print("\n".join(lines))
    elif args.transcript:
        Path(args.transcript).write_text("\n".join(lines) + "\n", encoding="utf-8")
    annotations = []
    if not mode.exact:
        for d in state.decisions:
            if d.phi_at_bounds:
                annotations.append(f"stage {d.stage}: ¬φ_{d.phi_index} chosen at bounds (k={mode.k}, N={mode.N})")
            if d.psi_at_bounds:
                annotations.append(f"stage {d.stage}: ψ_{d.psi_index} rejected at bounds (k={mode.k}, N={mode.N})")
        for line in annotations + list(state.assumptions):
            print(line, file=sys.stderr)
    S = ctx.semigroup
    _emit({
        "command": "forge",
        "semigroup": ctx.semigroup.to_spec(),
        "predicates": specs,
        "x": X.pred,
        "skip_identity": args.skip_identity,
        "window": args.window,
        "mode": mode.to_json(),
        "stages": state.stage,
        "A": [render(f, S) for f in state.formulas],
        "B": [render(f, S) for f in state.B],
        "J": sorted(state.J),
        "witness_log": {str(j): u for j, u in state.witness_log},
        "invariants": [r.invariants.to_json() for r in state.records],
        "claim_witnesses": [None if r.claim is None else [r.claim.u, r.claim.v] for r in state.records],
        "annotations": annotations,
        "assumptions": list(state.assumptions),
        "oracle": oracle.provenance,
        "transcript": None if args.transcript is None else str(args.transcript),
        "records": None if args.transcript else records,
    }, args.out, sys.stderr if to_stdout else None)
    ok = all(r.invariants.ok for r in state.records)
    return EXIT_OK if ok else EXIT_EXHAUSTED


def _verify(path: str, ctx, x_formula, mode: ForgeMode, window: int) -> int:
    """Replay a transcript under the structure given on the command line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read transcript {path}: {exc}") from exc
    problems = verify_transcript(records, ctx, x_formula, mode, window)
    _emit({"command": "forge verify", "transcript": path, "records": len(records),
           "ok": not problems, "problems": problems}, None)
    return EXIT_OK if not problems else EXIT_NEGATIVE


def cmd_extract(args) -> int:
    ctx, specs = _context(args)
    Y = _named(ctx, args.y, 0)
    X = _named(ctx, args.x) if args.x else None
    try:
        if args.oracle == "quotient":
            if args.e is None:
                raise SpecError("--oracle quotient needs --e CLASS")
            oracle = QuotientTypeOracle(ctx, args.e)
            result = extract_basis(ctx, oracle, Y, args.k, x_formula=X, distinct=args.distinct)
        elif args.oracle == "forge":
            forge_x = X if X is not None else Y
            _, oracle = run_forge(ctx, forge_x, args.stages, _forge_mode(args, args.search_k), window=args.window)
            result = extract_basis(ctx, oracle, Y, args.k, x_formula=X, distinct=args.distinct)
        else:
            if X is None:
                raise SpecError("--oracle partition needs --x")
            result = partition_via_types(ctx, X, Y, args.k, stages=args.stages,
                                         mode=_forge_mode(args, args.search_k), distinct=args.distinct)
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except NotIP as exc:
        print(f"refusing to start: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except ValueError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(str(exc)) from exc
    report = {"command": "extract", "oracle": result.provenance, "y": to_json(result.y_formula),
              **result.to_json(ctx)}
    _emit(report, args.out)
    if result.truncated_at is not None:
        return EXIT_TRUNCATED
    return EXIT_OK if result.verified else EXIT_NEGATIVE


def cmd_hindman_window(args) -> int:
    result = hindman_window(args.r, args.k, args.N_max)
    bad = colouring_violation(result.certificate, args.k)
    report = {"command": "hindman-window", **result.to_json(), "certificate_verified": bad is None}
    _emit(report, args.out)
    if bad is not None:
        return EXIT_INTERNAL
    return EXIT_EXHAUSTED if result.exhausted else EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hindman-forge", description="IP sets, idempotent types and FP bases.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, preds_required=True):
        p.add_argument("--semigroup", default="nat-add")
        p.add_argument("--pred", action="append", default=[], required=preds_required,
                       help="[NAME=]SPEC, e.g. mod:4:0 or X=mod:2:0; repeatable")
        p.add_argument("--skip-identity", action="store_true")
        p.add_argument("--out")

    ip = sub.add_parser("ip", help="IP-set searches")
    ipsub = ip.add_subparsers(dest="ip_command", required=True, parser_class=_Parser)
    find = ipsub.add_parser("find", help="bounded or exact IP witness for one predicate")
    common(find)
    find.add_argument("--k", type=_positive, default=4)
    find.add_argument("--N", type=_positive, default=64)
    find.add_argument("--m", type=_positive, default=1, help="distinct FP values (iip)")
    find.add_argument("--variant", choices=["ip", "iip", "dip"], default="ip")
    find.add_argument("--quotient", action="store_true", help="exact decision via the quotient")
    find.set_defaults(func=cmd_ip_find)

    part = ipsub.add_parser("partition", help="verdicts for Y and X∖Y")
    common(part)
    part.add_argument("--x")
    part.add_argument("--y")
    part.add_argument("--k", type=_positive, default=3)
    part.add_argument("--N", type=_positive, default=64)
    part.set_defaults(func=cmd_ip_partition)

    forge = sub.add_parser("forge", help="build the decided part of an idempotent type")
    common(forge, preds_required=False)
    forge.add_argument("--x", help="predicate name pinned as the X-formula (default: first)")
    forge.add_argument("--stages", type=_positive, default=8)
    forge.add_argument("--bounded", action="store_true")
    forge.add_argument("--k", type=_positive, default=3)
    forge.add_argument("--N", type=_positive, default=64)
    forge.add_argument("--window", type=_positive, default=1000)
    forge.add_argument("--transcript", help="write JSON-lines transcript here (- for stdout; the summary then goes to stderr)")
    forge.add_argument("--verify", metavar="TRANSCRIPT", help="replay and re-check a transcript written with the same options")
    forge.set_defaults(func=cmd_forge)

    ext = sub.add_parser("extract", help="extract an FP basis from a type oracle")
    common(ext)
    ext.add_argument("--y", help="predicate name for Y (default: first)")
    ext.add_argument("--x", help="predicate name for X (enables renaming to X∖Y)")
    ext.add_argument("--k", type=_positive, default=5)
    ext.add_argument("--oracle", choices=["quotient", "forge", "partition"], default="quotient")
    ext.add_argument("--e", type=int, help="idempotent class for --oracle quotient")
    ext.add_argument("--stages", type=_positive, default=8)
    ext.add_argument("--bounded", action="store_true")
    ext.add_argument("--search-k", type=_positive, default=3, help="bounded-mode search depth")
    ext.add_argument("--N", type=_positive, default=64)
    ext.add_argument("--window", type=_positive, default=1000)
    ext.add_argument("--distinct", action="store_true", help="strictly increasing witnesses")
    ext.set_defaults(func=cmd_extract)

    win = sub.add_parser("hindman-window", help="least N forcing a monochromatic FS of k elements")
    win.add_argument("--r", type=_positive, required=True)
    win.add_argument("--k", type=int, required=True)
    win.add_argument("--N-max", dest="N_max", type=_positive, default=64)
    win.add_argument("--out")
    win.set_defaults(func=cmd_hindman_window)
    return parser


def _check_threads() -> None:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return
    try:
        if int(raw) < 1:
            raise ValueError
    except ValueError:
        raise SpecError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _check_threads()
        if args.command == "hindman-window" and args.k < 2:
            raise SpecError("hindman-window needs k >= 2")
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ForgeError as exc:
        print(f"internal invariant failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
