"""Command-line front end: check, run, fuse, bench, paracheck.

Reports are JSON with a fixed field order (schema version 1).  Exit codes:
0 success, 1 parse or type error, 2 runtime (fuel) error, 3 verification
failure.  The FUSEC_FUEL environment variable overrides the default step
budget.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

from .fusion import (
    NotAbstractable, abstract_build, abstract_cobuild, fuse_fixpoint,
    reify_build, reify_cobuild,
)
from .interp import (
    DEFAULT_FUEL, FuelExhausted, Unsupported, VNat, VPair, VUNIT, VMu, VInl,
    VInr, Value, run_with_profile, show_value,
)
from .paranat import (
    SizeCap, bad_const_family, check_paranatural, recheck_counterexample,
    tabulate_term_family,
)
from .parser import ParseError, parse_program, parse_value_literal
from .printer import print_functor, print_program, print_type
from .syntax import (
    Arrow, Build, Cobuild, Forall, Mu, Nat, Nu, Prod, Program, Sum, TermDecl,
    TypeExpr, Unit,
)
from .typecheck import FuseTypeError, context_of, typecheck_program

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_SOURCE_ERROR = 1
EXIT_RUNTIME_ERROR = 2
EXIT_VERIFICATION_FAILURE = 3


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _profile_tables(profile) -> dict:
    return {
        "mu_cells": {print_functor(f): n
                     for f, n in sorted(profile.mu_cells.items(),
                                        key=lambda kv: print_functor(kv[0]))},
        "nu_observations": {print_functor(f): n
                            for f, n in sorted(profile.nu_observations.items(),
                                               key=lambda kv: print_functor(kv[0]))},
        "steps": profile.steps,
    }


class Report:
    """Accumulates the JSON report with stable key order."""

    def __init__(self, command: str, source: str):
        self.data: dict = {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "input_digest": _digest(source),
            "phases": {},
        }
        self._t0 = time.monotonic()
        self._phase_started: float | None = None
        self._phase_name: str | None = None

    def start(self, phase: str) -> None:
        self._phase_name = phase
        self._phase_started = time.monotonic()

    def stop(self) -> None:
        if self._phase_name is not None:
            elapsed = time.monotonic() - self._phase_started
            self.data["phases"][self._phase_name] = round(elapsed, 6)
            self._phase_name = None

    def finish(self) -> dict:
        self.stop()
        self.data["phases"]["total"] = round(time.monotonic() - self._t0, 6)
        return self.data


def _emit(report_data: dict, report_path: str | None) -> None:
    text = json.dumps(report_data, indent=2)
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)


def _fuel(args) -> int:
    if getattr(args, "fuel", None) is not None:
        return args.fuel
    env = os.environ.get("FUSEC_FUEL")
    if env:
        return int(env)
    return DEFAULT_FUEL


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_check(args) -> int:
    src = open(args.file, encoding="utf-8").read()
    report = Report("check", src)
    report.start("parse")
    program = parse_program(src)
    report.stop()
    report.start("typecheck")
    types = typecheck_program(program)
    report.stop()
    report.data["declarations"] = {name: print_type(ty) for name, ty in types}
    _emit(report.finish(), args.report)
    return EXIT_OK


def _find_decl(program: Program, name: str) -> TermDecl:
    try:
        return program.lookup(name)
    except KeyError:
        raise FuseTypeError(f"no declaration named {name}", name) from None


def cmd_run(args) -> int:
    src = open(args.file, encoding="utf-8").read()
    report = Report("run", src)
    program = parse_program(src)
    typecheck_program(program)
    decl = _find_decl(program, args.main)
    if not isinstance(decl.ty, Arrow):
        raise FuseTypeError(f"{args.main} is not a function", args.main)
    inp = parse_value_literal(args.input, decl.ty.dom)
    report.start("evaluate")
    try:
        value, profile = run_with_profile(program, args.main, inp, _fuel(args))
    except FuelExhausted as e:
        report.stop()
        report.data["error"] = "fuel exhausted"
        report.data["allocations"] = _profile_tables(e.profile)
        _emit(report.finish(), args.report)
        return EXIT_RUNTIME_ERROR
    report.stop()
    report.data["main"] = args.main
    report.data["input"] = args.input
    report.data["value"] = show_value(value)
    report.data["allocations"] = _profile_tables(profile)
    _emit(report.finish(), args.report)
    return EXIT_OK


def _abstract_pass(program: Program) -> tuple[Program, list[dict]]:
    """Turn producer/consumer declarations into build/cobuild form."""
    ctx = context_of(program)
    notes = []
    decls = []
    for d in program.decls:
        if isinstance(d, TermDecl) and isinstance(d.ty, Arrow):
            if isinstance(d.ty.cod, Mu) and not isinstance(d.term, Build):
                f = d.ty.cod.functor
                try:
                    body = abstract_build(d.term, f, ctx)
                    notes.append({"decl": d.name, "abstracted": "build"})
                except NotAbstractable as e:
                    body = reify_build(d.term, f, ctx)
                    notes.append({"decl": d.name, "abstracted": "reified",
                                  "reason": str(e)})
                decls.append(TermDecl(d.name, d.ty, Build(f, body)))
                continue
            if isinstance(d.ty.dom, Nu) and not isinstance(d.term, Cobuild):
                f = d.ty.dom.functor
                try:
                    body = abstract_cobuild(d.term, f, ctx)
                    notes.append({"decl": d.name, "abstracted": "cobuild"})
                except NotAbstractable as e:
                    body = reify_cobuild(d.term, f, ctx)
                    notes.append({"decl": d.name, "abstracted": "reified",
                                  "reason": str(e)})
                decls.append(TermDecl(d.name, d.ty, Cobuild(f, body)))
                continue
        decls.append(d)
    return Program(tuple(decls)), notes


def cmd_fuse(args) -> int:
    src = open(args.file, encoding="utf-8").read()
    report = Report("fuse", src)
    report.start("parse")
    program = parse_program(src)
    report.stop()
    report.start("typecheck")
    typecheck_program(program)
    report.stop()

    if args.abstract:
        report.start("abstract")
        program, notes = _abstract_pass(program)
        typecheck_program(program)
        report.data["abstraction"] = notes
        report.stop()

    ctx = context_of(program)
    report.start("fuse")
    rewrites = []
    iterations = 0
    converged = True
    decls = []
    for d in program.decls:
        if isinstance(d, TermDecl):
            fused, rw = fuse_fixpoint(d.term, ctx)
            iterations += rw.iterations
            converged = converged and rw.converged
            for s in rw.steps:
                rewrites.append({"decl": d.name, "rule": s.rule,
                                 "path": "/".join(s.path) or "·",
                                 "before": s.before, "after": s.after})
            for w in rw.warnings:
                rewrites.append({"decl": d.name, "warning": w})
            decls.append(TermDecl(d.name, d.ty, fused))
        else:
            decls.append(d)
    fused_program = Program(tuple(decls))
    report.stop()

    report.start("recheck")
    types = typecheck_program(fused_program)
    report.stop()
    report.data["declarations"] = {name: print_type(ty) for name, ty in types}
    report.data["rewrites"] = rewrites
    report.data["iterations"] = iterations
    report.data["converged"] = converged
    if not converged:
        report.data["warning"] = "iteration cap reached; result is partial"

    out_text = print_program(fused_program)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out_text)
        report.data["out"] = args.out
    else:
        report.data["fused_source"] = out_text
    _emit(report.finish(), args.report)
    return EXIT_OK


def sized_value(ty: TypeExpr, n: int) -> Value:
    """A deterministic input of magnitude n: lists get length n (entries
    cycle 0..9), numbers become n, products go componentwise."""
    match ty:
        case Unit():
            return VUNIT
        case Nat():
            return VNat(n)
        case Prod(l, r):
            return VPair(sized_value(l, n), sized_value(r, n))
        case Mu(f):
            from .interp import _list_arity
            arity = _list_arity(f)
            if arity is None:
                raise Unsupported(f"no sized generator for mu[{print_functor(f)}]")
            out = VMu(f, VInl(VUNIT))
            for i in reversed(range(n)):
                payload = out
                for j in reversed(range(arity)):
                    payload = VPair(VNat((i + j) % 10), payload)
                out = VMu(f, VInr(payload))
            return out
        case Sum(l, _):
            return VInl(sized_value(l, n))
    raise Unsupported(f"no sized generator for {print_type(ty)}")


def cmd_bench(args) -> int:
    src = open(args.file, encoding="utf-8").read()
    report = Report("bench", src)
    program = parse_program(src)
    typecheck_program(program)
    orig_name, fused_name = args.main_pair
    d1 = _find_decl(program, orig_name)
    d2 = _find_decl(program, fused_name)
    if d1.ty != d2.ty:
        raise FuseTypeError(
            f"{orig_name} and {fused_name} have different types", "bench")
    if not isinstance(d1.ty, Arrow):
        raise FuseTypeError(f"{orig_name} is not a function", "bench")

    sizes = [int(s) for s in args.sizes.split(",")]
    rows = []
    all_equal = True
    report.start("bench")
    for n in sizes:
        inp = sized_value(d1.ty.dom, n)
        row: dict = {"size": n}
        try:
            v1, p1 = run_with_profile(program, orig_name, inp, _fuel(args))
            v2, p2 = run_with_profile(program, fused_name, inp, _fuel(args))
            from .interp import value_eq
            row["equal"] = value_eq(v1, v2)
            row["value"] = show_value(v1)
            row["original"] = _profile_tables(p1)
            row["fused"] = _profile_tables(p2)
            if not row["equal"]:
                row["fused_value"] = show_value(v2)
                all_equal = False
        except FuelExhausted:
            row["error"] = "fuel exhausted"
            all_equal = False
        rows.append(row)
    report.stop()
    report.data["main_pair"] = [orig_name, fused_name]
    report.data["rows"] = rows
    report.data["all_equal"] = all_equal
    _emit(report.finish(), args.report)
    return EXIT_OK if all_equal else EXIT_VERIFICATION_FAILURE


def cmd_paracheck(args) -> int:
    src = open(args.file, encoding="utf-8").read() if args.file else ""
    report = Report("paracheck", src)
    k = args.max_carrier

    report.start("tabulate")
    if args.term == "bad_const":
        family = bad_const_family(k)
    else:
        program = parse_program(src)
        typecheck_program(program)
        decl = _find_decl(program, args.term)
        if not isinstance(decl.ty, Forall):
            raise FuseTypeError(f"{args.term} is not polymorphic", args.term)
        family = tabulate_term_family(decl.term, decl.ty, k, args.term)
    report.stop()

    report.start("check")
    ce = check_paranatural(family, family.w, family.v, k)
    report.stop()
    report.data["term"] = args.term
    report.data["max_carrier"] = k
    if ce is None:
        report.data["verdict"] = "paranatural"
        _emit(report.finish(), args.report)
        return EXIT_OK
    report.data["verdict"] = "counterexample"
    report.data["counterexample"] = ce.as_dict()
    report.data["witness_recheck"] = recheck_counterexample(
        family, family.w, family.v, ce)
    _emit(report.finish(), args.report)
    return EXIT_VERIFICATION_FAILURE


# ---------------------------------------------------------------------------

def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fusec",
        description="Fusion compiler pass and verification harness")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and typecheck a source file")
    p.add_argument("file")
    p.add_argument("--report", help="also write the JSON report here")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("run", help="evaluate a declaration on an input literal")
    p.add_argument("file")
    p.add_argument("--main", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--fuel", type=int)
    p.add_argument("--report")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("fuse", help="rewrite fold/build cuts away")
    p.add_argument("file")
    p.add_argument("--out", help="write fused source here")
    p.add_argument("--report")
    p.add_argument("--abstract", action="store_true",
                   help="abstract producers/consumers into build/cobuild first")
    p.set_defaults(fn=cmd_fuse)

    p = sub.add_parser("bench", help="differential allocation benchmark")
    p.add_argument("file")
    p.add_argument("--main-pair", nargs=2, required=True,
                   metavar=("ORIG", "FUSED"))
    p.add_argument("--sizes", required=True, help="comma-separated sizes")
    p.add_argument("--fuel", type=int)
    p.add_argument("--report")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("paracheck",
                       help="exhaustive paranaturality check of a term")
    p.add_argument("file", nargs="?")
    p.add_argument("--term", required=True)
    p.add_argument("--max-carrier", type=int, default=3)
    p.add_argument("--report")
    p.set_defaults(fn=cmd_paracheck)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, FuseTypeError, Unsupported, SizeCap,
            FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        if isinstance(e, Unsupported):
            print("hint: fixpoint-involving polytypes are outside the finite "
                  "checker; use the sampled genericity checks instead",
                  file=sys.stderr)
        return EXIT_SOURCE_ERROR
    except FuelExhausted as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
