"""Command-line front end.

Exit codes: 0 success or refinement holds, 1 property refuted, 2 usage or
parse error, 3 inconclusive because a state space was truncated.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

from cspauto import __version__
from cspauto.automodels import LITERAL, SCENARIOS, SHARED_ONLY, ThreatActor, builtin_env, scenario
from cspauto.errors import CspError, LtsTruncated, TruncationWarning
from cspauto.kernel import DEFAULT_MAX_STATES, SKIP, STOP, Ref, build_lts, format_trace
from cspauto.lang import ParseError, format_script, parse, print_env
from cspauto.refinement import (
    Holds,
    Inconclusive,
    check_failures_refinement,
    check_traces_refinement,
    deadlock_free,
)
from cspauto.semantics import traces_up_to

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def max_states() -> int:
    raw = os.environ.get("CSPAUTO_MAX_STATES")
    if not raw:
        return DEFAULT_MAX_STATES
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"CSPAUTO_MAX_STATES must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError("CSPAUTO_MAX_STATES must be positive")
    return value


def _read_env(path: str):
    if path == "builtin":
        return builtin_env()
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse(data)
    except ParseError as exc:
        raise UsageError("\n".join(f"{path}:{d}" for d in exc.diagnostics)) from None


def load_target(spec: str):
    """``FILE.cspa:Name`` or ``builtin:Name`` -> (term, env)."""
    path, sep, name = spec.rpartition(":")
    if not sep or not path or not name:
        raise UsageError(f"expected FILE.cspa:Name or builtin:Name, got {spec!r}")
    env = _read_env(path)
    if name == "STOP":
        return STOP, env
    if name == "SKIP":
        return SKIP, env
    if name not in env.definitions:
        raise UsageError(f"{path} defines no process {name!r}")
    return Ref(name), env


def _lts(spec: str):
    term, env = load_target(spec)
    return build_lts(term, env, max_states=max_states())


def cmd_check(args, out, err):
    spec, impl = _lts(args.spec), _lts(args.impl)
    if args.model == "traces":
        verdict = check_traces_refinement(spec, impl)
    else:
        verdict = check_failures_refinement(spec, impl)
    print(verdict, file=out)
    return _verdict_code(verdict)


def _verdict_code(verdict):
    if isinstance(verdict, Holds):
        return EXIT_OK
    if isinstance(verdict, Inconclusive):
        return EXIT_INCONCLUSIVE
    return EXIT_FAIL


def cmd_traces(args, out, err):
    if args.depth < 0:
        raise UsageError("--depth must be >= 0")
    lts = _lts(args.target)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        traces = traces_up_to(lts, args.depth)
    for t in traces:
        print(format_trace(t), file=out)
    if lts.truncated:
        print("warning: state space truncated; listing is a lower bound", file=err)
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_deadlock(args, out, err):
    verdict = deadlock_free(_lts(args.target))
    print(verdict, file=out)
    return _verdict_code(verdict)


def cmd_testgen(args, out, err):
    from cspauto.emit import SuiteMeta, emit_capl, emit_xml
    from cspauto.testgen import generate_tests, scenario_lts

    if args.depth < 0:
        raise UsageError("--depth must be >= 0")
    actor = ThreatActor(args.actor) if args.actor else None
    scen = scenario(args.scenario, mode=args.mode, actor=actor)
    try:
        lts = scenario_lts(scen, max_states())
    except LtsTruncated as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INCONCLUSIVE
    suite = generate_tests(scen, args.depth, args.maximal_only, lts=lts)
    if not suite:
        dead = deadlock_free(lts)
        if getattr(dead, "witness", None) == ():
            print("warning: composition deadlocks at the empty trace", file=err)
        elif hasattr(dead, "witness"):
            print(f"warning: composition deadlocks after {format_trace(dead.witness)}", file=err)
        print("warning: no test case exercises an attacker event", file=err)
    meta = SuiteMeta(scen.name, actor.value if actor else None)
    text = emit_xml(suite, meta) if args.format == "xml" else emit_capl(suite, meta)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
        print(f"wrote {len(suite)} test case(s) to {args.out}", file=err)
    else:
        out.write(text)
    return EXIT_OK


def cmd_fmt(args, out, err):
    try:
        data = Path(args.file).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {args.file}: {exc.strerror}") from None
    try:
        out.write(format_script(data))
    except ParseError as exc:
        raise UsageError("\n".join(f"{args.file}:{d}" for d in exc.diagnostics)) from None
    return EXIT_OK


def cmd_builtin(args, out, err):
    env = builtin_env()
    if args.print:
        out.write(print_env(env))
        return EXIT_OK
    print("models:", file=out)
    for name in env.definitions:
        print(f"  builtin:{name}", file=out)
    print("scenarios:", file=out)
    for name in SCENARIOS:
        print(f"  {name}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cspauto", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cspauto {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="refinement check: does IMPL refine SPEC?")
    c.add_argument("--model", choices=("traces", "failures"), default="traces")
    c.add_argument("spec", metavar="SPEC", help="FILE.cspa:Name or builtin:Name")
    c.add_argument("impl", metavar="IMPL", help="FILE.cspa:Name or builtin:Name")
    c.set_defaults(func=cmd_check)

    t = sub.add_parser("traces", help="list traces up to a depth")
    t.add_argument("target", metavar="FILE.cspa:Name")
    t.add_argument("--depth", type=int, default=5)
    t.set_defaults(func=cmd_traces)

    d = sub.add_parser("deadlock", help="check deadlock freedom")
    d.add_argument("target", metavar="FILE.cspa:Name")
    d.set_defaults(func=cmd_deadlock)

    g = sub.add_parser("testgen", help="generate attack test cases")
    g.add_argument("--scenario", choices=sorted(SCENARIOS), default="attack1")
    g.add_argument("--mode", choices=(LITERAL, SHARED_ONLY), default=LITERAL)
    g.add_argument("--depth", type=int, default=8)
    g.add_argument("--actor", choices=[a.value for a in ThreatActor])
    g.add_argument("--format", choices=("xml", "capl"), default="xml")
    g.add_argument("--maximal-only", action="store_true")
    g.add_argument("--out", metavar="PATH")
    g.set_defaults(func=cmd_testgen)

    f = sub.add_parser("fmt", help="print a script in canonical form")
    f.add_argument("file", metavar="FILE.cspa")
    f.set_defaults(func=cmd_fmt)

    b = sub.add_parser("builtin", help="list or print the built-in models")
    grp = b.add_mutually_exclusive_group(required=True)
    grp.add_argument("--list", action="store_true")
    grp.add_argument("--print", action="store_true")
    b.set_defaults(func=cmd_builtin)
    return p


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args, out, err)
    except UsageError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    except CspError as exc:
        print(f"error: {exc.kind}: {exc}", file=err)
        return EXIT_USAGE


def main():  # pragma: no cover - console entry point
    sys.exit(run())
