"""Command-line front end.

Subcommands: ``parse`` (validate and pretty-print), ``normalize`` (emit
the set-normal-form model), ``run`` (one seeded derivation), ``explore``
(bounded reachability graph), ``translate`` (emit the rule program) and
``check`` (bisimulation report).  Exit codes: 0 success or pass, 1
diagnostics or check failure, 2 usage error.  Diagnostics go to standard
error; results go to standard output or ``--out``.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path
from typing import Optional, Sequence

from .bisim import bisim_check
from .chr import render_program
from .engine import (
    ArchitectureConfig,
    DEDUP_CANONICAL,
    DEDUP_EXACT,
    FAIL_NIL,
    FAIL_STUCK,
    explore,
    normalize_model,
    random_walk,
    state_fingerprint,
    to_dot,
)
from .model import Model, validate
from .parser import ParseError, parse_model, print_model
from .translate import chr_of_model

_FORMATS = ("dot", "trace", "text", "records")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="actrchr",
        description="Run production-rule models and check them against "
        "their constraint-rule translation.",
    )
    sub = p.add_subparsers(dest="command", required=True, metavar="command")
    commands = (
        ("parse", "validate a model and print its canonical form"),
        ("normalize", "print the model with every rule in set normal form"),
        ("run", "print one seeded derivation as a step trace"),
        ("explore", "print the bounded reachability graph"),
        ("translate", "write the constraint-rule program for the model"),
        ("check", "report on the bounded bisimulation with the translation"),
    )
    for name, help_text in commands:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("model", help="input .actr file")
        sp.add_argument("--depth", type=int, default=16, help="step bound (default 16)")
        sp.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
        sp.add_argument(
            "--dedup",
            choices=(DEDUP_EXACT, DEDUP_CANONICAL),
            default=DEDUP_CANONICAL,
            help="state identification while exploring (default canonical)",
        )
        sp.add_argument(
            "--fail-request",
            dest="fail_request",
            choices=(FAIL_NIL, FAIL_STUCK),
            default=FAIL_NIL,
            help="policy for requests without answers (default nil)",
        )
        sp.add_argument(
            "--format",
            choices=_FORMATS,
            default=None,
            help="output format (default depends on the subcommand)",
        )
        sp.add_argument("--out", default=None, help="output path ('-' for stdout)")
    return p


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


def _config(args: argparse.Namespace) -> ArchitectureConfig:
    return ArchitectureConfig(fail_request=args.fail_request)


def _cmd_parse(model: Model, args: argparse.Namespace) -> int:
    _emit(print_model(model), args.out)
    return 0


def _cmd_normalize(model: Model, args: argparse.Namespace) -> int:
    _emit(print_model(normalize_model(model)), args.out)
    return 0


def _cmd_run(model: Model, args: argparse.Namespace) -> int:
    rng = random.Random(args.seed)
    steps = random_walk(model, _config(args), args.depth, rng)
    lines = [
        f"step {n}: {label} -> {state_fingerprint(state, model)}"
        for n, (label, state) in enumerate(steps, 1)
    ]
    _emit("\n".join(lines) + "\n" if lines else "", args.out)
    return 0


def _cmd_explore(model: Model, args: argparse.Namespace) -> int:
    graph = explore(model, _config(args), args.depth, args.dedup)
    fmt = args.format or "dot"
    if fmt == "dot":
        text = to_dot(graph, model)
    else:
        lines = [
            f"state {i}: {state_fingerprint(s, model)}"
            for i, s in enumerate(graph.states)
        ]
        lines.extend(f"edge {a} -{label}-> {b}" for a, label, b in graph.edges)
        if graph.truncated:
            lines.append("truncated at depth bound")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 0


def _cmd_translate(model: Model, args: argparse.Namespace) -> int:
    text = render_program(chr_of_model(model))
    out = args.out if args.out is not None else str(Path(args.model).with_suffix(".chr"))
    _emit(text, out)
    return 0


def _cmd_check(model: Model, args: argparse.Namespace) -> int:
    report = bisim_check(model, depth=args.depth, config=_config(args))
    if args.format == "records":
        _emit("\n".join(report.records()) + "\n", args.out)
    else:
        _emit(("PASS" if report.ok else "FAIL") + "\n" + report.text() + "\n", args.out)
    return 0 if report.ok else 1


_COMMANDS = {
    "parse": _cmd_parse,
    "normalize": _cmd_normalize,
    "run": _cmd_run,
    "explore": _cmd_explore,
    "translate": _cmd_translate,
    "check": _cmd_check,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.depth < 0:
        print("error: --depth must be non-negative", file=sys.stderr)
        return 2
    try:
        text = Path(args.model).read_text()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        model = parse_model(text)
    except ParseError as e:
        where = f"{args.model}:{e.span}: " if e.span else f"{args.model}: "
        print(f"{where}{e.message}", file=sys.stderr)
        return 1
    problems = validate(model)
    if problems:
        for d in problems:
            print(f"{args.model}:{d}", file=sys.stderr)
        return 1
    return _COMMANDS[args.command](model, args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
