"""Command-line interface: ``selene check|run|project|verify-ni|examples``.

Exit codes: 0 success or pass, 1 type error or counterexample, 2 usage,
input or validation error.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .core import initial_global, initial_memory
from .errors import DeclarationError, FormatError, ParseError, SeleneError, VariationError
from .formats import (
    dumps,
    event_to_json,
    inputs_from_json,
    memory_from_json,
    parse_assignment,
    read_experiment,
    read_json,
    read_trace,
    trace_to_text,
    verdict_to_json,
    write_trace,
)
from .ni import INTERNAL, verify
from .observe import filter_trace, filter_trace_internal
from .parser import load_program
from .runtime import default_max_steps, run, summarize
from .typecheck import check_program, kind_errors

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _err(message: str) -> None:
    print(f"selene: {message}", file=sys.stderr)


def _load(path: str):
    try:
        return load_program(path)
    except OSError as exc:
        raise _UsageError(f"{path}: {exc.strerror or exc}") from None
    except (ParseError, DeclarationError) as exc:
        raise _UsageError(f"{path}:{exc}") from None


class _UsageError(Exception):
    pass


# -- check -----------------------------------------------------------------------


def cmd_check(args) -> int:
    program, env = _load(args.program)
    report = check_program(program, env)
    if args.json:
        print(json.dumps(report.to_json(), indent=2, sort_keys=True))
    else:
        print(report.to_text())
    return EXIT_OK if report.accepted else EXIT_FAIL


# -- run -------------------------------------------------------------------------


def cmd_run(args) -> int:
    program, env = _load(args.program)
    if args.unsafe_skip_typecheck:
        errors = kind_errors(env, program.body)
        if errors:
            _err("program mixes int and string values and cannot run:")
            for e in errors:
                print(f"  {e}", file=sys.stderr)
            return EXIT_FAIL
    else:
        report = check_program(program, env)
        if not report.accepted:
            _err("program does not typecheck (use --unsafe-skip-typecheck to run it anyway):")
            for e in report.errors:
                print(f"  {e}", file=sys.stderr)
            return EXIT_FAIL
    memory = memory_from_json(read_json(args.memory), env) if args.memory else {}
    for assignment in args.set or ():
        x, v = parse_assignment(assignment, env)
        memory[x] = v
    inputs = inputs_from_json(read_json(args.input), env) if args.input else {}
    G0 = initial_global(program.body, initial_memory(env, memory), inputs, env)
    max_steps = args.max_steps if args.max_steps is not None else default_max_steps()
    outcome = run(G0, max_steps=max_steps, eta=args.eta, env=env if args.check_memory else None)
    if args.trace:
        write_trace(args.trace, outcome.trace)
    if args.figure:
        from .report import run_timeline

        run_timeline(outcome.trace, args.figure, title=Path(args.program).name)
    print(f"status\t{outcome.status}")
    print(f"steps\t{outcome.steps}")
    print(f"final_ts\t{outcome.final.ts}")
    if outcome.diagnostic:
        print(f"diagnostic\t{outcome.diagnostic}")
    print("channel\tlevel\tpackets\tdummies\tfirst_ts\tlast_ts")
    for row in summarize(outcome):
        first = "-" if row.first_ts is None else row.first_ts
        last = "-" if row.last_ts is None else row.last_ts
        print(f"{row.channel}\t{env.channel_level(row.channel)}\t{row.packets}\t{row.dummies}\t{first}\t{last}")
    return EXIT_OK


# -- project ---------------------------------------------------------------------


def _check_trace_names(trace, env) -> None:
    for ev in trace:
        for part in (ev.alpha, ev.beta):
            ch = getattr(part, "channel", None)
            if ch is not None and ch not in env.channels:
                raise FormatError(f"trace mentions undeclared channel {ch!r} (ts={ev.ts})")
            x = getattr(part, "var", None)
            if x is not None and x not in env.gamma:
                raise FormatError(f"trace mentions undeclared variable {x!r} (ts={ev.ts})")


def cmd_project(args) -> int:
    _, env = _load(args.program)
    if args.level not in env.lattice:
        raise _UsageError(f"unknown level {args.level!r}; the lattice has {', '.join(env.lattice.levels)}")
    trace = read_trace(args.trace)
    _check_trace_names(trace, env)
    projected = (filter_trace_internal if args.internal else filter_trace)(trace, env, args.level)
    text = trace_to_text(projected)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- verify-ni -------------------------------------------------------------------


def _print_verdict(verdict) -> None:
    print(f"verdict\t{'pass' if verdict.passed else 'counterexample'}")
    print(f"mode\t{verdict.mode}")
    print(f"adversary\t{verdict.adv}")
    print(f"variants\t{verdict.variants}")
    print(f"bounded\t{'yes' if verdict.bounded else 'no'}")
    for note in verdict.notes:
        print(f"note\t{note}")
    cx = verdict.counterexample
    if cx is None:
        return
    print(f"divergence_ts\t{cx.divergence_ts}")
    for name, variant, trace in (("first", cx.first, cx.first_trace), ("second", cx.second, cx.second_trace)):
        print(f"{name}\t{variant.describe()}")
        for ev in trace:
            print(f"  {dumps(event_to_json(ev))}")


def cmd_verify_ni(args) -> int:
    try:
        exp = read_experiment(args.experiment)
    except OSError as exc:
        raise _UsageError(f"{args.experiment}: {exc.strerror or exc}") from None
    if args.mode:
        exp.mode = args.mode
    if args.bound is not None:
        exp.bound = args.bound
    verdict = verify(exp)
    if args.json:
        print(json.dumps(verdict_to_json(verdict), indent=2, sort_keys=True))
    else:
        _print_verdict(verdict)
    if args.figure:
        from .report import ni_figure

        ni_figure(verdict, args.figure)
    return EXIT_OK if verdict.passed else EXIT_FAIL


# -- examples --------------------------------------------------------------------


def _corpus():
    return resources.files("selene") / "corpus"


def cmd_examples(args) -> int:
    root = _corpus()
    groups = {"programs": ".sel", "experiments": ".json"}
    files = {g: sorted(p.name for p in (root / g).iterdir() if p.name.endswith(ext)) for g, ext in groups.items()}
    if args.out is None or args.list:
        for g in groups:
            for name in files[g]:
                print(f"{g}/{name}")
    if args.out is not None:
        out = Path(args.out)
        for g in groups:
            (out / g).mkdir(parents=True, exist_ok=True)
            for name in files[g]:
                with resources.as_file(root / g / name) as src:
                    shutil.copyfile(src, out / g / name)
        print(f"wrote {sum(len(v) for v in files.values())} files to {out}", file=sys.stderr)
    return EXIT_OK


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selene", description="SELENE type checker, interpreter and noninterference harness.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="typecheck a program")
    p.add_argument("program")
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", help="run a program and write its trace")
    p.add_argument("program")
    p.add_argument("--input", metavar="ENV.json", help="input environment")
    p.add_argument("--memory", metavar="MEM.json", help="initial memory (missing variables default to 0 or \"\")")
    p.add_argument("--set", action="append", metavar="VAR=VALUE", help="set one initial variable; repeatable")
    p.add_argument("--max-steps", type=int, metavar="N", help="step budget (default $SELENE_MAX_STEPS or 10000)")
    p.add_argument("--eta", type=int, default=1, help="packet size in size units")
    p.add_argument("--trace", metavar="OUT.json", help="write the raw trace here")
    p.add_argument("--figure", metavar="OUT.png", help="render a timeline of network events")
    p.add_argument("--unsafe-skip-typecheck", action="store_true", help="run even if the security check fails")
    p.add_argument("--check-memory", action="store_true", help="assert memory well-formedness after every step")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("project", help="filter a trace to what an adversary observes")
    p.add_argument("trace")
    p.add_argument("--level", required=True, help="adversary level")
    p.add_argument("--program", required=True, help="program that produced the trace (for variable and channel levels)")
    p.add_argument("--internal", action="store_true", help="internal filtering (keeps visible program events)")
    p.add_argument("-o", "--output", metavar="OUT.json")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("verify-ni", help="bounded noninterference check of an experiment")
    p.add_argument("experiment")
    p.add_argument("--mode", choices=["external", INTERNAL], help="override the experiment's mode")
    p.add_argument("--bound", type=int, help="override the experiment's step bound")
    p.add_argument("--json", action="store_true")
    p.add_argument("--figure", metavar="OUT.png", help="render both observations of a counterexample")
    p.set_defaults(func=cmd_verify_ni)

    p = sub.add_parser("examples", help="list or export the bundled corpus")
    p.add_argument("--list", action="store_true")
    p.add_argument("--out", metavar="DIR", help="copy programs/ and experiments/ into DIR")
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("max_steps", "bound"):
        value = getattr(args, name, None)
        if value is not None and value < (1 if name == "bound" else 0):
            parser.error(f"--{name.replace('_', '-')} must be {'positive' if name == 'bound' else 'non-negative'}")
    if getattr(args, "eta", 1) < 1:
        parser.error("--eta must be positive")
    try:
        return args.func(args)
    except _UsageError as exc:
        _err(str(exc))
    except VariationError as exc:
        _err(f"invalid variation: {exc}")
    except (ParseError, DeclarationError) as exc:
        _err(str(exc))
    except (FormatError, ValueError) as exc:
        _err(str(exc))
    except OSError as exc:
        _err(f"{exc.filename or ''}: {exc.strerror or exc}")
    except SeleneError as exc:
        _err(str(exc))
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
