"""Command-line entry point: ``bestow check|run|explore|demo|bench|corpus``.

Exit codes: 0 success, 1 a checked property failed, 2 usage, parse or type errors.
Errors go to standard error as ``bestow: <kind> error: <detail>``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, TextIO, Tuple

from .calculus.ast import Expr, Variant
from .calculus.explorer import explore
from .calculus.mutants import MUTANTS
from .calculus.parser import ParseError, VariantError, parse, split_pragma
from .calculus.runner import Schedule, ScheduleError, render_config, run_program
from .calculus.semantics import IllegalLabel
from .calculus.statics import CalcTypeError, typecheck
from .corpus import GROUPS, get_program, load_corpus

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
CORPUS_PREFIX = "corpus:"


class UsageError(Exception):
    pass


@dataclass
class Source:
    label: str
    text: str
    variant: Variant


def _load(target: str, flag: Optional[str]) -> Source:
    if target.startswith(CORPUS_PREFIX):
        try:
            program = get_program(target[len(CORPUS_PREFIX) :])
        except (KeyError, ValueError):
            raise UsageError(f"no bundled program named {target!r} (see 'bestow corpus list')") from None
        label, text = target, program.source
    else:
        path = Path(target)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as err:
            raise UsageError(f"cannot read {target}: {err.strerror}") from None
        label = target
    pragma, _ = split_pragma(text)
    if flag is not None:
        variant = Variant.parse(flag)
    else:
        variant = pragma or Variant.CORE
    return Source(label, text, variant)


def _parse_and_check(src: Source) -> Tuple[Expr, str]:
    _, body = split_pragma(src.text)
    expr = parse(body, src.variant)
    ty = typecheck({}, expr, src.variant)
    return expr, str(ty)


def _stamp(doc: dict, args) -> dict:
    if not args.no_timestamps:
        doc["generatedAt"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return doc


def _dump(doc: dict, out: TextIO) -> None:
    out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# -- check / run / explore -------------------------------------------------------------


def cmd_check(args, out: TextIO, err: TextIO) -> int:
    src = _load(args.file, args.variant)
    try:
        _, ty = _parse_and_check(src)
    except CalcTypeError as exc:
        if args.json:
            _dump(_stamp({"schema": 1, "file": src.label, "variant": src.variant.value, "ok": False,
                          "error": exc.to_dict()}, args), out)
        where = f"{src.label}:{exc.pos[0]}:{exc.pos[1]}" if exc.pos else src.label
        err.write(f"bestow: type error: {exc.kind.value} at {where}: {exc.message}\n")
        return EXIT_USAGE
    if args.json:
        _dump(_stamp({"schema": 1, "file": src.label, "variant": src.variant.value, "ok": True, "type": ty}, args), out)
    else:
        out.write(f"{ty}\n")
    return EXIT_OK


def _prepare(args, src: Source):
    """Parse, pick the (possibly mutated) semantics, and typecheck unless told not to."""
    _, body = split_pragma(src.text)
    expr = parse(body, src.variant)
    semantics = None
    if args.mutant:
        mutant = MUTANTS[args.mutant]
        if mutant.variant is not src.variant:
            raise UsageError(f"mutant {mutant.name} is for the {mutant.variant.value} variant")
        semantics = mutant.semantics()
    if not args.skip_typecheck:
        typecheck({}, expr, src.variant)
    return expr, semantics


def cmd_run(args, out: TextIO, err: TextIO) -> int:
    src = _load(args.file, args.variant)
    expr, semantics = _prepare(args, src)
    spec = args.schedule
    if spec == "random":
        spec = f"random:{args.seed}"
    schedule = Schedule.parse(spec)
    try:
        result = run_program(expr, src.variant, schedule, max_steps=args.max_steps,
                             wf_every_step=args.wf_every_step, semantics=semantics)
    except IllegalLabel as exc:
        raise UsageError(f"schedule script: {exc}") from None
    if args.json:
        _dump(_stamp(result.to_dict(), args), out)
    else:
        for label in result.labels:
            out.write(f"{label}\n")
        out.write("-- final configuration" + ("" if result.quiescent else " (not quiescent)") + "\n")
        out.write(render_config(result.final) + "\n")
    for failure in result.wf_failures:
        err.write(f"bestow: wf violation: {failure}\n")
    return EXIT_VIOLATION if result.wf_failures else EXIT_OK


def _write_traces(report, directory: Path, stem: str) -> List[str]:
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for v in report.violations:
        path = directory / f"{stem}.{v.property}.trace"
        lines = [f"# {v.property}: {v.detail}"] + [str(l) for l in v.trace.labels]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(str(path))
    return written


def cmd_explore(args, out: TextIO, err: TextIO) -> int:
    src = _load(args.file, args.variant)
    expr, semantics = _prepare(args, src)
    report = explore(
        expr,
        src.variant,
        args.depth,
        args.transfer_cap,
        semantics=semantics,
        canonicalize=args.canonicalize,
        state_budget=args.state_budget,
        check_program=False,
    )
    doc = report.to_dict()
    traces: List[str] = []
    if report.violations:
        stem = Path(src.label.replace(CORPUS_PREFIX, "")).stem
        traces = _write_traces(report, Path(args.trace_dir), stem)
        doc["traceFiles"] = traces
    if args.json:
        _dump(_stamp(doc, args), out)
    else:
        out.write(f"states visited: {report.states_visited}\n")
        out.write(f"max depth: {report.max_depth}\n")
        out.write(f"truncated: {'yes (' + report.truncation_reason + ')' if report.truncated else 'no'}\n")
        if not report.violations:
            out.write("violations: none\n")
        for v in report.violations:
            out.write(f"violation: {v.property}: {v.detail}\n")
            for label in v.trace.labels:
                out.write(f"  {label}\n")
    for path in traces:
        err.write(f"bestow: trace written to {path}\n")
    return EXIT_VIOLATION if report.violations else EXIT_OK


# -- demos and benchmarks -------------------------------------------------------------


def _say(args, out: TextIO, line: str) -> None:
    if not args.json:
        out.write(line + "\n")


def demo_dht(args, out: TextIO) -> Tuple[bool, dict]:
    from .workloads.dht import rehash_race

    _say(args, out, f"putting {args.keys} keys from two clients while the table grows from 2 to 4 shards")
    plain = rehash_race(args.keys, seed=args.seed, deterministic=args.deterministic)
    _say(args, out, f"  stop/copy/restart rehash: lost={len(plain.lost)} duplicated={len(plain.duplicated)} "
         f"wrong={len(plain.wrong_value)} misplaced={len(plain.misplaced)} forwarded={plain.redirects}")
    atomic = rehash_race(args.keys, seed=args.seed, atomic=True, deterministic=args.deterministic)
    _say(args, out, f"  atomic_all rehash:       lost={len(atomic.lost)} duplicated={len(atomic.duplicated)} "
         f"wrong={len(atomic.wrong_value)} misplaced={len(atomic.misplaced)} forwarded={atomic.redirects}")
    same = plain.assignment == atomic.assignment
    _say(args, out, f"  both rehashes leave every key on the same shard: {same}")
    ok = plain.ok and atomic.ok and same
    doc = {
        "keys": args.keys,
        "lost": len(plain.lost) + len(atomic.lost),
        "duplicated": len(plain.duplicated) + len(atomic.duplicated),
        "sameAssignment": same,
    }
    if args.deterministic:
        doc["forwarded"] = {"plain": plain.redirects, "atomic": atomic.redirects}
    return ok, doc


def demo_bank(args, out: TextIO) -> Tuple[bool, dict]:
    from .runtime import ActorSystem
    from .workloads.bank import run_money_race

    _say(args, out, f"{args.iterations} random transfers between 9 accounts at 3 banks, observed by atomic snapshots")
    with ActorSystem(deterministic=args.deterministic, seed=args.seed) as system:
        safe = run_money_race(system, args.iterations, seed=args.seed)
    _say(args, out, f"  atomic transfers: {len(safe.snapshots)} snapshots, {safe.violations} saw money missing; "
         f"total {safe.initial_total} -> {safe.final_total}")
    with ActorSystem(deterministic=args.deterministic, seed=args.seed) as system:
        unsafe = run_money_race(system, args.iterations, seed=args.seed, atomic=False)
    _say(args, out, f"  two-message transfers: {unsafe.violations} of {len(unsafe.snapshots)} snapshots saw money missing")
    ok = safe.violations == 0 and safe.final_total == safe.initial_total and unsafe.final_total == unsafe.initial_total
    _say(args, out, "  the observer catches the unsafe variant: " + ("yes" if unsafe.violations else "no"))
    doc = {"iterations": args.iterations, "atomicViolations": safe.violations, "snapshots": len(safe.snapshots)}
    if args.deterministic:
        doc["controlViolations"] = unsafe.violations
    return ok, doc


def demo_graph(args, out: TextIO) -> Tuple[bool, dict]:
    from .workloads.graph import distributed_shortest_path, random_graph, sequential_dijkstra

    graph = random_graph(args.nodes, args.seed)
    expected = sequential_dijkstra(graph, 0)
    _say(args, out, f"shortest paths from node 0 in a random {args.nodes}-node graph split over 4 actors")
    ok, doc = True, {"nodes": args.nodes}
    for policy in ("never", "when-owner-idle"):
        dist, stats = distributed_shortest_path(graph, 0, policy=policy)
        match = dist == expected
        ok = ok and match
        _say(args, out, f"  policy {policy}: matches sequential search={match} "
             f"envelopes={stats['envelopes']} transfers={stats['transfers']}")
        doc[policy] = {"matches": match}
        if args.deterministic:
            doc[policy].update(envelopes=stats["envelopes"], transfers=stats["transfers"])
    return ok, doc


DEMOS = {"dht": demo_dht, "bank": demo_bank, "graph": demo_graph}


def cmd_demo(args, out: TextIO, err: TextIO) -> int:
    ok, doc = DEMOS[args.scenario](args, out)
    if args.json:
        _dump(_stamp({"schema": 1, "demo": args.scenario, "seed": args.seed, "ok": ok, **doc}, args), out)
    else:
        out.write("all assertions hold\n" if ok else "ASSERTION FAILED\n")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_bench(args, out: TextIO, err: TextIO) -> int:
    from .workloads.ping import PingMode, compare_ping, expected_envelopes

    modes = list(PingMode) if args.mode == "all" else [PingMode(args.mode)]
    reports = compare_ping(args.messages, modes, runs=args.runs, batch=args.batch,
                           deterministic=args.deterministic, seed=args.seed)
    exact = all(r.envelopes == expected_envelopes(r.mode, r.messages, r.batch) for r in reports.values())
    if args.figure:
        from .plotting import ping_figure

        ping_figure(reports, args.figure)
    if args.json:
        doc = {"schema": 1, "benchmark": "ping", "envelopeCountsExact": exact,
               "results": {m: r.to_dict() for m, r in reports.items()}}
        if args.figure:
            doc["figure"] = str(args.figure)
        _dump(_stamp(doc, args), out)
    else:
        out.write("mode\tmessages\truns\tmedian_s\tmsgs_per_s\tenvelopes\texpected_envelopes\n")
        for r in reports.values():
            out.write(f"{r.mode}\t{r.messages}\t{r.runs}\t{r.median_seconds:.4f}\t{r.messages_per_second:.0f}\t"
                      f"{r.envelopes}\t{expected_envelopes(r.mode, r.messages, r.batch)}\n")
    if not exact:
        err.write("bestow: envelope count differs from the expected value\n")
    return EXIT_OK if exact else EXIT_VIOLATION


def cmd_corpus(args, out: TextIO, err: TextIO) -> int:
    programs = load_corpus(args.group)
    if args.action == "list":
        if args.json:
            _dump({"schema": 1, "programs": [
                {"name": f"{p.group}/{p.name}", "variant": p.variant.value, "expect": p.expect} for p in programs
            ]}, out)
        else:
            for p in programs:
                out.write(f"{p.group}/{p.name}\t{p.variant.value}\t{p.expect}\n")
        return EXIT_OK
    if not args.dir:
        raise UsageError("corpus export needs a target directory")
    root = Path(args.dir)
    for p in programs:
        path = root / p.group / f"{p.name}.bst"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(p.source, encoding="utf-8")
    out.write(f"wrote {len(programs)} programs under {root}\n")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _common(suppress: bool) -> argparse.ArgumentParser:
    """Global flags, accepted before or after the subcommand."""
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--variant", choices=[v.value for v in Variant], default=d(None),
                   help="calculus variant (overrides a #variant pragma)")
    p.add_argument("--seed", type=int, default=d(0), help="seed for schedulers and workloads")
    p.add_argument("--json", action="store_true", default=d(False), help="machine-readable output")
    p.add_argument("--deterministic", action="store_true", default=d(False),
                   help="run actors on the seeded single-threaded scheduler")
    p.add_argument("--no-timestamps", action="store_true", default=d(False),
                   help="leave generation times out of JSON output")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bestow", parents=[_common(False)],
                                     description="Actor calculus tools and delegation runtime workloads.")
    common = _common(True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="typecheck a program")
    p.add_argument("file", help="a .bst file, or corpus:<group>/<name>")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", parents=[common], help="execute a program under one schedule")
    p.add_argument("file")
    p.add_argument("--schedule", default="fifo", help="fifo, random, random:<seed> or script:<file>")
    p.add_argument("--max-steps", type=_positive, default=1000)
    p.add_argument("--wf-every-step", action="store_true", help="check well-formedness after every step")
    p.add_argument("--mutant", choices=sorted(MUTANTS), help="run under a deliberately broken semantics")
    p.add_argument("--skip-typecheck", action="store_true", help="run even if the program is rejected")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("explore", parents=[common], help="explore every interleaving of a program")
    p.add_argument("file")
    p.add_argument("--depth", type=_positive, default=60)
    p.add_argument("--transfer-cap", type=int, default=2)
    p.add_argument("--canonicalize", action="store_true", help="merge states equal up to renaming")
    p.add_argument("--state-budget", type=_positive, default=500_000)
    p.add_argument("--trace-dir", default="bestow-traces", help="where violating traces are written")
    p.add_argument("--mutant", choices=sorted(MUTANTS), help="explore under a deliberately broken semantics")
    p.add_argument("--skip-typecheck", action="store_true", help="explore even if the program is rejected")
    p.add_argument("--wf-every-step", action="store_true",
                   help="accepted for symmetry with run; exploration always checks every state")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("demo", parents=[common], help="run a workload scenario and check its assertions")
    p.add_argument("scenario", choices=sorted(DEMOS))
    p.add_argument("--keys", type=_positive, default=1000, help="dht: number of puts")
    p.add_argument("--iterations", type=_positive, default=10_000, help="bank: number of transfers")
    p.add_argument("--nodes", type=_positive, default=50, help="graph: number of nodes")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("bench", parents=[common], help="benchmarks")
    p.add_argument("benchmark", choices=["ping"])
    p.add_argument("--messages", type=_positive, default=100_000)
    p.add_argument("--mode", choices=["direct", "bestowed", "bestowed-atomic", "all"], default="all")
    p.add_argument("--runs", type=_positive, default=5)
    p.add_argument("--batch", type=_positive, default=1000, help="coalesced batch size for bestowed-atomic")
    p.add_argument("--figure", help="write a PNG/PDF/SVG figure to this path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("corpus", parents=[common], help="list or export the bundled programs")
    p.add_argument("action", choices=["list", "export"])
    p.add_argument("dir", nargs="?")
    p.add_argument("--group", choices=GROUPS)
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv: Optional[Sequence[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args, out, err)
    except UsageError as exc:
        err.write(f"bestow: usage error: {exc}\n")
    except ScheduleError as exc:
        err.write(f"bestow: usage error: {exc}\n")
    except VariantError as exc:
        err.write(f"bestow: variant error: {args.file}:{exc}\n")
    except ParseError as exc:
        err.write(f"bestow: parse error: {args.file}:{exc}\n")
    except CalcTypeError as exc:
        where = f"{args.file}:{exc.pos[0]}:{exc.pos[1]}" if exc.pos else args.file
        err.write(f"bestow: type error: {exc.kind.value} at {where}: {exc.message}\n")
    except ValueError as exc:
        err.write(f"bestow: usage error: {exc}\n")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
