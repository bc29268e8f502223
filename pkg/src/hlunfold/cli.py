"""Command-line front end: ``hlunfold {unfold,expand,reach,bench,validate} ...``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import shlex
import sys
from typing import List, Optional

from . import __version__
from .benchmarks import CSV_FIELDS, FAMILIES, run_benchmark
from .export import dumps_json, prefix_to_dot
from .expansion import expand
from .guards import ParseError
from .library import resolve
from .net import InfiniteModes, NetError, is_safe, reachable_markings, validate
from .solver import DomainError, SolverConfig, SolverError
from .unfolder import CAP, TIMEOUT, UnfoldConfig, build_symbolic_prefix, check_reachability, unfold_expansion

OK, VIOLATED, USAGE, RESOURCE, SOLVER = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _Usage(message)


class _Usage(Exception):
    pass


def _int_list(s: str) -> List[int]:
    try:
        return [int(x) for x in s.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}")


def _unfold_options(p):
    p.add_argument("--mode", choices=("symbolic", "lowlevel"), default="symbolic")
    p.add_argument("--order", choices=("m", "e", "f"), default="f")
    p.add_argument("--cutoff", choices=("standard", "star", "none"), default="standard")
    p.add_argument("--max-events", type=int, default=100_000)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--time-limit", type=float, metavar="SECONDS", help="wall-clock limit for the whole run")
    p.add_argument("--transition-order", help="comma-separated transition names, highest priority first")
    p.add_argument("--backend", choices=("auto", "enumerator", "external"), default="auto")
    p.add_argument("--solver", metavar="CMD", help="external SMT-LIB solver command line, e.g. 'z3 -in'")
    p.add_argument("--timeout-ms", type=int, default=60_000, help="per-query solver timeout")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hlunfold", description="Finite prefixes of symbolic unfoldings of safe high-level Petri nets.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="cmd", parser_class=_Parser)

    p = sub.add_parser("unfold", help="build a complete finite prefix")
    p.add_argument("net", help="net file or bundled net name")
    _unfold_options(p)
    p.add_argument("--out", choices=("stats", "dot", "json"), default="stats")
    p.add_argument("-o", "--output", help="write the --out rendering here instead of stdout")

    p = sub.add_parser("expand", help="print the expansion as a P/T net")
    p.add_argument("net")
    p.add_argument("--reachable-only", action="store_true")
    p.add_argument("--format", choices=("text", "dot", "stats"), default="text")

    p = sub.add_parser("reach", help="decide whether a goal marking is reachable")
    p.add_argument("net")
    p.add_argument("--goal", required=True, action="append",
                   help="PLACE:VAR[,PLACE:VAR...] [GUARD], e.g. 'bucket0:x (= x 4)'; repeatable")
    _unfold_options(p)

    p = sub.add_parser("bench", help="run one benchmark instance")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--m", type=str, help="colour bound (forkjoin: 'nat' for the naturals)")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--buckets", type=_int_list)
    p.add_argument("--target", type=int)
    _unfold_options(p)
    p.add_argument("--csv", nargs="?", const="-", metavar="FILE", help="emit a CSV row (to FILE or stdout)")

    p = sub.add_parser("validate", help="check a net file")
    p.add_argument("net")
    p.add_argument("--check-safe", action="store_true", help="explore the reachable markings (finite nets)")
    return ap


def _config(a) -> UnfoldConfig:
    cmd = tuple(shlex.split(a.solver)) if a.solver else None
    backend = "external" if cmd and a.backend == "auto" else a.backend
    order = tuple(x for x in a.transition_order.split(",") if x) if a.transition_order else None
    return UnfoldConfig(order=a.order, cutoff=a.cutoff, max_events=a.max_events, max_depth=a.max_depth,
                        timeout_s=a.time_limit, transition_order=order,
                        solver=SolverConfig(backend=backend, command=cmd, timeout_ms=a.timeout_ms))


def _status_code(status: str) -> int:
    return RESOURCE if status in (CAP, TIMEOUT) else OK


def _emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_unfold(a) -> int:
    n = resolve(a.net)
    cfg = _config(a)
    res = build_symbolic_prefix(n, cfg) if a.mode == "symbolic" else unfold_expansion(n, cfg)
    stats = json.dumps(res.stats(), sort_keys=True)
    if a.out == "stats":
        _emit(stats + "\n", a.output)
    else:
        text = prefix_to_dot(res.process, n.name) if a.out == "dot" else dumps_json(res.process) + "\n"
        _emit(text, a.output)
        print(stats, file=sys.stdout if a.output else sys.stderr)
    return _status_code(res.status)


def cmd_expand(a) -> int:
    pt = expand(resolve(a.net), reachable_only=a.reachable_only)
    if a.format == "text":
        sys.stdout.write(pt.to_text())
    elif a.format == "dot":
        sys.stdout.write(pt.to_dot())
    else:
        print(json.dumps({"places": len(pt.places), "transitions": len(pt.transitions)}))
    return OK


def cmd_reach(a) -> int:
    from .unfolder import parse_goal
    n = resolve(a.net)
    goals = [parse_goal(g, n, f"goal{i}" if len(a.goal) > 1 else "goal") for i, g in enumerate(a.goal)]
    r = check_reachability(n, goals, _config(a), mode=a.mode)
    out = {"reachable": r.reachable, "steps": r.steps,
           "witness": [[t, _jsonable(s)] for t, s in r.witness] if r.witness is not None else None}
    out.update(r.prefix.stats())
    print(json.dumps(out, sort_keys=True))
    if r.reachable:
        return OK
    return _status_code(r.prefix.status) or VIOLATED


def _jsonable(mode: dict) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in mode.items()}


def cmd_bench(a) -> int:
    params = {}
    if a.family == "forkjoin":
        params["m"] = None if a.m in (None, "nat") else int(a.m)
        params["n"] = a.n if a.n is not None else 2
    else:
        if a.m is not None:
            params["m"] = int(a.m)
        for k in ("n", "k", "target"):
            if getattr(a, k) is not None:
                params[k] = getattr(a, k)
        if a.buckets:
            params["buckets"] = a.buckets
    row = run_benchmark(a.family, a.mode, _config(a), **params)
    if a.csv:
        f = sys.stdout if a.csv == "-" else open(a.csv, "a", newline="")
        try:
            w = csv.DictWriter(f, fieldnames=CSV_FIELDS, extrasaction="ignore")
            if f is sys.stdout or f.tell() == 0:
                w.writeheader()
            w.writerow(row)
        finally:
            if f is not sys.stdout:
                f.close()
    else:
        print(json.dumps(row, sort_keys=True))
    return _status_code(row["status"])


def cmd_validate(a) -> int:
    n = resolve(a.net)
    validate(n)
    info = {"name": n.name, "places": len(n.places), "transitions": len(n.transitions),
            "ordinary": n.is_ordinary(), "domain": str(n.domain)}
    code = OK
    if a.check_safe:
        info["safe"] = is_safe(n)
        info["reachable_markings"] = len(reachable_markings(n).markings) if info["safe"] else None
        if not info["safe"]:
            code = VIOLATED
    print(json.dumps(info, sort_keys=True))
    return code


COMMANDS = {"unfold": cmd_unfold, "expand": cmd_expand, "reach": cmd_reach, "bench": cmd_bench,
            "validate": cmd_validate}


def run(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except _Usage as exc:
        print(f"hlunfold: {exc}", file=sys.stderr)
        return USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if not a.cmd:
        ap.print_help(sys.stderr)
        return USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(a.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[a.cmd](a)
    except (NetError, ParseError, DomainError, InfiniteModes, ValueError, OSError) as exc:
        print(f"hlunfold: {exc}", file=sys.stderr)
        return USAGE
    except SolverError as exc:
        print(f"hlunfold: solver failure: {exc}", file=sys.stderr)
        return SOLVER


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
