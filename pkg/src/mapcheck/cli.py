"""``mapcheck`` command line.

Exit codes: 0 no accepting cycle, 1 accepting cycle found, 2 usage or parse
error, 3 resource limit, 4 model runtime error, 5 bench manifest mismatch.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import ALGORITHMS as BENCH_ALGORITHMS, ManifestMismatch, render_table, run_bench
from .errors import GraphFormatError, MapcheckError, ResourceLimitError
from .explorer import ExploreConfig, explore
from .graph_core import Orientation, parse_graph_text, snapshot_from_edges
from .map_engine import run_map
from .model_lang import ModelParseError, ModelRuntimeError, parse_model
from .oracles import scc_verdict
from .owcty import run_owcty
from .report import render_progress, render_stats, render_verdict
from .verdict import Verdict

EXIT_OK, EXIT_CYCLE, EXIT_USAGE, EXIT_RESOURCE, EXIT_RUNTIME, EXIT_MANIFEST = range(6)


def exit_code(verdict: Verdict) -> int:
    return EXIT_CYCLE if verdict.cycle_found else EXIT_OK


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _cadence(text):
    if text.lower() in ("final", "inf", "none"):
        return None
    return _positive(text)


def _const(text):
    name, sep, value = text.partition("=")
    if not sep or not name.isidentifier():
        raise argparse.ArgumentTypeError("expected NAME=VALUE")
    try:
        return name, int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value!r} is not an integer") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mapcheck", description="Accepting-cycle detection for communicating automata.")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="explore a .cdve model and look for an accepting cycle")
    check.add_argument("model", type=Path)
    check.add_argument("--algorithm", choices=("map", "owcty", "ndfs"), default="map")
    check.add_argument("--workers", type=_positive, default=1, help="state generation workers")
    check.add_argument("--kernel-workers", type=_positive, default=1, help="row workers per MAP propagation step")
    check.add_argument("--detect-every", type=_cadence, default=50_000, metavar="E",
                       help="edges between detection rounds ('final' for the final round only)")
    check.add_argument("--no-pruning", action="store_true")
    check.add_argument("--no-scc-restriction", action="store_true")
    check.add_argument("--no-early-exit", action="store_true")
    check.add_argument("--report-every", type=_positive, default=100_000, metavar="S")
    check.add_argument("--max-states", type=_positive, default=5_000_000)
    check.add_argument("--orientation", choices=[o.value for o in Orientation], default="transposed",
                       help="graph orientation MAP propagates over")
    check.add_argument("--const", type=_const, action="append", default=[], metavar="NAME=VAL")

    graph = sub.add_parser("graph", help="decide an explicit graph file")
    graph.add_argument("file", type=Path)
    graph.add_argument("--algorithm", choices=("map", "owcty", "scc"), default="map")
    graph.add_argument("--kernel-workers", type=_positive, default=1)

    bench = sub.add_parser("bench", help="run every corpus model under every engine")
    bench.add_argument("dir", type=Path)
    bench.add_argument("--csv", type=Path)
    bench.add_argument("--algorithms", default=",".join(BENCH_ALGORITHMS))
    return parser


def _check(args, out) -> int:
    model = parse_model(args.model.read_text(), dict(args.const))
    cfg = ExploreConfig(
        algorithm=args.algorithm,
        detection_interval_edges=args.detect_every,
        generation_workers=args.workers,
        kernel_workers=args.kernel_workers,
        enable_relevance_pruning=not args.no_pruning,
        enable_final_scc_restriction=not args.no_scc_restriction,
        early_exit=not args.no_early_exit,
        report_every_states=args.report_every,
        max_states=args.max_states,
        map_orientation=Orientation(args.orientation),
    )
    verdict, stats = explore(model, cfg, on_progress=lambda rec: print(render_progress(rec), file=out, flush=True))
    print(render_stats(stats), file=out)
    print(render_verdict(verdict), file=out)
    return exit_code(verdict)


def _graph(args, out) -> int:
    n, accepting, edges = parse_graph_text(args.file.read_text())
    if args.algorithm == "scc":
        verdict = scc_verdict(edges, n, accepting).as_verdict()
        print(f"[stats] vertices={n} edges={len(edges)}", file=out)
    elif args.algorithm == "owcty":
        verdict, st = run_owcty(snapshot_from_edges(n, edges, accepting, Orientation.FORWARD))
        print(f"[stats] vertices={n} edges={len(edges)} iters={st.outer_iterations}", file=out)
    else:
        verdict, st = run_map(snapshot_from_edges(n, edges, accepting, Orientation.TRANSPOSED),
                              workers=args.kernel_workers)
        print(f"[stats] vertices={n} edges={len(edges)} iters={st.iterations} kernel-calls={st.kernel_calls}",
              file=out)
    print(render_verdict(verdict), file=out)
    return exit_code(verdict)


def _bench(args, out) -> int:
    algorithms = [a for a in args.algorithms.split(",") if a]
    unknown = set(algorithms) - set(BENCH_ALGORITHMS)
    if unknown:
        raise _Usage(f"unknown algorithm(s): {', '.join(sorted(unknown))}")
    if not args.dir.is_dir():
        raise _Usage(f"{args.dir} is not a directory")
    rows = run_bench(args.dir, algorithms, csv_path=args.csv)
    print(render_table(rows, algorithms), file=out)
    return EXIT_OK


class _Usage(Exception):
    pass


def run_cli(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    handler = {"check": _check, "graph": _graph, "bench": _bench}[args.command]
    try:
        return handler(args, out)
    except (ModelParseError, GraphFormatError, _Usage, OSError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=err)
        if exc.stats is not None:
            print(render_stats(exc.stats), file=err)
        return EXIT_RESOURCE
    except ModelRuntimeError as exc:
        print(f"error: model runtime: {exc}", file=err)
        return EXIT_RUNTIME
    except ManifestMismatch as exc:
        for failure in exc.failures:
            print(f"error: manifest mismatch: {failure}", file=err)
        return EXIT_MANIFEST
    except MapcheckError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_cli())
