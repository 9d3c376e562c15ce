"""Command-line entry point: ``lemmaforge <subcommand> ...``.

Exit status is 0 on success, 1 for bad input (with a diagnostic naming the
file and line where known) and 2 when an internal invariant breaks.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from . import __version__
from .dedup import DedupSpec, compose, dedup, dedup_pipeline
from .graph import DEFAULT_AXIOM_RULES, GraphError, NamedSet, ProofGraph, graph_stats
from .knn import chrono_eval
from .metrics import MetricError, metric_scores, parse_metric
from .pagerank import PageRankConfig
from .quality import compute_D, compute_L, compute_U, ranking
from .scenarios import (
    DerivedGraph,
    HonestyError,
    almost_honest,
    chain_levels,
    derive,
    export_problems,
    fully_honest_schedule,
    read_problems,
    read_solved,
    write_problems,
)
from .selection import select_best
from .trace_io import (
    SidecarError,
    TraceParseError,
    atomic_write,
    format_names,
    parse_names,
    parse_sidecars,
    parse_statements,
    parse_trace,
    write_trace,
)

log = logging.getLogger("lemmaforge")

INPUT_ERRORS = (
    TraceParseError,
    SidecarError,
    MetricError,
    HonestyError,
    GraphError,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
    IndexError,
    ValueError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# -- helpers -----------------------------------------------------------------


def _load_graph(args) -> ProofGraph:
    return parse_trace(args.trace, axiom_rules=args.axiom_rules)


def _load_named(path, graph: ProofGraph) -> NamedSet:
    if path is None:
        return NamedSet()
    return parse_names(Path(path), graph.n)


def _open_out(path) -> contextlib.AbstractContextManager[IO[str]]:
    if path is None or path == "-":
        return contextlib.nullcontext(sys.stdout)
    return atomic_write(path)


def _fmt_count(v: float) -> str:
    return "inf" if v == np.inf else str(int(v))


def write_rank_tsv(out: IO[str], order, scores, D, U, L, S, chunk: int = 1 << 16) -> None:
    out.write("rank\tserial\tscore\tD\tU\tL\tS\n")
    for lo in range(0, len(order), chunk):
        idx = order[lo : lo + chunk]
        rows = zip(
            range(lo + 1, lo + 1 + len(idx)),
            (idx + 1).tolist(),
            scores[idx].tolist(),
            D[idx].tolist(),
            U[idx].tolist(),
            L[idx].tolist(),
            S[idx].tolist(),
        )
        out.write(
            "".join(
                f"{r}\t{s}\t{sc!r}\t{_fmt_count(d)}\t{_fmt_count(u)}\t{l}\t{z}\n"
                for r, s, sc, d, u, l, z in rows
            )
        )


def _pagerank_cfg(args) -> PageRankConfig:
    return PageRankConfig(damping=args.damping, tolerance=args.tol, max_iterations=args.max_iter)


# -- subcommands -------------------------------------------------------------


def cmd_stats(args) -> int:
    graph = _load_graph(args)
    named = _load_named(args.names, graph) if args.names else None
    st = graph_stats(graph, named)
    line = f"nodes {st.nodes} edges {st.edges} roots {st.roots}"
    if named is not None:
        line += f" named {st.named_count}"
    print(line)
    return 0


def cmd_dedup(args) -> int:
    graph = _load_graph(args)
    side = parse_sidecars(graph, names=args.names, raw_keys=args.raw_keys, alpha_keys=args.alpha_keys)
    for kind, count in side.duplicates.items():
        log.warning("%s: %d duplicate serial(s), last entry wins", kind, count)
    prefix = Path(args.out)
    if args.pipeline:
        pipe = dedup_pipeline(graph, side)
        stages = [("trace0", pipe.trace0), ("trace1", pipe.trace1), ("trace2", pipe.trace2)]
    else:
        spec = DedupSpec(args.scope, args.kind, not args.drop_named_duplicates)
        stages = [("", dedup(graph, side, spec))]
    mapping = None
    for tag, res in stages:
        if res is None:
            continue
        # every .map is relative to the input trace, not to the previous stage
        mapping = res.mapping if mapping is None else compose(mapping, res.mapping)
        stem = f"{prefix}.{tag}" if tag else str(prefix)
        with atomic_write(f"{stem}.trace") as fh:
            write_trace(res.graph, fh)
        with atomic_write(f"{stem}.map") as fh:
            fh.write("".join(f"{i} {m}\n" for i, m in enumerate(mapping.tolist(), 1)))
        if args.names:
            with atomic_write(f"{stem}.names") as fh:
                fh.write(format_names(res.sidecars.names))
        print(f"{tag or 'dedup'}: nodes {res.graph.n} edges {res.graph.edge_count} removed {res.removed_count}")
    return 0


def cmd_rank(args) -> int:
    metric = parse_metric(args.metric, _pagerank_cfg(args))
    graph = _load_graph(args)
    named = _load_named(args.named, graph).mask(graph.n)
    scores = metric_scores(graph, metric, named)
    D, U, L = compute_D(graph, named), compute_U(graph, named), compute_L(graph, named)
    order = ranking(scores)
    if args.top is not None:
        order = order[: args.top]
    with _open_out(args.out) as out:
        write_rank_tsv(out, order, scores, D, U, L, graph.sizes)
    return 0


def cmd_select(args) -> int:
    metric = parse_metric(args.metric, _pagerank_cfg(args))
    graph = _load_graph(args)
    named0 = NamedSet() if args.from_scratch else _load_named(args.named, graph)
    run = select_best(graph, metric, named0, args.count)
    if run.truncated:
        log.warning("only %d eligible lemmas; selected all of them", len(run.chosen))
    with _open_out(args.out) as out:
        out.write(run.names_fragment())
    return 0


def cmd_scenario(args) -> int:
    graph = _load_graph(args)
    orig = _load_named(args.named, graph)
    if not len(orig):
        raise ValueError("--named must list at least one original theorem")
    out = Path(args.out)
    if args.mode == "fully-honest":
        if not args.metric or args.count is None:
            raise ValueError("fully-honest mode needs --metric and --count")
        metric = parse_metric(args.metric, _pagerank_cfg(args))
        sched = fully_honest_schedule(graph, orig, metric, args.count, args.stride)
        write_problems([e.problem for e in sched.values()], out / "problems")
        for j, entry in sched.items():
            with atomic_write(out / "selections" / f"{j}.names") as fh:
                fh.write(entry.run.names_fragment())
        print(f"fully-honest: {len(sched)} theorems")
        return 0

    selected = _load_named(args.selected, graph) if args.selected else NamedSet()
    new = orig.union(selected.serials.tolist())
    if args.mode == "cheating":
        derived = derive(graph, new)
    else:
        derived = almost_honest(graph, orig, new)
    with atomic_write(out / "derived.txt") as fh:
        fh.write(derived.to_text())
    problems = export_problems(derived, "parents", names=new)
    write_problems(problems, out / "problems")
    print(f"{args.mode}: theorems {len(derived.theorems)} edges {derived.edge_count}")
    return 0


def cmd_advise(args) -> int:
    slices = [int(s) for s in args.slices.split(",") if s.strip()]
    derived = DerivedGraph.from_text(Path(args.derived).read_text())
    n = _load_graph(args).n if args.trace else None
    statements = parse_statements(Path(args.statements), n)
    names = dict(parse_names(Path(args.names), n).items()) if args.names else None
    res = chrono_eval(statements, derived, args.k, slices, names)
    if res.skipped:
        log.warning("%d theorem(s) without statements skipped", res.skipped)
    out = Path(args.out)
    for (t, n), pf in sorted(res.problems.items()):
        with atomic_write(out / f"slice{n}" / f"{t}.p") as fh:
            fh.write(pf.to_text())
    print(f"advise: {len(res.problems)} problems, skipped {res.skipped}")
    return 0


def cmd_chains(args) -> int:
    rounds = [Path(p) for p in args.rounds.split(",") if p.strip()]
    solved = [read_solved(p) for p in rounds]
    problems = None
    if args.problems:
        dirs = [Path(p) for p in args.problems.split(",") if p.strip()]
        problems = [{t: pf.premises for t, pf in read_problems(d).items()} for d in dirs]
    table = chain_levels(problems, solved)
    if args.out:
        with atomic_write(args.out) as fh:
            for t, lvl in sorted(table.levels.items()):
                fh.write(f"{t}\t{'inf' if lvl == float('inf') else int(lvl)}\n")
    total = 0
    for k, c in table.histogram().items():
        print(f"{k}\t{c}")
        if k != "unsolved":
            total += c
    print(f"total\t{total}")
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lemmaforge", description="Proof-trace lemma mining toolkit.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--threads", type=int, default=None, help="cap on internal parallelism")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def with_trace(sp, required=True):
        if required:
            sp.add_argument("trace", help="trace file")
        else:
            sp.add_argument("--trace", default=None, help="trace file (for serial validation)")
        sp.add_argument(
            "--axiom-rules", default="".join(sorted(DEFAULT_AXIOM_RULES)),
            help="rule codes treated as axioms (default: F)",
        )

    def with_pagerank(sp):
        sp.add_argument("--damping", type=float, default=0.85)
        sp.add_argument("--tol", type=float, default=1e-9)
        sp.add_argument("--max-iter", type=int, default=200)

    sp = sub.add_parser("stats", help="node/edge/root counts")
    with_trace(sp)
    sp.add_argument("--names")
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("dedup", help="content-key de-duplication")
    with_trace(sp)
    sp.add_argument("--raw-keys")
    sp.add_argument("--alpha-keys")
    sp.add_argument("--names")
    sp.add_argument("--scope", choices=("segment", "global"), default="global")
    sp.add_argument("--kind", choices=("raw", "alpha"), default="raw")
    sp.add_argument("--drop-named-duplicates", action="store_true")
    sp.add_argument("--pipeline", action="store_true", help="write trace0, trace1 and trace2")
    sp.add_argument("--out", required=True, help="output path prefix")
    sp.set_defaults(func=cmd_dedup)

    sp = sub.add_parser("rank", help="score every lemma and emit TSV")
    with_trace(sp)
    sp.add_argument("--metric", required=True)
    sp.add_argument("--named")
    sp.add_argument("--top", type=int)
    sp.add_argument("--out", "-o")
    with_pagerank(sp)
    sp.set_defaults(func=cmd_rank)

    sp = sub.add_parser("select", help="greedy best-lemma selection")
    with_trace(sp)
    sp.add_argument("--metric", required=True)
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--named")
    sp.add_argument("--from-scratch", action="store_true", help="start from an empty named set")
    sp.add_argument("--out", "-o")
    with_pagerank(sp)
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("scenario", help="derived graph and problem export")
    with_trace(sp)
    sp.add_argument("--mode", choices=("cheating", "almost-honest", "fully-honest"), required=True)
    sp.add_argument("--named", required=True, help="original theorems")
    sp.add_argument("--selected", help="selected lemmas (names fragment)")
    sp.add_argument("--metric")
    sp.add_argument("--count", type=int)
    sp.add_argument("--stride", type=int, default=1)
    sp.add_argument("--out", required=True)
    with_pagerank(sp)
    sp.set_defaults(func=cmd_scenario)

    sp = sub.add_parser("advise", help="k-NN premise advice in chronological order")
    with_trace(sp, required=False)
    sp.add_argument("--statements", required=True)
    sp.add_argument("--derived", required=True)
    sp.add_argument("--names")
    sp.add_argument("--k", type=int, default=40)
    sp.add_argument("--slices", default="32,128,512")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_advise)

    sp = sub.add_parser("chains", help="chain levels from per-round solved sets")
    sp.add_argument("--rounds", required=True, help="comma-separated solved-set files")
    sp.add_argument("--problems", help="comma-separated per-round problem directories")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_chains)
    return p


def _set_threads(requested: int | None) -> None:
    if requested is None:
        env = os.environ.get("LEMMAFORGE_THREADS")
        requested = int(env) if env else None
    if requested is None:
        return
    if requested < 1:
        raise ValueError("--threads must be >= 1")
    import numba

    numba.set_num_threads(min(requested, numba.config.NUMBA_NUM_THREADS))


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(name)s: %(levelname)s: %(message)s",
        )
        _set_threads(args.threads)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except AssertionError as exc:
        print(f"lemmaforge: internal error: {exc}", file=sys.stderr)
        return 2
    except INPUT_ERRORS as exc:
        print(f"lemmaforge: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
