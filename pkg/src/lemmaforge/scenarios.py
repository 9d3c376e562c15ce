"""Derived dependency graphs, the ATP evaluation scenarios, and problem files.

The cheating scenario is ``derive`` followed by ``export_problems``.  The
almost-honest scenario additionally swaps directly preceding new lemmas for
their closest original ancestors.  The fully-honest scenario reruns the
selection on the trace prefix before each evaluated theorem.  Prover runs
happen elsewhere; this module only writes problems and reads solved sets.
"""

from __future__ import annotations

import math
import os
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .cut import FrontierTable
from .graph import NamedSet, ProofGraph, segment_ids
from .metrics import Metric
from .selection import SelectionRun, select_best
from .trace_io import atomic_write


class HonestyError(ValueError):
    """A premise list references the conjecture itself or a later serial."""


@dataclass
class DerivedGraph:
    vertices: list[int]  # named serials plus axioms, ascending
    theorems: list[int]  # named serials, ascending
    edges: set[tuple[int, int]]

    def parents(self, t: int) -> list[int]:
        return sorted(p for s, p in self.edges if s == t)

    def parent_map(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {t: [] for t in self.theorems}
        for t, p in self.edges:
            out.setdefault(t, []).append(p)
        return {t: sorted(ps) for t, ps in out.items()}

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def to_text(self) -> str:
        pm = self.parent_map()
        return "".join(" ".join(map(str, [t, *pm[t]])) + "\n" for t in sorted(pm))

    @classmethod
    def from_text(cls, text: str) -> "DerivedGraph":
        edges, theorems = set(), []
        for line in text.splitlines():
            parts = line.split()
            if not parts:
                continue
            t, *ps = map(int, parts)
            theorems.append(t)
            edges.update((t, p) for p in ps)
        theorems.sort()
        verts = sorted(set(theorems) | {p for _, p in edges})
        return cls(verts, theorems, edges)


def derive(graph: ProofGraph, named: NamedSet) -> DerivedGraph:
    table = FrontierTable(graph, named)
    theorems = named.serials.tolist()
    edges = {(t, p) for t in theorems for p in table.deps_of(t)}
    axioms = (np.flatnonzero(graph.axiom_mask) + 1).tolist()
    return DerivedGraph(sorted(set(theorems) | set(axioms)), theorems, edges)


def almost_honest(
    graph: ProofGraph,
    orig_named: NamedSet,
    new_named: NamedSet,
    segments: np.ndarray | None = None,
) -> DerivedGraph:
    """Derived graph over ``new_named`` without directly preceding new lemmas.

    ``segments`` gives the 0-based segment id of every node (as produced by
    ``graph.segment_ids(orig_named, n)``); it is computed when omitted.
    """
    missing = set(orig_named.serials.tolist()) - set(new_named.serials.tolist())
    if missing:
        raise ValueError(f"new_named must contain every original theorem (missing {sorted(missing)[:5]})")
    seg = segment_ids(orig_named, graph.n) if segments is None else segments
    base = derive(graph, new_named)
    orig_mask = orig_named.mask(graph.n)
    orig_table = FrontierTable(graph, orig_mask)
    edges = set()
    for t, p in base.edges:
        if not orig_mask[p - 1] and p in new_named and seg[p - 1] == seg[t - 1]:
            # frontier against orig_named holds only original theorems and axioms
            edges.update((t, q) for q in orig_table.deps_of(p) if q != t)
        else:
            edges.add((t, p))
    return DerivedGraph(base.vertices, base.theorems, edges)


# -- problem files -----------------------------------------------------------


@dataclass
class ProblemFile:
    conjecture: int
    premises: list[int]
    labels: dict[int, str] = field(default_factory=dict)

    def to_text(self) -> str:
        def line(kind, s):
            name = self.labels.get(s)
            return f"{kind} {s} {name}\n" if name else f"{kind} {s}\n"

        return line("conjecture", self.conjecture) + "".join(line("premise", p) for p in self.premises)

    @classmethod
    def from_text(cls, text: str) -> "ProblemFile":
        conj, premises, labels = None, [], {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            parts = raw.split(None, 2)
            if not parts:
                continue
            if parts[0] not in ("conjecture", "premise") or len(parts) < 2 or not parts[1].isdigit():
                raise ValueError(f"problem line {lineno}: cannot parse {raw!r}")
            s = int(parts[1])
            if len(parts) == 3:
                labels[s] = parts[2]
            if parts[0] == "conjecture":
                if conj is not None:
                    raise ValueError(f"problem line {lineno}: second conjecture")
                conj = s
            else:
                premises.append(s)
        if conj is None:
            raise ValueError("problem has no conjecture line")
        return cls(conj, premises, labels)


def _labels(names: NamedSet | None, serials: Iterable[int]) -> dict[int, str]:
    if names is None:
        return {}
    return {s: names.name(s) for s in serials if names.name(s)}


def export_problems(
    derived: DerivedGraph,
    mode: str = "parents",
    advised: Mapping[int, Sequence[int]] | None = None,
    slice_size: int | None = None,
    names: NamedSet | None = None,
) -> list[ProblemFile]:
    """One problem per derived-graph theorem.

    ``parents`` uses derived-graph parents; ``advised`` uses the supplied
    per-conjecture premise rankings truncated to ``slice_size``.
    """
    out = []
    if mode == "parents":
        pm = derived.parent_map()
        for t in derived.theorems:
            prem = pm.get(t, [])
            out.append(ProblemFile(t, prem, _labels(names, [t, *prem])))
    elif mode == "advised":
        if advised is None:
            raise ValueError("advised mode needs premise lists")
        for t in derived.theorems:
            lst = list(dict.fromkeys(advised.get(t, [])))
            bad = [p for p in lst if p >= t]
            if bad:
                raise HonestyError(f"conjecture {t}: advised premise {bad[0]} is not earlier")
            prem = lst if slice_size is None else lst[:slice_size]
            out.append(ProblemFile(t, prem, _labels(names, [t, *prem])))
    else:
        raise ValueError(f"unknown export mode {mode!r}")
    return out


def write_problems(problems: Iterable[ProblemFile], directory, suffix: str = "") -> list[Path]:
    directory = Path(directory)
    paths = []
    for pf in problems:
        path = directory / f"{pf.conjecture}{suffix}.p"
        with atomic_write(path) as fh:
            fh.write(pf.to_text())
        paths.append(path)
    return paths


def read_problems(directory) -> dict[int, ProblemFile]:
    out = {}
    for path in sorted(Path(directory).glob("*.p")):
        pf = ProblemFile.from_text(path.read_text())
        out[pf.conjecture] = pf
    return out


# -- fully honest ------------------------------------------------------------


@dataclass
class HonestEntry:
    theorem: int
    run: SelectionRun
    problem: ProblemFile


def fully_honest_schedule(
    graph: ProofGraph,
    orig_named: NamedSet,
    metric: Metric | str,
    M: int,
    stride: int = 1,
) -> dict[int, HonestEntry]:
    """For every ``stride``-th original theorem, select lemmas on the preceding trace only.

    The selection for theorem ``j`` sees serials ``< j``; its problem uses the
    frontier of ``j`` against the prefix's original theorems plus the
    selected lemmas.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    out: dict[int, HonestEntry] = {}
    theorems = orig_named.serials.tolist()
    for j in theorems[::stride]:
        prefix = graph.prefix(j - 1)
        named0 = orig_named.restrict(j)
        run = select_best(prefix, metric, named0, M)
        upto = graph.prefix(j)
        named = NamedSet({**dict(run.named().items()), j: orig_named.name(j)})
        table = FrontierTable(upto, named)
        premises = sorted(table.deps_of(j))
        out[j] = HonestEntry(j, run, ProblemFile(j, premises, _labels(named, [j, *premises])))
    return out


# -- chains ------------------------------------------------------------------

UNSOLVED = math.inf


@dataclass
class ChainTable:
    levels: dict[int, float]
    warnings: list[str] = field(default_factory=list)

    def histogram(self) -> dict:
        counts = Counter("unsolved" if math.isinf(v) else int(v) for v in self.levels.values())
        ordered = {k: counts[k] for k in sorted(k for k in counts if k != "unsolved")}
        if "unsolved" in counts:
            ordered["unsolved"] = counts["unsolved"]
        return ordered


def histogram(levels: Iterable[float]) -> dict:
    return ChainTable({i: v for i, v in enumerate(levels)}).histogram()


def chain_levels(
    problems_per_round: Sequence[Mapping[int, Sequence[int]]] | None,
    solved_sets: Sequence[set[int]],
    conjectures: Iterable[int] | None = None,
) -> ChainTable:
    """Level of each conjecture = first round whose solved set contains it.

    ``problems_per_round[k]`` maps a conjecture to its round-``k`` premises and
    is only used to flag rounds whose premises were not yet proved.
    """
    pool = set(conjectures or ())
    for rnd in problems_per_round or ():
        pool.update(rnd)
    for s in solved_sets:
        pool.update(s)
    levels: dict[int, float] = {}
    for t in sorted(pool):
        levels[t] = next((k for k, s in enumerate(solved_sets) if t in s), UNSOLVED)
    table = ChainTable(levels)
    for k, rnd in enumerate(problems_per_round or ()):
        if k == 0 or k >= len(solved_sets):
            continue
        for t, premises in rnd.items():
            if t not in solved_sets[k]:
                continue
            late = [p for p in premises if p in levels and p != t and levels[p] >= k]
            if late:
                msg = f"round {k}: {t} solved using premises not proved before round {k}: {late[:5]}"
                table.warnings.append(msg)
                warnings.warn(msg, stacklevel=2)
    return table


def read_solved(path) -> set[int]:
    out = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            tok = line.split("#", 1)[0].strip()
            if not tok:
                continue
            if not tok.isdigit():
                raise ValueError(f"{os.fspath(path)}:{lineno}: expected a serial, got {tok!r}")
            out.add(int(tok))
    return out
