"""Named-frontier sets and the graph-cut lemma scores MC1 / MC2.

The frontier of ``n`` collects, on every dependency path leaving ``n``, the
first node that is named or an axiom (``frontier_deps``) and, on every reverse
path, the first named node (``frontier_uses``).  Adding ``n`` to the named set
replaces the |D|*|U| derived edges running through it by |D| + |U| edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import NamedSet, ProofGraph
from .quality import _named_mask

_EMPTY: frozenset[int] = frozenset()


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class FrontierSets:
    frontier_deps: frozenset[int]
    frontier_uses: frozenset[int]


class FrontierTable:
    """Memoized frontier sets for one (graph, named) pair, built lazily.

    Serials are 1-based throughout.  ``stop`` nodes (named or axiom) end
    dependency paths; in the use direction named nodes end a path and
    unnamed axioms are dead ends, mirroring how derived-graph edges are cut.
    """

    def __init__(self, graph: ProofGraph, named):
        self.graph = graph
        self.named = _named_mask(graph, named)
        self.stop = self.named | graph.axiom_mask
        self._down: list[frozenset[int] | None] | None = None
        self._up: list[frozenset[int] | None] | None = None

    def _build_down(self) -> list[frozenset[int]]:
        g = self.graph
        ptr, idx = g.dep_ptr.tolist(), g.dep_idx.tolist()
        stop = self.stop.tolist()
        # reach[i]: frontier seen when a path *arrives* at i
        reach: list[frozenset[int]] = [_EMPTY] * g.n
        inner: list[frozenset[int]] = [_EMPTY] * g.n
        for i in range(g.n):
            acc = _union(reach[d] for d in idx[ptr[i] : ptr[i + 1]])
            inner[i] = acc
            reach[i] = frozenset((i + 1,)) if stop[i] else acc
        return inner

    def _build_up(self) -> list[frozenset[int]]:
        g = self.graph
        uses = g.use_adjacency()
        ptr, idx = uses.indptr.tolist(), uses.indices.tolist()
        named = self.named.tolist()
        axiom = g.axiom_mask.tolist()
        reach: list[frozenset[int]] = [_EMPTY] * g.n
        inner: list[frozenset[int]] = [_EMPTY] * g.n
        for i in range(g.n - 1, -1, -1):
            acc = _union(reach[u] for u in idx[ptr[i] : ptr[i + 1]])
            inner[i] = acc
            if named[i]:
                reach[i] = frozenset((i + 1,))
            elif axiom[i]:
                reach[i] = _EMPTY
            else:
                reach[i] = acc
        return inner

    def deps_of(self, serial: int) -> frozenset[int]:
        """Frontier below ``serial`` (union over its direct dependencies)."""
        if self._down is None:
            self._down = self._build_down()
        return self._down[serial - 1]

    def uses_of(self, serial: int) -> frozenset[int]:
        if self._up is None:
            self._up = self._build_up()
        return self._up[serial - 1]

    def frontiers(self, serial: int) -> FrontierSets:
        if not 1 <= serial <= self.graph.n:
            raise IndexError(f"serial {serial} out of range")
        if self.named[serial - 1]:
            raise PreconditionError(f"node {serial} is already named")
        return FrontierSets(self.deps_of(serial), self.uses_of(serial))


def _union(sets) -> frozenset[int]:
    out: frozenset[int] | set[int] = _EMPTY
    first = True
    for s in sets:
        if not s:
            continue
        if first:
            out, first = s, False
        elif not s <= out:
            if isinstance(out, frozenset):
                out = set(out)
            out |= s
    return frozenset(out) if isinstance(out, set) else out


def frontiers(graph: ProofGraph, named, n: int) -> FrontierSets:
    return FrontierTable(graph, named).frontiers(n)


def mc_from_frontiers(fs: FrontierSets, size: int | None = None) -> float:
    d, u = len(fs.frontier_deps), len(fs.frontier_uses)
    mc1 = d * u - d - u
    return float(mc1) if size is None else mc1 / size


def mc_score(graph: ProofGraph, named, n: int, normalized: bool = False) -> float:
    fs = frontiers(graph, named, n)
    size = int(graph.sizes[n - 1]) if normalized else None
    return mc_from_frontiers(fs, size)


def mc_scores(graph: ProofGraph, named, normalized: bool = False) -> np.ndarray:
    """MC1 (or MC2) for every candidate; named and axiom nodes get -inf."""
    table = FrontierTable(graph, named)
    out = np.full(graph.n, -np.inf)
    cand = np.flatnonzero(~table.stop)
    sizes = graph.sizes
    for i in cand.tolist():
        fs = FrontierSets(table.deps_of(i + 1), table.uses_of(i + 1))
        out[i] = mc_from_frontiers(fs, int(sizes[i]) if normalized else None)
    return out


def edge_decrease(graph: ProofGraph, named, n: int) -> int:
    """Exact drop in derived-graph edges when ``n`` joins the named set.

    MC1 assumes every (use, dep) pair routed through ``n`` disappears.  A
    pair survives when the use still reaches the dep by a path avoiding
    ``n``, so the true drop can fall short of MC1 but never exceed it.
    """
    before = FrontierTable(graph, named)
    fs = before.frontiers(n)
    mask = before.named.copy()
    mask[n - 1] = True
    after = FrontierTable(graph, mask)
    # named nodes outside frontier_uses(n) keep their parents unchanged
    lost = sum(len(before.deps_of(u)) - len(after.deps_of(u)) for u in fs.frontier_uses)
    return lost - len(fs.frontier_deps)
