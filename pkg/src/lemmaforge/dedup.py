"""Content-key de-duplication of traces (TRACE0 / TRACE1 / TRACE2).

Every reference to a lemma is redirected to the earliest lemma in the same
scope carrying the same key.  Unnamed duplicates are dropped together with
the proof nodes that only they used; named duplicates keep their proofs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .graph import NamedSet, ProofGraph, segment_ids
from .trace_io import SidecarError, SidecarMaps


@dataclass(frozen=True)
class DedupSpec:
    scope: str = "global"  # "segment" | "global"
    key_kind: str = "raw"  # "raw" | "alpha"
    keep_named_duplicates: bool = True

    def __post_init__(self):
        if self.scope not in ("segment", "global"):
            raise ValueError(f"unknown scope {self.scope!r}")
        if self.key_kind not in ("raw", "alpha"):
            raise ValueError(f"unknown key kind {self.key_kind!r}")


@dataclass
class DedupResult:
    graph: ProofGraph
    canonical: np.ndarray  # old serial -> canonical old serial (index serial-1)
    mapping: np.ndarray  # old serial -> new serial (own if kept, else canonical's), 0 if gone
    removed_count: int
    sidecars: SidecarMaps

    def mapping_lines(self) -> str:
        return "".join(f"{i} {m}\n" for i, m in enumerate(self.mapping.tolist(), 1))


def canonical_serials(keys: np.ndarray, scope_ids: np.ndarray | None = None) -> np.ndarray:
    """Earliest 0-based index sharing (scope, key) with each node; keyless nodes map to themselves."""
    n = keys.size
    canon = np.arange(n, dtype=np.int64)
    has = np.flatnonzero(keys >= 0)
    if has.size == 0:
        return canon
    if scope_ids is None:
        group = keys[has]
    else:
        # pair (scope, key) -> single id
        _, group = np.unique(np.stack([scope_ids[has], keys[has]], axis=1), axis=0, return_inverse=True)
        group = group.ravel()
    _, first, inverse = np.unique(group, return_index=True, return_inverse=True)
    canon[has] = has[first[inverse.ravel()]]
    return canon


def dedup(graph: ProofGraph, sidecars: SidecarMaps, spec: DedupSpec = DedupSpec()) -> DedupResult:
    keys = sidecars.keys(spec.key_kind)
    if keys.size != graph.n:
        raise SidecarError("key sidecar does not match the trace length")
    named = sidecars.names
    scope = None
    if spec.scope == "segment":
        scope = segment_ids(named, graph.n)
    canon = canonical_serials(keys, scope)
    duplicate = canon != np.arange(graph.n)
    named_mask = named.mask(graph.n)
    keep = named_mask if spec.keep_named_duplicates else named_mask & ~duplicate
    had_users = np.bincount(graph.dep_idx, minlength=graph.n) > 0 if graph.n else np.zeros(0, bool)
    alive = _kernels.dedup_alive(graph.dep_ptr, graph.dep_idx, canon, duplicate, keep, had_users)

    new_serial = np.cumsum(alive)  # 1-based new serial for alive nodes
    new_serial[~alive] = 0
    # survivors keep their own slot; dropped duplicates follow their canonical node
    mapping = np.where(alive, new_serial, new_serial[canon])

    new_graph = _rewrite(graph, alive, canon, new_serial)
    new_names = NamedSet({int(new_serial[s - 1]): nm for s, nm in named.items() if alive[s - 1]})
    if len(new_names) != len(named) and spec.keep_named_duplicates:
        raise AssertionError("a named node was dropped during dedup")

    def carry(arr):
        return None if arr is None else arr[alive].copy()

    stmts = None
    if sidecars.statements is not None:
        stmts = {int(new_serial[s - 1]): t for s, t in sidecars.statements.items() if alive[s - 1]}
    new_side = SidecarMaps(
        new_graph.n,
        names=new_names,
        raw_keys=carry(sidecars.raw_keys),
        alpha_keys=carry(sidecars.alpha_keys),
        statements=stmts,
    )
    return DedupResult(new_graph, canon + 1, mapping, int(graph.n - new_graph.n), new_side)


def _rewrite(graph: ProofGraph, alive, canon, new_serial) -> ProofGraph:
    ptr, idx = graph.dep_ptr, graph.dep_idx
    deg = np.diff(ptr)
    keep_edge = np.repeat(alive, deg)
    new_idx = new_serial[canon[idx[keep_edge]]] - 1
    new_deg = deg[alive]
    new_ptr = np.zeros(new_deg.size + 1, dtype=np.int64)
    np.cumsum(new_deg, out=new_ptr[1:])
    return ProofGraph(graph.rules[alive], graph.sizes[alive], new_ptr, new_idx, graph.axiom_rules)


@dataclass
class DedupPipeline:
    trace0: DedupResult
    trace1: DedupResult
    trace2: DedupResult | None


def dedup_pipeline(graph: ProofGraph, sidecars: SidecarMaps) -> DedupPipeline:
    """TRACE0 (segment, raw), then TRACE1 (global, raw), then TRACE2 (global, alpha).

    Each stage runs on the output of the previous one.  TRACE2 is skipped
    (``None``) when no alpha keys are supplied.
    """
    t0 = dedup(graph, sidecars, DedupSpec("segment", "raw"))
    t1 = dedup(t0.graph, t0.sidecars, DedupSpec("global", "raw"))
    t2 = None
    if sidecars.alpha_keys is not None:
        t2 = dedup(t1.graph, t1.sidecars, DedupSpec("global", "alpha"))
    return DedupPipeline(t0, t1, t2)


def compose(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Compose two old->new serial maps (0 = dropped)."""
    out = np.zeros_like(first)
    ok = first > 0
    out[ok] = second[first[ok] - 1]
    return out
