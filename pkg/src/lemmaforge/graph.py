"""Append-only inference DAG stored as flat CSR arrays.

Serials are 1-based at every public boundary.  Internally node ``i`` lives at
array index ``i - 1`` and the dependency arena holds 0-based indices, which is
what the numba kernels consume.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

DEFAULT_AXIOM_RULES = frozenset("F")

_INT32_LIMIT = 2**31 - 1


class GraphError(ValueError):
    """Raised for structurally invalid graphs (forward references, bad sizes)."""


def index_dtype(n: int) -> np.dtype:
    return np.dtype(np.int32) if n < _INT32_LIMIT else np.dtype(np.int64)


@dataclass(frozen=True)
class InferenceNode:
    serial: int
    rule: str
    size: int
    deps: tuple[int, ...]


@dataclass(frozen=True)
class Stats:
    nodes: int
    edges: int
    roots: int
    named_count: int = 0


@dataclass(frozen=True)
class Adjacency:
    """Plain directed CSR: out-links of node ``i`` are ``indices[indptr[i]:indptr[i+1]]``.

    Unlike ProofGraph it carries no chronology requirement, so it can hold the
    transpose of a proof graph.
    """

    indptr: np.ndarray
    indices: np.ndarray

    @property
    def n(self) -> int:
        return self.indptr.size - 1

    def out_degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def transpose(self) -> "Adjacency":
        return Adjacency(*_transpose_csr(self.indptr, self.indices, self.n))


def _transpose_csr(indptr: np.ndarray, indices: np.ndarray, n: int):
    # stable sort keeps sources ascending within each target row
    owner = np.repeat(np.arange(n, dtype=indices.dtype), np.diff(indptr))
    order = np.argsort(indices, kind="stable")
    t_indices = owner[order]
    counts = np.bincount(indices, minlength=n) if indices.size else np.zeros(n, np.int64)
    t_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=t_indptr[1:])
    return t_indptr, t_indices


class ProofGraph:
    """Immutable chronological DAG of inference nodes.

    ``rules`` holds ASCII rule codes, ``sizes`` the symbol weights, and
    ``dep_ptr``/``dep_idx`` the dependency lists (0-based, duplicates kept).
    """

    def __init__(
        self,
        rules: np.ndarray,
        sizes: np.ndarray,
        dep_ptr: np.ndarray,
        dep_idx: np.ndarray,
        axiom_rules: Iterable[str] = DEFAULT_AXIOM_RULES,
        validate: bool = True,
    ):
        self.rules = np.ascontiguousarray(rules, dtype=np.uint8)
        self.sizes = np.ascontiguousarray(sizes, dtype=np.int64)
        self.dep_ptr = np.ascontiguousarray(dep_ptr, dtype=np.int64)
        self.dep_idx = np.ascontiguousarray(dep_idx, dtype=index_dtype(self.rules.size))
        self.axiom_rules = frozenset(axiom_rules)
        for arr in (self.rules, self.sizes, self.dep_ptr, self.dep_idx):
            arr.setflags(write=False)
        if validate:
            self._validate()

    def _validate(self) -> None:
        n = self.rules.size
        if self.sizes.size != n or self.dep_ptr.size != n + 1:
            raise GraphError("array lengths disagree")
        if n and self.dep_ptr[0] != 0 or self.dep_ptr[-1] != self.dep_idx.size:
            raise GraphError("dependency offsets do not cover the arena")
        if np.any(np.diff(self.dep_ptr) < 0):
            raise GraphError("dependency offsets are not monotone")
        if n and self.sizes.min() < 1:
            bad = int(np.argmax(self.sizes < 1)) + 1
            raise GraphError(f"node {bad}: size must be >= 1")
        if self.dep_idx.size:
            owner = np.repeat(np.arange(n), np.diff(self.dep_ptr))
            fwd = (self.dep_idx >= owner) | (self.dep_idx < 0)
            if fwd.any():
                k = int(np.argmax(fwd))
                raise GraphError(
                    f"node {owner[k] + 1}: forward reference to {int(self.dep_idx[k]) + 1}"
                )

    @classmethod
    def from_nodes(
        cls,
        nodes: Sequence[tuple[str, int, Sequence[int]]],
        axiom_rules: Iterable[str] = DEFAULT_AXIOM_RULES,
    ) -> "ProofGraph":
        """Build from ``(rule, size, dep_serials)`` triples in serial order."""
        n = len(nodes)
        rules = np.fromiter((ord(r) for r, _, _ in nodes), dtype=np.uint8, count=n)
        sizes = np.fromiter((s for _, s, _ in nodes), dtype=np.int64, count=n)
        lens = np.fromiter((len(d) for _, _, d in nodes), dtype=np.int64, count=n)
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(lens, out=ptr[1:])
        idx = np.fromiter(
            (d - 1 for _, _, deps in nodes for d in deps), dtype=np.int64, count=int(ptr[-1])
        )
        return cls(rules, sizes, ptr, idx, axiom_rules)

    @classmethod
    def empty(cls) -> "ProofGraph":
        return cls.from_nodes([])

    # -- basic queries -------------------------------------------------

    def __len__(self) -> int:
        return self.rules.size

    @property
    def n(self) -> int:
        return self.rules.size

    @property
    def edge_count(self) -> int:
        return int(self.dep_idx.size)

    def _check(self, serial: int) -> int:
        if not 1 <= serial <= self.n:
            raise IndexError(f"serial {serial} out of range 1..{self.n}")
        return serial - 1

    def deps(self, serial: int) -> list[int]:
        i = self._check(serial)
        return (self.dep_idx[self.dep_ptr[i] : self.dep_ptr[i + 1]] + 1).tolist()

    def node(self, serial: int) -> InferenceNode:
        i = self._check(serial)
        return InferenceNode(serial, chr(self.rules[i]), int(self.sizes[i]), tuple(self.deps(serial)))

    def nodes(self) -> Iterable[InferenceNode]:
        for s in range(1, self.n + 1):
            yield self.node(s)

    def out_degree(self) -> np.ndarray:
        return np.diff(self.dep_ptr)

    @cached_property
    def axiom_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        for r in self.axiom_rules:
            mask |= self.rules == ord(r)
        mask.setflags(write=False)
        return mask

    def dependency_adjacency(self) -> Adjacency:
        return Adjacency(self.dep_ptr, self.dep_idx)

    @cached_property
    def _uses(self) -> Adjacency:
        return self.dependency_adjacency().transpose()

    def use_adjacency(self) -> Adjacency:
        """Reverse adjacency u(j), multiplicity preserved, users ascending."""
        return self._uses

    def direct_uses(self, serial: int) -> list[int]:
        i = self._check(serial)
        u = self._uses
        return (np.unique(u.indices[u.indptr[i] : u.indptr[i + 1]]) + 1).tolist()

    def prefix(self, count: int) -> "ProofGraph":
        """Subgraph of the first ``count`` serials (always a valid trace)."""
        count = max(0, min(count, self.n))
        ptr = self.dep_ptr[: count + 1]
        return ProofGraph(
            self.rules[:count], self.sizes[:count], ptr, self.dep_idx[: ptr[-1]],
            self.axiom_rules, validate=False,
        )

    def with_axiom_rules(self, axiom_rules: Iterable[str]) -> "ProofGraph":
        return ProofGraph(
            self.rules, self.sizes, self.dep_ptr, self.dep_idx, axiom_rules, validate=False
        )

    def same_nodes(self, other: "ProofGraph") -> bool:
        return (
            np.array_equal(self.rules, other.rules)
            and np.array_equal(self.sizes, other.sizes)
            and np.array_equal(self.dep_ptr, other.dep_ptr)
            and np.array_equal(self.dep_idx.astype(np.int64), other.dep_idx.astype(np.int64))
        )

    def __repr__(self) -> str:
        return f"ProofGraph(nodes={self.n}, edges={self.edge_count})"


def graph_stats(graph: ProofGraph, named=None) -> Stats:
    roots = int(np.count_nonzero(graph.out_degree() == 0))
    return Stats(graph.n, graph.edge_count, roots, 0 if named is None else len(named))


def direct_uses(graph: ProofGraph, serial: int) -> list[int]:
    return graph.direct_uses(serial)


class NamedSet:
    """Serial -> name map of top-level (named) lemmas."""

    def __init__(self, names: dict[int, str] | None = None):
        self._names: dict[int, str] = dict(sorted((names or {}).items()))
        if len(set(self._names.values())) != len(self._names):
            raise ValueError("names must be unique")

    @classmethod
    def of(cls, serials: Iterable[int], prefix: str = "N") -> "NamedSet":
        return cls({int(s): f"{prefix}{int(s)}" for s in serials})

    def __contains__(self, serial: int) -> bool:
        return serial in self._names

    def __len__(self) -> int:
        return len(self._names)

    def __iter__(self):
        return iter(self._names)

    def __eq__(self, other) -> bool:
        return isinstance(other, NamedSet) and self._names == other._names

    def __repr__(self) -> str:
        return f"NamedSet({self._names!r})"

    def name(self, serial: int) -> str | None:
        return self._names.get(serial)

    def items(self):
        return self._names.items()

    @property
    def serials(self) -> np.ndarray:
        return np.fromiter(self._names, dtype=np.int64, count=len(self._names))

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        s = self.serials
        if s.size and s[-1] > n:
            raise IndexError(f"named serial {int(s[-1])} out of range 1..{n}")
        m[s - 1] = True
        return m

    def union(self, serials: Iterable[int], prefix: str = "NEWDEP") -> "NamedSet":
        names = dict(self._names)
        taken = set(names.values())
        for s in serials:
            s = int(s)
            if s not in names:
                name = f"{prefix}{s}"
                while name in taken:
                    name += "'"
                names[s] = name
                taken.add(name)
        return NamedSet(names)

    def restrict(self, below: int) -> "NamedSet":
        """Named serials strictly below ``below``."""
        return NamedSet({s: v for s, v in self._names.items() if s < below})


@dataclass(frozen=True)
class Segment:
    theorem: int
    start: int  # exclusive lower bound (previous named serial, or 0)

    def __contains__(self, serial: int) -> bool:
        return self.start < serial <= self.theorem


def segments(named: NamedSet) -> list[Segment]:
    out, prev = [], 0
    for s in named.serials.tolist():
        out.append(Segment(s, prev))
        prev = s
    return out


def segment_ids(named: NamedSet, n: int) -> np.ndarray:
    """Per-node segment number; nodes after the last named serial share one trailing id."""
    serials = named.serials
    return np.searchsorted(serials, np.arange(1, n + 1), side="left").astype(np.int64)
