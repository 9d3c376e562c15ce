"""Eigenvector centrality over the proof DAG (forward and reverse PageRank)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Adjacency, ProofGraph


@dataclass(frozen=True)
class PageRankConfig:
    damping: float = 0.85
    tolerance: float = 1e-9
    max_iterations: int = 200
    direction: str = "forward"

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must lie strictly inside (0, 1)")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.direction not in ("forward", "reverse"):
            raise ValueError(f"unknown direction {self.direction!r}")


@dataclass
class PageRankResult:
    values: np.ndarray
    iterations: int
    converged: bool
    deltas: list[float] = field(default_factory=list)

    def __len__(self):
        return self.values.size


def _links(graph, direction: str) -> Adjacency:
    if isinstance(graph, Adjacency):
        return graph if direction == "forward" else graph.transpose()
    if direction == "forward":
        return graph.dependency_adjacency()
    return graph.use_adjacency()


def pagerank(graph: ProofGraph | Adjacency, cfg: PageRankConfig | None = None) -> PageRankResult:
    """Power iteration from the uniform vector.

    In the forward direction node ``j`` passes its mass to its dependencies
    d(j); in reverse to its uses u(j).  Mass of nodes without out-links is
    spread uniformly, so the result always sums to one.
    """
    cfg = cfg or PageRankConfig()
    adj = _links(graph, cfg.direction)
    n = adj.n
    if n == 0:
        return PageRankResult(np.zeros(0), 0, True)

    deg = adj.out_degree()
    src = np.repeat(np.arange(n, dtype=adj.indices.dtype), deg)
    dst = adj.indices
    inv_deg = np.zeros(n)
    np.divide(1.0, deg, out=inv_deg, where=deg > 0)
    f = cfg.damping

    x = np.full(n, 1.0 / n)
    deltas: list[float] = []
    converged = False
    it = 0
    while it < cfg.max_iterations:
        it += 1
        # edgeless graphs make bincount return int64
        y = np.bincount(dst, weights=(x * inv_deg)[src], minlength=n).astype(np.float64, copy=False)
        y *= f
        # teleport plus dangling mass, spread uniformly
        y += (1.0 - y.sum()) / n
        delta = float(np.abs(y - x).sum())
        deltas.append(delta)
        x = y
        if delta < cfg.tolerance:
            converged = True
            break
    return PageRankResult(x, it, converged, deltas)


def pr_variant(forward: np.ndarray, reverse: np.ndarray, sizes: np.ndarray, variant: int) -> np.ndarray:
    sizes = np.asarray(sizes, dtype=np.float64)
    if variant == 1:
        return forward.copy()
    if variant == 2:
        return forward / sizes
    if variant == 3:
        return reverse.copy()
    if variant == 4:
        return reverse / sizes
    if variant == 5:
        return forward + reverse
    if variant == 6:
        return (forward + reverse) / sizes
    raise ValueError(f"PageRank variant must be 1..6, got {variant}")


def pr_scores(graph: ProofGraph, variant: int, cfg: PageRankConfig | None = None) -> np.ndarray:
    cfg = cfg or PageRankConfig()
    fwd = rev = None
    if variant in (1, 2, 5, 6):
        fwd = pagerank(graph, PageRankConfig(cfg.damping, cfg.tolerance, cfg.max_iterations, "forward")).values
    if variant in (3, 4, 5, 6):
        rev = pagerank(graph, PageRankConfig(cfg.damping, cfg.tolerance, cfg.max_iterations, "reverse")).values
    return pr_variant(fwd, rev, graph.sizes, variant)
