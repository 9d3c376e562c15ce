"""Greedy best-lemma selection: score, name the argmax, repeat."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import NamedSet, ProofGraph
from .metrics import Metric, metric_scores, parse_metric
from .quality import ranking


@dataclass
class SelectionRun:
    metric: Metric
    named0: NamedSet
    M: int
    chosen: list[tuple[int, float]] = field(default_factory=list)
    truncated: bool = False

    @property
    def serials(self) -> list[int]:
        return [s for s, _ in self.chosen]

    def named(self) -> NamedSet:
        return self.named0.union(self.serials)

    def names_fragment(self) -> str:
        return "".join(f"{s} NEWDEP{s}\n" for s in self.serials)


def select_best(graph: ProofGraph, metric: Metric | str, named0: NamedSet | None = None, M: int = 0) -> SelectionRun:
    if isinstance(metric, str):
        metric = parse_metric(metric)
    if M < 0:
        raise ValueError("M must be non-negative")
    named0 = named0 if named0 is not None else NamedSet()
    run = SelectionRun(metric, named0, M)
    named = named0.mask(graph.n)
    eligible = int(np.count_nonzero(~(named | graph.axiom_mask)))
    if M > eligible:
        run.truncated = True
    want = min(M, eligible)
    if want == 0:
        return run

    if metric.one_shot:
        scores = metric_scores(graph, metric, named)
        order = ranking(scores)[:want]
        run.chosen = [(int(i) + 1, float(scores[i])) for i in order]
        return run

    for _ in range(want):
        scores = metric_scores(graph, metric, named)
        j = int(np.argmax(scores))  # first maximum = smallest serial
        run.chosen.append((j + 1, float(scores[j])))
        named[j] = True
    return run
