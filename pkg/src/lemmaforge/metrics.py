"""Metric designators (``q1``, ``qr:0.5``, ``pr3``, ``mc1`` ...) and a common scoring entry point."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cut import mc_scores
from .graph import ProofGraph
from .pagerank import PageRankConfig, pr_scores
from .quality import MetricConfig, candidate_mask, score


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class Metric:
    """A parsed designator. Exactly one of ``direct``, ``pr_variant``, ``mc_normalized`` applies."""

    name: str
    direct: MetricConfig | None = None
    pr_variant: int | None = None
    mc_normalized: bool | None = None
    pagerank: PageRankConfig = PageRankConfig()

    @property
    def kind(self) -> str:
        if self.direct is not None:
            return "direct"
        if self.pr_variant is not None:
            return "pagerank"
        return "cut"

    @property
    def one_shot(self) -> bool:
        """PageRank ignores the named set, so a single ranking serves all picks."""
        return self.kind == "pagerank"


def _float_arg(name: str, arg: str | None, default: float | None = None) -> float:
    if arg is None:
        if default is None:
            raise MetricError(f"metric {name} needs a parameter, e.g. {name}:1.5")
        return default
    try:
        return float(arg)
    except ValueError:
        raise MetricError(f"bad parameter {arg!r} for metric {name}") from None


def parse_metric(text: str, pagerank: PageRankConfig | None = None) -> Metric:
    pr_cfg = pagerank or PageRankConfig()
    head, _, arg = text.strip().lower().partition(":")
    arg = arg or None
    if head == "q1" and arg is None:
        return Metric(text, direct=MetricConfig.q1())
    if head == "q2" and arg is None:
        return Metric(text, direct=MetricConfig.q2())
    if head == "q3":
        base = _float_arg(head, arg, 1.1)
        if base <= 1:
            raise MetricError("q3 base must be > 1")
        return Metric(text, direct=MetricConfig.q3(base))
    if head == "qr":
        return Metric(text, direct=MetricConfig.qr(_float_arg(head, arg)))
    if head == "eq1" and arg is None:
        return Metric(text, direct=MetricConfig.eq1())
    if head == "eq2" and arg is None:
        return Metric(text, direct=MetricConfig.eq2())
    if head.startswith("pr") and head[2:] in {"1", "2", "3", "4", "5", "6"} and arg is None:
        return Metric(text, pr_variant=int(head[2:]), pagerank=pr_cfg)
    if head in ("mc1", "mc2") and arg is None:
        return Metric(text, mc_normalized=head == "mc2")
    raise MetricError(f"unknown metric {text!r}")


def metric_scores(graph: ProofGraph, metric: Metric, named=None) -> np.ndarray:
    """Per-node scores with named and axiom nodes forced to -inf."""
    if metric.kind == "direct":
        return score(graph, named, metric.direct).score
    if metric.kind == "cut":
        return mc_scores(graph, named, metric.mc_normalized)
    out = pr_scores(graph, metric.pr_variant, metric.pagerank)
    out[~candidate_mask(graph, named)] = -np.inf
    return out
