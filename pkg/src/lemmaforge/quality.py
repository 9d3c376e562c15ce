"""Recursive dependency/use counts and the Q / EQ lemma-quality families."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .graph import NamedSet, ProofGraph

FAMILIES = ("Q_poly", "Q_exp", "EQ_D", "EQ_L")


@dataclass(frozen=True)
class MetricConfig:
    """Parameters of one direct quality metric.

    ``Q_poly``: U^r * D^(2-r) / S^p.  ``Q_exp``: U * D / b^S.
    ``EQ_D``: D / S.  ``EQ_L``: L / S.
    """

    family: str = "Q_poly"
    u_exponent: float = 1.0
    size_exponent: float = 1.0
    exp_base: float = 1.1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown metric family {self.family!r}")
        if self.family == "Q_exp" and not self.exp_base > 1:
            raise ValueError("exp_base must be > 1")

    @classmethod
    def q1(cls):
        return cls("Q_poly", 1.0, 1.0)

    @classmethod
    def q2(cls):
        return cls("Q_poly", 1.0, 2.0)

    @classmethod
    def qr(cls, r: float):
        return cls("Q_poly", float(r), 1.0)

    @classmethod
    def q3(cls, base: float = 1.1):
        return cls("Q_exp", exp_base=float(base))

    @classmethod
    def eq1(cls):
        return cls("EQ_D")

    @classmethod
    def eq2(cls):
        return cls("EQ_L")


@dataclass
class QualityScores:
    D: np.ndarray
    U: np.ndarray
    L: np.ndarray
    score: np.ndarray


def _named_mask(graph: ProofGraph, named) -> np.ndarray:
    if named is None:
        return np.zeros(graph.n, dtype=bool)
    if isinstance(named, np.ndarray) and named.dtype == bool:
        return named
    if not isinstance(named, NamedSet):
        named = NamedSet.of(named)
    return named.mask(graph.n)


def candidate_mask(graph: ProofGraph, named=None) -> np.ndarray:
    """Nodes eligible for selection: neither named nor axiom."""
    return ~(_named_mask(graph, named) | graph.axiom_mask)


def compute_D(graph: ProofGraph, named=None) -> np.ndarray:
    base = _named_mask(graph, named) | graph.axiom_mask
    return _kernels.dep_counts(graph.dep_ptr, graph.dep_idx, base)


def compute_U(graph: ProofGraph, named=None) -> np.ndarray:
    return _kernels.use_counts(graph.dep_ptr, graph.dep_idx, _named_mask(graph, named))


def compute_L(graph: ProofGraph, named=None) -> np.ndarray:
    base = _named_mask(graph, named) | graph.axiom_mask
    return _kernels.longest_chain(graph.dep_ptr, graph.dep_idx, base)


def _safe_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # a zero factor wins over an infinite one: 0 * inf := 0
    with np.errstate(invalid="ignore", over="ignore"):
        out = a * b
    out[(a == 0) | (b == 0)] = 0.0
    return out


def combine(cfg: MetricConfig, D, U, L, S) -> np.ndarray:
    """Raw metric values from precomputed D, U, L and sizes (no masking)."""
    S = np.asarray(S, dtype=np.float64)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if cfg.family == "Q_poly":
            r = cfg.u_exponent
            num = _safe_mul(np.power(U, r), np.power(D, 2.0 - r))
            return num / np.power(S, cfg.size_exponent)
        if cfg.family == "Q_exp":
            decay = np.power(cfg.exp_base, -S)
            return _safe_mul(_safe_mul(U, D), decay)
        if cfg.family == "EQ_D":
            return D / S
        return np.asarray(L, dtype=np.float64) / S


def score(graph: ProofGraph, named=None, cfg: MetricConfig | None = None) -> QualityScores:
    cfg = cfg or MetricConfig.q1()
    mask = _named_mask(graph, named)
    D = compute_D(graph, mask)
    U = compute_U(graph, mask)
    L = compute_L(graph, mask)
    s = combine(cfg, D, U, L, graph.sizes)
    s[~candidate_mask(graph, mask)] = -np.inf
    return QualityScores(D, U, L, s)


def ranking(scores: np.ndarray) -> np.ndarray:
    """0-based node order by descending score, ties by ascending serial."""
    return np.lexsort((np.arange(scores.size), -scores))
