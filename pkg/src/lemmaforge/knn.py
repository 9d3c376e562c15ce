"""Statement features and a chronological k-nearest-neighbour premise advisor."""

from __future__ import annotations

import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .scenarios import DerivedGraph, ProblemFile

_TOKEN = re.compile(r"[()]|[^\s()]+")


def featurize(statement: str) -> Counter:
    """Token multiset; parentheses are tokens of their own."""
    return Counter(_TOKEN.findall(statement))


@dataclass
class AdvisorState:
    features: dict[int, Counter] = field(default_factory=dict)
    labels: dict[int, list[int]] = field(default_factory=dict)
    doc_freq: Counter = field(default_factory=Counter)

    def add(self, serial: int, features: Mapping[str, int], deps: Sequence[int]) -> None:
        if serial in self.features:
            raise ValueError(f"theorem {serial} already trained")
        self.features[serial] = Counter(features)
        self.labels[serial] = list(deps)
        self.doc_freq.update(set(features))

    def __len__(self) -> int:
        return len(self.features)

    def idf(self, feature: str) -> float:
        df = self.doc_freq.get(feature, 0)
        return math.log1p(len(self.features) / df) if df else 0.0

    def weigh(self, features: Mapping[str, int]) -> dict[str, float]:
        out = {}
        for f, c in features.items():
            w = self.idf(f)
            if w:
                out[f] = c * w
        return out


def _cosine(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    if len(a) > len(b):
        a, b = b, a
    dot = sum(v * b[f] for f, v in a.items() if f in b)
    if dot == 0.0:
        return 0.0
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    return dot / (na * nb)


def neighbors(state: AdvisorState, query: Mapping[str, int], query_serial: int, k: int) -> list[tuple[int, float]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    q = state.weigh(query)
    sims = [
        (s, _cosine(q, state.weigh(f)))
        for s, f in state.features.items()
        if s < query_serial
    ]
    sims.sort(key=lambda p: (-p[1], p[0]))
    return sims[:k]


def advise(
    state: AdvisorState,
    query: Mapping[str, int],
    query_serial: int,
    k: int,
    n_premises: int,
) -> list[int]:
    """Rank premises by summed similarity of the neighbours that used them."""
    scores: dict[int, float] = defaultdict(float)
    for s, sim in neighbors(state, query, query_serial, k):
        for p in dict.fromkeys(state.labels[s]):
            if p < query_serial:
                scores[p] += sim
    ranked = sorted(scores.items(), key=lambda p: (-p[1], p[0]))
    return [p for p, _ in ranked[:n_premises]]


@dataclass
class ChronoResult:
    problems: dict[tuple[int, int], ProblemFile]
    skipped: int = 0


def chrono_eval(
    statements: Mapping[int, str],
    derived: DerivedGraph,
    k: int,
    slices: Sequence[int],
    names: Mapping[int, str] | None = None,
) -> ChronoResult:
    """Advise every derived-graph theorem from strictly earlier ones.

    After a theorem is advised its true derived-graph parents join the
    training set.  One problem per (theorem, slice) is produced.
    """
    slices = sorted(set(slices))
    if not slices or slices[0] < 1:
        raise ValueError("slices must be positive")
    parents = derived.parent_map()
    state = AdvisorState()
    problems: dict[tuple[int, int], ProblemFile] = {}
    skipped = 0
    for t in sorted(derived.theorems):
        text = statements.get(t)
        if text is None:
            skipped += 1
            continue
        feats = featurize(text)
        ranked = advise(state, feats, t, k, slices[-1]) if len(state) else []
        for n in slices:
            prem = ranked[:n]
            labels = {}
            if names:
                labels = {s: names[s] for s in [t, *prem] if s in names}
            problems[(t, n)] = ProblemFile(t, prem, labels)
        state.add(t, feats, parents.get(t, []))
    return ChronoResult(problems, skipped)

