"""Mining proof-trace dependency graphs for reusable lemmas."""

__version__ = "0.1.0"

from .graph import (  # noqa: E402
    Adjacency,
    InferenceNode,
    NamedSet,
    ProofGraph,
    Segment,
    Stats,
    direct_uses,
    graph_stats,
    segments,
)
from .trace_io import SidecarMaps, parse_sidecars, parse_trace, write_trace  # noqa: E402
from .quality import MetricConfig, QualityScores, compute_D, compute_L, compute_U, score  # noqa: E402
from .pagerank import PageRankConfig, pagerank, pr_variant  # noqa: E402
from .cut import FrontierSets, edge_decrease, frontiers, mc_score  # noqa: E402
from .dedup import DedupResult, DedupSpec, dedup, dedup_pipeline  # noqa: E402
from .metrics import parse_metric  # noqa: E402
from .selection import SelectionRun, select_best  # noqa: E402
from .scenarios import (  # noqa: E402
    ChainTable,
    DerivedGraph,
    ProblemFile,
    almost_honest,
    chain_levels,
    derive,
    export_problems,
    fully_honest_schedule,
)
from .knn import AdvisorState, advise, chrono_eval, featurize  # noqa: E402
