import random

import numpy as np
import pytest

from lemmaforge import PageRankConfig, ProofGraph, pagerank, pr_variant
from lemmaforge.graph import Adjacency
from lemmaforge.pagerank import pr_scores

from oracles import dense_pagerank, random_dag

FWD = PageRankConfig(tolerance=1e-13)
REV = PageRankConfig(tolerance=1e-13, direction="reverse")


def test_g2_forward(g2):
    pr = pagerank(g2, FWD)
    assert pr.converged
    # a = 0.075 + 0.85 (b + a/2), b = 0.075 + 0.85 a/2
    assert pr.values[0] == pytest.approx(0.6491228, abs=1e-7)
    assert pr.values[1] == pytest.approx(0.3508771, abs=1e-7)


def test_two_isolated_nodes():
    g = ProofGraph.from_nodes([("R", 1, []), ("R", 1, [])])
    np.testing.assert_allclose(pagerank(g).values, [0.5, 0.5])


def test_g2_reverse_swaps(g2):
    f = pagerank(g2, FWD).values
    r = pagerank(g2, REV).values
    np.testing.assert_allclose(r, f[::-1], atol=1e-12)


def test_empty_graph():
    res = pagerank(ProofGraph.empty())
    assert res.values.size == 0 and res.converged


def test_non_convergence_is_flagged():
    g = ProofGraph.from_nodes(random_dag(random.Random(1), 200))
    res = pagerank(g, PageRankConfig(tolerance=1e-30, max_iterations=5))
    assert not res.converged and res.iterations == 5
    assert res.values.sum() == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("bad", [dict(damping=0.0), dict(damping=1.0), dict(tolerance=0.0), dict(direction="up")])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        PageRankConfig(**bad)


def test_variants_uniform_sizes():
    fwd, rev = np.array([0.2, 0.8]), np.array([0.6, 0.4])
    sizes = np.array([2, 2])
    np.testing.assert_allclose(pr_variant(fwd, rev, sizes, 2), fwd / 2)
    np.testing.assert_allclose(pr_variant(fwd, rev, sizes, 4), rev / 2)


def test_variant5_and_6_on_g2(g2):
    f = pagerank(g2, FWD).values
    r = pagerank(g2, REV).values
    np.testing.assert_allclose(pr_variant(f, r, g2.sizes, 5), [1.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(pr_variant(f, r, [10, 5], 6), [0.1, 0.2], atol=1e-12)


def test_variant_range():
    with pytest.raises(ValueError):
        pr_variant(np.ones(1), np.ones(1), [1], 7)


def test_pr_scores_dispatch(g7):
    f = pagerank(g7).values
    np.testing.assert_allclose(pr_scores(g7, 2), f / g7.sizes)


def _out_links(g: ProofGraph):
    adj = g.dependency_adjacency()
    return [(adj.indices[adj.indptr[i] : adj.indptr[i + 1]]).tolist() for i in range(g.n)]


def test_sum_is_one_and_fixed_point_matches_dense_solve():
    rng = random.Random(0)
    for _ in range(25):
        g = ProofGraph.from_nodes(random_dag(rng, rng.randint(1, 150), max_deps=4))
        for cfg in (FWD, REV):
            res = pagerank(g, cfg)
            assert abs(res.values.sum() - 1.0) < 1e-9
        exact = dense_pagerank(_out_links(g))
        np.testing.assert_allclose(pagerank(g, FWD).values, exact, atol=1e-11)


def test_convergence_deltas_non_increasing():
    rng = random.Random(4)
    for _ in range(100):
        n = rng.randint(2, 1000)
        g = ProofGraph.from_nodes(random_dag(rng, n, max_deps=4))
        for direction in ("forward", "reverse"):
            cfg = PageRankConfig(direction=direction)
            res = pagerank(g, cfg)
            d = res.deltas
            assert all(b <= a + 1e-15 for a, b in zip(d[1:], d[2:]))
            assert res.converged
            # fixed-point residual
            x = res.values
            again = pagerank_step(g, x, cfg)
            assert np.abs(again - x).sum() < 10 * cfg.tolerance


def pagerank_step(g, x, cfg):
    adj = g.dependency_adjacency() if cfg.direction == "forward" else g.use_adjacency()
    deg = adj.out_degree()
    y = np.zeros(adj.n)
    for j in range(adj.n):
        if deg[j]:
            for i in adj.indices[adj.indptr[j] : adj.indptr[j + 1]]:
                y[i] += x[j] / deg[j]
        else:
            y += x[j] / adj.n
    return (1 - cfg.damping) / adj.n + cfg.damping * y


def test_transpose_duality_is_exact():
    rng = random.Random(9)
    for _ in range(30):
        g = ProofGraph.from_nodes(random_dag(rng, rng.randint(1, 300), max_deps=4))
        rev = pagerank(g, PageRankConfig(direction="reverse")).values
        t = g.use_adjacency()
        fwd_t = pagerank(Adjacency(t.indptr, t.indices), PageRankConfig()).values
        assert np.array_equal(rev, fwd_t)
