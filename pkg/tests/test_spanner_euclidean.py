import math
from fractions import Fraction

import numpy as np
import pytest

from relspan.graph_core import PointSet, edge_sink, shortest_path_matrix
from relspan.lso import build_ordering_family, sort_by_ordering
from relspan.spanner1d import build_G_theta
from relspan.spanner_euclidean import (build_bounded_spread_spanner,
                                       build_hd_spanner, hd_config,
                                       union_over_orderings)
from relspan.streams import substream

from oracles import dijkstra_py


def jittered_grid(rows, cols, seed=0, jitter=0.2):
    rng = substream(seed, "grid")
    xs, ys = np.meshgrid(np.arange(cols, dtype=np.float64),
                         np.arange(rows, dtype=np.float64))
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
    return pts + rng.uniform(-jitter, jitter, size=pts.shape)


def all_pairs_stretch(g, bad=()):
    alive = np.setdiff1d(np.arange(g.n), np.asarray(list(bad), dtype=np.int64))
    dist = shortest_path_matrix(g, bad, alive)
    pos = g.positions
    worst = 0.0
    for row, s in enumerate(alive.tolist()):
        for t in alive.tolist():
            if t <= s:
                continue
            de = float(np.linalg.norm(pos[s] - pos[t]))
            worst = max(worst, dist[row][t] / de)
    return worst


# ---------------------------------------------------------------------------
# bounded spread
# ---------------------------------------------------------------------------

def test_bounded_spread_two_points():
    pts = np.array([[0.0, 0.0], [5.0, 1.0]])
    g = build_bounded_spread_spanner(pts, 0.5, "1/4", seed=0)
    assert g.edge_count == 1
    assert g.w[0] == pytest.approx(np.linalg.norm(pts[1] - pts[0]))


def test_bounded_spread_parameter_validation():
    pts = jittered_grid(4, 4)
    with pytest.raises(ValueError):
        build_bounded_spread_spanner(pts, 0.5, "3/4")
    with pytest.raises(ValueError):
        build_bounded_spread_spanner(pts, 1.5, "1/4")


def test_bounded_spread_stretch_no_failures():
    pts = jittered_grid(8, 8, seed=1)
    g = build_bounded_spread_spanner(pts, 0.5, "1/4", seed=2)
    g.validate()
    assert all_pairs_stretch(g) <= 1.5 * (1 + 1e-9)


def test_bounded_spread_scipy_vs_heap_oracle():
    pts = jittered_grid(5, 5, seed=3)
    g = build_bounded_spread_spanner(pts, 0.5, "1/4", seed=4)
    edges = list(zip(g.u.tolist(), g.v.tolist(), g.w.tolist()))
    bad = [3, 12]
    alive = [v for v in range(g.n) if v not in bad]
    dist = shortest_path_matrix(g, bad, alive)
    for row, s in list(enumerate(alive))[::6]:
        want = dijkstra_py(g.n, edges, s, bad)
        for t in alive:
            if math.isinf(want[t]):
                assert math.isinf(dist[row][t])
            else:
                assert dist[row][t] == pytest.approx(want[t], rel=1e-9)


def test_bounded_spread_metadata():
    pts = jittered_grid(6, 6, seed=5)
    g = build_bounded_spread_spanner(pts, 0.5, "1/4", seed=6)
    meta = g.meta
    assert meta["kind"] == "bounded_spread"
    assert meta["xi"] == str(Fraction(1, 32))
    assert meta["gamma"] == str(Fraction(7, 8))
    assert meta["wspd_pairs"] > 0
    assert meta["wspd_max_membership"] >= 1


def test_bounded_spread_spread_guard():
    pts = np.array([[0.0, 0.0], [1e-19, 0.0], [1.0, 1.0], [0.33, 0.25]],
                   dtype=np.float64)
    with pytest.raises(ValueError, match="spread overflow"):
        build_bounded_spread_spanner(pts, 0.5, "1/4")


# ---------------------------------------------------------------------------
# ordering-union construction
# ---------------------------------------------------------------------------

def test_hd_config_formulas():
    cfg = hd_config(256, 2, 0.5, Fraction(1, 2), "improved", 16)
    assert cfg["rounds"] == 4  # ceil(log2 log2 256) + 1
    assert cfg["sigma"] == 0.5 / 16
    assert cfg["theta_prime"] == Fraction(1, 2) / (3 * 4 * cfg["M"])
    cfg5 = hd_config(512, 2, 0.5, Fraction(1, 2), "improved", 16)
    assert cfg5["rounds"] == 5
    simple = hd_config(256, 2, 0.5, Fraction(1, 2), "simple", 16)
    assert simple["rounds"] == 1
    assert simple["sigma"] == 0.5 / (16 * 8)
    assert simple["theta_prime"] == Fraction(1, 2) / simple["M"]


def test_hd_minimal_contains_all_pairs_edge():
    pts = np.array([[0.0, 0.0], [1.0, 0.1], [0.3, 0.9], [0.7, 0.4]])
    g = build_hd_spanner(pts, 0.5, "1/2", seed=0, sub_c=8, sub_mode="experimental")
    assert (0, 1) in g.edge_set()  # degenerate regime: clique


def test_hd_degenerate_regime_and_theta_prime():
    pts = jittered_grid(8, 8, seed=7)
    g = build_hd_spanner(pts, 0.5, "1/2", variant="improved", seed=1,
                         sub_c=8, sub_mode="experimental")
    meta = g.meta
    assert meta["regime"] == "g1d_clique_union"
    cfg = hd_config(64, 2, 0.5, Fraction(1, 2), "improved", 16)
    assert meta["theta_prime"] == str(cfg["theta_prime"])
    assert meta["M"] == cfg["M"]
    assert g.edge_count == 64 * 63 // 2
    g.validate()


def test_hd_stretch_no_failures():
    pts = jittered_grid(8, 8, seed=8)
    g = build_hd_spanner(pts, 0.5, "1/2", seed=2, sub_c=8, sub_mode="experimental")
    assert all_pairs_stretch(g) <= 1.5 * (1 + 1e-9)


def test_union_reconstruction_matches_builder_fast_path():
    # in the degenerate regime every ordering contributes the full rank
    # clique, so the explicit union must equal the fast-path clique
    pts = jittered_grid(4, 5, seed=9)
    g = build_hd_spanner(pts, 0.5, "1/2", seed=3, sub_c=8, sub_mode="experimental")
    n = g.n
    from relspan.quadtree import normalize_unit
    normed, _, _ = normalize_unit(pts, margin=g.meta["norm_margin"])
    family = build_ordering_family(2, g.meta["sigma"])
    sink = edge_sink(n)
    union_over_orderings(normed, family.orderings[:3], Fraction(g.meta["theta_prime"]),
                         g.meta["sub_c"], g.meta["sub_mode"], g.meta["seed"], sink)
    u, v = sink.extract()
    assert set(zip(u.tolist(), v.tolist())) == g.edge_set()


def test_union_layered_path_is_exact_union():
    # drive the non-degenerate union explicitly with a hand-built family
    rng = substream(10, "hd-layered")
    n = 64
    normed = rng.random((n, 2)) * 0.75 + 0.125
    family = build_ordering_family(2, 0.5)
    orderings = family.orderings[:4]
    theta_prime = Fraction(7, 10)
    sink = edge_sink(n)
    union_over_orderings(normed, orderings, theta_prime, 4, "experimental", 11, sink)
    u, v = sink.extract()
    got = set(zip(u.tolist(), v.tolist()))
    expect = set()
    from relspan.streams import subseed
    for o in orderings:
        perm = sort_by_ordering(o, normed)
        g1 = build_G_theta(n, theta_prime, c=4, seed=subseed(11, "ordering", o.id),
                           mode="experimental")
        assert g1.meta["regime"] == "layered"
        for a, b in zip(perm[g1.u].tolist(), perm[g1.v].tolist()):
            expect.add((min(a, b), max(a, b)))
    assert got == expect


def test_hd_requires_enough_points():
    with pytest.raises(ValueError):
        build_hd_spanner(np.array([[0.5, 0.5]]), 0.5, "1/2")


def test_hd_two_points_single_edge():
    g = build_hd_spanner(np.array([[0.0, 0.0], [1.0, 1.0]]), 0.5, "1/2",
                         sub_c=8, sub_mode="experimental")
    assert g.edge_set() == {(0, 1)}


def test_climb_up_reach_fraction():
    # survivors outside the cell shadow can reach, within stretch two of any
    # ancestor cell's diameter, at least a 3*xi fraction of that cell
    from relspan.quadtree import build_quadtree, normalize_unit
    from relspan.shadow import shadow_quadtree
    theta = Fraction(1, 4)
    xi = theta / 8
    gamma = 1 - theta / 2
    pts = jittered_grid(8, 8, seed=20)
    g = build_bounded_spread_spanner(pts, 0.5, theta, seed=21)
    normed, scale, _ = normalize_unit(pts, margin=g.meta["norm_margin"])
    tree = build_quadtree(normed, already_normalized=True)
    rng = substream(22, "climb")
    for trial in range(3):
        bad = rng.choice(64, size=6, replace=False)
        shadowed = set(shadow_quadtree(tree, bad, gamma).members.tolist())
        alive = [v for v in range(64) if v not in set(bad.tolist())]
        dist = shortest_path_matrix(g, bad, alive)
        row_of = {v: i for i, v in enumerate(alive)}
        bad_set = set(bad.tolist())
        for node in tree.nodes:
            ids = node.point_ids
            if len(ids) < 2:
                continue
            reach_limit = 2.0 * node.diameter() / scale  # original units
            for p in ids.tolist():
                if p in bad_set or p in shadowed:
                    continue
                reachable = sum(
                    1 for q in ids.tolist()
                    if q not in bad_set and dist[row_of[p]][q] <= reach_limit + 1e-9)
                assert reachable >= 3 * xi * len(ids), (trial, node.id, p)
