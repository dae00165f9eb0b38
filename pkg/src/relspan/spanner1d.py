"""Reliable exact spanners on the integer line.

Two constructions: the block-tree graph (bipartite expanders between
neighboring blocks of a full binary tree, every level) and the shifted-
interval graph (a near-neighbor clique G0 plus expander layers between
consecutive shifted intervals at every resolution).  Both admit monotone
1-paths between survivors outside a small shadow of the failure set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graph_core import (WeightedGraph, bitmask, clean_vertex_set, edge_sink,
                         iter_bits, monotone_reach_bits)
from .expanders import bipartite_into_sink
from .shadow import as_fraction


def pow2_at_least(x) -> int:
    """Smallest power of two >= x (exact, works for Fractions)."""
    if x <= 1:
        return 1
    t = 1
    while t < x:
        t <<= 1
    return t


# ---------------------------------------------------------------------------
# block tree and the canonical walk
# ---------------------------------------------------------------------------

@dataclass
class BlockTree:
    """The full binary tree of blocks over [0, pow2(n)).

    Level i partitions the padded line into consecutive blocks of size 2^i;
    a block's parent is the union of it and its sibling.
    """

    n_padded: int

    def __post_init__(self):
        if self.n_padded < 1 or self.n_padded & (self.n_padded - 1):
            raise ValueError("padded size must be a power of two")

    @property
    def height(self) -> int:
        return self.n_padded.bit_length() - 1

    def blocks_at_level(self, level: int) -> list[tuple[int, int]]:
        size = 1 << level
        return [(k * size, (k + 1) * size - 1)
                for k in range(self.n_padded >> level)]

    def block_of(self, v: int, level: int) -> tuple[int, int]:
        idx = v >> level
        return (idx << level, ((idx + 1) << level) - 1)


@dataclass
class CanonicalWalk:
    """Ascending and descending block sequences between two leaves.

    Blocks are inclusive id intervals (lo, hi).  Consecutive ascent blocks
    are same-level neighbors or the parent of the previous one; the walk ends
    with the two tops being same-level neighbors.
    """

    ascent: list[tuple[int, int]]
    descent: list[tuple[int, int]]


def _interval(level: int, idx: int) -> tuple[int, int]:
    return (idx << level, ((idx + 1) << level) - 1)


def canonical_walk(n: int, i: int, j: int) -> CanonicalWalk:
    """Walk the block tree from leaf i up, across, and down to leaf j.

    Rules, applied in order each iteration: stop when the active blocks are
    neighbors; advance a right-child left block to its next neighbor; retreat
    a left-child right block to its previous neighbor; otherwise ascend both.
    """
    if i >= j:
        raise ValueError("require i < j")
    n_padded = pow2_at_least(n)
    if not (0 <= i and j < n_padded):
        raise ValueError("leaves out of range")
    lev = 0
    bi, bj = i, j
    ascent = [_interval(0, bi)]
    descent = [_interval(0, bj)]
    while bj != bi + 1:
        if bi & 1:  # right child: step to the next block
            bi += 1
            ascent.append(_interval(lev, bi))
        elif not (bj & 1):  # left child: step to the previous block
            bj -= 1
            descent.append(_interval(lev, bj))
        else:  # ascend
            lev += 1
            bi >>= 1
            bj >>= 1
            ascent.append(_interval(lev, bi))
            descent.append(_interval(lev, bj))
    descent.reverse()
    return CanonicalWalk(ascent, descent)


# ---------------------------------------------------------------------------
# the block-tree construction
# ---------------------------------------------------------------------------

def _h_certificate(xi: Fraction) -> Fraction | None:
    """Shadow threshold certified by the walk argument: a contamination level
    alpha with (1 - xi) - 2*alpha >= 3/4 survives block crossings, and the
    walk charges contamination to the alpha/3-shadow of the endpoints."""
    ceiling = (Fraction(1, 4) - xi) / 2
    if ceiling <= 0:
        return None
    alpha = min(Fraction(1, 32), ceiling)
    return alpha / 3


def build_H(n: int, xi=Fraction(1, 16), seed: int = 0,
            degree_constant_override: int | None = None) -> WeightedGraph:
    """Block-tree spanner: expanders between all same-level neighboring
    blocks of the full binary tree over [0, pow2(n)), restricted to [0, n)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    xi = as_fraction(xi)
    if not (0 < xi < 1):
        raise ValueError("xi must be in (0, 1)")
    n_padded = pow2_at_least(n)
    h = n_padded.bit_length() - 1
    sink = edge_sink(n_padded)
    budget = 0
    for lev in range(h):
        size = 1 << lev
        for k in range((n_padded >> lev) - 1):
            plan = bipartite_into_sink(sink, (k * size, (k + 1) * size),
                                       ((k + 1) * size, (k + 2) * size),
                                       xi, seed, ("h", lev, k),
                                       degree_constant_override)
            budget += plan["budget"]
    u, v = sink.extract()
    keep = v < n
    cert = _h_certificate(xi)
    meta = {
        "kind": "h1d",
        "n": n,
        "n_padded": n_padded,
        "xi": str(xi),
        "seed": seed,
        "sample_budget": budget,
        "experimental": degree_constant_override is not None,
        "cert_alpha": str(cert) if cert is not None else None,
        "bplus_factor": (2 * (1 + math.ceil(1 / cert))) if cert is not None else None,
    }
    return WeightedGraph.from_pairs(n, u[keep], v[keep], line=True, meta=meta)


def h_level_budget(n: int, xi=Fraction(1, 16)) -> int:
    """Analytic per-level sampling budget: pairs(level) * c * 2 * blocksize."""
    xi = as_fraction(xi)
    c = math.ceil(Fraction(3) / (xi * xi))
    n_padded = pow2_at_least(n)
    h = n_padded.bit_length() - 1
    total = 0
    for lev in range(h):
        pairs = (n_padded >> lev) - 1
        total += pairs * c * 2 * (1 << lev)
    return total


# ---------------------------------------------------------------------------
# the shifted-interval construction
# ---------------------------------------------------------------------------

def shifted_interval_params(theta, c: int = 512) -> tuple[int, Fraction]:
    """Resolution count N = pow2(c / theta^2) and the layer parameter
    xi = 1 / (32 N)."""
    theta = as_fraction(theta)
    N = pow2_at_least(Fraction(c) / (theta * theta))
    return N, Fraction(1, 32 * N)


def shift_start(i: int, j: int, N: int) -> int:
    """0-based start of the j-th shifted run at resolution i (may be < 0)."""
    step = (1 << i) // N
    return (j - 1) * step - (1 << i)


def build_G_theta(n: int, theta, c: int = 512, seed: int = 0,
                  mode: str = "faithful",
                  degree_constant_override: int | None = None) -> WeightedGraph:
    """Shifted-interval spanner: near-neighbor clique G0 plus bipartite
    expander layers between consecutive shifted intervals at every
    resolution and shift.

    Faithful mode keeps c >= 512; experimental mode allows smaller c and tags
    the result.  When 3N reaches n the construction collapses to the clique
    G0 alone; this is reported, not hidden.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    theta = as_fraction(theta)
    if not (0 < theta < 1):
        raise ValueError("theta must be in (0, 1)")
    if mode not in ("faithful", "experimental"):
        raise ValueError("mode must be faithful or experimental")
    if mode == "faithful" and c < 512:
        raise ValueError("faithful mode requires c >= 512")
    N, xi = shifted_interval_params(theta, c)
    n_padded = pow2_at_least(n)
    h = n_padded.bit_length() - 1
    i0 = N.bit_length() - 1
    warnings = []
    regime = "layered"
    if N >= n:
        warnings.append(f"N={N} >= n={n}: construction degenerates to the near-clique G0")
        regime = "degenerate"
    sink = edge_sink(n)
    budget = 0
    if 3 * N >= n - 1:
        sink.add_band(n - 1)
        regime = "g0_clique"
        warnings.append(f"3N={3 * N} covers the whole line: graph is the clique via G0")
    else:
        sink.add_band(3 * N)
        for i in range(i0, h):
            size = 1 << i
            for j in range(1, N + 1):
                s0 = shift_start(i, j, N)
                for k in range(n_padded // size):
                    a0, a1 = s0 + k * size, s0 + (k + 1) * size
                    b0, b1 = a1, s0 + (k + 2) * size
                    a0, a1 = max(a0, 0), min(a1, n)
                    b0, b1 = max(b0, 0), min(b1, n)
                    if a1 - a0 < 2 or b1 - b0 < 2:
                        continue  # clipped to fewer than 2 positions: skip
                    plan = bipartite_into_sink(sink, (a0, a1), (b0, b1), xi, seed,
                                               ("gt", i, j, k),
                                               degree_constant_override)
                    budget += plan["budget"]
    u, v = sink.extract()
    cert = 1 - theta / 4
    meta = {
        "kind": "g_theta",
        "n": n,
        "n_padded": n_padded,
        "theta": str(theta),
        "c": c,
        "N": N,
        "xi": str(xi),
        "mode": mode,
        "regime": regime,
        "warnings": warnings,
        "seed": seed,
        "sample_budget": budget,
        "experimental": mode == "experimental" or degree_constant_override is not None,
        "cert_alpha": str(cert),
        "bplus_factor": str(1 + theta),
        "hop_cap": 2 * h,
    }
    return WeightedGraph.from_pairs(n, u, v, line=True, meta=meta)


def g_theta_crossover(theta, c: int = 512) -> int:
    """Smallest n at which the layered part of the construction is
    non-vacuous (below it G0 alone is the whole clique)."""
    N, _ = shifted_interval_params(theta, c)
    return 3 * N + 2


# ---------------------------------------------------------------------------
# exact path extraction
# ---------------------------------------------------------------------------

@dataclass
class PathResult:
    found: bool
    path: list[int]
    hops: int
    length: float


def find_exact_path(g: WeightedGraph, B, s: int, t: int,
                    hop_cap: int | None = None) -> PathResult:
    """Monotone (hence exact-length) path from s to t in g minus B.

    Bidirectional reachability meet: the ancestors of t prune the forward
    layered search from s down to the corridor of vertices on some monotone
    s-t path, so the walk only ever expands useful frontiers.  Absent is a
    value, not an error.
    """
    if s >= t:
        raise ValueError("require s < t")
    dead = clean_vertex_set(B, g.n)
    if np.isin([s, t], dead).any():
        raise ValueError("endpoint in failure set")
    alive = ((1 << g.n) - 1) & ~bitmask(dead)
    ancestors, _ = monotone_reach_bits(g, alive, t, "left", hop_cap)
    if not (ancestors >> s) & 1:
        return PathResult(False, [], 0, math.inf)
    corridor = ancestors & alive
    step_bits = g.right_bits()
    target = 1 << t
    layers = [1 << s]
    reached = 1 << s
    while not (reached & target):
        if hop_cap is not None and len(layers) - 1 >= hop_cap:
            return PathResult(False, [], 0, math.inf)
        nxt = 0
        for u in iter_bits(layers[-1]):
            nxt |= step_bits[u]
        nxt &= corridor & ~reached
        if not nxt:
            return PathResult(False, [], 0, math.inf)
        layers.append(nxt)
        reached |= nxt
    # backtrack, lowest-id predecessor first for determinism
    left_bits = g.left_bits()
    path = [t]
    cur = t
    for r in range(len(layers) - 2, -1, -1):
        preds = left_bits[cur] & layers[r]
        low = preds & -preds
        cur = low.bit_length() - 1
        path.append(cur)
    path.reverse()
    length = float(sum(path[k + 1] - path[k] for k in range(len(path) - 1)))
    if abs(length - (t - s)) > 1e-9 * max(1.0, t - s):
        raise AssertionError("monotone path failed to telescope")
    return PathResult(True, path, len(path) - 1, length)


def one_path_coverage(g: WeightedGraph, B, good: np.ndarray,
                      hop_cap: int | None = None,
                      max_failures: int = 64) -> tuple[bool, list[tuple[int, int]], int]:
    """Check that every good pair s < t is joined by a monotone path in g-B.

    Returns (all_ok, sample of failing pairs, max hops over checked sources).
    """
    dead = clean_vertex_set(B, g.n)
    alive = ((1 << g.n) - 1) & ~bitmask(dead)
    good_mask = bitmask(good)
    failures: list[tuple[int, int]] = []
    max_hops = 0
    for s in np.asarray(good, dtype=np.int64).tolist():
        want = good_mask >> (s + 1) << (s + 1)
        if not want:
            continue
        reached, hops = monotone_reach_bits(g, alive, s, "right", hop_cap)
        max_hops = max(max_hops, hops)
        missing = want & ~reached
        if missing:
            for t in iter_bits(missing):
                failures.append((s, t))
                if len(failures) >= max_failures:
                    return False, failures, max_hops
    return (not failures), failures, max_hops
