"""Compressed quadtree over [0,1)^d and the well-separated pair decomposition.

Leaves store exactly one point.  Chains of single-child nodes are collapsed,
so the tree has O(n) nodes regardless of spread.  Singleton leaves use the
degenerate cell at their point (zero extent), which makes the WSPD recursion
terminate for arbitrarily close pairs while keeping separation certificates
purely cell-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph_core import PointSet

MAX_DEPTH = 64


@dataclass
class QuadNode:
    id: int
    cell_min: np.ndarray
    cell_size: float  # 0.0 for a singleton leaf cell
    point_ids: np.ndarray
    depth: int
    parent: int | None = None
    children: list[int] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def diameter(self) -> float:
        return self.cell_size * np.sqrt(len(self.cell_min))

    def cell_max(self) -> np.ndarray:
        return self.cell_min + self.cell_size


@dataclass
class Quadtree:
    nodes: list[QuadNode]
    root: int
    points: np.ndarray  # normalized coords in [0,1)^d
    n_points: int

    def postorder(self) -> list[int]:
        order: list[int] = []
        stack = [(self.root, False)]
        while stack:
            idx, done = stack.pop()
            if done:
                order.append(idx)
            else:
                stack.append((idx, True))
                for c in self.nodes[idx].children:
                    stack.append((c, False))
        return order

    def leaves(self) -> list[int]:
        return [node.id for node in self.nodes if node.is_leaf]


def cell_distance(a: QuadNode, b: QuadNode) -> float:
    """Distance between two axis-aligned cells (0 when they touch/overlap)."""
    gap_lo = a.cell_min - b.cell_max()
    gap_hi = b.cell_min - a.cell_max()
    gaps = np.maximum(np.maximum(gap_lo, gap_hi), 0.0)
    return float(np.sqrt((gaps ** 2).sum()))


def build_quadtree(points, already_normalized: bool = False) -> Quadtree:
    """Compressed quadtree; points are normalized into [0,1)^d unless the
    caller says they already are."""
    coords = points.coords if isinstance(points, PointSet) else np.asarray(points, dtype=np.float64)
    n, d = coords.shape
    if not already_normalized:
        coords, _, _ = normalize_unit(coords)
    nodes: list[QuadNode] = []

    def new_node(cell_min, cell_size, ids, depth, parent):
        node = QuadNode(len(nodes), np.asarray(cell_min, dtype=np.float64),
                        float(cell_size), np.asarray(ids, dtype=np.int64),
                        depth, parent)
        nodes.append(node)
        return node.id

    root = new_node(np.zeros(d), 1.0, np.arange(n), 0, None)
    stack = [root]
    while stack:
        idx = stack.pop()
        node = nodes[idx]
        ids = node.point_ids
        if len(ids) == 1:
            # collapse to the degenerate cell at the point
            node.cell_min = coords[ids[0]].copy()
            node.cell_size = 0.0
            continue
        cell_min, size, depth = node.cell_min, node.cell_size, node.depth
        while True:
            if depth > MAX_DEPTH:
                raise ValueError("quadtree depth exceeded: spread too large or duplicate points")
            half = size / 2.0
            mid = cell_min + half
            codes = ((coords[ids] >= mid) << np.arange(d)).sum(axis=1)
            present = np.unique(codes)
            if len(present) > 1:
                break
            # single occupied subcell: compress the chain
            code = int(present[0])
            offs = np.array([(code >> k) & 1 for k in range(d)], dtype=np.float64)
            cell_min = cell_min + offs * half
            size = half
            depth += 1
        node.cell_min, node.cell_size, node.depth = cell_min, size, depth
        for code in present.tolist():
            sub = ids[codes == code]
            offs = np.array([(code >> k) & 1 for k in range(d)], dtype=np.float64)
            child = new_node(cell_min + offs * half, half, sub, depth + 1, idx)
            node.children.append(child)
            stack.append(child)
    return Quadtree(nodes, root, coords, n)


def normalize_unit(coords: np.ndarray, margin: float = 0.125) -> tuple[np.ndarray, float, np.ndarray]:
    """Map points into [margin, 1-margin)^d; returns (normalized, scale, offset)
    with original = normalized/scale ... offset arithmetic preserved for
    distance conversion: dist_orig = dist_norm / scale."""
    coords = np.asarray(coords, dtype=np.float64)
    lo = coords.min(axis=0)
    extent = float((coords.max(axis=0) - lo).max())
    if extent <= 0:
        raise ValueError("degenerate point set")
    scale = (1.0 - 2.0 * margin) / extent * (1.0 - 1e-12)
    normed = (coords - lo) * scale + margin
    return normed, scale, lo


# ---------------------------------------------------------------------------
# WSPD
# ---------------------------------------------------------------------------

@dataclass
class WspdPair:
    u: int
    v: int
    separation: float  # dist(cell_u, cell_v) / max(diam_u, diam_v); inf if diams 0

    def certificate_ok(self, tree: Quadtree, s: float) -> bool:
        a, b = tree.nodes[self.u], tree.nodes[self.v]
        return s * max(a.diameter(), b.diameter()) <= cell_distance(a, b)


def build_wspd(tree: Quadtree, s: float) -> list[WspdPair]:
    """Recursive pair splitting: emit a pair when the cell-separation
    certificate holds, else split the node with the larger cell.  Every
    unordered point pair is covered by exactly one emitted pair."""
    if s <= 0:
        raise ValueError("separation must be positive")
    nodes = tree.nodes
    out: list[WspdPair] = []

    def recurse(ua: int, ub: int) -> None:
        a, b = nodes[ua], nodes[ub]
        if ua == ub:
            if a.is_leaf:
                return
            kids = a.children
            for i in range(len(kids)):
                for j in range(i, len(kids)):
                    recurse(kids[i], kids[j])
            return
        da, db = a.diameter(), b.diameter()
        dist = cell_distance(a, b)
        if dist >= s * max(da, db):
            sep = dist / max(da, db) if max(da, db) > 0 else float("inf")
            out.append(WspdPair(ua, ub, sep))
            return
        # leaves have zero-extent cells, so the larger-cell node never is one
        if not a.is_leaf and (da >= db or b.is_leaf):
            for c in a.children:
                recurse(c, ub)
        else:
            for c in b.children:
                recurse(ua, c)

    recurse(tree.root, tree.root)
    return out


def wspd_point_pair_counts(tree: Quadtree, pairs: list[WspdPair]) -> np.ndarray:
    """How many WSPD pairs each point participates in."""
    counts = np.zeros(tree.n_points, dtype=np.int64)
    for pair in pairs:
        counts[tree.nodes[pair.u].point_ids] += 1
        counts[tree.nodes[pair.v].point_ids] += 1
    return counts
