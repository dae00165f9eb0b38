"""Shared graph/point data model and the path oracles used by every verifier.

Vertex ids are 0-based everywhere.  For graphs on the integer line, vertex i
sits at position i, so the gap weight of an edge (u, v) is |u - v|.  Graphs
are immutable after construction: edge arrays are canonicalized (u < v,
lexicographically sorted, deduplicated) and marked read-only, so they can be
shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra
from scipy.spatial import cKDTree

REL_TOL = 1e-9  # relative tolerance for path-length comparisons

_DENSE_SINK_LIMIT = 8192  # above this, edge accumulation falls back to sorting


# ---------------------------------------------------------------------------
# vertex sets
# ---------------------------------------------------------------------------

def clean_vertex_set(ids, n: int) -> np.ndarray:
    """Sorted, deduplicated int64 array of vertex ids, validated against n."""
    arr = np.unique(np.asarray(list(ids) if not isinstance(ids, np.ndarray) else ids,
                               dtype=np.int64))
    if arr.size and (arr[0] < 0 or arr[-1] >= n):
        raise ValueError(f"vertex id out of range [0, {n})")
    return arr


def bitmask(ids) -> int:
    """Pack vertex ids into a python-int bitset."""
    mask = 0
    for v in ids:
        mask |= 1 << int(v)
    return mask


def bits_to_array(mask: int) -> np.ndarray:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return np.asarray(out, dtype=np.int64)


def iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


# ---------------------------------------------------------------------------
# point sets
# ---------------------------------------------------------------------------

@dataclass
class PointSet:
    """Distinct points in R^d with cached diameter / closest-pair / spread."""

    coords: np.ndarray  # (n, d) float64

    def __post_init__(self):
        coords = np.ascontiguousarray(np.atleast_2d(np.asarray(self.coords, dtype=np.float64)))
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        self._diameter = None
        self._closest_pair = None

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    @property
    def diameter(self) -> float:
        if self._diameter is None:
            # exact pairwise max, chunked so memory stays bounded
            worst = 0.0
            for start in range(0, self.n, 1024):
                block = self.coords[start:start + 1024]
                d2 = ((block[:, None, :] - self.coords[None, :, :]) ** 2).sum(axis=2)
                worst = max(worst, float(d2.max()))
            self._diameter = math.sqrt(worst)
        return self._diameter

    @property
    def closest_pair(self) -> float:
        if self._closest_pair is None:
            tree = cKDTree(self.coords)
            dist, _ = tree.query(self.coords, k=2)
            self._closest_pair = float(dist[:, 1].min())
            if self._closest_pair <= 0.0:
                raise ValueError("point set contains duplicate points")
        return self._closest_pair

    @property
    def spread(self) -> float:
        return self.diameter / self.closest_pair


def load_points(path) -> PointSet:
    """One point per line, whitespace-separated decimal coordinates."""
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        rows.append([float(tok) for tok in line.split()])
    if not rows:
        raise ValueError(f"no points in {path}")
    return PointSet(np.asarray(rows, dtype=np.float64))


def save_points(points: PointSet | np.ndarray, path) -> None:
    coords = points.coords if isinstance(points, PointSet) else np.asarray(points)
    lines = [" ".join(repr(float(x)) for x in row) for row in coords]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# the graph
# ---------------------------------------------------------------------------

class WeightedGraph:
    """Immutable undirected graph with metric edge weights.

    Weights are always recomputed from the vertex positions that produced the
    graph (integer line or a Euclidean point set), never trusted from the
    builder, which keeps the weight invariant true by construction.
    """

    def __init__(self, n: int, u: np.ndarray, v: np.ndarray, w: np.ndarray,
                 positions: np.ndarray | None = None, meta: dict | None = None):
        self.n = int(n)
        self.u = u
        self.v = v
        self.w = w
        self.positions = positions
        self.meta = dict(meta or {})
        for arr in (self.u, self.v, self.w):
            arr.setflags(write=False)
        if positions is not None:
            positions.setflags(write=False)
        self._csr = None
        self._adj = None
        self._right_bits = None
        self._left_bits = None

    # -- construction ------------------------------------------------------

    @classmethod
    def from_pairs(cls, n: int, u, v, positions=None, line: bool = False,
                   meta: dict | None = None) -> "WeightedGraph":
        """Build from an edge multiset: dedup, drop self-loops, weight by metric."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        if u.size:
            if int(min(u.min(), v.min())) < 0 or int(max(u.max(), v.max())) >= n:
                raise ValueError(f"edge endpoint out of range [0, {n})")
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        keep = lo != hi
        lo, hi = lo[keep], hi[keep]
        if lo.size:
            packed = lo * np.int64(n) + hi
            packed = np.unique(packed)
            lo = (packed // n).astype(np.int64)
            hi = (packed % n).astype(np.int64)
        if line:
            if positions is not None:
                raise ValueError("line graphs carry implicit positions")
            w = (hi - lo).astype(np.float64)
            pos = None
        elif positions is not None:
            pos = np.ascontiguousarray(np.asarray(positions, dtype=np.float64))
            if pos.shape[0] != n:
                raise ValueError("positions must cover all vertices")
            w = np.sqrt(((pos[lo] - pos[hi]) ** 2).sum(axis=1))
            if lo.size and float(w.min()) <= 0.0:
                raise ValueError("zero-length edge: duplicate points?")
        else:
            pos = None
            w = np.ones(lo.size, dtype=np.float64)
        m = dict(meta or {})
        if line:
            m.setdefault("line", True)
        return cls(n, lo, hi, w, positions=pos, meta=m)

    # -- basic accessors -----------------------------------------------------

    @property
    def edge_count(self) -> int:
        return int(self.u.size)

    @property
    def is_line(self) -> bool:
        return bool(self.meta.get("line", False))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self.u, 1)
        np.add.at(deg, self.v, 1)
        return deg

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self.u.tolist(), self.v.tolist()))

    def csr(self) -> csr_matrix:
        if self._csr is None:
            row = np.concatenate([self.u, self.v])
            col = np.concatenate([self.v, self.u])
            dat = np.concatenate([self.w, self.w])
            self._csr = csr_matrix((dat, (row, col)), shape=(self.n, self.n))
        return self._csr

    def adjacency(self) -> list[np.ndarray]:
        if self._adj is None:
            csr = self.csr()
            self._adj = [csr.indices[csr.indptr[i]:csr.indptr[i + 1]] for i in range(self.n)]
        return self._adj

    def right_bits(self) -> list[int]:
        """Per-vertex bitsets of neighbors with larger id (1D monotone steps)."""
        if self._right_bits is None:
            right = [0] * self.n
            left = [0] * self.n
            for a, b in zip(self.u.tolist(), self.v.tolist()):
                right[a] |= 1 << b
                left[b] |= 1 << a
            self._right_bits = right
            self._left_bits = left
        return self._right_bits

    def left_bits(self) -> list[int]:
        if self._left_bits is None:
            self.right_bits()
        return self._left_bits

    # -- invariant check (used by tests and after deserialization) ----------

    def validate(self) -> None:
        if self.u.size == 0:
            return
        if not (self.u < self.v).all():
            raise AssertionError("edges not canonical (u < v)")
        if int(self.u.min()) < 0 or int(self.v.max()) >= self.n:
            raise AssertionError("endpoint out of range")
        packed = self.u * np.int64(self.n) + self.v
        if np.unique(packed).size != packed.size:
            raise AssertionError("duplicate edges")
        if self.is_line:
            expect = (self.v - self.u).astype(np.float64)
        elif self.positions is not None:
            expect = np.sqrt(((self.positions[self.u] - self.positions[self.v]) ** 2).sum(axis=1))
        else:
            expect = None
        if expect is not None:
            if not np.allclose(self.w, expect, rtol=REL_TOL, atol=0.0):
                raise AssertionError("weights disagree with vertex positions")

    # -- serialization -------------------------------------------------------

    def edge_lines(self) -> str:
        out = []
        for a, b, ww in zip(self.u.tolist(), self.v.tolist(), self.w.tolist()):
            out.append(f"{a} {b} {ww!r}")
        return "\n".join(out) + ("\n" if out else "")

    def save_edges(self, path) -> None:
        Path(path).write_text(self.edge_lines(), encoding="utf-8")


def load_edge_list(path, n: int | None = None, positions=None,
                   line: bool = False, meta: dict | None = None) -> WeightedGraph:
    """Read "u v w" lines; weights are recomputed from positions when known."""
    us, vs, ws = [], [], []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        raw = raw.strip()
        if not raw:
            continue
        a, b, w = raw.split()
        us.append(int(a))
        vs.append(int(b))
        ws.append(float(w))
    if n is None:
        n = (max(max(us), max(vs)) + 1) if us else 0
    if line or positions is not None:
        return WeightedGraph.from_pairs(n, us, vs, positions=positions, line=line, meta=meta)
    g = WeightedGraph(n, np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64),
                      np.asarray(ws, dtype=np.float64), meta=dict(meta or {}))
    return g


# ---------------------------------------------------------------------------
# edge accumulation for the builders
# ---------------------------------------------------------------------------

class DenseEdgeSink:
    """Boolean adjacency matrix; block marks are C-speed slice assignments."""

    def __init__(self, n: int):
        self.n = n
        self.mat = np.zeros((n, n), dtype=bool)

    def add_pairs(self, u: np.ndarray, v: np.ndarray) -> None:
        self.mat[u, v] = True

    def add_block(self, a0: int, a1: int, b0: int, b1: int) -> None:
        self.mat[a0:a1, b0:b1] = True

    def add_index_block(self, left_ids: np.ndarray, right_ids: np.ndarray) -> None:
        self.mat[np.ix_(left_ids, right_ids)] = True

    def add_band(self, width: int) -> None:
        """All pairs (u, v) with 0 < v - u <= width."""
        for u in range(self.n):
            hi = min(self.n, u + 1 + width)
            if hi > u + 1:
                self.mat[u, u + 1:hi] = True

    def extract(self) -> tuple[np.ndarray, np.ndarray]:
        sym = self.mat | self.mat.T
        uu, vv = np.nonzero(np.triu(sym, k=1))
        return uu.astype(np.int64), vv.astype(np.int64)


class SparseEdgeSink:
    """Chunked (u, v) accumulation deduplicated once at extraction."""

    def __init__(self, n: int):
        self.n = n
        self.chunks: list[np.ndarray] = []

    def add_pairs(self, u: np.ndarray, v: np.ndarray) -> None:
        lo = np.minimum(u, v).astype(np.int64)
        hi = np.maximum(u, v).astype(np.int64)
        keep = lo != hi
        self.chunks.append(lo[keep] * np.int64(self.n) + hi[keep])

    def add_block(self, a0: int, a1: int, b0: int, b1: int) -> None:
        left = np.arange(a0, a1, dtype=np.int64)
        right = np.arange(b0, b1, dtype=np.int64)
        self.add_pairs(np.repeat(left, right.size), np.tile(right, left.size))

    def add_index_block(self, left_ids: np.ndarray, right_ids: np.ndarray) -> None:
        self.add_pairs(np.repeat(np.asarray(left_ids, dtype=np.int64), len(right_ids)),
                       np.tile(np.asarray(right_ids, dtype=np.int64), len(left_ids)))

    def add_band(self, width: int) -> None:
        for u in range(self.n):
            hi = min(self.n, u + 1 + width)
            if hi > u + 1:
                vs = np.arange(u + 1, hi, dtype=np.int64)
                self.chunks.append(np.int64(u) * np.int64(self.n) + vs)

    def extract(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.chunks:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        packed = np.unique(np.concatenate(self.chunks))
        return (packed // self.n).astype(np.int64), (packed % self.n).astype(np.int64)


def edge_sink(n: int):
    return DenseEdgeSink(n) if n <= _DENSE_SINK_LIMIT else SparseEdgeSink(n)


# ---------------------------------------------------------------------------
# shortest paths (Euclidean stretch oracle)
# ---------------------------------------------------------------------------

def _alive_csr(g: WeightedGraph, dead: np.ndarray) -> csr_matrix:
    if dead.size == 0:
        return g.csr()
    dead_mask = np.zeros(g.n, dtype=bool)
    dead_mask[dead] = True
    keep = ~(dead_mask[g.u] | dead_mask[g.v])
    row = np.concatenate([g.u[keep], g.v[keep]])
    col = np.concatenate([g.v[keep], g.u[keep]])
    dat = np.concatenate([g.w[keep], g.w[keep]])
    return csr_matrix((dat, (row, col)), shape=(g.n, g.n))


def shortest_path_length(g: WeightedGraph, B, source: int) -> np.ndarray:
    """Distances from source in the subgraph induced by alive vertices.

    Returns a length-n array; dead vertices and unreachable alive vertices
    hold +inf (the source itself holds 0).  Raises if the source failed.
    """
    dead = clean_vertex_set(B, g.n)
    if np.isin(source, dead):
        raise ValueError("source in failure set")
    dist = _csgraph_dijkstra(_alive_csr(g, dead), directed=False, indices=source)
    if dead.size:
        dist[dead] = np.inf
    return dist


def shortest_path_matrix(g: WeightedGraph, B, sources) -> np.ndarray:
    """Row-per-source distance matrix on the alive subgraph."""
    dead = clean_vertex_set(B, g.n)
    sources = np.asarray(sources, dtype=np.int64)
    if np.isin(sources, dead).any():
        raise ValueError("source in failure set")
    dist = _csgraph_dijkstra(_alive_csr(g, dead), directed=False, indices=sources)
    if dead.size:
        dist[:, dead] = np.inf
    return np.atleast_2d(dist)


# ---------------------------------------------------------------------------
# 1D monotone reachability (the exact-spanner oracle)
# ---------------------------------------------------------------------------

def monotone_reach_bits(g: WeightedGraph, alive_mask: int, source: int,
                        direction: str = "right", hop_cap: int | None = None) -> tuple[int, int]:
    """Bitset of vertices reachable from source by a monotone path.

    Returns (reached_mask, max_hops).  The source bit is included.  Monotone
    paths on the line telescope, so every reached vertex t is at exact
    distance |t - source|.
    """
    step_bits = g.right_bits() if direction == "right" else g.left_bits()
    front = 1 << source
    reached = front
    hops = 0
    while front:
        if hop_cap is not None and hops >= hop_cap:
            break
        nxt = 0
        for u in iter_bits(front):
            nxt |= step_bits[u]
        nxt &= alive_mask
        nxt &= ~reached
        if not nxt:
            break
        reached |= nxt
        front = nxt
        hops += 1
    return reached, hops


def monotone_reach_1d(g: WeightedGraph, B, source: int, direction: str = "right") -> np.ndarray:
    """All vertices t (not failed) reachable from source by a monotone path."""
    if direction not in ("left", "right"):
        raise ValueError("direction must be 'left' or 'right'")
    dead = clean_vertex_set(B, g.n)
    if np.isin(source, dead).any():
        raise ValueError("source in failure set")
    alive = ((1 << g.n) - 1) & ~bitmask(dead)
    reached, _ = monotone_reach_bits(g, alive, source, direction)
    reached &= ~(1 << source)
    return bits_to_array(reached)
