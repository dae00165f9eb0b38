"""Exact shadow computations: 1D left/right, quadtree cells, Euclidean balls.

A vertex is shadowed when some neighborhood anchored at it is at least an
alpha-fraction failed.  All membership tests here are exact integer
comparisons: thresholds are Fractions, never floats, so results are
bit-stable and witnesses can be replayed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graph_core import PointSet, clean_vertex_set

_INT64_SAFE = 1 << 62


def as_fraction(alpha) -> Fraction:
    """Exact threshold from Fraction, int, str ("1/96", "0.25") or float.

    Floats are interpreted through their shortest decimal form, which is what
    the caller typed in every practical case.
    """
    if isinstance(alpha, Fraction):
        return alpha
    if isinstance(alpha, int):
        return Fraction(alpha)
    if isinstance(alpha, str):
        return Fraction(alpha)
    if isinstance(alpha, float):
        return Fraction(repr(alpha))
    raise TypeError(f"cannot interpret {alpha!r} as an exact fraction")


@dataclass
class ShadowResult:
    alpha: Fraction
    n: int
    side: str  # "left" | "right" | "both"
    members: np.ndarray
    witnesses: dict[int, tuple[int, int]] | None = None

    @property
    def size(self) -> int:
        return int(self.members.size)


# ---------------------------------------------------------------------------
# 1D shadow
# ---------------------------------------------------------------------------

def _left_members_fast(n: int, bad: np.ndarray, p: int, q: int) -> np.ndarray:
    """Vector path: i is in the left shadow iff some run starting at i has
    reweighted sum >= 0, where bad positions score q-p and good ones -p."""
    y = np.full(n, -p, dtype=np.int64)
    y[bad] += q
    prefix = np.concatenate([[0], np.cumsum(y)])
    sufmax = np.maximum.accumulate(prefix[1:][::-1])[::-1]
    return np.nonzero(sufmax >= prefix[:-1])[0].astype(np.int64)


def _left_members_exact(n: int, bad_set: set[int], p: int, q: int,
                        want_witness: bool) -> tuple[list[int], dict[int, tuple[int, int]]]:
    members: list[int] = []
    witnesses: dict[int, tuple[int, int]] = {}
    tail = 0  # best suffix-anchored sum starting just right of i
    tail_j = n  # right endpoint achieving it
    for i in range(n - 1, -1, -1):
        y = (q - p) if i in bad_set else -p
        if tail > 0:
            total, j = y + tail, tail_j
        else:
            total, j = y, i
        if total >= 0:
            members.append(i)
            if want_witness:
                witnesses[i] = (i, j)
        tail, tail_j = total, j
    members.reverse()
    return members, witnesses


def shadow_1d(n: int, B, alpha, side: str = "both", witness: bool = False) -> ShadowResult:
    """Exact alpha-shadow of B on {0, ..., n-1}, O(n) per side.

    Left shadow: i such that some interval [i, j] (j >= i) has at least an
    alpha fraction of failed positions; the right shadow is the mirror image.
    """
    a = as_fraction(alpha)
    if not (0 < a <= 1):
        raise ValueError("alpha must be in (0, 1]")
    if side not in ("left", "right", "both"):
        raise ValueError("side must be left, right or both")
    bad = clean_vertex_set(B, n)
    p, q = a.numerator, a.denominator

    use_fast = (not witness) and (q * (n + 1) < _INT64_SAFE)
    members_by_side = {}
    witnesses: dict[int, tuple[int, int]] = {}

    def left_of(bad_ids: np.ndarray) -> tuple[np.ndarray, dict]:
        if use_fast:
            return _left_members_fast(n, bad_ids, p, q), {}
        mem, wit = _left_members_exact(n, set(bad_ids.tolist()), p, q, witness)
        return np.asarray(mem, dtype=np.int64), wit

    if side in ("left", "both"):
        mem, wit = left_of(bad)
        members_by_side["left"] = mem
        witnesses.update(wit)
    if side in ("right", "both"):
        mirrored = np.sort(n - 1 - bad)
        mem, wit = left_of(mirrored)
        members_by_side["right"] = np.sort(n - 1 - mem)
        for i, (lo, hi) in wit.items():
            witnesses[n - 1 - i] = (n - 1 - hi, n - 1 - lo)

    if side == "both":
        members = np.union1d(members_by_side["left"], members_by_side["right"])
    else:
        members = members_by_side[side]
    return ShadowResult(a, n, side, members, witnesses if witness else None)


def verify_witness(result: ShadowResult, B) -> bool:
    """Replay every recorded witness interval with pure integer counting."""
    if result.witnesses is None:
        raise ValueError("shadow was computed without witnesses")
    bad = set(clean_vertex_set(B, result.n).tolist())
    p, q = result.alpha.numerator, result.alpha.denominator
    for i, (lo, hi) in result.witnesses.items():
        if not (lo <= i <= hi):
            return False
        count = sum(1 for k in range(lo, hi + 1) if k in bad)
        if q * count < p * (hi - lo + 1):
            return False
    return True


def check_shadow_bounds(result: ShadowResult, B) -> dict:
    """Size-bound report: the general 2(1 + ceil(1/a))|B| cap, plus the
    |B| / (2a - 1) cap that kicks in for a in (2/3, 1)."""
    a = result.alpha
    k = clean_vertex_set(B, result.n).size
    per_side = (1 + math.ceil(1 / a))
    general = per_side * k if result.side in ("left", "right") else 2 * per_side * k
    report = {
        "size": result.size,
        "bad": int(k),
        "general_bound": int(general),
        "general_ok": result.size <= general,
    }
    if Fraction(2, 3) < a < 1 and result.side == "both":
        # exact comparison: |shadow| * (2a - 1) <= |B|
        ok = result.size * (2 * a - 1) <= k
        report["tight_bound"] = float(k / (2 * a - 1))
        report["tight_ok"] = bool(ok)
    return report


# ---------------------------------------------------------------------------
# quadtree shadow
# ---------------------------------------------------------------------------

@dataclass
class QuadtreeShadow:
    gamma: Fraction
    members: np.ndarray
    shadowed_nodes: list[int]
    maximal_nodes: list[int]

    @property
    def size(self) -> int:
        return int(self.members.size)


def shadow_quadtree(tree, B, gamma) -> QuadtreeShadow:
    """Union of the point sets of all tree cells that are >= gamma failed.

    One bottom-up pass accumulates (size, failed-size) per node; membership
    comparisons are integer-exact.
    """
    g = as_fraction(gamma)
    if not (0 < g <= 1):
        raise ValueError("gamma must be in (0, 1]")
    bad = clean_vertex_set(B, tree.n_points)
    bad_mark = np.zeros(tree.n_points, dtype=bool)
    bad_mark[bad] = True
    p, q = g.numerator, g.denominator

    size = [0] * len(tree.nodes)
    nbad = [0] * len(tree.nodes)
    shadowed: list[int] = []
    for idx in tree.postorder():
        node = tree.nodes[idx]
        if node.children:
            size[idx] = sum(size[c] for c in node.children)
            nbad[idx] = sum(nbad[c] for c in node.children)
        else:
            size[idx] = len(node.point_ids)
            nbad[idx] = int(bad_mark[node.point_ids].sum())
        if size[idx] and q * nbad[idx] >= p * size[idx]:
            shadowed.append(idx)

    shadowed_set = set(shadowed)
    maximal = [idx for idx in shadowed
               if not _has_shadowed_ancestor(tree, idx, shadowed_set)]
    member_ids = [tree.nodes[idx].point_ids for idx in maximal]
    members = (np.unique(np.concatenate(member_ids)) if member_ids
               else np.empty(0, dtype=np.int64))
    return QuadtreeShadow(g, members, shadowed, maximal)


def _has_shadowed_ancestor(tree, idx: int, shadowed: set[int]) -> bool:
    cur = tree.nodes[idx].parent
    while cur is not None:
        if cur in shadowed:
            return True
        cur = tree.nodes[cur].parent
    return False


# ---------------------------------------------------------------------------
# Euclidean ball shadow (exact oracle) and the cone-marking superset
# ---------------------------------------------------------------------------

def shadow_balls_oracle(points, B, alpha) -> ShadowResult:
    """Exact ball shadow: p is shadowed iff some ball b(p, r) holds at least
    an alpha fraction of failed points.  Only radii at data distances matter,
    and ties in distance are grouped so closed-ball counts stay exact."""
    coords = points.coords if isinstance(points, PointSet) else np.asarray(points, dtype=np.float64)
    n = coords.shape[0]
    a = as_fraction(alpha)
    if not (0 < a <= 1):
        raise ValueError("alpha must be in (0, 1]")
    bad = clean_vertex_set(B, n)
    bad_mark = np.zeros(n, dtype=bool)
    bad_mark[bad] = True
    p, q = a.numerator, a.denominator

    members = []
    for i in range(n):
        d2 = ((coords - coords[i]) ** 2).sum(axis=1)
        order = np.argsort(d2, kind="stable")
        d2s = d2[order]
        cum_bad = np.cumsum(bad_mark[order].astype(np.int64))
        counts = np.arange(1, n + 1, dtype=np.int64)
        # closed balls: a radius group ends where the next distance is larger
        group_end = np.empty(n, dtype=bool)
        group_end[:-1] = d2s[:-1] < d2s[1:]
        group_end[-1] = True
        hit = (q * cum_bad[group_end]) >= (p * counts[group_end])
        if hit.any():
            members.append(i)
    return ShadowResult(a, n, "both", np.asarray(members, dtype=np.int64))


def cone_directions_3d(count: int = 32) -> np.ndarray:
    """Fixed Fibonacci-lattice directions; nearest-direction cells form an
    interior-disjoint cone family with angular diameter below pi/3."""
    i = np.arange(count, dtype=np.float64)
    z = 1.0 - 2.0 * (i + 0.5) / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


_CONES_3D = cone_directions_3d()


def cone_index(vecs: np.ndarray, d: int) -> np.ndarray:
    """Half-open cone assignment for nonzero direction vectors."""
    if d == 2:
        ang = np.arctan2(vecs[:, 1], vecs[:, 0])
        ang = np.mod(ang, 2.0 * math.pi)
        idx = np.floor(ang / (math.pi / 3.0)).astype(np.int64)
        return np.minimum(idx, 5)
    if d == 3:
        norm = np.linalg.norm(vecs, axis=1, keepdims=True)
        unit = vecs / norm
        dots = unit @ _CONES_3D.T
        return np.argmax(dots, axis=1).astype(np.int64)  # argmax ties -> lowest index
    raise ValueError("cone marking supports d = 2 or 3 only")


def cone_count(d: int) -> int:
    if d == 2:
        return 6
    if d == 3:
        return _CONES_3D.shape[0]
    raise ValueError("cone marking supports d = 2 or 3 only")


def cone_mark_unsafe(points, B, alpha) -> np.ndarray:
    """Superset of the ball shadow by cone marking.

    For each failed point and each cone anchored there, the ceil(1/alpha)
    closest surviving non-failed points inside the cone are marked unsafe and
    withdrawn from the working set.  Distance ties break to the lowest id.
    """
    coords = points.coords if isinstance(points, PointSet) else np.asarray(points, dtype=np.float64)
    n, d = coords.shape
    ncones = cone_count(d)
    a = as_fraction(alpha)
    if not (0 < a <= 1):
        raise ValueError("alpha must be in (0, 1]")
    take = math.ceil(1 / a)
    bad = clean_vertex_set(B, n)
    bad_mark = np.zeros(n, dtype=bool)
    bad_mark[bad] = True

    in_working = np.ones(n, dtype=bool)
    unsafe = np.zeros(n, dtype=bool)
    for qid in bad.tolist():
        unsafe[qid] = True
        in_working[qid] = False
    for qid in bad.tolist():
        cand = np.nonzero(in_working & ~bad_mark)[0]
        if cand.size == 0:
            break
        vecs = coords[cand] - coords[qid]
        cones = cone_index(vecs, d)
        dist2 = (vecs ** 2).sum(axis=1)
        for c in range(ncones):
            sel = cand[cones == c]
            if sel.size == 0:
                continue
            order = np.lexsort((sel, dist2[cones == c]))
            chosen = sel[order[:take]]
            unsafe[chosen] = True
            in_working[chosen] = False
    return np.nonzero(unsafe)[0].astype(np.int64)
