import numpy as np
import pytest

from relspan.lso import (Ordering, build_ordering_family, check_lso_property,
                         family_shape, family_size, sort_by_ordering)
from relspan.streams import substream


def test_family_shape_and_size_recorded():
    fam = build_ordering_family(2, 0.25)
    assert fam.M == len(fam.orderings)
    assert fam.M == family_size(2, 0.25)
    kinds = {o.kind for o in fam.orderings}
    assert kinds == {"morton", "step"}


def test_family_size_monotone_in_sigma():
    sizes = [family_size(2, s) for s in (0.5, 0.25, 0.125, 0.0625)]
    for a, b in zip(sizes, sizes[1:]):
        assert a <= b  # smaller sigma: more orderings


def test_d1_zero_shift_is_coordinate_order():
    fam = build_ordering_family(1, 0.5)
    zero = next(o for o in fam.orderings
                if o.kind == "morton" and o.shift == (0.0,) and o.reflection == 0)
    rng = substream(1, "d1")
    pts = rng.random((200, 1))
    perm = sort_by_ordering(zero, pts)
    assert (np.diff(pts[perm, 0]) >= 0).all()


def test_vector_and_scalar_keys_agree_d2():
    fam = build_ordering_family(2, 0.25)
    rng = substream(2, "keys")
    pts = rng.random((64, 2))
    for o in fam.orderings[::37]:
        vec = o.keys(pts)
        scalar = np.array([o.key_one(p) for p in pts], dtype=np.uint64)
        assert (vec == scalar).all(), o


def test_comparator_totality_sampled():
    fam = build_ordering_family(2, 0.25)
    rng = substream(3, "total")
    pts = rng.random((2000, 2))
    o = fam.orderings[len(fam.orderings) // 2]
    keys = o.keys(pts)
    ids = np.arange(2000)
    # strict total order including the id tiebreak: sort then every
    # consecutive pair must be strictly increasing in (key, id)
    perm = np.lexsort((ids, keys))
    k_sorted = keys[perm]
    i_sorted = ids[perm]
    strict = (k_sorted[:-1] < k_sorted[1:]) | \
             ((k_sorted[:-1] == k_sorted[1:]) & (i_sorted[:-1] < i_sorted[1:]))
    assert strict.all()


def test_comparator_transitivity_sampled():
    fam = build_ordering_family(2, 0.5)
    rng = substream(4, "trans")
    pts = rng.random((3000, 2))
    for o in (fam.orderings[0], fam.orderings[-1]):
        keys = o.keys(pts)
        tri = rng.integers(0, 3000, size=(2000, 3))
        a, b, c = keys[tri[:, 0]], keys[tri[:, 1]], keys[tri[:, 2]]
        # keys are integers: a<b<c implies a<c automatically; verify no
        # cyclic comparisons arise through the tuple comparison itself
        cyc = (a < b) & (b < c) & (c < a)
        assert not cyc.any()


def test_same_cell_pair_trivially_passes():
    fam = build_ordering_family(2, 0.25)
    p = np.array([0.40001, 0.40001])
    q = np.array([0.40002, 0.40002])
    res = check_lso_property(fam, p, q, sample_count=200, seed=5)
    assert res.ok


def test_identical_points_rejected():
    fam = build_ordering_family(2, 0.5)
    with pytest.raises(ValueError):
        check_lso_property(fam, [0.3, 0.3], [0.3, 0.3])


def test_witness_rate_unit_scale():
    fam = build_ordering_family(2, 0.25)
    rng = substream(6, "pairs")
    found = 0
    trials = 400
    for t in range(trials):
        p, q = rng.random(2), rng.random(2)
        if np.allclose(p, q):
            continue
        res = check_lso_property(fam, p, q, sample_count=200, seed=t)
        found += res.ok
    assert found / trials >= 0.97


def test_check_uses_dataset_points():
    fam = build_ordering_family(2, 0.25)
    rng = substream(7, "data")
    data = rng.random((128, 2))
    p, q = data[3], data[77]
    res = check_lso_property(fam, p, q, sample_count=50, points=data, seed=1)
    assert res.ok in (True, False)  # runs with dataset augmentation


def test_step_ordering_consecutive_construction():
    # the defining property: cells at offset delta are consecutive
    fam = build_ordering_family(2, 0.25)
    o = next(o for o in fam.orderings if o.kind == "step")
    t, (dx, dy) = o.t, o.delta
    m = 1 << t
    mod = m * m
    v1, v2 = o.v
    for cx, cy in [(1, 2), (5, 3), (0, 0)]:
        qx, qy = cx + dx, cy + dy
        if not (0 <= qx < m and 0 <= qy < m):
            continue
        phi_p = (v1 * cx + v2 * cy) % mod
        phi_q = (v1 * qx + v2 * qy) % mod
        assert (phi_q - phi_p) % mod == 1


def test_step_enumeration_bijective_small():
    fam = build_ordering_family(2, 0.25)
    o = next(o for o in fam.orderings if o.kind == "step" and o.t <= 4)
    m = 1 << o.t
    mod = m * m
    v1, v2 = o.v
    seen = {(v1 * x + v2 * y) % mod for x in range(m) for y in range(m)}
    assert len(seen) == mod


def test_unsupported_dimension():
    with pytest.raises(ValueError):
        family_shape(9, 0.5)
    with pytest.raises(ValueError):
        family_shape(2, 1.5)


def test_d3_family_smoke():
    fam = build_ordering_family(3, 0.5)
    assert fam.M == family_size(3, 0.5)
    rng = substream(20, "d3")
    pts = rng.random((40, 3))
    o = fam.orderings[0]
    keys = [o.key_one(p) for p in pts]
    assert len(set(keys)) == len(keys)
    perm = sort_by_ordering(o, pts)
    assert sorted(perm.tolist()) == list(range(40))
    step = next(o for o in fam.orderings if o.kind == "step")
    kp = [step.key_one(p) for p in pts]
    assert len(set(kp)) == len(kp)
    # witness search works in 3D as well
    res = check_lso_property(fam, pts[0], pts[1], sample_count=60, seed=1)
    assert res.ok in (True, False)
