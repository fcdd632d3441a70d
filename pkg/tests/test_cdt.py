import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from batchmesh.cdt import AllCollinear, build_cdt, build_delaunay, hilbert_order
from batchmesh.mesh import NO_SEG
from batchmesh.pslg import CrossingSegments, Pslg
from batchmesh.verify import check_all, check_cdt_brute, check_conformity


def edges_of(m):
    out = set()
    for t in m.triangles():
        for i in range(3):
            a, b = m.edge(t, i)
            out.add((min(a, b), max(a, b)))
    return out


def test_square_gives_two_triangles():
    m = build_cdt(Pslg([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1), (1, 2), (2, 3), (3, 0)]))
    assert m.n_triangles == 2
    assert len(m.subsegments()) == 4
    assert check_all(m) == []


def test_three_points_one_triangle():
    m = build_delaunay([(0, 0), (1, 0), (0, 1)])
    assert m.n_triangles == 1
    assert all(m.orient_tri(t) > 0 for t in m.triangles())


def test_collinear_input_rejected():
    with pytest.raises(AllCollinear):
        build_delaunay([(0, 0), (1, 1), (2, 2), (3, 3)])
    with pytest.raises(AllCollinear):
        build_delaunay([(0, 0), (1, 0)])


def test_square_diagonal_segment_is_flagged():
    m = build_cdt(Pslg([(0, 0), (1, 0), (1, 1), (0, 1)], [(1, 3)]))
    loc = m.find_edge(1, 3)
    assert loc is not None
    t, i = loc
    assert m.ts[t][i] != NO_SEG
    assert check_all(m) == []


def test_random_points_are_delaunay_by_brute_force():
    rng = random.Random(11)
    pts = [(rng.random(), rng.random()) for _ in range(1000)]
    m = build_delaunay(pts)
    assert m.n_vertices == 1000
    assert check_cdt_brute(m) == []


def test_segment_crossing_many_edges_is_recovered():
    rng = random.Random(5)
    pts = [(0.0, 0.5), (1.0, 0.5)] + [(rng.uniform(0.05, 0.95), rng.uniform(0, 1)) for _ in range(200)]
    pts = [p for k, p in enumerate(pts) if k < 2 or abs(p[1] - 0.5) > 1e-3]
    plain = build_delaunay(pts)
    crossed = sum(1 for a, b in edges_of(plain)
                  if (plain.xy[a][1] - 0.5) * (plain.xy[b][1] - 0.5) < 0
                  and min(plain.xy[a][0], plain.xy[b][0]) < 1)
    assert crossed > 5
    m = build_cdt(Pslg(pts, [(0, 1)]))
    assert (0, 1) in edges_of(m)
    assert check_conformity(m) == []
    assert check_cdt_brute(m) == []


def test_crossing_segments_rejected():
    with pytest.raises(CrossingSegments):
        Pslg([(0, 0), (2, 2), (0, 2), (2, 0)], [(0, 1), (2, 3)]).validate()


def test_hull_edges_promoted_to_segments():
    m = build_cdt(Pslg([(0, 0), (4, 0), (2, 3), (2, 1)], []))
    assert len(m.subsegments()) == 3
    m2 = build_cdt(Pslg([(0, 0), (4, 0), (2, 3), (2, 1)], []), promote_hull=False)
    assert m2.subsegments() == []


def test_hilbert_order_is_a_permutation():
    rng = random.Random(0)
    pts = [(rng.random(), rng.random()) for _ in range(500)]
    order = list(hilbert_order(pts))
    assert sorted(order) == list(range(500))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(4, 60))
def test_random_pslg_cdt(seed, n):
    rng = random.Random(seed)
    box = [(0, 0), (10, 0), (10, 10), (0, 10)]
    inner = [(rng.uniform(0.5, 9.5), rng.uniform(0.5, 9.5)) for _ in range(n)]
    segs = [(0, 1), (1, 2), (2, 3), (3, 0)]
    for _ in range(5):
        a, b = rng.sample(range(4, 4 + n), 2)
        trial = Pslg(box + inner, segs + [(a, b)])
        try:
            trial.validate()
        except Exception:
            continue
        segs.append((a, b))
    pslg = Pslg(box + inner, segs)
    pslg.validate()
    m = build_cdt(pslg)
    assert check_all(m) == []
    assert check_cdt_brute(m) == []
    flagged = {tuple(sorted(m.seg_ends[s])) for s in m.subsegments()}
    for a, b in segs:
        assert tuple(sorted((a, b))) in flagged


def test_grid_with_cocircular_points():
    pts = [(x, y) for x in range(8) for y in range(8)]
    m = build_delaunay(pts)
    assert m.n_triangles == 2 * 7 * 7
    assert check_cdt_brute(m) == []
    # regular polygon: every quadruple is cocircular
    poly = [(math.cos(2 * math.pi * k / 12), math.sin(2 * math.pi * k / 12)) for k in range(12)]
    assert build_delaunay(poly).n_triangles == 10
