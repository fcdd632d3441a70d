import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from batchmesh.cdt import build_cdt, build_delaunay
from batchmesh.mesh import (
    BOUNDARY, NO_SEG, ConstraintEdge, DegreeNotThree, Mesh, NonConvex, NotInterior, ProtectedVertex,
    StaleHandle, VertexKind,
)
from batchmesh.predicates import incircle_sign
from batchmesh.pslg import Pslg
from batchmesh.verify import check_all, check_conformity, check_euler, check_topology

SQRT3 = math.sqrt(3)


def single_triangle(a=(0, 0), b=(1, 0), c=(0.5, SQRT3 / 2)):
    m = Mesh()
    for p in (a, b, c):
        m.add_vertex(p)
    t = m._new_tri(0, 1, 2)
    m.vtri[:] = [t, t, t]
    return m, t


def two_triangles(p, q, r, s):
    """Triangles (p, q, r) and (p, r, s) sharing the diagonal p-r."""
    m = Mesh()
    for pt in (p, q, r, s):
        m.add_vertex(pt)
    t = m._new_tri(0, 1, 2)
    u = m._new_tri(0, 2, 3)
    m.tn[t][1] = u      # edge (r, p) is opposite q
    m.tn[u][2] = t      # edge (p, r) is opposite s
    m.vtri[:] = [t, t, t, u]
    return m, t, u


def unit_square():
    return two_triangles((0, 0), (1, 0), (1, 1), (0, 1))


def valid(m):
    return check_topology(m) == [] and check_euler(m) == []


def test_flip_square_diagonal():
    m, t, u = unit_square()
    assert m.find_edge(0, 2) is not None
    m.flip(t, 1)
    assert m.find_edge(0, 2) is None
    assert m.find_edge(1, 3) is not None
    assert valid(m)


def test_flip_is_involution():
    m, t, u = unit_square()
    before = sorted(tuple(sorted(m.tv[k])) for k in m.triangles())
    t1, t2 = m.flip(t, 1)
    i = m.find_edge(1, 3)
    m.flip(*i)
    after = sorted(tuple(sorted(m.tv[k])) for k in m.triangles())
    assert before == after
    assert valid(m)


def test_flip_subsegment_refused():
    m, t, u = unit_square()
    m.ts[t][1] = m.ts[u][2] = m.add_subsegment(0, 2, 0)
    with pytest.raises(ConstraintEdge):
        m.flip(t, 1)


def test_flip_non_convex_refused():
    # (1, 0.2) is reflex: the quad 0-(2,0)-(1,0.2)-(1,1) is not convex
    m, t, u = two_triangles((1, 0.2), (1, 1), (0, 0), (2, 0))
    # shared edge is (1,0.2)-(0,0); flipping it would join (1,1) and (2,0)
    with pytest.raises(NonConvex):
        m.flip(t, 1)


def test_flop_centroid_of_equilateral():
    m, t = single_triangle()
    v = m.split_triangle(t, (0.5, SQRT3 / 6), VertexKind.CIRCUMCENTER, 1)
    assert m.vertex_degree(v) == 3
    assert (m.n_vertices, m.n_triangles) == (4, 3)
    m.flop(v)
    assert (m.n_vertices, m.n_triangles) == (3, 1)
    assert valid(m)


def test_flop_refuses_input_and_high_degree():
    m, t = single_triangle()
    v = m.split_triangle(t, (0.5, SQRT3 / 6), VertexKind.INPUT, 0)
    with pytest.raises(ProtectedVertex):
        m.flop(v)
    m2 = build_delaunay([(math.cos(k * 2 * math.pi / 5), math.sin(k * 2 * math.pi / 5)) for k in range(5)])
    hub = m2.split_triangle(m2.locate((0.01, 0.02), 0).tri, (0.01, 0.02), VertexKind.CIRCUMCENTER, 1)
    m2.legalize(m2.star_edges(hub))
    assert m2.vertex_degree(hub) == 5
    with pytest.raises(DegreeNotThree):
        m2.flop(hub)


def test_non_delaunay_edge_cases():
    m, t, u = unit_square()
    assert not m.is_non_delaunay_edge(t, 1)        # cocircular: exactly pi
    # a rectangle is cocircular, so its diagonal faces exactly pi as well
    m, t, u = two_triangles((0, 0), (3, 0), (3, 1), (0, 1))
    assert incircle_sign((0, 0), (3, 0), (3, 1), (0, 1)) == 0
    assert not m.is_non_delaunay_edge(t, 1)
    m, t, u = two_triangles((0, 0), (3, 0), (3, 1), (0, 1.5))
    assert m.is_non_delaunay_edge(t, 1) == (incircle_sign((0, 0), (3, 0), (3, 1), (0, 1.5)) > 0)
    for i in (0, 2):
        assert not m.is_non_delaunay_edge(t, i)    # hull edges


def test_sheared_quad_diagonal_is_non_delaunay():
    # opposite angles are 90 and about 91.9 degrees
    m, t, u = two_triangles((0, 0), (3, 0), (3, 1), (0, 0.9))
    assert m.is_non_delaunay_edge(t, 1)


def test_split_triangle_and_edge_counts():
    m, t = single_triangle()
    with pytest.raises(NotInterior):
        m.split_triangle(t, (0.5, 0.0))
    v = m.split_triangle(t, (0.5, SQRT3 / 6))
    assert (m.n_vertices, m.n_triangles) == (4, 3)
    assert all(m.orient_tri(k) > 0 for k in m.triangles())
    assert m.vertex_degree(v) == 3


def test_split_boundary_subsegment():
    m, t = single_triangle((0, 0), (2, 0), (1, 1))
    s = m.add_subsegment(0, 1, 0)
    m.parent_ends = [(0, 1)]
    m.ts[t][2] = s
    v = m.split_subsegment(s)
    assert m.xy[v] == (1.0, 0.0)
    assert (m.n_vertices, m.n_triangles) == (4, 2)
    assert len(m.subsegments()) == 2
    assert {m.seg_parent[k] for k in m.subsegments()} == {0}
    assert check_conformity(m) == []


def test_split_interior_subsegment():
    m = build_cdt(Pslg([(0, 0), (2, -1), (4, 0), (2, 1)], [(0, 2)]), promote_hull=False)
    (s,) = m.subsegments()
    n_t = m.n_triangles
    m.split_subsegment(s)
    assert m.n_triangles == n_t + 2
    assert len(m.subsegments()) == 2
    assert check_conformity(m) == []
    spans = sorted(tuple(sorted(m.xy[v] for v in m.seg_ends[k])) for k in m.subsegments())
    assert spans == [((0.0, 0.0), (2.0, 0.0)), ((2.0, 0.0), (4.0, 0.0))]


def test_degrees():
    m, t = single_triangle()
    assert m.vertex_degree(0) == 2
    m, t, u = unit_square()
    assert m.vertex_degree(0) == 3
    assert m.vertex_degree(1) == 2
    assert sorted(m.walk_neighbors(t)) == [u]


def test_stale_handles():
    m, t = single_triangle()
    m._kill_tri(t)
    with pytest.raises(StaleHandle):
        m.walk_neighbors(t)
    with pytest.raises(StaleHandle):
        m.vertex_degree(99)


def test_slots_recycled_only_between_batches():
    m, t = single_triangle()
    v = m.split_triangle(t, (0.5, SQRT3 / 6), VertexKind.CIRCUMCENTER, 1)
    m.flop(v)
    dead = set(range(len(m.tv))) - set(m.triangles())
    assert len(dead) == 2
    w = m.split_triangle(m.triangles()[0], (0.5, 0.3))
    assert not dead & set(m.triangles())          # no reuse within the batch
    m.begin_batch()
    m.split_triangle(m.locate((0.5, 0.1), m.vtri[w]).tri, (0.5, 0.1))
    assert dead & set(m.triangles())


def test_remove_free_vertex_restores_triangulation():
    rng = random.Random(3)
    pts = [(rng.random(), rng.random()) for _ in range(60)]
    m = build_delaunay(pts)
    loc = m.locate((0.5, 0.5), m.triangles()[0])
    if loc.where == "in":
        v = m.split_triangle(loc.tri, (0.5, 0.5), VertexKind.CIRCUMCENTER, 1)
    else:
        v = m.split_edge(loc.tri, loc.index, (0.5, 0.5), VertexKind.CIRCUMCENTER, 1)
    m.legalize(m.star_edges(v))
    link = m.neighbors_of_vertex(v)
    assert m.remove_free_vertex(v)
    m.legalize([e for w in link for e in m.star_edges(w)])
    assert check_all(m) == []
    assert m.n_vertices == 60


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_random_operation_sequences_keep_invariants(seed):
    rng = random.Random(seed)
    pts = [(rng.uniform(0, 10), rng.uniform(0, 10)) for _ in range(25)]
    pslg = Pslg([(0, 0), (10, 0), (10, 10), (0, 10)] + pts, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])
    try:
        pslg.validate()
    except Exception:
        return
    m = build_cdt(pslg)
    n_segs = len(m.subsegments())
    for step in range(60):
        op = rng.random()
        tris = m.triangles()
        t = rng.choice(tris)
        if op < 0.4:
            i = rng.randrange(3)
            flagged = m.ts[t][i] != NO_SEG
            try:
                m.flip(t, i)
                assert not flagged
            except ConstraintEdge:
                assert flagged
            except NonConvex:
                pass
        elif op < 0.7:
            a, b, c = (m.xy[v] for v in m.tv[t])
            w = [rng.uniform(0.1, 1) for _ in range(3)]
            p = tuple(sum(wk * q[k] for wk, q in zip(w, (a, b, c))) / sum(w) for k in range(2))
            try:
                m.split_triangle(t, p, VertexKind.CIRCUMCENTER, 1)
            except NotInterior:
                pass
        elif op < 0.85:
            segs = m.subsegments()
            s = rng.choice(segs)
            try:
                m.split_subsegment(s)
            except NotInterior:
                pass
        else:
            free = [v for v in m.vertices() if m.vkind[v] == VertexKind.CIRCUMCENTER]
            if free:
                m.remove_free_vertex(rng.choice(free))
        assert check_topology(m) == []
        assert check_euler(m) == []
        assert check_conformity(m) == []
    assert len(m.subsegments()) >= n_segs


def test_locate_reports_position_kinds():
    m, t, u = unit_square()
    assert m.locate((0.7, 0.2), t).where == "in"
    assert m.locate((0.5, 0.5), t).where == "edge"
    loc = m.locate((1, 1), t)
    assert (loc.where, loc.index) == ("vertex", 2)
    assert m.locate((2, 0.5), t).where == "out"
