"""Initial constrained Delaunay triangulation of a PSLG.

Vertices are inserted incrementally in Hilbert order with walking point
location and Lawson flips; segments are then recovered by flipping the
edges they cross, and the result is re-legalised to a CDT.  Hull edges that
are not input segments are promoted to segments so refinement never needs
to insert outside the hull.
"""

from __future__ import annotations

from collections import deque

from .mesh import BOUNDARY, NO_SEG, Mesh, MeshError, NonConvex, VertexKind, _NEXT, _PREV
from .predicates import orient_sign
from .pslg import CrossingSegments, Pslg


class AllCollinear(MeshError):
    pass


def _hilbert_index(x, y, order=16):
    d = 0
    s = 1 << (order - 1)
    while s > 0:
        rx = 1 if x & s else 0
        ry = 1 if y & s else 0
        d += s * s * ((3 * rx) ^ ry)
        if ry == 0:
            if rx == 1:
                x = s - 1 - x
                y = s - 1 - y
            x, y = y, x
        s >>= 1
    return d


def hilbert_order(points):
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x0, y0 = min(xs), min(ys)
    span = max(max(xs) - x0, max(ys) - y0) or 1.0
    scale = ((1 << 16) - 1) / span
    keys = [(_hilbert_index(int((x - x0) * scale), int((y - y0) * scale)), k)
            for k, (x, y) in enumerate(points)]
    keys.sort()
    return [k for _, k in keys]


def _hull_next(m: Mesh, t, i):
    """Hull edge following boundary edge (t, i) in CCW hull order."""
    b = m.tv[t][_PREV[i]]
    while True:
        jb = m.tv[t].index(b)
        k = _PREV[jb]
        u = m.tn[t][k]
        if u == BOUNDARY:
            return t, k
        t = u


def _hull_prev(m: Mesh, t, i):
    """Hull edge preceding boundary edge (t, i) in CCW hull order."""
    a = m.tv[t][_NEXT[i]]
    while True:
        ja = m.tv[t].index(a)
        k = _NEXT[ja]
        u = m.tn[t][k]
        if u == BOUNDARY:
            return t, k
        t = u


def _insert_outside(m: Mesh, v, t, i):
    """Attach vertex v, outside the hull, to every hull edge it sees."""
    xy = m.xy
    p = xy[v]
    visible = [(t, i)]
    tt, ii = _hull_next(m, t, i)
    while (tt, ii) != (t, i):
        q, r = m.edge(tt, ii)
        if orient_sign(xy[q], xy[r], p) >= 0:
            break
        visible.append((tt, ii))
        tt, ii = _hull_next(m, tt, ii)
    back = []
    tt, ii = _hull_prev(m, t, i)
    while (tt, ii) not in visible:
        q, r = m.edge(tt, ii)
        if orient_sign(xy[q], xy[r], p) >= 0:
            break
        back.append((tt, ii))
        tt, ii = _hull_prev(m, tt, ii)
    chain = list(reversed(back)) + visible  # CCW along the hull

    new = []
    for tt, ii in chain:
        q, r = m.edge(tt, ii)
        n = m._new_tri(v, r, q)
        m.tn[n][0] = tt
        m.tn[tt][ii] = n
        m.ts[n][0] = m.ts[tt][ii]
        new.append(n)
        m.vtri[q] = n
    # consecutive fan triangles share the spoke (v, r_k) == (v, q_{k+1})
    for a, b in zip(new, new[1:]):
        # a = (v, r_a, q_a); b = (v, r_b, q_b) with q_b == r_a
        m.tn[a][2] = b   # edge (v, r_a) opposite q_a
        m.tn[b][1] = a   # edge (q_b, v) opposite r_b
    m.vtri[v] = new[0]
    return [(n, 0) for n in new]


def _insert_vertex(m: Mesh, v, hint):
    loc = m.locate(m.xy[v], hint)
    if loc.where == "in":
        m.split_triangle(loc.tri, m.xy[v], VertexKind.INPUT, 0, v=v)
    elif loc.where == "edge":
        m.split_edge(loc.tri, loc.index, m.xy[v], VertexKind.INPUT, 0, v=v)
    elif loc.where == "vertex":
        raise MeshError(f"vertex {v} duplicates vertex {loc.index}")
    else:
        _insert_outside(m, v, loc.tri, loc.index)
    m.legalize(m.star_edges(v))


def build_delaunay(points) -> Mesh:
    """Delaunay triangulation of a point set (vertex k is points[k])."""
    if len(points) < 3:
        raise AllCollinear("need at least three points")
    m = Mesh()
    for p in points:
        m.add_vertex(p, VertexKind.INPUT, 0)
    order = hilbert_order(m.xy)
    xy = m.xy
    a = order[0]
    b = next(k for k in order[1:] if xy[k] != xy[a])
    c = None
    for k in order:
        if k in (a, b):
            continue
        o = orient_sign(xy[a], xy[b], xy[k])
        if o != 0:
            c = k
            if o < 0:
                a, b = b, a
            break
    if c is None:
        raise AllCollinear("all points are collinear")
    t = m._new_tri(a, b, c)
    m.vtri[a] = m.vtri[b] = m.vtri[c] = t
    hint = t
    for k in order:
        if k in (a, b, c):
            continue
        _insert_vertex(m, k, hint)
        hint = m.vtri[k]
    return m


def _flag(m: Mesh, a, b, parent):
    s = m.add_subsegment(a, b, parent, 0)
    t, i = m.find_edge(a, b)
    m.ts[t][i] = s
    across = m.apex_across(t, i)
    if across is not None:
        u, j, _ = across
        m.ts[u][j] = s
    return s


def _first_crossing(m: Mesh, a, b):
    """Walk out of a toward b.

    Returns ("vertex", w) if a vertex w lies on the open segment ab, or
    ("edges", [crossed edges as vertex pairs]) if ab cuts through edges
    before reaching b or such a vertex.
    """
    xy = m.xy
    pa, pb = xy[a], xy[b]
    start = None
    for t, j in m.star(a):
        x, y = m.tv[t][_NEXT[j]], m.tv[t][_PREV[j]]
        ox = orient_sign(pa, xy[x], pb)
        oy = orient_sign(pa, xy[y], pb)
        if ox == 0 and _same_direction(pa, xy[x], pb):
            return "vertex", x
        if oy == 0 and _same_direction(pa, xy[y], pb):
            return "vertex", y
        if ox > 0 and oy < 0:
            start = (t, j)
            break
    if start is None:
        raise MeshError(f"segment {a}-{b} leaves the hull")
    t, j = start
    x, y = m.tv[t][_NEXT[j]], m.tv[t][_PREV[j]]
    crossed = []
    while True:
        crossed.append((x, y))
        across = m.apex_across(t, m.edge_slot(t, x, y))
        if across is None:
            raise MeshError(f"segment {a}-{b} leaves the hull")
        u, _, s = across
        if s == b:
            return "edges", crossed
        o = orient_sign(pa, pb, xy[s])
        if o == 0:
            return "vertex", s
        # x is right of a->b, y is left
        if o > 0:
            y = s
        else:
            x = s
        t = u


def _same_direction(pa, px, pb):
    return (px[0] - pa[0]) * (pb[0] - pa[0]) + (px[1] - pa[1]) * (pb[1] - pa[1]) > 0


def _recover_edge(m: Mesh, a, b, parent):
    xy = m.xy
    while True:
        if m.find_edge(a, b) is not None:
            _flag_checked(m, a, b, parent)
            return
        kind, found = _first_crossing(m, a, b)
        if kind == "vertex":
            w = found
            _recover_edge(m, a, w, parent)
            a = w
            continue
        for x, y in found:
            e = m.find_edge(x, y)
            if e is not None and m.ts[e[0]][e[1]] != NO_SEG:
                raise CrossingSegments(m.ts[e[0]][e[1]], parent)
        queue = deque(found)
        stall = 0
        pa, pb = xy[a], xy[b]
        while queue:
            x, y = queue.popleft()
            e = m.find_edge(x, y)
            if e is None:
                continue
            t, i = e
            try:
                t1, _ = m.flip(t, i)
            except NonConvex:
                queue.append((x, y))
                stall += 1
                if stall > 4 * len(queue) + 8:
                    raise MeshError(f"segment {a}-{b} recovery stalled")
                continue
            stall = 0
            # the new diagonal joins the former apexes: t1 = (p, q, s), edge opposite q
            p_, s_ = m.tv[t1][0], m.tv[t1][2]
            if p_ in (a, b) or s_ in (a, b):
                continue
            o1 = orient_sign(pa, pb, xy[p_])
            o2 = orient_sign(pa, pb, xy[s_])
            if o1 * o2 < 0:
                queue.append((p_, s_))


def _flag_checked(m: Mesh, a, b, parent):
    t, i = m.find_edge(a, b)
    if m.ts[t][i] != NO_SEG:
        if m.seg_parent[m.ts[t][i]] != parent:
            raise CrossingSegments(m.seg_parent[m.ts[t][i]], parent)
        return
    _flag(m, a, b, parent)


def recover_segments(m: Mesh, pslg: Pslg, promote_hull: bool = True) -> Mesh:
    """Insert every PSLG segment as a chain of flagged mesh edges and restore
    constrained Delaunayhood.  With ``promote_hull`` the remaining hull edges
    become segments too."""
    m.parent_ends = list(pslg.segments)
    m.n_input_segments = len(pslg.segments)
    for k, (a, b) in enumerate(pslg.segments):
        _recover_edge(m, a, b, k)
    if promote_hull:
        for t in m.triangles():
            for i in range(3):
                if m.tn[t][i] == BOUNDARY and m.ts[t][i] == NO_SEG:
                    a, b = m.edge(t, i)
                    parent = len(m.parent_ends)
                    m.parent_ends.append((a, b))
                    s = m.add_subsegment(a, b, parent, 0)
                    m.ts[t][i] = s
    m.legalize([(t, i) for t in m.triangles() for i in range(3)])
    return m


def build_cdt(pslg: Pslg, promote_hull: bool = True) -> Mesh:
    m = build_delaunay(pslg.points)
    return recover_segments(m, pslg, promote_hull)
