"""Triangle-based constrained triangulation with neighbour links.

Layout is struct-of-lists: triangle ``t`` has CCW vertices ``tv[t]``,
neighbours ``tn[t]`` (``tn[t][i]`` is across the edge opposite
``tv[t][i]``, ``BOUNDARY`` on the hull) and subsegment flags ``ts[t]``
(subsegment id of edge ``i`` or ``NO_SEG``).  Edge ``i`` of ``t`` runs from
``tv[t][(i+1)%3]`` to ``tv[t][(i+2)%3]``.

Freed triangle slots go to a pending list and only become reusable after
:meth:`Mesh.begin_batch`, so handles stay stable during a batch.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

from .predicates import incircle_sign, orient_sign

BOUNDARY = -1
NO_SEG = -1


class VertexKind(enum.IntEnum):
    INPUT = 0
    MIDPOINT = 1
    CIRCUMCENTER = 2


class MeshError(Exception):
    pass


class ConstraintEdge(MeshError):
    pass


class NonConvex(MeshError):
    pass


class DegreeNotThree(MeshError):
    pass


class ProtectedVertex(MeshError):
    pass


class NotInterior(MeshError):
    pass


class StaleHandle(MeshError):
    pass


@dataclass
class Location:
    """Result of a point-location walk.

    ``where`` is one of ``"in"``, ``"edge"`` (``index`` = edge), ``"vertex"``
    (``index`` = vertex id) or ``"out"`` (``index`` = hull edge seen from
    outside).
    """
    tri: int
    where: str
    index: int = -1
    steps: int = 0


_NEXT = (1, 2, 0)
_PREV = (2, 0, 1)


class Mesh:
    def __init__(self):
        self.xy: list[tuple[float, float]] = []
        self.vkind: list[int] = []
        self.vbirth: list[int] = []
        self.valive: list[bool] = []
        self.vtri: list[int] = []

        self.tv: list[list[int]] = []
        self.tn: list[list[int]] = []
        self.ts: list[list[int]] = []
        self.talive: list[bool] = []
        self._free: list[int] = []
        self._pending_free: list[int] = []

        # subsegment store
        self.seg_ends: list[tuple[int, int]] = []
        self.seg_parent: list[int] = []
        self.seg_depth: list[int] = []
        self.seg_alive: list[bool] = []
        self.seg_encroached: list[bool] = []
        # endpoints of each parent segment: input segments, then hull edges
        self.parent_ends: list[tuple[int, int]] = []
        self.n_input_segments = 0

        self.batch_epoch = 0
        self._rng = random.Random(0x5EED)

    # ------------------------------------------------------------------ stores

    def add_vertex(self, p, kind=VertexKind.INPUT, birth=0) -> int:
        self.xy.append((float(p[0]), float(p[1])))
        self.vkind.append(int(kind))
        self.vbirth.append(birth)
        self.valive.append(True)
        self.vtri.append(BOUNDARY)
        return len(self.xy) - 1

    def _new_tri(self, a, b, c) -> int:
        if self._free:
            t = self._free.pop()
            self.tv[t] = [a, b, c]
            self.tn[t] = [BOUNDARY, BOUNDARY, BOUNDARY]
            self.ts[t] = [NO_SEG, NO_SEG, NO_SEG]
            self.talive[t] = True
            return t
        self.tv.append([a, b, c])
        self.tn.append([BOUNDARY, BOUNDARY, BOUNDARY])
        self.ts.append([NO_SEG, NO_SEG, NO_SEG])
        self.talive.append(True)
        return len(self.tv) - 1

    def _kill_tri(self, t):
        self.talive[t] = False
        self._pending_free.append(t)

    def begin_batch(self):
        """Advance the batch epoch and release slots freed in the last batch."""
        self.batch_epoch += 1
        self._free.extend(reversed(self._pending_free))
        self._pending_free.clear()

    def add_subsegment(self, a, b, parent, depth=0) -> int:
        self.seg_ends.append((a, b))
        self.seg_parent.append(parent)
        self.seg_depth.append(depth)
        self.seg_alive.append(True)
        self.seg_encroached.append(False)
        return len(self.seg_ends) - 1

    # ----------------------------------------------------------------- queries

    @property
    def n_vertices(self) -> int:
        return sum(self.valive)

    @property
    def n_triangles(self) -> int:
        return sum(self.talive)

    def triangles(self):
        return [t for t, alive in enumerate(self.talive) if alive]

    def vertices(self):
        return [v for v, alive in enumerate(self.valive) if alive]

    def subsegments(self):
        return [s for s, alive in enumerate(self.seg_alive) if alive]

    def check_tri(self, t):
        if t < 0 or t >= len(self.talive) or not self.talive[t]:
            raise StaleHandle(f"triangle {t} is not alive")

    def check_vertex(self, v):
        if v < 0 or v >= len(self.valive) or not self.valive[v]:
            raise StaleHandle(f"vertex {v} is not alive")

    def edge(self, t, i):
        tv = self.tv[t]
        return tv[_NEXT[i]], tv[_PREV[i]]

    def edge_slot(self, t, a, b) -> int:
        """Index of the edge {a, b} in triangle t."""
        tv = self.tv[t]
        for i in range(3):
            if tv[i] != a and tv[i] != b:
                return i
        raise StaleHandle(f"edge ({a}, {b}) not in triangle {t}")

    def walk_neighbors(self, t):
        self.check_tri(t)
        return [n for n in self.tn[t] if n != BOUNDARY]

    def apex_across(self, t, i):
        """(neighbour, its index of the shared edge, apex vertex) or None."""
        u = self.tn[t][i]
        if u == BOUNDARY:
            return None
        a, b = self.edge(t, i)
        j = self.edge_slot(u, a, b)
        return u, j, self.tv[u][j]

    def star(self, v):
        """Triangles around v in CCW order as (t, local index of v) pairs.

        For a hull vertex the list starts at the triangle after the hull
        edge and ends at the one before.
        """
        t0 = self.vtri[v]
        out = []
        t = t0
        # rotate clockwise until the boundary (or full circle)
        while True:
            j = self.tv[t].index(v)
            u = self.tn[t][_NEXT[_NEXT[j]]]
            if u == BOUNDARY:
                break
            t = u
            if t == t0:
                # interior vertex: full cycle, restart CCW from t0
                break
        start = t
        t = start
        while True:
            j = self.tv[t].index(v)
            out.append((t, j))
            u = self.tn[t][_NEXT[j]]
            if u == BOUNDARY or u == start:
                break
            t = u
        return out

    def is_hull_vertex(self, v) -> bool:
        for t, j in self.star(v):
            if self.tn[t][_NEXT[j]] == BOUNDARY or self.tn[t][_PREV[j]] == BOUNDARY:
                return True
        return False

    def vertex_degree(self, v) -> int:
        self.check_vertex(v)
        st = self.star(v)
        t, j = st[-1]
        if self.tn[t][_NEXT[j]] == BOUNDARY:
            return len(st) + 1
        return len(st)

    def neighbors_of_vertex(self, v):
        out = []
        st = self.star(v)
        for t, j in st:
            out.append(self.tv[t][_NEXT[j]])
        t, j = st[-1]
        if self.tn[t][_NEXT[j]] == BOUNDARY:
            out.append(self.tv[t][_PREV[j]])
        return out

    def find_edge(self, a, b):
        """(t, i) with edge i of t equal to {a, b}, or None."""
        for t, j in self.star(a):
            tv = self.tv[t]
            if tv[_NEXT[j]] == b:
                return t, _PREV[j]
            if tv[_PREV[j]] == b:
                return t, _NEXT[j]
        return None

    def subseg_edge(self, s):
        a, b = self.seg_ends[s]
        found = self.find_edge(a, b)
        if found is None:
            raise StaleHandle(f"subsegment {s} has no mesh edge")
        return found

    def orient_tri(self, t) -> int:
        a, b, c = self.tv[t]
        return orient_sign(self.xy[a], self.xy[b], self.xy[c])

    def hull_vertex_count(self) -> int:
        hull = set()
        for t in self.triangles():
            for i in range(3):
                if self.tn[t][i] == BOUNDARY:
                    hull.update(self.edge(t, i))
        return len(hull)

    # ---------------------------------------------------------------- linking

    def _relink(self, n, a, b, new_t):
        """Point neighbour n's edge {a, b} at new_t."""
        if n != BOUNDARY:
            self.tn[n][self.edge_slot(n, a, b)] = new_t

    # ------------------------------------------------------------- mutations

    def flip(self, t, i):
        """Swap the diagonal shared by t and its neighbour across edge i.

        Returns the two (reused) triangle handles; the new shared edge joins
        the two former apexes.
        """
        if self.ts[t][i] != NO_SEG:
            raise ConstraintEdge(f"edge {i} of triangle {t} is a subsegment")
        across = self.apex_across(t, i)
        if across is None:
            raise NonConvex("hull edge cannot be flipped")
        u, j, s = across
        tv = self.tv[t]
        p, q, r = tv[i], tv[_NEXT[i]], tv[_PREV[i]]
        xy = self.xy
        if orient_sign(xy[p], xy[q], xy[s]) <= 0 or orient_sign(xy[p], xy[s], xy[r]) <= 0:
            raise NonConvex(f"flip of triangle {t} edge {i} would invert a triangle")

        tn, ts = self.tn[t], self.ts[t]
        un, us = self.tn[u], self.ts[u]
        # u = (s, r, q) with s at j
        n_qs, g_qs = un[_NEXT[j]], us[_NEXT[j]]   # opposite r in u
        n_sr, g_sr = un[_PREV[j]], us[_PREV[j]]   # opposite q in u
        n_rp, g_rp = tn[_NEXT[i]], ts[_NEXT[i]]   # opposite q in t
        n_pq, g_pq = tn[_PREV[i]], ts[_PREV[i]]   # opposite r in t

        self.tv[t] = [p, q, s]
        self.tn[t] = [n_qs, u, n_pq]
        self.ts[t] = [g_qs, NO_SEG, g_pq]
        self.tv[u] = [p, s, r]
        self.tn[u] = [n_sr, n_rp, t]
        self.ts[u] = [g_sr, g_rp, NO_SEG]
        self._relink(n_qs, q, s, t)
        self._relink(n_rp, r, p, u)
        vt = self.vtri
        vt[p] = t
        vt[q] = t
        vt[s] = u
        vt[r] = u
        return t, u

    def flop(self, a):
        """Remove a degree-3 free vertex, merging its three triangles."""
        self.check_vertex(a)
        if self.vkind[a] == VertexKind.INPUT:
            raise ProtectedVertex(f"vertex {a} is an input vertex")
        st = self.star(a)
        last_t, last_j = st[-1]
        if self.tn[last_t][_NEXT[last_j]] == BOUNDARY or len(st) != 3:
            raise DegreeNotThree(f"vertex {a} has degree {self.vertex_degree(a)}")
        for t, j in st:
            if self.ts[t][_NEXT[j]] != NO_SEG or self.ts[t][_PREV[j]] != NO_SEG:
                raise ProtectedVertex(f"vertex {a} lies on a subsegment")
        outer = []
        for t, j in st:
            b, c = self.tv[t][_NEXT[j]], self.tv[t][_PREV[j]]
            outer.append((b, c, self.tn[t][j], self.ts[t][j]))
        (b, c, n_bc, g_bc), (c2, d, n_cd, g_cd), (d2, b2, n_db, g_db) = outer
        t0 = st[0][0]
        self.tv[t0] = [b, c, d]
        self.tn[t0] = [n_cd, n_db, n_bc]
        self.ts[t0] = [g_cd, g_db, g_bc]
        for t, _ in st[1:]:
            self._kill_tri(t)
        self._relink(n_cd, c, d, t0)
        self._relink(n_db, d, b, t0)
        self.vtri[b] = self.vtri[c] = self.vtri[d] = t0
        self.valive[a] = False
        self.vtri[a] = BOUNDARY
        return t0

    def split_triangle(self, t, p, kind=VertexKind.CIRCUMCENTER, birth=None, v=None) -> int:
        """Insert p strictly inside t (1 -> 3 split)."""
        self.check_tri(t)
        a, b, c = self.tv[t]
        xy = self.xy
        if (orient_sign(xy[a], xy[b], p) <= 0 or orient_sign(xy[b], xy[c], p) <= 0
                or orient_sign(xy[c], xy[a], p) <= 0):
            raise NotInterior(f"point {p} is not strictly inside triangle {t}")
        if v is None:
            v = self.add_vertex(p, kind, self.batch_epoch if birth is None else birth)
        na, nb, nc = self.tn[t]
        ga, gb, gc = self.ts[t]
        tb = self._new_tri(a, v, c)
        tc = self._new_tri(a, b, v)
        self.tv[t] = [v, b, c]
        self.tn[t] = [na, tb, tc]
        self.ts[t] = [ga, NO_SEG, NO_SEG]
        self.tn[tb] = [t, nb, tc]
        self.ts[tb] = [NO_SEG, gb, NO_SEG]
        self.tn[tc] = [t, tb, nc]
        self.ts[tc] = [NO_SEG, NO_SEG, gc]
        self._relink(nb, c, a, tb)
        self._relink(nc, a, b, tc)
        self.vtri[v] = t
        self.vtri[a] = tb
        self.vtri[b] = t
        self.vtri[c] = t
        return v

    def split_edge(self, t, i, p, kind=VertexKind.CIRCUMCENTER, birth=None, v=None) -> int:
        """Insert p on edge i of t, splitting the one or two incident triangles.

        If the edge is a subsegment it is replaced by two children with the
        same parent; the caller is responsible for p lying on the edge.
        """
        self.check_tri(t)
        pv, q, r = self.tv[t][i], self.tv[t][_NEXT[i]], self.tv[t][_PREV[i]]
        if not self.edge_split_ok(t, i, p):
            raise NotInterior(f"point {p} would invert a triangle at edge {i} of {t}")
        if v is None:
            v = self.add_vertex(p, kind, self.batch_epoch if birth is None else birth)
        sid = self.ts[t][i]
        g1 = g2 = NO_SEG
        if sid != NO_SEG:
            g1, g2 = self._split_subseg_record(sid, q, r, v)

        across = self.apex_across(t, i)
        n_rp, g_rp = self.tn[t][_NEXT[i]], self.ts[t][_NEXT[i]]
        n_pq, g_pq = self.tn[t][_PREV[i]], self.ts[t][_PREV[i]]
        t2 = self._new_tri(pv, v, r)
        if across is not None:
            u, j, s = across
            # u = (s, r, q)
            n_qs, g_qs = self.tn[u][_NEXT[j]], self.ts[u][_NEXT[j]]
            n_sr, g_sr = self.tn[u][_PREV[j]], self.ts[u][_PREV[j]]
            u2 = self._new_tri(s, v, q)
        else:
            u = u2 = BOUNDARY

        # t -> (pv, q, v), t2 = (pv, v, r)
        self.tv[t] = [pv, q, v]
        self.tn[t] = [u2, t2, n_pq]
        self.ts[t] = [g1, NO_SEG, g_pq]
        self.tn[t2] = [u, n_rp, t]
        self.ts[t2] = [g2, g_rp, NO_SEG]
        self._relink(n_rp, r, pv, t2)
        self.vtri[v] = t
        self.vtri[pv] = t
        self.vtri[q] = t
        self.vtri[r] = t2
        if u != BOUNDARY:
            # u -> (s, r, v), u2 = (s, v, q)
            self.tv[u] = [s, r, v]
            self.tn[u] = [t2, u2, n_sr]
            self.ts[u] = [g2, NO_SEG, g_sr]
            self.tn[u2] = [t, n_qs, u]
            self.ts[u2] = [g1, g_qs, NO_SEG]
            self._relink(n_qs, q, s, u2)
            self.vtri[s] = u
        return v

    def edge_split_ok(self, t, i, p) -> bool:
        """True if splitting edge i of t at p leaves every piece CCW."""
        xy = self.xy
        pv, q, r = (xy[k] for k in (self.tv[t][i], self.tv[t][_NEXT[i]], self.tv[t][_PREV[i]]))
        if orient_sign(pv, q, p) <= 0 or orient_sign(pv, p, r) <= 0:
            return False
        across = self.apex_across(t, i)
        if across is not None:
            s = xy[across[2]]
            if orient_sign(s, r, p) <= 0 or orient_sign(s, p, q) <= 0:
                return False
        return True

    def _split_subseg_record(self, sid, q, r, v):
        """Split subsegment sid at v; returns child ids for edges (q,v), (v,r)."""
        a, b = self.seg_ends[sid]
        depth = self.seg_depth[sid] + 1
        parent = self.seg_parent[sid]
        self.seg_ends[sid] = (a, v)
        self.seg_depth[sid] = depth
        self.seg_encroached[sid] = False
        other = self.add_subsegment(v, b, parent, depth)
        if a == q:
            return sid, other
        return other, sid

    def split_subsegment(self, s, p=None, birth=None) -> int:
        """Insert the midpoint (or the given point) of subsegment s."""
        if not self.seg_alive[s]:
            raise StaleHandle(f"subsegment {s} is not alive")
        a, b = self.seg_ends[s]
        if p is None:
            p = midpoint(self.xy[a], self.xy[b])
        t, i = self.subseg_edge(s)
        return self.split_edge(t, i, p, VertexKind.MIDPOINT, birth)

    # --------------------------------------------------------------- Delaunay

    def is_non_delaunay_edge(self, t, i) -> bool:
        """Opposite angles sum beyond pi, decided with the incircle test."""
        if self.ts[t][i] != NO_SEG:
            return False
        across = self.apex_across(t, i)
        if across is None:
            return False
        a, b, c = self.tv[t]
        xy = self.xy
        return incircle_sign(xy[a], xy[b], xy[c], xy[across[2]]) > 0

    def legalize(self, edges, on_flip=None) -> int:
        """Lawson-flip the given (t, i) edges and their successors to a CDT.

        Returns the number of flips.  Edges are re-identified by vertex pairs
        so stale (t, i) entries are harmless.
        """
        tv, talive = self.tv, self.talive
        stack = []
        for t, i in edges:
            if talive[t]:
                stack.append((t, i) + self.edge(t, i))
        flips = 0
        while stack:
            t, i, a, b = stack.pop()
            # the (t, i) hint is still good unless t was flipped meanwhile
            if not (talive[t] and tv[t][_NEXT[i]] == a and tv[t][_PREV[i]] == b):
                if not (self.valive[a] and self.valive[b]):
                    continue
                found = self.find_edge(a, b)
                if found is None:
                    continue
                t, i = found
            if not self.is_non_delaunay_edge(t, i):
                continue
            try:
                t1, t2 = self.flip(t, i)
            except NonConvex:
                continue
            flips += 1
            if on_flip is not None:
                on_flip(t1, t2)
            # outer edges of the new pair
            for u, k in ((t1, 0), (t1, 2), (t2, 0), (t2, 1)):
                stack.append((u, k) + self.edge(u, k))
        return flips

    def star_edges(self, v):
        """(t, i) for the link edges opposite v and the spokes around v."""
        out = []
        for t, j in self.star(v):
            out.append((t, j))
            out.append((t, _NEXT[j]))
            out.append((t, _PREV[j]))
        return out

    def remove_free_vertex(self, a) -> bool:
        """Reduce a free vertex to degree 3 with flips, then flop it.

        Returns False when the vertex cannot be removed (hull vertex or
        subsegment-incident).
        """
        if self.vkind[a] == VertexKind.INPUT or self.is_hull_vertex(a):
            return False
        st = self.star(a)
        for t, j in st:
            if self.ts[t][_NEXT[j]] != NO_SEG or self.ts[t][_PREV[j]] != NO_SEG:
                return False
        while True:
            st = self.star(a)
            if len(st) <= 3:
                break
            for t, j in st:
                # edge _NEXT[j] of t is the spoke from a to tv[t][_PREV[j]]
                try:
                    self.flip(t, _NEXT[j])
                except (NonConvex, ConstraintEdge):
                    continue
                break
            else:
                return False
        self.flop(a)
        return True

    # -------------------------------------------------------------- location

    def locate(self, p, start, max_steps=None) -> Location:
        """Visibility walk from triangle ``start`` to the triangle holding p."""
        xy = self.xy
        t = start
        prev = BOUNDARY
        steps = 0
        limit = max_steps if max_steps is not None else 4 * len(self.tv) + 16
        rng = self._rng
        while steps <= limit:
            tv = self.tv[t]
            a, b, c = xy[tv[0]], xy[tv[1]], xy[tv[2]]
            o = (orient_sign(b, c, p), orient_sign(c, a, p), orient_sign(a, b, p))
            neg = [i for i in range(3) if o[i] < 0]
            if neg:
                # never step straight back when another exit exists
                if len(neg) > 1:
                    choices = [i for i in neg if self.tn[t][i] != prev] or neg
                    i = choices[rng.randrange(len(choices))]
                else:
                    i = neg[0]
                n = self.tn[t][i]
                if n == BOUNDARY:
                    return Location(t, "out", i, steps)
                prev, t = t, n
                steps += 1
                continue
            zeros = [i for i in range(3) if o[i] == 0]
            if not zeros:
                return Location(t, "in", -1, steps)
            if len(zeros) == 1:
                return Location(t, "edge", zeros[0], steps)
            k = 3 - zeros[0] - zeros[1]
            return Location(t, "vertex", tv[k], steps)
        return self._locate_scan(p)

    def _locate_scan(self, p) -> Location:
        xy = self.xy
        for t in self.triangles():
            tv = self.tv[t]
            a, b, c = xy[tv[0]], xy[tv[1]], xy[tv[2]]
            o = (orient_sign(b, c, p), orient_sign(c, a, p), orient_sign(a, b, p))
            if min(o) < 0:
                continue
            zeros = [i for i in range(3) if o[i] == 0]
            if not zeros:
                return Location(t, "in")
            if len(zeros) == 1:
                return Location(t, "edge", zeros[0])
            return Location(t, "vertex", tv[3 - zeros[0] - zeros[1]])
        for t in self.triangles():
            for i in range(3):
                if self.tn[t][i] == BOUNDARY:
                    q, r = self.edge(t, i)
                    if orient_sign(xy[q], xy[r], p) < 0:
                        return Location(t, "out", i)
        raise MeshError(f"cannot locate {p}")


def midpoint(a, b):
    return ((a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5)
