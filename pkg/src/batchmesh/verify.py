"""Full-scan correctness oracles for a mesh.

These checks deliberately avoid the mesh's own adjacency walks: the
constrained-Delaunay check finds candidate vertices geometrically (k-d
tree over all vertices, or plain all-pairs for the brute-force variant)
and decides with exact predicates.
"""

from __future__ import annotations

import random
from collections import defaultdict

import numpy as np
from scipy.spatial import cKDTree

from .mesh import BOUNDARY, NO_SEG, Mesh
from .predicates import incircle_sign, orient_sign, properly_crosses


def check_topology(m: Mesh) -> list[str]:
    errs = []
    xy = m.xy
    for t in m.triangles():
        a, b, c = m.tv[t]
        if not (m.valive[a] and m.valive[b] and m.valive[c]):
            errs.append(f"triangle {t} uses a dead vertex")
            continue
        if orient_sign(xy[a], xy[b], xy[c]) <= 0:
            errs.append(f"triangle {t} is not CCW")
        for i in range(3):
            u = m.tn[t][i]
            e = set(m.edge(t, i))
            if u == BOUNDARY:
                continue
            if not m.talive[u]:
                errs.append(f"triangle {t} links dead triangle {u}")
                continue
            back = [j for j in range(3) if m.tn[u][j] == t and set(m.edge(u, j)) == e]
            if len(back) != 1:
                errs.append(f"neighbour symmetry broken between {t} and {u}")
                continue
            if m.ts[u][back[0]] != m.ts[t][i]:
                errs.append(f"subsegment flag mismatch on edge {sorted(e)}")
    for v in m.vertices():
        t = m.vtri[v]
        if t == BOUNDARY or not m.talive[t] or v not in m.tv[t]:
            errs.append(f"vertex {v} has a stale triangle pointer")
    return errs


def check_euler(m: Mesh) -> list[str]:
    used = {v for t in m.triangles() for v in m.tv[t]}
    V = len(used)
    H = m.hull_vertex_count()
    T = m.n_triangles
    if T != 2 * V - H - 2:
        return [f"Euler relation fails: T={T}, V={V}, H={H}"]
    return []


def check_conformity(m: Mesh) -> list[str]:
    """Every parent segment is an unbroken chain of flagged mesh edges."""
    errs = []
    by_parent = defaultdict(list)
    for s in m.subsegments():
        by_parent[m.seg_parent[s]].append(s)
    for k, (a, b) in enumerate(m.parent_ends):
        adj = defaultdict(list)
        for s in by_parent.get(k, []):
            p, q = m.seg_ends[s]
            adj[p].append((q, s))
            adj[q].append((p, s))
            found = m.find_edge(p, q) if m.valive[p] and m.valive[q] else None
            if found is None:
                errs.append(f"subsegment {s} of segment {k} missing from mesh")
            elif m.ts[found[0]][found[1]] != s:
                errs.append(f"subsegment {s} of segment {k} not flagged")
        # chain walk from a to b
        cur, prev, used = a, None, 0
        while cur != b:
            nxt = [(q, s) for q, s in adj.get(cur, []) if q != prev]
            if len(nxt) != 1:
                errs.append(f"segment {k} chain broken at vertex {cur}")
                break
            prev, cur = cur, nxt[0][0]
            used += 1
        else:
            if used != len(by_parent.get(k, [])):
                errs.append(f"segment {k} has stray subsegments")
    # flagged edges must belong to live subsegments
    for t in m.triangles():
        for i in range(3):
            s = m.ts[t][i]
            if s != NO_SEG and (not m.seg_alive[s] or set(m.seg_ends[s]) != set(m.edge(t, i))):
                errs.append(f"edge {m.edge(t, i)} carries a stale subsegment flag {s}")
    return errs


def _circumcircles(m: Mesh, tris):
    P = np.asarray(m.xy, dtype=float)
    T = np.asarray([m.tv[t] for t in tris], dtype=np.int64).reshape(-1, 3)
    a, b, c = P[T[:, 0]], P[T[:, 1]], P[T[:, 2]]
    bx, by = b[:, 0] - a[:, 0], b[:, 1] - a[:, 1]
    cx, cy = c[:, 0] - a[:, 0], c[:, 1] - a[:, 1]
    d = 2.0 * (bx * cy - by * cx)
    b2, c2 = bx * bx + by * by, cx * cx + cy * cy
    with np.errstate(divide="ignore", invalid="ignore"):
        ux = (cy * b2 - by * c2) / d
        uy = (bx * c2 - cx * b2) / d
    center = np.stack([a[:, 0] + ux, a[:, 1] + uy], axis=1)
    r = np.sqrt(ux * ux + uy * uy)
    return center, r


class _SegIndex:
    """Subsegment lookup for sightline blocking."""

    def __init__(self, m: Mesh):
        self.m = m
        self.segs = m.subsegments()
        if self.segs:
            P = np.asarray(m.xy)
            E = np.asarray([m.seg_ends[s] for s in self.segs])
            self.mid = (P[E[:, 0]] + P[E[:, 1]]) / 2
            half = np.linalg.norm(P[E[:, 0]] - P[E[:, 1]], axis=1) / 2
            self.maxhalf = float(half.max())
            self.tree = cKDTree(self.mid)

    def blocked(self, p, q) -> bool:
        if not self.segs:
            return False
        m = self.m
        center = ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2)
        rad = np.hypot(p[0] - q[0], p[1] - q[1]) / 2 + self.maxhalf
        for k in self.tree.query_ball_point(center, rad * (1 + 1e-9) + 1e-300):
            a, b = m.seg_ends[self.segs[k]]
            if properly_crosses(p, q, m.xy[a], m.xy[b]):
                return True
        return False


def _sample_points(m: Mesh, t):
    a, b, c = (m.xy[v] for v in m.tv[t])
    pts = [((a[0] + b[0] + c[0]) / 3, (a[1] + b[1] + c[1]) / 3)]
    for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
        pts.append((0.8 * p[0] + 0.1 * q[0] + 0.1 * r[0], 0.8 * p[1] + 0.1 * q[1] + 0.1 * r[1]))
    return pts


def _visible(m: Mesh, segidx: _SegIndex, t, v) -> bool:
    target = m.xy[v]
    return any(not segidx.blocked(p, target) for p in _sample_points(m, t))


def _confirm(m: Mesh, segidx, t, v) -> bool:
    a, b, c = m.tv[t]
    if v in (a, b, c):
        return False
    xy = m.xy
    if incircle_sign(xy[a], xy[b], xy[c], xy[v]) <= 0:
        return False
    return _visible(m, segidx, t, v)


def check_cdt(m: Mesh, sample: int | None = None, seed: int = 0) -> list[str]:
    """Constrained-Delaunay violations: visible vertices strictly inside a
    triangle's circumcircle.  ``sample`` restricts the scan to that many
    random triangles."""
    tris = m.triangles()
    if sample is not None and sample < len(tris):
        tris = random.Random(seed).sample(tris, sample)
    if not tris:
        return []
    verts = m.vertices()
    P = np.asarray([m.xy[v] for v in verts])
    tree = cKDTree(P)
    center, r = _circumcircles(m, tris)
    segidx = _SegIndex(m)
    errs = []
    scale = float(np.abs(P).max()) or 1.0
    for k, t in enumerate(tris):
        rad = r[k]
        if not np.isfinite(rad):
            cand = range(len(verts))
        else:
            cand = tree.query_ball_point(center[k], rad * (1 + 1e-9) + 1e-12 * scale)
        for idx in cand:
            v = verts[idx]
            if _confirm(m, segidx, t, v):
                errs.append(f"vertex {v} violates triangle {t}")
    return errs


def check_cdt_brute(m: Mesh) -> list[str]:
    """All-pairs version of :func:`check_cdt` (no spatial index)."""
    segidx = _SegIndex(m)
    errs = []
    verts = m.vertices()
    for t in m.triangles():
        for v in verts:
            if _confirm(m, segidx, t, v):
                errs.append(f"vertex {v} violates triangle {t}")
    return errs


def check_all(m: Mesh, cdt: bool = True, sample: int | None = None) -> list[str]:
    errs = check_topology(m)
    if errs:
        return errs
    errs += check_euler(m)
    errs += check_conformity(m)
    if cdt:
        errs += check_cdt(m, sample=sample)
    return errs
