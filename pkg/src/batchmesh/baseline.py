"""Sequential single-insertion Ruppert refinement, used as a reference for
Steiner-point counts.

Encroached subsegments are split first; otherwise the worst bad triangle
gets its circumcenter, unless that point would encroach a subsegment, in
which case the circumcenter is withdrawn and the subsegment split instead.
"""

from __future__ import annotations

import heapq
import math

from .mesh import NO_SEG, Mesh, VertexKind
from .predicates import encroaches
from .refine import (DegenerateCircumcenter, IterationCap, QualityCriteria, _walk, can_split_subsegment,
                     circumcenter, is_bad_triangle, is_encroached, quality_report, tri_key, triangle_angles)


def _min_angle(m: Mesh, t):
    return min(triangle_angles(m, t))


def ruppert_sequential(m: Mesh, q: QualityCriteria, max_insertions: int = 10 ** 6):
    """Refine m in place one point at a time; returns (m, QualityReport)."""
    seg_queue = list(m.subsegments())
    heap = []
    stuck = set()

    def push_tri(t):
        if m.talive[t] and is_bad_triangle(m, t, q):
            heapq.heappush(heap, (_min_angle(m, t), tri_key(m, t), t))

    def after_insert(v):
        for t, j in m.star(v):
            s = m.ts[t][j]
            if s != NO_SEG:
                seg_queue.append(s)
            for i in range(3):
                if m.ts[t][i] != NO_SEG:
                    seg_queue.append(m.ts[t][i])
            push_tri(t)
        for w in m.neighbors_of_vertex(v):
            for t, _ in m.star(w):
                push_tri(t)

    def insert_and_legalize(v_fn):
        v = v_fn()
        m.legalize(m.star_edges(v))
        return v

    for t in m.triangles():
        push_tri(t)

    inserted = 0
    while inserted < max_insertions:
        if seg_queue:
            s = seg_queue.pop()
            if not m.seg_alive[s] or not can_split_subsegment(m, s):
                continue
            if not is_encroached(m, s, q.mode):
                continue
            v = insert_and_legalize(lambda: m.split_subsegment(s, birth=0))
            m.seg_encroached[s] = False
            inserted += 1
            after_insert(v)
            continue
        if not heap:
            break
        _, key, t = heapq.heappop(heap)
        if not m.talive[t] or tri_key(m, t) != key or key in stuck or not is_bad_triangle(m, t, q):
            continue
        a, b, c = (m.xy[v] for v in m.tv[t])
        try:
            p = circumcenter(a, b, c)
        except DegenerateCircumcenter:
            stuck.add(key)
            continue
        res = _walk(m, t, p, 4 * len(m.tv) + 16)
        if res[0] == "seg":
            s = res[1]
            if can_split_subsegment(m, s):
                m.seg_encroached[s] = True
                seg_queue.append(s)
                heapq.heappush(heap, (_min_angle(m, t), key, t))
            else:
                stuck.add(key)
            continue
        if res[0] != "found":
            stuck.add(key)
            continue
        _, tt, o = res
        zeros = [i for i in range(3) if o[i] == 0]
        if len(zeros) >= 2 or (zeros and m.ts[tt][zeros[0]] != NO_SEG):
            stuck.add(key)
            continue
        if zeros:
            v = m.split_edge(tt, zeros[0], p, VertexKind.CIRCUMCENTER, 0)
        else:
            v = m.split_triangle(tt, p, VertexKind.CIRCUMCENTER, 0)
        m.legalize(m.star_edges(v))
        hit = []
        for t2, j in m.star(v):
            s = m.ts[t2][j]
            if s != NO_SEG:
                sa, sb = m.seg_ends[s]
                if encroaches(m.xy[sa], m.xy[sb], p, q.mode):
                    hit.append(s)
        if hit:
            link = m.neighbors_of_vertex(v)
            if m.remove_free_vertex(v):
                m.legalize([e for w in link for e in m.star_edges(w)])
                splittable = [s for s in hit if can_split_subsegment(m, s)]
                if splittable:
                    for s in splittable:
                        m.seg_encroached[s] = True
                        seg_queue.append(s)
                else:
                    stuck.add(key)
                for w in link:
                    for t2, _ in m.star(w):
                        push_tri(t2)
                continue
        inserted += 1
        after_insert(v)
    else:
        raise IterationCap(f"more than {max_insertions} insertions", m)
    return m, quality_report(m, q)
