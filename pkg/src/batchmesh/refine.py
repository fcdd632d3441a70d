"""Batch-parallel constrained Delaunay refinement.

Every batch runs the same pipeline: collect bad elements, compute their
splitting points, locate them, filter conflicting candidates, insert the
survivors and roll back redundant circumcenters.  Data-parallel phases go
through an executor and only interact through a claim table, so results
do not depend on the execution order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .expandlist import CompactionPolicy, ExpandHooks, ExpandStats, TupleList, expand, should_compact
from .mesh import BOUNDARY, NO_SEG, Mesh, NotInterior, VertexKind, _NEXT, _PREV, midpoint
from .parallel import ClaimTable, SequentialExecutor, make_executor
from .predicates import encroaches, incircle_sign, orient_sign
from .rules import BatchMetrics, RuleFlags, record_batch

SEG_DEPTH_CAP = 64
DEFAULT_ITERATION_CAP = 10_000
DEFAULT_CAVITY_N = 32


class RefinementError(Exception):
    pass


class IterationCap(RefinementError):
    """Safety cap hit; ``mesh`` and ``report`` hold the partial result."""

    def __init__(self, msg, mesh=None, report=None):
        super().__init__(msg)
        self.mesh = mesh
        self.report = report


class MemoryCap(IterationCap):
    pass


class DegenerateCircumcenter(RefinementError):
    pass


class WalkEscapedHull(RefinementError):
    pass


@dataclass(frozen=True)
class QualityCriteria:
    theta: float = 20.0
    ell: float = math.inf
    mode: str = "ruppert"

    def __post_init__(self):
        # theta == 0 is accepted for reporting: no angle is then bad
        if not 0.0 <= self.theta < 60.0:
            raise ValueError(f"theta must lie in [0, 60) degrees, got {self.theta}")
        if not self.ell > 0:
            raise ValueError(f"ell must be positive, got {self.ell}")
        if self.mode not in ("ruppert", "chew"):
            raise ValueError(f"mode must be 'ruppert' or 'chew', got {self.mode!r}")

    @property
    def cos2(self) -> float:
        return math.cos(math.radians(self.theta)) ** 2

    @property
    def ell2(self) -> float:
        return self.ell * self.ell


class PriorityKey(NamedTuple):
    """Larger keys win.  Midpoints outrank circumcenters, then the larger
    element, then the lower candidate id."""
    band: int
    measure: float
    tiebreak: int


MIDPOINT_BAND = 1
CIRCUMCENTER_BAND = 0


def midpoint_priority(length: float, cid: int) -> PriorityKey:
    return PriorityKey(MIDPOINT_BAND, length, -cid)


def circumcenter_priority(area: float, cid: int) -> PriorityKey:
    return PriorityKey(CIRCUMCENTER_BAND, area, -cid)


@dataclass
class SplitCandidate:
    cid: int
    kind: str            # "seg" or "tri"
    element: int         # subsegment or triangle id
    point: tuple = None
    priority: PriorityKey = None
    origin: tuple = None  # vertex triple of the bad triangle, for "tri"
    tri: int = BOUNDARY
    where: str = ""
    index: int = -1
    alive: bool = True
    reason: str = ""


# --------------------------------------------------------------- geometry

def _sq(ax, ay, bx, by):
    dx, dy = ax - bx, ay - by
    return dx * dx + dy * dy


def is_bad_triangle(m: Mesh, t, q: QualityCriteria) -> bool:
    """Smallest angle below theta, or an edge longer than ell.

    The angle test compares squared cosines: the smallest angle sits
    opposite the shortest edge a, with cos A = (b2 + c2 - a2) / (2 b c).
    """
    (ax, ay), (bx, by), (cx, cy) = (m.xy[v] for v in m.tv[t])
    e0 = _sq(bx, by, cx, cy)
    e1 = _sq(cx, cy, ax, ay)
    e2 = _sq(ax, ay, bx, by)
    if max(e0, e1, e2) > q.ell2:
        return True
    if q.theta == 0:
        return False
    lo, mid, hi = sorted((e0, e1, e2))
    num = mid + hi - lo
    return num * num > 4.0 * q.cos2 * mid * hi


def _bad_mask(P, T, q: QualityCriteria):
    """Vectorised :func:`is_bad_triangle` over rows of T."""
    a, b, c = P[T[:, 0]], P[T[:, 1]], P[T[:, 2]]
    e0 = ((b - c) ** 2).sum(axis=1)
    e1 = ((c - a) ** 2).sum(axis=1)
    e2 = ((a - b) ** 2).sum(axis=1)
    E = np.sort(np.stack([e0, e1, e2], axis=1), axis=1)
    lo, mid, hi = E[:, 0], E[:, 1], E[:, 2]
    num = mid + hi - lo
    if q.theta == 0:
        return hi > q.ell2
    return (num * num > 4.0 * q.cos2 * mid * hi) | (hi > q.ell2)


def triangle_angles(m: Mesh, t):
    pts = [m.xy[v] for v in m.tv[t]]
    out = []
    for k in range(3):
        p, a, b = pts[k], pts[(k + 1) % 3], pts[(k + 2) % 3]
        u = (a[0] - p[0], a[1] - p[1])
        w = (b[0] - p[0], b[1] - p[1])
        out.append(math.degrees(math.atan2(abs(u[0] * w[1] - u[1] * w[0]), u[0] * w[0] + u[1] * w[1])))
    return out


def triangle_area(m: Mesh, t) -> float:
    (ax, ay), (bx, by), (cx, cy) = (m.xy[v] for v in m.tv[t])
    return 0.5 * abs((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))


def circumcenter(a, b, c):
    """Circumcenter computed relative to a.

    Raises DegenerateCircumcenter when the orientation determinant is tiny
    relative to the squared edge lengths.
    """
    bx, by = b[0] - a[0], b[1] - a[1]
    cx, cy = c[0] - a[0], c[1] - a[1]
    d = 2.0 * (bx * cy - by * cx)
    b2, c2 = bx * bx + by * by, cx * cx + cy * cy
    scale = max(b2, c2, _sq(b[0], b[1], c[0], c[1]))
    if abs(d) <= 1e-12 * scale:
        raise DegenerateCircumcenter(f"triangle {a}, {b}, {c} is nearly flat")
    return (a[0] + (cy * b2 - by * c2) / d, a[1] + (bx * c2 - cx * b2) / d)


def subsegment_length(m: Mesh, s) -> float:
    a, b = m.seg_ends[s]
    return math.dist(m.xy[a], m.xy[b])


def can_split_subsegment(m: Mesh, s) -> bool:
    """Depth below the cap and a midpoint that splits the incident
    triangles without inverting any piece."""
    if m.seg_depth[s] >= SEG_DEPTH_CAP:
        return False
    a, b = m.seg_ends[s]
    pm = midpoint(m.xy[a], m.xy[b])
    if pm == m.xy[a] or pm == m.xy[b]:
        return False
    t, i = m.subseg_edge(s)
    return m.edge_split_ok(t, i, pm)


def is_encroached(m: Mesh, s, mode="ruppert", registered=()) -> bool:
    """A mesh vertex facing the subsegment, or a registered splitting point,
    lies in its diametral region."""
    if m.seg_encroached[s]:
        return True
    a, b = m.seg_ends[s]
    pa, pb = m.xy[a], m.xy[b]
    t, i = m.subseg_edge(s)
    if encroaches(pa, pb, m.xy[m.tv[t][i]], mode):
        return True
    across = m.apex_across(t, i)
    if across is not None and encroaches(pa, pb, m.xy[across[2]], mode):
        return True
    return any(encroaches(pa, pb, p, mode) for p in registered)


def tri_key(m: Mesh, t):
    return tuple(sorted(m.tv[t]))


# ------------------------------------------------------------- collection

def _flag_indices(flags, policy: CompactionPolicy):
    """Indices of set flags, via vector compaction when the scan is large."""
    if should_compact(len(flags), policy):
        return [int(k) for k in np.flatnonzero(flags)]
    return [k for k, f in enumerate(flags) if f]


def collect(m: Mesh, q: QualityCriteria, rules: RuleFlags, executor=None, stuck=frozenset()):
    """Bad triangles and encroached subsegments of the current mesh.

    Returns (subsegment ids, triangle ids).  With unified collection off,
    triangles are only reported when no subsegment is encroached.
    """
    executor = executor or SequentialExecutor()
    policy = CompactionPolicy(rules.rule1_compaction_threshold, rules.rule1_enabled)

    segs = m.subsegments()

    def seg_flag(s):
        return is_encroached(m, s, q.mode) and can_split_subsegment(m, s)

    seg_flags = executor.map(seg_flag, segs)
    enc = [segs[k] for k in _flag_indices(seg_flags, policy)]
    if enc and not rules.rule4_unified_collection:
        return enc, []

    P = np.asarray(m.xy, dtype=float)
    T = np.asarray(m.tv, dtype=np.int64).reshape(-1, 3)
    alive = np.asarray(m.talive, dtype=bool)
    n = len(T)
    # chunked so threaded executors can split the numeric work
    step = max(4096, -(-n // max(1, getattr(executor, "workers", 1))))
    chunks = [(lo, min(n, lo + step)) for lo in range(0, n, step)]
    parts = executor.map(lambda c: _bad_mask(P, T[c[0]:c[1]], q), chunks)
    bad = (np.concatenate(parts) if parts else np.zeros(0, bool)) & alive
    tris = _flag_indices(bad, policy)
    if stuck:
        tris = [t for t in tris if tri_key(m, t) not in stuck]
    return enc, tris


def make_candidates(m: Mesh, segs, tris):
    """Unified candidate list: subsegments first, then triangles, ids in order."""
    out = []
    for s in segs:
        out.append(SplitCandidate(len(out), "seg", s))
    for t in tris:
        out.append(SplitCandidate(len(out), "tri", t, origin=tri_key(m, t)))
    return out


# --------------------------------------------------------- splitting points

def _as_subsegment(m: Mesh, c: SplitCandidate, s, reason):
    """Rewrite c as the midpoint of subsegment s (or kill it if s is capped)."""
    c.reason = reason
    if not can_split_subsegment(m, s):
        c.alive = False
        c.reason = reason + ":capped"
        return c
    a, b = m.seg_ends[s]
    c.kind, c.element = "seg", s
    c.point = midpoint(m.xy[a], m.xy[b])
    c.priority = midpoint_priority(subsegment_length(m, s), c.cid)
    c.tri, c.index = m.subseg_edge(s)
    c.where = "edge"
    return c


def splitting_point(m: Mesh, c: SplitCandidate):
    """Fill in the point and priority of one candidate (no location yet)."""
    if c.kind == "seg":
        s = c.element
        a, b = m.seg_ends[s]
        c.point = midpoint(m.xy[a], m.xy[b])
        c.priority = midpoint_priority(subsegment_length(m, s), c.cid)
        return c
    t = c.element
    a, b, d = (m.xy[v] for v in m.tv[t])
    c.priority = circumcenter_priority(triangle_area(m, t), c.cid)
    try:
        c.point = circumcenter(a, b, d)
    except DegenerateCircumcenter:
        # fall back to the midpoint of the longest edge
        lens = [_sq(*m.xy[m.tv[t][(i + 1) % 3]], *m.xy[m.tv[t][(i + 2) % 3]]) for i in range(3)]
        i = max(range(3), key=lambda k: lens[k])
        if m.ts[t][i] != NO_SEG:
            return _as_subsegment(m, c, m.ts[t][i], "degenerate")
        p, r = m.edge(t, i)
        c.point = midpoint(m.xy[p], m.xy[r])
        c.tri, c.where, c.index = t, "edge", i
        c.reason = "degenerate"
    return c


def compute_splitting_points(m: Mesh, cands, executor=None):
    executor = executor or SequentialExecutor()
    executor.map(lambda c: splitting_point(m, c), [c for c in cands if c.alive])
    return cands


# ---------------------------------------------------------------- location

def _walk(m: Mesh, t, target, limit):
    """Straight walk from the centroid of t toward target.

    Returns ("found", t, orientations), ("seg", s) when the path crosses a
    subsegment edge, or ("out", t) if it leaves through an unflagged hull
    edge.
    """
    xy = m.xy
    a, b, c = (xy[v] for v in m.tv[t])
    origin = ((a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0)
    for _ in range(limit):
        tv = m.tv[t]
        o = [orient_sign(xy[tv[_NEXT[i]]], xy[tv[_PREV[i]]], target) for i in range(3)]
        if min(o) >= 0:
            return "found", t, o
        neg = [i for i in range(3) if o[i] < 0]
        exit_edge = neg[0]
        for i in neg:
            su = orient_sign(origin, target, xy[tv[_NEXT[i]]])
            sv = orient_sign(origin, target, xy[tv[_PREV[i]]])
            if su * sv <= 0:
                exit_edge = i
                break
        s = m.ts[t][exit_edge]
        if s != NO_SEG:
            return "seg", s
        n = m.tn[t][exit_edge]
        if n == BOUNDARY:
            return "out", t
        t = n
    return "lost", t


def locate_candidate(m: Mesh, c: SplitCandidate) -> SplitCandidate:
    if not c.alive or c.kind == "seg":
        if c.alive and c.tri == BOUNDARY:
            c.tri, c.index = m.subseg_edge(c.element)
            c.where = "edge"
        return c
    if c.where == "edge":      # degenerate fallback already placed on an edge
        return c
    res = _walk(m, c.element, c.point, 4 * len(m.tv) + 16)
    if res[0] == "seg":
        return _as_subsegment(m, c, res[1], "intercepted")
    if res[0] != "found":
        c.alive = False
        c.reason = "escaped"
        return c
    _, t, o = res
    zeros = [i for i in range(3) if o[i] == 0]
    c.tri = t
    if not zeros:
        c.where = "in"
    elif len(zeros) == 1:
        i = zeros[0]
        if m.ts[t][i] != NO_SEG:
            return _as_subsegment(m, c, m.ts[t][i], "on-subsegment")
        c.where, c.index = "edge", i
    else:
        c.alive = False
        c.reason = "on-vertex"
    return c


def locate_all(m: Mesh, cands, executor=None):
    executor = executor or SequentialExecutor()
    executor.map(lambda c: locate_candidate(m, c), [c for c in cands if c.alive])
    return dedupe_subsegments(cands)


def dedupe_subsegments(cands):
    """Keep one candidate per subsegment, the one with the highest key."""
    best = {}
    for c in cands:
        if c.alive and c.kind == "seg":
            k = best.get(c.element)
            if k is None or c.priority > k.priority:
                best[c.element] = c
    for c in cands:
        if c.alive and c.kind == "seg" and best[c.element] is not c:
            c.alive = False
            c.reason = "duplicate"
    return cands


# ----------------------------------------------------------------- filters

def claimed_slots(m: Mesh, c: SplitCandidate):
    """Triangles a located candidate would split."""
    out = [c.tri]
    if c.where == "edge":
        n = m.tn[c.tri][c.index]
        if n != BOUNDARY:
            out.append(n)
    return out


def claim_filter(m: Mesh, cands, executor=None, table: ClaimTable | None = None):
    """Each triangle is split by at most one candidate: the highest key."""
    executor = executor or SequentialExecutor()
    table = table if table is not None else ClaimTable(getattr(executor, "concurrent", False))
    live = [c for c in cands if c.alive]
    executor.map(lambda c: [table.claim(s, c.priority) for s in claimed_slots(m, c)], live)
    keep = executor.map(lambda c: all(table.holds(s, c.priority) for s in claimed_slots(m, c)), live)
    for c, ok in zip(live, keep):
        if not ok:
            c.alive = False
            c.reason = "claim"
    return cands


@dataclass
class CavityStats:
    rounds: int = 0
    tested: int = 0
    stopped_early: bool = False
    unfinished: int = 0


def cavity_filter(m: Mesh, cands, n: int = DEFAULT_CAVITY_N, executor=None,
                  rules: RuleFlags | None = None, stats: CavityStats | None = None):
    """Grow an approximate cavity around each surviving candidate and keep
    only candidates that win every triangle of it.

    Growth is breadth-first from the located triangle(s) across edges that
    are not subsegments, admitting triangles whose circumcircle strictly
    contains the point, at most ``n`` beyond the located ones (unbounded
    when the bounded-work rule is off).  ``n == 0`` adds no filtering.
    """
    from .rules import CompletionMonitor

    rules = rules or RuleFlags()
    executor = executor or SequentialExecutor()
    stats = stats if stats is not None else CavityStats()
    live = [c for c in cands if c.alive]
    if not live or n == 0:
        return cands
    budget = n if rules.rule3_enabled else math.inf
    table = ClaimTable(getattr(executor, "concurrent", False))
    xy, tv, tn, ts = m.xy, m.tv, m.tn, m.ts

    claimed = [claimed_slots(m, c) for c in live]
    visited = [set(s) for s in claimed]
    included = [0] * len(live)
    items = []
    for k, c in enumerate(live):
        for t in claimed[k]:
            table.claim(t, c.priority)
        for t in list(claimed[k]):
            for i in range(3):
                nb = tn[t][i]
                if ts[t][i] == NO_SEG and nb != BOUNDARY and nb not in visited[k] \
                        and len(visited[k]) - len(claimed[k]) < budget:
                    visited[k].add(nb)
                    items.append((k, nb))

    def predicate(item):
        k, t = item
        a, b, d = tv[t]
        return incircle_sign(xy[a], xy[b], xy[d], live[k].point) > 0

    def op_true(item):
        k, t = item
        table.claim(t, live[k].priority)
        claimed[k].append(t)
        return [(k, tn[t][i]) for i in range(3) if ts[t][i] == NO_SEG and tn[t][i] != BOUNDARY], True

    def op_false(item):
        return (), False

    total = len(live)
    monitor = CompletionMonitor(total, rules.rule3_gamma, window=1.0) if rules.rule3_enabled else None
    active = {k for k, _ in items}
    if monitor is not None:
        monitor.observe_many(0.0, total - len(active))

    def after_round(tl, first, last):
        for i in range(tl.left, tl.right + 1):
            if tl.valid[i]:
                included[tl.items[i][0]] += 1
        pending = {}
        for i in range(first, last + 1):
            k, t = tl.items[i]
            if t in visited[k] or included[k] + pending.get(k, 0) >= budget:
                tl.invalidate(i)
            else:
                visited[k].add(t)
                pending[k] = pending.get(k, 0) + 1

    def stop_after_round(tl, rounds):
        nonlocal active
        now = {tl.items[i][0] for i in range(tl.left, tl.right + 1) if tl.valid[i]}
        done = len(active - now)
        active = now
        if monitor is None:
            return False
        monitor.observe_many(float(rounds), done)
        return monitor.should_stop(float(rounds))

    hooks = ExpandHooks(predicate, op_true, op_false, fan_out=3,
                        after_round=after_round, stop_after_round=stop_after_round)
    policy = CompactionPolicy(rules.rule1_compaction_threshold, rules.rule1_enabled)
    est = ExpandStats()
    tl = expand(TupleList.of(items), hooks, policy, executor, stats=est)
    stats.rounds += est.rounds
    stats.tested += est.processed
    stats.stopped_early = stats.stopped_early or est.stopped_early
    if est.stopped_early:
        stats.unfinished += len({tl.items[i][0] for i in range(tl.left, tl.right + 1) if tl.valid[i]})

    keep = executor.map(lambda k: all(table.holds(t, live[k].priority) for t in claimed[k]),
                        range(len(live)))
    for c, ok in zip(live, keep):
        if not ok:
            c.alive = False
            c.reason = "cavity"
    return cands


# --------------------------------------------------------------- insertion

@dataclass
class BatchOutcome:
    attempted: int = 0
    survived: int = 0
    inserted: list = field(default_factory=list)
    retained: list = field(default_factory=list)
    rolled_back: int = 0
    marked_encroached: int = 0
    skipped: int = 0
    flips: int = 0
    stuck: list = field(default_factory=list)

    @property
    def progress(self) -> bool:
        return bool(self.retained) or self.marked_encroached > 0


def _insert_point(m: Mesh, c: SplitCandidate, epoch: int):
    """Insert one surviving candidate; returns the new vertex or None."""
    if c.kind == "seg":
        s = c.element
        if not m.seg_alive[s]:
            return None
        a, b = m.seg_ends[s]
        if midpoint(m.xy[a], m.xy[b]) != c.point:
            return None
        try:
            return m.split_subsegment(s, c.point, birth=epoch)
        except NotInterior:
            return None
    hint = c.tri if c.tri != BOUNDARY and m.talive[c.tri] else m.vtri[m.tv[c.element][0]] \
        if m.talive[c.element] else next(iter(m.triangles()))
    loc = m.locate(c.point, hint)
    if loc.where == "in":
        return m.split_triangle(loc.tri, c.point, VertexKind.CIRCUMCENTER, epoch)
    if loc.where == "edge":
        s = m.ts[loc.tri][loc.index]
        if s != NO_SEG:
            m.seg_encroached[s] = True
            return None
        try:
            return m.split_edge(loc.tri, loc.index, c.point, VertexKind.CIRCUMCENTER, epoch)
        except NotInterior:
            return None
    return None


def _redundant(m: Mesh, prio, mode, pinned):
    """Same-batch circumcenters to roll back, with the subsegments they
    encroach."""
    red, marks = set(), set()
    for v, key in prio.items():
        if not m.valive[v] or m.vkind[v] != VertexKind.CIRCUMCENTER or v in pinned:
            continue
        for t, j in m.star(v):
            s = m.ts[t][j]
            if s != NO_SEG:
                a, b = m.seg_ends[s]
                if encroaches(m.xy[a], m.xy[b], m.xy[v], mode):
                    red.add(v)
                    marks.add(s)
        for w in m.neighbors_of_vertex(v):
            other = prio.get(w)
            if other is not None and (m.vkind[w] == VertexKind.MIDPOINT or other > key):
                red.add(v)
    return red, marks


def insert_batch(m: Mesh, cands, mode: str = "ruppert") -> BatchOutcome:
    """Insert surviving candidates, restore the CDT, and roll back redundant
    circumcenters until none remain."""
    out = BatchOutcome(attempted=len(cands))
    live = sorted((c for c in cands if c.alive), key=lambda c: c.priority, reverse=True)
    out.survived = len(live)
    epoch = m.batch_epoch
    prio, origin = {}, {}
    for c in live:
        v = _insert_point(m, c, epoch)
        if v is None:
            out.skipped += 1
            continue
        prio[v] = c.priority
        origin[v] = c
        out.inserted.append(v)
    edges = [e for v in out.inserted for e in m.star_edges(v)]
    out.flips += m.legalize(edges)

    pinned = set()
    while True:
        red, marks = _redundant(m, prio, mode, pinned)
        for s in marks:
            if not m.seg_encroached[s]:
                m.seg_encroached[s] = True
                out.marked_encroached += 1
            if not can_split_subsegment(m, s):
                # nothing will fix this subsegment, so stop retrying its
                # encroaching triangles
                for v in red:
                    if origin[v].origin is not None:
                        out.stuck.append(origin[v].origin)
        if not red:
            break
        for v in sorted(red, key=lambda v: prio[v]):
            link = m.neighbors_of_vertex(v)
            if m.remove_free_vertex(v):
                out.rolled_back += 1
            else:
                # a failed removal may have flipped spokes already
                pinned.add(v)
                link.append(v)
            out.flips += m.legalize([e for w in link for e in m.star_edges(w)])
    out.retained = [v for v in out.inserted if m.valive[v]]
    return out


# -------------------------------------------------------------- reporting

@dataclass
class QualityReport:
    points: int
    steiner: int
    triangles: int
    bad_triangles: int
    bad_area_percent: float
    min_angle: float
    max_edge: float


def quality_report(m: Mesh, q: QualityCriteria) -> QualityReport:
    tris = m.triangles()
    bad_area = total_area = 0.0
    n_bad = 0
    min_angle = math.inf
    max_edge = 0.0
    for t in tris:
        area = triangle_area(m, t)
        total_area += area
        if is_bad_triangle(m, t, q):
            n_bad += 1
            bad_area += area
        min_angle = min(min_angle, min(triangle_angles(m, t)))
        for i in range(3):
            a, b = m.edge(t, i)
            max_edge = max(max_edge, math.dist(m.xy[a], m.xy[b]))
    pts = m.n_vertices
    steiner = sum(1 for v in m.vertices() if m.vkind[v] != VertexKind.INPUT)
    pct = 100.0 * bad_area / total_area if total_area > 0 else 0.0
    return QualityReport(pts, steiner, len(tris), n_bad, pct,
                         min_angle if tris else 0.0, max_edge)


@dataclass
class EngineConfig:
    quality: QualityCriteria = field(default_factory=QualityCriteria)
    rules: RuleFlags = field(default_factory=RuleFlags)
    execution: str = "sequential"
    threads: int = 1
    seed: int = 0
    cavity_n: int = DEFAULT_CAVITY_N
    iteration_cap: int = DEFAULT_ITERATION_CAP
    batch_cap: int | None = None
    max_vertices: int | None = None
    on_batch: object = None     # callable(mesh, outcome), e.g. per-batch checks


@dataclass
class RunReport:
    batches: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)
    quality: QualityReport | None = None
    wall_time: float = 0.0
    cap_hit: bool = False
    stuck: int = 0
    cavity: CavityStats = field(default_factory=CavityStats)

    @property
    def n_batches(self) -> int:
        return len(self.batches)


def run_batch(m: Mesh, q: QualityCriteria, cfg: EngineConfig, executor, stuck, report: RunReport, index: int):
    """One pass of the pipeline; returns False when nothing is left to do."""
    rules = cfg.rules
    times = {}
    clock = time.perf_counter
    t0 = clock()
    m.begin_batch()
    segs, tris = collect(m, q, rules, executor, stuck)
    t1 = clock()
    times["collect"] = t1 - t0
    if not segs and not tris:
        return False
    cands = make_candidates(m, segs, tris)
    compute_splitting_points(m, cands, executor)
    t2 = clock()
    times["split"] = t2 - t1
    locate_all(m, cands, executor)
    t3 = clock()
    times["locate"] = t3 - t2
    after_locate = sum(c.alive for c in cands)
    if rules.rule2_filtering_enabled:
        claim_filter(m, cands, executor)
        t4 = clock()
        times["claim"] = t4 - t3
        cavity_filter(m, cands, cfg.cavity_n, executor, rules, report.cavity)
        t3 = clock()
        times["cavity"] = t3 - t4
    if cfg.batch_cap is not None:
        live = sorted((c for c in cands if c.alive), key=lambda c: c.priority, reverse=True)
        for c in live[cfg.batch_cap:]:
            c.alive = False
            c.reason = "batch-cap"
    after_filter = sum(c.alive for c in cands)
    outcome = insert_batch(m, cands, q.mode)
    times["insert"] = clock() - t3

    for c in cands:
        if c.origin is not None and (c.reason in ("escaped", "on-vertex")
                                     or c.reason.endswith(":capped")):
            outcome.stuck.append(c.origin)
    stuck.update(outcome.stuck)
    report.stuck = len(stuck)
    report.outcomes.append(outcome)
    report.batches.append(record_batch(
        index, times, len(cands), len(outcome.retained),
        extra={"after_locate": after_locate, "after_filter": after_filter,
               "inserted": len(outcome.inserted), "rolled_back": outcome.rolled_back,
               "marked_encroached": outcome.marked_encroached,
               "vertices": m.n_vertices}))
    if cfg.on_batch is not None:
        cfg.on_batch(m, outcome)
    return True


def refine(m: Mesh, q: QualityCriteria | None = None, cfg: EngineConfig | None = None):
    """Refine m in place until no element is bad; returns (m, RunReport)."""
    cfg = cfg or EngineConfig()
    q = q or cfg.quality
    executor = make_executor(cfg.execution, cfg.threads, cfg.seed)
    report = RunReport()
    stuck: set = set()
    start = time.perf_counter()
    try:
        for index in range(cfg.iteration_cap + 1):
            if index == cfg.iteration_cap:
                report.cap_hit = True
                report.wall_time = time.perf_counter() - start
                report.quality = quality_report(m, q)
                raise IterationCap(f"no fixpoint after {cfg.iteration_cap} batches", m, report)
            if not run_batch(m, q, cfg, executor, stuck, report, index):
                break
            if cfg.max_vertices is not None and len(m.xy) > cfg.max_vertices:
                report.cap_hit = True
                report.wall_time = time.perf_counter() - start
                report.quality = quality_report(m, q)
                raise MemoryCap(f"vertex budget {cfg.max_vertices} exceeded", m, report)
    finally:
        executor.close()
    report.wall_time = time.perf_counter() - start
    report.quality = quality_report(m, q)
    return m, report
