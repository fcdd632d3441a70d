"""Generated PSLGs for testing and benchmarking.

Every ``corpus()`` entry keeps all angles between incident segments at 60
degrees or more, counting hull edges that refinement promotes to segments.
Interior points sit on a jittered grid and keep clear of segments, so the
inputs have no artificially tiny features.  ``small_angle_fixture`` builds
wedges with a sharp apex on purpose.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .pslg import Pslg


@dataclass
class CorpusEntry:
    name: str
    pslg: Pslg
    convex: bool


def _polygon(points, loops):
    """Add closed loops of points to (points, segments)."""
    segs = []
    for loop in loops:
        ids = []
        for p in loop:
            ids.append(len(points))
            points.append(p)
        segs += [(ids[k], ids[(k + 1) % len(ids)]) for k in range(len(ids))]
    return segs


def _subdivide(loop, pieces):
    out = []
    for k in range(len(loop)):
        (x0, y0), (x1, y1) = loop[k], loop[(k + 1) % len(loop)]
        for j in range(pieces):
            f = j / pieces
            out.append((x0 + f * (x1 - x0), y0 + f * (y1 - y0)))
    return out


def _seg_dist(p, a, b):
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    L = dx * dx + dy * dy
    f = 0.0 if L == 0 else max(0.0, min(1.0, ((p[0] - ax) * dx + (p[1] - ay) * dy) / L))
    return math.hypot(p[0] - ax - f * dx, p[1] - ay - f * dy)


def _inside(p, loop):
    x, y = p
    inside = False
    for k in range(len(loop)):
        (x0, y0), (x1, y1) = loop[k], loop[(k - 1) % len(loop)]
        if (y0 > y) != (y1 > y) and x < x0 + (y - y0) * (x1 - x0) / (y1 - y0):
            inside = not inside
    return inside


def _fill(points, segs, outline, n, rng):
    """About n jittered-grid points inside outline, away from every segment."""
    xs = [p[0] for p in outline]
    ys = [p[1] for p in outline]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    area = abs(sum(outline[k][0] * outline[k - 1][1] - outline[k - 1][0] * outline[k][1]
                   for k in range(len(outline)))) / 2
    h = math.sqrt(area / max(n, 1))
    seg_pts = [(points[a], points[b]) for a, b in segs]
    nx, ny = int((x1 - x0) / h) + 1, int((y1 - y0) / h) + 1
    for i in range(nx):
        for j in range(ny):
            p = (x0 + (i + 0.5 + rng.uniform(-0.3, 0.3)) * h,
                 y0 + (j + 0.5 + rng.uniform(-0.3, 0.3)) * h)
            if not _inside(p, outline):
                continue
            if any(_seg_dist(p, a, b) < 0.45 * h for a, b in seg_pts):
                continue
            points.append(p)


def convex_polygon(sides: int, n: int, seed: int = 0) -> Pslg:
    rng = random.Random(seed)
    loop = [(math.cos(2 * math.pi * k / sides), math.sin(2 * math.pi * k / sides)) for k in range(sides)]
    points = []
    segs = _polygon(points, [loop])
    _fill(points, segs, loop, n, rng)
    return Pslg(points, segs)


def box_with_polygons(polys, n: int, seed: int = 0, size: float = 10.0, pieces: int = 1) -> Pslg:
    """Square box with axis-aligned interior polygons (non-convex PSLG).

    ``pieces`` splits each box side into collinear segments; the sides are
    axis-aligned, so the split points stay exactly on them.
    """
    rng = random.Random(seed)
    box = [(0.0, 0.0), (size, 0.0), (size, size), (0.0, size)]
    points = []
    segs = _polygon(points, [_subdivide(box, pieces)] + list(polys))
    _fill(points, segs, box, n, rng)
    return Pslg(points, segs)


def comb(teeth: int, n: int, seed: int = 0) -> Pslg:
    """Comb-shaped outline; slots run up to the hull line, so hull edges
    promoted to segments meet the slot walls at right angles."""
    rng = random.Random(seed)
    w = 1.0
    loop = [(0.0, 0.0), (2 * teeth * w + w, 0.0), (2 * teeth * w + w, 4.0)]
    for k in range(teeth, 0, -1):
        x = 2 * k * w
        loop += [(x, 4.0), (x, 1.5), (x - w, 1.5), (x - w, 4.0)]
    loop.append((0.0, 4.0))
    points = []
    segs = _polygon(points, [loop])
    _fill(points, segs, loop, n, rng)
    return Pslg(points, segs)


def slits(count: int, n: int, seed: int = 0, size: float = 10.0) -> Pslg:
    """Box with dangling interior segments."""
    rng = random.Random(seed)
    box = [(0.0, 0.0), (size, 0.0), (size, size), (0.0, size)]
    points = []
    segs = _polygon(points, [box])
    rows = int(math.ceil(math.sqrt(count)))
    cell = size / (rows + 1)
    made = 0
    for i in range(rows):
        for j in range(rows):
            if made == count:
                break
            cx, cy = (i + 1) * cell, (j + 1) * cell
            ang = rng.uniform(0, math.pi)
            dx, dy = 0.3 * cell * math.cos(ang), 0.3 * cell * math.sin(ang)
            points += [(cx - dx, cy - dy), (cx + dx, cy + dy)]
            segs.append((len(points) - 2, len(points) - 1))
            made += 1
    _fill(points, segs, box, n, rng)
    return Pslg(points, segs)


L_SHAPE = [(2.0, 2.0), (5.0, 2.0), (5.0, 3.0), (3.0, 3.0), (3.0, 5.0), (2.0, 5.0)]
U_SHAPE = [(6.0, 6.0), (9.0, 6.0), (9.0, 9.0), (8.0, 9.0), (8.0, 7.0), (7.0, 7.0), (7.0, 9.0), (6.0, 9.0)]
PLUS = [(4.0, 2.0), (6.0, 2.0), (6.0, 4.0), (8.0, 4.0), (8.0, 6.0), (6.0, 6.0), (6.0, 8.0),
        (4.0, 8.0), (4.0, 6.0), (2.0, 6.0), (2.0, 4.0), (4.0, 4.0)]


def corpus(max_points: int | None = None) -> list[CorpusEntry]:
    """Ten-plus PSLGs from about 10^2 to 10^4 input vertices."""
    entries = [
        CorpusEntry("square-100", box_with_polygons([], 100, seed=1), True),
        CorpusEntry("u-outline-200", comb(1, 200, seed=2), False),
        CorpusEntry("hexagon-300", convex_polygon(6, 300, seed=3), True),
        CorpusEntry("l-polygon-500", box_with_polygons([L_SHAPE], 500, seed=4), False),
        CorpusEntry("octagon-800", convex_polygon(8, 800, seed=5), True),
        CorpusEntry("slits-1000", slits(12, 1000, seed=6), True),
        CorpusEntry("plus-1500", box_with_polygons([PLUS], 1500, seed=7), False),
        CorpusEntry("comb-2000", comb(4, 2000, seed=8), False),
        CorpusEntry("two-polygons-4000", box_with_polygons([L_SHAPE, U_SHAPE], 4000, seed=9), False),
        CorpusEntry("square-10000", box_with_polygons([], 10000, seed=10, pieces=8), True),
    ]
    if max_points is not None:
        entries = [e for e in entries if len(e.pslg.points) <= max_points]
    return entries


def small_angle_fixture(angle_deg: float, n: int = 0, seed: int = 0) -> Pslg:
    """Isosceles wedge with apex angle ``angle_deg`` at the origin (vertex 0).

    Segments 0 and 2 meet at the apex.
    """
    rng = random.Random(seed)
    a = math.radians(angle_deg)
    loop = [(0.0, 0.0), (10.0, 0.0), (10.0 * math.cos(a), 10.0 * math.sin(a))]
    points = []
    segs = _polygon(points, [loop])
    if n:
        _fill(points, segs, loop, n, rng)
    return Pslg(points, segs)


def small_angle_cluster(m, pslg: Pslg, threshold_deg: float = 60.0):
    """Vertices on segments that meet at an input angle below the threshold,
    including the shared apex."""
    from .pslg import input_angles

    parents = set()
    for apex, i, j, ang in input_angles(pslg):
        if ang < threshold_deg:
            parents.update((i, j))
    cluster = set()
    for s in m.subsegments():
        if m.seg_parent[s] in parents:
            cluster.update(m.seg_ends[s])
    return cluster
