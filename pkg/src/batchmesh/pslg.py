"""Planar straight line graphs and the ``.poly`` text format."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

from .predicates import segments_cross

# Inputs with at most this many segments are checked pairwise.
BRUTE_FORCE_LIMIT = 2000


class PslgError(ValueError):
    pass


class ParseError(PslgError):
    def __init__(self, line, msg):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class CrossingSegments(PslgError):
    def __init__(self, i, j):
        super().__init__(f"segments {i} and {j} cross")
        self.pair = (i, j)


class DuplicatePoint(PslgError):
    def __init__(self, i, j):
        super().__init__(f"points {i} and {j} coincide")
        self.pair = (i, j)


@dataclass
class Pslg:
    points: list[tuple[float, float]]
    segments: list[tuple[int, int]]
    holes: list[tuple[float, float]] = field(default_factory=list)
    regions: list[tuple[float, ...]] = field(default_factory=list)

    def validate(self):
        n = len(self.points)
        for x, y in self.points:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise PslgError(f"non-finite coordinate ({x}, {y})")
        seen = {}
        for i, p in enumerate(self.points):
            if p in seen:
                raise DuplicatePoint(seen[p], i)
            seen[p] = i
        for k, (a, b) in enumerate(self.segments):
            if not (0 <= a < n and 0 <= b < n):
                raise PslgError(f"segment {k} references a missing point")
            if a == b:
                raise PslgError(f"segment {k} is degenerate")
        pair = find_crossing(self.points, self.segments)
        if pair is not None:
            raise CrossingSegments(*pair)
        return self


def _crossing_pairs_brute(points, segments):
    for i in range(len(segments)):
        a, b = segments[i]
        pa, pb = points[a], points[b]
        for j in range(i + 1, len(segments)):
            c, d = segments[j]
            if segments_cross(pa, pb, points[c], points[d]):
                yield i, j


def find_crossing_brute(points, segments):
    return next(_crossing_pairs_brute(points, segments), None)


def find_crossing(points, segments):
    """First crossing pair (i, j) or None.

    Pairwise below ``BRUTE_FORCE_LIMIT`` segments; above it, segments are
    bucketed on a uniform grid and only pairs sharing a cell are tested.
    """
    if len(segments) <= BRUTE_FORCE_LIMIT:
        return find_crossing_brute(points, segments)
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x0, y0 = min(xs), min(ys)
    span = max(max(xs) - x0, max(ys) - y0) or 1.0
    cells_per_side = max(1, int(math.sqrt(len(segments))))
    h = span / cells_per_side
    grid = defaultdict(list)
    for k, (a, b) in enumerate(segments):
        (ax, ay), (bx, by) = points[a], points[b]
        i0, i1 = sorted((int((ax - x0) / h), int((bx - x0) / h)))
        j0, j1 = sorted((int((ay - y0) / h), int((by - y0) / h)))
        # bounding-box cells, widened by one to absorb rounding at borders
        for i in range(i0 - 1, i1 + 2):
            for j in range(j0 - 1, j1 + 2):
                grid[i, j].append(k)
    best = None
    tested = set()
    for members in grid.values():
        for u in range(len(members)):
            for v in range(u + 1, len(members)):
                i, j = members[u], members[v]
                if (i, j) in tested:
                    continue
                tested.add((i, j))
                a, b = segments[i]
                c, d = segments[j]
                if segments_cross(points[a], points[b], points[c], points[d]):
                    if best is None or (i, j) < best:
                        best = (i, j)
    return best


def _data_lines(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def read_poly(text: str, dedup: bool = True) -> Pslg:
    """Parse ``.poly`` text into a validated :class:`Pslg`.

    Indices may be 0- or 1-based; the base is taken from the first vertex.
    Exactly coincident vertices are merged when ``dedup`` is set, otherwise
    they raise :class:`DuplicatePoint`.
    """
    lines = list(_data_lines(text))
    pos = 0

    def take(what):
        nonlocal pos
        if pos >= len(lines):
            last = lines[-1][0] if lines else 0
            raise ParseError(last, f"unexpected end of file, expected {what}")
        item = lines[pos]
        pos += 1
        return item

    def num(tok, lineno, kind=float):
        try:
            return kind(tok)
        except ValueError:
            raise ParseError(lineno, f"bad number {tok!r}") from None

    lineno, head = take("vertex header")
    nverts = num(head[0], lineno, int)
    dim = num(head[1], lineno, int) if len(head) > 1 else 2
    nattr = num(head[2], lineno, int) if len(head) > 2 else 0
    if nverts <= 0:
        raise ParseError(lineno, "vertices must be listed inline (count > 0)")
    if dim != 2:
        raise ParseError(lineno, f"dimension must be 2, got {dim}")

    raw_ids = []
    points = []
    for _ in range(nverts):
        lineno, tok = take("vertex line")
        if len(tok) < 3:
            raise ParseError(lineno, "vertex line needs index, x and y")
        raw_ids.append(num(tok[0], lineno, int))
        x, y = num(tok[1], lineno), num(tok[2], lineno)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ParseError(lineno, "non-finite coordinate")
        points.append((x, y))
    base = raw_ids[0]
    if base not in (0, 1):
        raise ParseError(lines[1][0], f"first vertex index must be 0 or 1, got {base}")
    index_of = {}
    for k, rid in enumerate(raw_ids):
        index_of[rid] = k

    segments = []
    if pos < len(lines):
        lineno, head = take("segment header")
        nsegs = num(head[0], lineno, int)
        for _ in range(nsegs):
            lineno, tok = take("segment line")
            if len(tok) < 3:
                raise ParseError(lineno, "segment line needs index and two endpoints")
            a, b = num(tok[1], lineno, int), num(tok[2], lineno, int)
            if a not in index_of or b not in index_of:
                raise ParseError(lineno, f"segment endpoint out of range ({a}, {b})")
            segments.append((index_of[a], index_of[b]))

    holes = []
    if pos < len(lines):
        lineno, head = take("hole header")
        for _ in range(num(head[0], lineno, int)):
            lineno, tok = take("hole line")
            holes.append((num(tok[1], lineno), num(tok[2], lineno)))

    regions = []
    if pos < len(lines):
        lineno, head = take("region header")
        for _ in range(num(head[0], lineno, int)):
            lineno, tok = take("region line")
            regions.append(tuple(num(t, lineno) for t in tok[1:]))

    if dedup:
        points, segments = _merge_duplicates(points, segments)
    return Pslg(points, segments, holes, regions).validate()


def _merge_duplicates(points, segments):
    first = {}
    remap = []
    kept = []
    for p in points:
        if p not in first:
            first[p] = len(kept)
            kept.append(p)
        remap.append(first[p])
    segs = []
    seen = set()
    for a, b in segments:
        a, b = remap[a], remap[b]
        key = (min(a, b), max(a, b))
        if a != b and key not in seen:
            seen.add(key)
            segs.append((a, b))
    return kept, segs


def fmt(x: float) -> str:
    """Shortest round-trip decimal form."""
    return repr(float(x))


def write_poly(pslg: Pslg, base: int = 0) -> str:
    out = [f"{len(pslg.points)} 2 0 0"]
    for k, (x, y) in enumerate(pslg.points):
        out.append(f"{k + base} {fmt(x)} {fmt(y)}")
    out.append(f"{len(pslg.segments)} 0")
    for k, (a, b) in enumerate(pslg.segments):
        out.append(f"{k + base} {a + base} {b + base}")
    out.append(f"{len(pslg.holes)}")
    for k, (x, y) in enumerate(pslg.holes):
        out.append(f"{k + base} {fmt(x)} {fmt(y)}")
    if pslg.regions:
        out.append(f"{len(pslg.regions)}")
        for k, reg in enumerate(pslg.regions):
            out.append(" ".join([str(k + base)] + [fmt(v) for v in reg]))
    return "\n".join(out) + "\n"


def input_angles(pslg: Pslg):
    """Yield (apex, i, j, angle_deg) for each pair of segments sharing an endpoint,
    measuring the smaller angle between them."""
    around = defaultdict(list)
    for k, (a, b) in enumerate(pslg.segments):
        around[a].append((k, b))
        around[b].append((k, a))
    pts = pslg.points
    for v, inc in around.items():
        if len(inc) < 2:
            continue
        px, py = pts[v]
        dirs = sorted(
            (math.atan2(pts[w][1] - py, pts[w][0] - px), k) for k, w in inc)
        for idx in range(len(dirs)):
            a1, k1 = dirs[idx]
            a2, k2 = dirs[(idx + 1) % len(dirs)]
            gap = (a2 - a1) % (2 * math.pi)
            if len(dirs) == 2 and idx == 1:
                break
            ang = math.degrees(min(gap, 2 * math.pi - gap) if len(dirs) == 2 else gap)
            yield v, k1, k2, ang
