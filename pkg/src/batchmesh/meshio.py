"""Mesh output: .node/.ele text, SVG rendering, metrics files."""

from __future__ import annotations

import json
from dataclasses import asdict

from .mesh import Mesh, VertexKind
from .pslg import ParseError, fmt
from .rules import emit_metrics

INPUT_MARKER = 1
STEINER_MARKER = 0


def write_node_ele(m: Mesh, base: int = 0):
    """Return (node text, ele text) with vertices renumbered densely.

    Node markers are 1 for input vertices and 0 for Steiner points.
    Coordinates are written with ``repr`` so they round-trip exactly.
    """
    verts = m.vertices()
    index = {v: k for k, v in enumerate(verts)}
    node = [f"{len(verts)} 2 0 1"]
    for k, v in enumerate(verts):
        x, y = m.xy[v]
        marker = INPUT_MARKER if m.vkind[v] == VertexKind.INPUT else STEINER_MARKER
        node.append(f"{k + base} {fmt(x)} {fmt(y)} {marker}")
    tris = m.triangles()
    ele = [f"{len(tris)} 3 0"]
    for k, t in enumerate(tris):
        a, b, c = (index[v] + base for v in m.tv[t])
        ele.append(f"{k + base} {a} {b} {c}")
    return "\n".join(node) + "\n", "\n".join(ele) + "\n"


def _data_lines(text):
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield no, line.split()


def read_node_ele(node_text: str, ele_text: str):
    """Parse .node/.ele text into (points, markers, triangles), 0-based."""
    lines = list(_data_lines(node_text))
    if not lines:
        raise ParseError(0, "empty node file")
    no, head = lines[0]
    try:
        n = int(head[0])
        n_markers = int(head[3]) if len(head) > 3 else 0
        n_attr = int(head[2]) if len(head) > 2 else 0
    except (ValueError, IndexError) as e:
        raise ParseError(no, f"bad node header: {e}") from None
    rows = lines[1:1 + n]
    if len(rows) != n:
        raise ParseError(no, f"expected {n} vertices, found {len(rows)}")
    base = int(rows[0][1][0]) if rows else 0
    points, markers = [], []
    for no, f in rows:
        try:
            points.append((float(f[1]), float(f[2])))
            markers.append(int(f[3 + n_attr]) if n_markers else 0)
        except (ValueError, IndexError) as e:
            raise ParseError(no, f"bad vertex line: {e}") from None
    tris = []
    elines = list(_data_lines(ele_text))
    if elines:
        no, head = elines[0]
        count = int(head[0])
        for no, f in elines[1:1 + count]:
            try:
                tris.append(tuple(int(x) - base for x in f[1:4]))
            except ValueError as e:
                raise ParseError(no, f"bad triangle line: {e}") from None
    return points, markers, tris


def write_svg(m: Mesh, quality=None, width: int = 800, stroke: float = 0.5) -> str:
    """SVG drawing: triangles, subsegments emphasised, bad triangles filled
    when ``quality`` criteria are given."""
    from .refine import is_bad_triangle

    verts = m.vertices()
    if not verts:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{width}"/>\n'
    xs = [m.xy[v][0] for v in verts]
    ys = [m.xy[v][1] for v in verts]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    span = max(x1 - x0, y1 - y0) or 1.0
    scale = (width - 20) / span
    height = int((y1 - y0) * scale) + 20

    def pt(v):
        x, y = m.xy[v]
        return f"{(x - x0) * scale + 10:.3f},{(y1 - y) * scale + 10:.3f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           '<g fill="none" stroke="#555" stroke-width="%s">' % stroke]
    bad = []
    for t in m.triangles():
        pts = " ".join(pt(v) for v in m.tv[t])
        if quality is not None and is_bad_triangle(m, t, quality):
            bad.append(pts)
        out.append(f'<polygon points="{pts}"/>')
    out.append("</g>")
    if bad:
        out.append('<g fill="#e33" fill-opacity="0.6" stroke="none">')
        out += [f'<polygon points="{p}"/>' for p in bad]
        out.append("</g>")
    out.append('<g stroke="#000" stroke-width="%s">' % (3 * stroke))
    for s in m.subsegments():
        a, b = m.seg_ends[s]
        (ax, ay), (bx, by) = pt(a).split(","), pt(b).split(",")
        out.append(f'<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_metrics(report, flags=None) -> str:
    """Per-batch records as NDJSON followed by one summary record."""
    text = emit_metrics(report.batches, flags)
    summary = {"summary": True, "batches": report.n_batches, "wall_time_ns": int(report.wall_time * 1e9),
               "cap_hit": report.cap_hit}
    if report.quality is not None:
        summary.update(asdict(report.quality))
    return text + json.dumps(summary, sort_keys=True) + "\n"
