"""Exact-decision geometric predicates on float coordinates.

Every predicate evaluates a floating-point approximation first and only
falls back to exact rational arithmetic when the rounding error bound
cannot certify the sign.  The results are therefore exact with respect to
the real value of the determinant on the given (float) inputs.
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction

_EPS = 2.0 ** -53
_CCW_BOUND = (3.0 + 16.0 * _EPS) * _EPS
_ICC_BOUND = (10.0 + 96.0 * _EPS) * _EPS
_DOT_BOUND = 8.0 * _EPS

# Lens half-width: a point sees the subsegment under at least this angle.
LENS_ANGLE_DEG = 120.0


class Orientation(enum.IntEnum):
    NEGATIVE = -1
    ZERO = 0
    POSITIVE = 1


def _orient_exact(a, b, c) -> int:
    ax, ay = Fraction(a[0]), Fraction(a[1])
    det = (Fraction(b[0]) - ax) * (Fraction(c[1]) - ay) - (Fraction(b[1]) - ay) * (Fraction(c[0]) - ax)
    return (det > 0) - (det < 0)


def orient_sign(a, b, c) -> int:
    """Sign of the orientation determinant as a plain int (-1, 0, 1).

    Hot-path variant of :func:`orient2d` used by the mesh kernel.
    """
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    bound = _CCW_BOUND * (abs(detleft) + abs(detright))
    if det > bound:
        return 1
    if -det > bound:
        return -1
    return _orient_exact(a, b, c)


def orient2d(a, b, c) -> Orientation:
    """POSITIVE if a, b, c turn counter-clockwise, NEGATIVE if clockwise."""
    return Orientation(orient_sign(a, b, c))


def _incircle_exact(a, b, c, d) -> int:
    dx, dy = Fraction(d[0]), Fraction(d[1])
    adx, ady = Fraction(a[0]) - dx, Fraction(a[1]) - dy
    bdx, bdy = Fraction(b[0]) - dx, Fraction(b[1]) - dy
    cdx, cdy = Fraction(c[0]) - dx, Fraction(c[1]) - dy
    det = ((adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
           + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
           + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady))
    return (det > 0) - (det < 0)


def incircle_sign(a, b, c, d) -> int:
    adx = a[0] - d[0]
    bdx = b[0] - d[0]
    cdx = c[0] - d[0]
    ady = a[1] - d[1]
    bdy = b[1] - d[1]
    cdy = c[1] - d[1]

    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    alift = adx * adx + ady * ady
    cdxady = cdx * ady
    adxcdy = adx * cdy
    blift = bdx * bdx + bdy * bdy
    adxbdy = adx * bdy
    bdxady = bdx * ady
    clift = cdx * cdx + cdy * cdy

    det = (alift * (bdxcdy - cdxbdy)
           + blift * (cdxady - adxcdy)
           + clift * (adxbdy - bdxady))
    permanent = ((abs(bdxcdy) + abs(cdxbdy)) * alift
                 + (abs(cdxady) + abs(adxcdy)) * blift
                 + (abs(adxbdy) + abs(bdxady)) * clift)
    bound = _ICC_BOUND * permanent
    if det > bound:
        return 1
    if -det > bound:
        return -1
    return _incircle_exact(a, b, c, d)


def incircle(a, b, c, d) -> Orientation:
    """POSITIVE iff d lies strictly inside the circle through CCW a, b, c."""
    return Orientation(incircle_sign(a, b, c, d))


def _dot_sign(p, a, b) -> int:
    """Sign of (a - p) . (b - p)."""
    ux, uy = a[0] - p[0], a[1] - p[1]
    vx, vy = b[0] - p[0], b[1] - p[1]
    s1 = ux * vx
    s2 = uy * vy
    dot = s1 + s2
    # differences, products and the sum each contribute at most eps relative error
    bound = _DOT_BOUND * (abs(s1) + abs(s2))
    if dot > bound:
        return 1
    if -dot > bound:
        return -1
    px, py = Fraction(p[0]), Fraction(p[1])
    d = ((Fraction(a[0]) - px) * (Fraction(b[0]) - px)
         + (Fraction(a[1]) - py) * (Fraction(b[1]) - py))
    return (d > 0) - (d < 0)


def in_diametric_circle(sa, sb, p) -> bool:
    """True iff p is strictly inside the circle with diameter sa-sb.

    Uses the Thales identity: inside exactly when the two vectors from p
    to the endpoints form an obtuse angle.
    """
    return _dot_sign(p, sa, sb) < 0


def in_diametral_lens(sa, sb, p, angle_deg: float = LENS_ANGLE_DEG) -> bool:
    """True iff sa-sb subtends an angle of at least ``angle_deg`` at p."""
    if p[0] == sa[0] and p[1] == sa[1] or p[0] == sb[0] and p[1] == sb[1]:
        return False
    if _dot_sign(p, sa, sb) >= 0:
        return False
    # angle >= A  <=>  cos <= cos(A) < 0  <=>  dot^2 >= cos(A)^2 |u|^2 |v|^2
    cos_a = math.cos(math.radians(angle_deg))
    fux, fuy = sa[0] - p[0], sa[1] - p[1]
    fvx, fvy = sb[0] - p[0], sb[1] - p[1]
    fdot = fux * fvx + fuy * fvy
    lhs = fdot * fdot
    rhs = cos_a * cos_a * (fux * fux + fuy * fuy) * (fvx * fvx + fvy * fvy)
    if abs(lhs - rhs) > 1e-9 * (lhs + rhs):
        return lhs > rhs
    px, py = Fraction(p[0]), Fraction(p[1])
    ux, uy = Fraction(sa[0]) - px, Fraction(sa[1]) - py
    vx, vy = Fraction(sb[0]) - px, Fraction(sb[1]) - py
    dot = ux * vx + uy * vy
    if angle_deg == 120.0:
        c2 = Fraction(1, 4)
    else:
        c2 = Fraction(cos_a) ** 2
    return dot * dot >= c2 * (ux * ux + uy * uy) * (vx * vx + vy * vy)


def encroaches(sa, sb, p, mode: str = "ruppert") -> bool:
    if mode == "chew":
        return in_diametral_lens(sa, sb, p)
    return in_diametric_circle(sa, sb, p)


def segments_cross(a, b, c, d) -> bool:
    """True iff closed segments ab and cd share a point other than a common endpoint.

    Touching at a shared endpoint is allowed; overlapping collinear pieces and
    T-junctions count as crossings.
    """
    shared = {tuple(a), tuple(b)} & {tuple(c), tuple(d)}
    o1 = orient_sign(a, b, c)
    o2 = orient_sign(a, b, d)
    o3 = orient_sign(c, d, a)
    o4 = orient_sign(c, d, b)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    if o1 == 0 and o2 == 0:
        # collinear: overlap beyond a single shared endpoint
        if a[0] != b[0]:
            k = 0
        else:
            k = 1
        lo1, hi1 = sorted((a[k], b[k]))
        lo2, hi2 = sorted((c[k], d[k]))
        lo, hi = max(lo1, lo2), min(hi1, hi2)
        if lo < hi:
            return True
        if lo == hi:
            return not shared
        return False
    # an endpoint of one segment lying on the other
    for o, p, (s, t) in ((o1, c, (a, b)), (o2, d, (a, b)), (o3, a, (c, d)), (o4, b, (c, d))):
        if o == 0 and _on_closed_segment(s, t, p) and tuple(p) not in shared:
            return True
    return False


def _on_closed_segment(s, t, p) -> bool:
    return min(s[0], t[0]) <= p[0] <= max(s[0], t[0]) and min(s[1], t[1]) <= p[1] <= max(s[1], t[1])


def properly_crosses(a, b, c, d) -> bool:
    """Segment ab passes through the relative interior of segment cd.

    Includes the case of ab passing exactly through an interior point of cd
    but excludes contact only at c or d.
    """
    o3 = orient_sign(c, d, a)
    o4 = orient_sign(c, d, b)
    if o3 * o4 > 0 or (o3 == 0 and o4 == 0):
        return False
    o1 = orient_sign(a, b, c)
    o2 = orient_sign(a, b, d)
    return o1 * o2 < 0
