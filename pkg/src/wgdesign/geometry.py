"""Planar primitives (straight segments, circular arcs) and their intersections.

Coordinates are in mm.  Arc angles are in degrees, measured counter-clockwise
from +x; a positive sweep turns left (counter-clockwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

TOL = 1e-9  # mm


def cos_sin_deg(theta: float):
    """cos/sin of an angle in degrees, exact at multiples of 90."""
    q, r = divmod(theta, 90.0)
    if r == 0.0:
        return ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))[int(q) % 4]
    rad = math.radians(theta)
    return math.cos(rad), math.sin(rad)


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _fold_angle(ux, uy, vx, vy) -> float:
    """Acute angle in degrees between two direction vectors, in [0, 90]."""
    nu = math.hypot(ux, uy)
    nv = math.hypot(vx, vy)
    c = abs(ux * vx + uy * vy) / (nu * nv)
    return math.degrees(math.acos(min(1.0, c)))


@dataclass(frozen=True)
class Segment:
    start: tuple
    end: tuple

    kind = "segment"

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])

    def point_at(self, s: float):
        t = s / self.length
        return (self.start[0] + t * (self.end[0] - self.start[0]),
                self.start[1] + t * (self.end[1] - self.start[1]))

    def tangent_at(self, s: float = 0.0):
        L = self.length
        return ((self.end[0] - self.start[0]) / L, (self.end[1] - self.start[1]) / L)

    def bbox(self):
        (x0, y0), (x1, y1) = self.start, self.end
        return (min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))

    def scaled(self, k: float) -> "Segment":
        return Segment((self.start[0] * k, self.start[1] * k), (self.end[0] * k, self.end[1] * k))


@dataclass(frozen=True)
class Arc:
    center: tuple
    radius: float
    start_deg: float
    sweep_deg: float

    kind = "arc"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("arc radius must be positive")
        if self.sweep_deg == 0 or abs(self.sweep_deg) >= 360:
            raise ValueError("arc sweep must be non-zero and less than a full turn")

    @property
    def length(self) -> float:
        return self.radius * math.radians(abs(self.sweep_deg))

    @property
    def turn_deg(self) -> float:
        return abs(self.sweep_deg)

    def _point_at_angle(self, theta):
        c, s = cos_sin_deg(theta)
        return (self.center[0] + self.radius * c, self.center[1] + self.radius * s)

    @property
    def start(self):
        return self._point_at_angle(self.start_deg)

    @property
    def end(self):
        return self._point_at_angle(self.start_deg + self.sweep_deg)

    def angle_at(self, s: float) -> float:
        return self.start_deg + math.copysign(math.degrees(s / self.radius), self.sweep_deg)

    def point_at(self, s: float):
        return self._point_at_angle(self.angle_at(s))

    def tangent_at(self, s: float = 0.0):
        c, sn = cos_sin_deg(self.angle_at(s))
        sign = 1.0 if self.sweep_deg > 0 else -1.0
        return (-sn * sign, c * sign)

    def offset_of(self, theta: float) -> float:
        """Angular distance (deg) from the start to ``theta`` along the sweep."""
        d = (theta - self.start_deg) if self.sweep_deg > 0 else (self.start_deg - theta)
        return d % 360.0

    def contains_angle(self, theta: float, tol_deg: float) -> bool:
        off = self.offset_of(theta)
        return off <= abs(self.sweep_deg) + tol_deg or off >= 360.0 - tol_deg

    def bbox(self):
        pts = [self.start, self.end]
        lo = min(self.start_deg, self.start_deg + self.sweep_deg)
        hi = max(self.start_deg, self.start_deg + self.sweep_deg)
        k = math.ceil(lo / 90.0)
        while k * 90.0 <= hi:
            pts.append(self._point_at_angle(k * 90.0))
            k += 1
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        return (min(xs), min(ys), max(xs), max(ys))

    def scaled(self, k: float) -> "Arc":
        return Arc((self.center[0] * k, self.center[1] * k), self.radius * k,
                   self.start_deg, self.sweep_deg)


class Hit(NamedTuple):
    point: tuple
    s_a: float          # arc-length position along the first primitive
    s_b: float          # ... and along the second
    angle_deg: float    # acute angle between the tangents
    degenerate: str     # "" for a transversal crossing, else "tangent" / "overlap"


def _arc_s(arc: Arc, theta: float, tol_deg: float) -> float:
    off = arc.offset_of(theta)
    if off >= 360.0 - tol_deg:
        off = 0.0
    return math.radians(min(off, abs(arc.sweep_deg))) * arc.radius


def _seg_seg(a: Segment, b: Segment, tol: float):
    (px, py), (qx, qy) = a.start, b.start
    dx1, dy1 = a.end[0] - px, a.end[1] - py
    dx2, dy2 = b.end[0] - qx, b.end[1] - qy
    la, lb = math.hypot(dx1, dy1), math.hypot(dx2, dy2)
    denom = _cross(dx1, dy1, dx2, dy2)
    wx, wy = qx - px, qy - py
    if abs(denom) <= tol * max(la, lb, 1.0):
        # parallel; collinear overlap is a degenerate contact
        if abs(_cross(dx1, dy1, wx, wy)) / la > tol:
            return []
        t0 = (wx * dx1 + wy * dy1) / (la * la)
        t1 = ((b.end[0] - px) * dx1 + (b.end[1] - py) * dy1) / (la * la)
        lo, hi = max(0.0, min(t0, t1)), min(1.0, max(t0, t1))
        if hi * la < lo * la - tol:
            return []
        mid = 0.5 * (lo + hi)
        pt = (px + mid * dx1, py + mid * dy1)
        sb = math.hypot(pt[0] - qx, pt[1] - qy)
        kind = "overlap" if (hi - lo) * la > tol else "tangent"
        return [Hit(pt, mid * la, sb, 0.0, kind)]
    t = _cross(wx, wy, dx2, dy2) / denom
    u = _cross(wx, wy, dx1, dy1) / denom
    ta, tb = tol / la, tol / lb
    if -ta <= t <= 1 + ta and -tb <= u <= 1 + tb:
        t = min(1.0, max(0.0, t))
        u = min(1.0, max(0.0, u))
        pt = (px + t * dx1, py + t * dy1)
        return [Hit(pt, t * la, u * lb, _fold_angle(dx1, dy1, dx2, dy2), "")]
    return []


def _seg_arc(a: Segment, b: Arc, tol: float):
    (px, py) = a.start
    dx, dy = a.end[0] - px, a.end[1] - py
    L = math.hypot(dx, dy)
    ux, uy = dx / L, dy / L
    cx, cy = b.center
    R = b.radius
    # foot of the perpendicular from the circle centre onto the line
    proj = (cx - px) * ux + (cy - py) * uy
    fx, fy = px + proj * ux, py + proj * uy
    dist = math.hypot(cx - fx, cy - fy)
    tol_deg = math.degrees(tol / R)
    if dist > R + tol:
        return []
    out = []
    if abs(dist - R) <= tol:
        cands = [(proj, "tangent")]
    else:
        h = math.sqrt(max(R * R - dist * dist, 0.0))
        cands = [(proj - h, ""), (proj + h, "")]
    for s, kind in cands:
        if not (-tol <= s <= L + tol):
            continue
        s = min(L, max(0.0, s))
        x, y = px + s * ux, py + s * uy
        theta = math.degrees(math.atan2(y - cy, x - cx))
        if not b.contains_angle(theta, tol_deg):
            continue
        tx, ty = -(y - cy), (x - cx)
        angle = 0.0 if kind else _fold_angle(ux, uy, tx, ty)
        out.append(Hit((x, y), s, _arc_s(b, theta, tol_deg), angle, kind))
    return out


def _arc_arc(a: Arc, b: Arc, tol: float):
    (x1, y1), (x2, y2) = a.center, b.center
    r1, r2 = a.radius, b.radius
    dx, dy = x2 - x1, y2 - y1
    d = math.hypot(dx, dy)
    tol_a = math.degrees(tol / r1)
    tol_b = math.degrees(tol / r2)
    if d <= tol and abs(r1 - r2) <= tol:
        # same circle: report any shared stretch once, at its midpoint
        for theta in (b.start_deg, b.start_deg + b.sweep_deg,
                      a.start_deg, a.start_deg + a.sweep_deg):
            if a.contains_angle(theta, tol_a) and b.contains_angle(theta, tol_b):
                pt = a._point_at_angle(theta)
                return [Hit(pt, _arc_s(a, theta, tol_a), _arc_s(b, theta, tol_b), 0.0, "overlap")]
        return []
    if d > r1 + r2 + tol or d < abs(r1 - r2) - tol or d <= tol:
        return []
    ex, ey = dx / d, dy / d
    along = (r1 * r1 - r2 * r2 + d * d) / (2 * d)
    if abs(d - (r1 + r2)) <= tol or abs(d - abs(r1 - r2)) <= tol:
        cands = [((x1 + along * ex, y1 + along * ey), "tangent")]
    else:
        h = math.sqrt(max(r1 * r1 - along * along, 0.0))
        bx, by = x1 + along * ex, y1 + along * ey
        cands = [((bx - h * ey, by + h * ex), ""), ((bx + h * ey, by - h * ex), "")]
    out = []
    for (x, y), kind in cands:
        ta = math.degrees(math.atan2(y - y1, x - x1))
        tb = math.degrees(math.atan2(y - y2, x - x2))
        if not (a.contains_angle(ta, tol_a) and b.contains_angle(tb, tol_b)):
            continue
        angle = 0.0 if kind else _fold_angle(-(y - y1), x - x1, -(y - y2), x - x2)
        out.append(Hit((x, y), _arc_s(a, ta, tol_a), _arc_s(b, tb, tol_b), angle, kind))
    return out


def intersect(a, b, tol: float = TOL):
    """All contacts between two primitives, transversal or degenerate."""
    if a.kind == "segment" and b.kind == "segment":
        return _seg_seg(a, b, tol)
    if a.kind == "segment":
        return _seg_arc(a, b, tol)
    if b.kind == "segment":
        return [Hit(h.point, h.s_b, h.s_a, h.angle_deg, h.degenerate) for h in _seg_arc(b, a, tol)]
    return _arc_arc(a, b, tol)


def bboxes_overlap(p, q, tol: float = TOL) -> bool:
    return not (p[2] < q[0] - tol or q[2] < p[0] - tol or p[3] < q[1] - tol or q[3] < p[1] - tol)
