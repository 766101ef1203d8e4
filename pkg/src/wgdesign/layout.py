"""Shuffle-router layout generation and exact crossing enumeration.

The generated topology is a corner crossbar: every route drops vertically from
its source card's port on the top edge, makes a single 90 degree arc and runs
horizontally to a port on the left or right board edge.  Cards own a column
bundle of ``n`` lanes and a row band of the same height; routes peel off the
outer edge of their bundle so that arcs never carry crossings and every
crossing is a straight-on-straight 90 degree intersection.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import GeometryError, ParseError
from .geometry import TOL, Arc, Segment, intersect
from .model import AngleClass

LAYOUT_FORMAT = "wgdesign-layout/1"
DEFAULT_WAVEGUIDE_PITCH_MM = 0.125
DEFAULT_MARGIN_MM = 1.0


@dataclass(frozen=True)
class BoardSpec:
    width_mm: float
    height_mm: float
    card_pitch_mm: float
    margin_mm: float = DEFAULT_MARGIN_MM
    waveguide_pitch_mm: float = DEFAULT_WAVEGUIDE_PITCH_MM

    def __post_init__(self):
        for name in ("width_mm", "height_mm", "card_pitch_mm", "margin_mm", "waveguide_pitch_mm"):
            if not getattr(self, name) > 0:
                raise ValueError(f"board {name} must be positive")

    def check(self, n_cards: int):
        need = n_cards * self.card_pitch_mm + 2 * self.margin_mm
        if need > self.width_mm + TOL:
            raise GeometryError(f"{n_cards} cards at {self.card_pitch_mm:g} mm pitch plus margins "
                                f"need {need:g} mm but the board is {self.width_mm:g} mm wide")

    @classmethod
    def for_radius(cls, n_cards: int, bend_radius_mm: float,
                   waveguide_pitch_mm: float = DEFAULT_WAVEGUIDE_PITCH_MM,
                   margin_mm: float = DEFAULT_MARGIN_MM) -> "BoardSpec":
        """Smallest board that holds an ``n_cards`` shuffle at this bend radius."""
        pitch = min_card_pitch(n_cards, bend_radius_mm, waveguide_pitch_mm)
        w, h = _shuffle_extent(n_cards, bend_radius_mm, pitch, waveguide_pitch_mm)
        return cls(w + 2 * margin_mm, h + 2 * margin_mm, pitch, margin_mm, waveguide_pitch_mm)


@dataclass(frozen=True)
class ShuffleSpec:
    n_cards: int
    bend_radius_mm: float

    def __post_init__(self):
        if int(self.n_cards) != self.n_cards or self.n_cards < 1:
            raise ValueError("a shuffle needs at least one card")
        if not self.bend_radius_mm > 0:
            raise ValueError("bend radius must be positive")


@dataclass(frozen=True)
class Straight:
    length_cm: float
    kind = "straight"


@dataclass(frozen=True)
class Bend:
    radius_mm: float
    angle_deg: float
    kind = "bend"


@dataclass(frozen=True)
class Crossing:
    angle_class: AngleClass
    kind = "crossing"


@dataclass(frozen=True)
class Route:
    id: tuple
    geometry: tuple
    events: tuple = ()

    @property
    def length_mm(self) -> float:
        return sum(p.length for p in self.geometry)

    @property
    def length_m(self) -> float:
        return self.length_mm / 1000.0

    @property
    def bends(self):
        return [e for e in self.events if e.kind == "bend"]

    def crossing_counts(self):
        counts = {a: 0 for a in AngleClass}
        for e in self.events:
            if e.kind == "crossing":
                counts[e.angle_class] += 1
        return counts

    @property
    def n_crossings(self) -> int:
        return sum(1 for e in self.events if e.kind == "crossing")


@dataclass(frozen=True)
class CrossingRecord:
    route_a: tuple
    route_b: tuple
    point: tuple
    angle_deg: float
    s_a: float = 0.0  # position (mm) along route_a
    s_b: float = 0.0

    @property
    def angle_class(self) -> AngleClass:
        return AngleClass.from_angle(self.angle_deg)

    def involves(self, rid) -> bool:
        return rid == self.route_a or rid == self.route_b


@dataclass(frozen=True)
class Degeneracy:
    route_a: tuple
    route_b: tuple
    point: tuple
    reason: str


@dataclass(frozen=True)
class CrossingStats:
    records: tuple
    degenerate: tuple
    per_route: Mapping

    @property
    def total(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class Layout:
    routes: tuple
    crossings: tuple = ()
    degenerate: tuple = ()
    margin_mm: float = DEFAULT_MARGIN_MM
    metadata: Mapping = field(default_factory=dict)

    def route(self, rid) -> Route:
        rid = tuple(rid)
        for r in self.routes:
            if r.id == rid:
                return r
        raise KeyError(f"no route {rid}")

    def per_route_counts(self):
        counts = {r.id: 0 for r in self.routes}
        for rec in self.crossings:
            counts[rec.route_a] += 1
            counts[rec.route_b] += 1
        return counts

    @property
    def n_bends(self) -> int:
        return sum(len(r.bends) for r in self.routes)

    def statistics(self):
        per = self.per_route_counts()
        worst = max(per.values()) if per else 0
        return {
            "routes": len(self.routes),
            "bends": self.n_bends,
            "crossings": len(self.crossings),
            "worst": worst,
            "degenerate": len(self.degenerate),
        }

    def scaled(self, k: float) -> "Layout":
        geo = {r.id: [p.scaled(k) for p in r.geometry] for r in self.routes}
        return build_layout(geo, margin_mm=self.margin_mm * k, metadata=dict(self.metadata))


def min_card_pitch(n_cards: int, bend_radius_mm: float, waveguide_pitch_mm: float) -> float:
    """An arc plus a full bundle, with one lane of clearance to the next card."""
    return bend_radius_mm + n_cards * waveguide_pitch_mm


def _turns_right(n: int, source: int, offset: int) -> bool:
    return source + offset >= n - 1


def _shuffle_extent(n, R, pitch, w):
    width = 2 * w + 2 * R + (n - 1) * (pitch + w)
    height = w + R + (n - 1) * pitch + (n - 1) * w
    return width, height


def generate_shuffle(spec: ShuffleSpec, board: BoardSpec | None = None, workers: int = 1) -> Layout:
    """Draw the ``n x n`` shuffle (self-links included) and enumerate its crossings.

    Card ``i`` sends the link with offset ``k = (j - i) mod n`` to the right edge
    when ``i + k >= n - 1`` and to the left edge otherwise.  With ten cards this
    gives 100 routes, 100 bends, 1650 crossings and a unique worst route
    (card 0 to card 9) with 90 crossings.
    """
    n, R = int(spec.n_cards), float(spec.bend_radius_mm)
    if board is None:
        board = BoardSpec.for_radius(n, R)
    board.check(n)
    w, P, m = board.waveguide_pitch_mm, board.card_pitch_mm, board.margin_mm
    need_pitch = min_card_pitch(n, R, w)
    if P < need_pitch - TOL:
        raise GeometryError(f"bend radius {R:g} mm needs a card pitch of at least {need_pitch:g} mm "
                            f"(radius + {n} lanes x {w:g} mm); board pitch is {P:g} mm")
    width, height = _shuffle_extent(n, R, P, w)
    if width + 2 * m > board.width_mm + TOL or height + 2 * m > board.height_mm + TOL:
        raise GeometryError(f"bend radius {R:g} mm needs a {width + 2 * m:g} x {height + 2 * m:g} mm "
                            f"board; have {board.width_mm:g} x {board.height_mm:g} mm")

    x_left = m
    x_right = m + width
    y_port = board.height_mm - m
    geo = {}
    for i in range(n):
        x0 = m + w + R + i * P
        y0 = y_port - w - R - i * P
        offsets = list(range(n))
        left = [k for k in offsets if not _turns_right(n, i, k)]
        right = [k for k in offsets if _turns_right(n, i, k)]
        lanes = left + right
        for lane, k in enumerate(lanes):
            j = (i + k) % n
            x = x0 + lane * w
            if k in right:
                y = y0 - (n - 1 - lane) * w
                prims = (Segment((x, y_port), (x, y + R)),
                         Arc((x + R, y + R), R, 180.0, 90.0),
                         Segment((x + R, y), (x_right, y)))
            else:
                y = y0 - lane * w
                prims = (Segment((x, y_port), (x, y + R)),
                         Arc((x - R, y + R), R, 0.0, -90.0),
                         Segment((x - R, y), (x_left, y)))
            geo[(i, j)] = prims
    meta = {
        "generator": "shuffle",
        "n_cards": n,
        "bend_radius_mm": R,
        "card_pitch_mm": P,
        "waveguide_pitch_mm": w,
        "margin_mm": m,
        "board_mm": [board.width_mm, board.height_mm],
        "port_rule": "link i->j with offset k=(j-i) mod n exits right if i+k >= n-1, else left",
        "lane_rule": "left-bound lanes left of right-bound lanes; outermost lane turns first",
        "self_links": True,
    }
    return build_layout(dict(sorted(geo.items())), margin_mm=m, metadata=meta, workers=workers)


# ---------------------------------------------------------------- crossings


def _flatten(routes):
    prims = []
    for ri, r in enumerate(routes):
        s0 = 0.0
        for pi, p in enumerate(r.geometry):
            prims.append((ri, pi, p, s0))
            s0 += p.length
    return prims


def _candidate_pairs(prims):
    if not prims:
        return []
    boxes = np.array([p.bbox() for _, _, p, _ in prims])
    rid = np.array([ri for ri, _, _, _ in prims])
    x0, y0, x1, y1 = boxes.T
    ov = ((x0[:, None] <= x1[None, :] + TOL) & (x0[None, :] <= x1[:, None] + TOL)
          & (y0[:, None] <= y1[None, :] + TOL) & (y0[None, :] <= y1[:, None] + TOL))
    ov &= rid[:, None] < rid[None, :]
    a, b = np.nonzero(ov)
    return list(zip(a.tolist(), b.tolist()))


def _hits_for(chunk):
    out = []
    for ia, ib, pa, pb, sa0, sb0 in chunk:
        for h in intersect(pa, pb):
            out.append((ia, ib, h.point, sa0 + h.s_a, sb0 + h.s_b, h.angle_deg, h.degenerate))
    return out


def _chunks(seq, k):
    size = max(1, math.ceil(len(seq) / k))
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def count_crossings(layout_or_routes, workers: int = 1) -> CrossingStats:
    """Exact pairwise intersection of every route pair.

    Contacts that are not transversal crossings (tangencies, collinear overlap,
    a route ending on another) are excluded from the counts and returned in
    ``degenerate``.  A crossing through the joint between two primitives of a
    route is counted once.
    """
    routes = list(getattr(layout_or_routes, "routes", layout_or_routes))
    prims = _flatten(routes)
    lengths = [r.length_mm for r in routes]
    pairs = _candidate_pairs(prims)
    work = [(prims[a][0], prims[b][0], prims[a][2], prims[b][2], prims[a][3], prims[b][3])
            for a, b in pairs]
    if workers > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            raw = [h for part in ex.map(_hits_for, _chunks(work, workers)) for h in part]
    else:
        raw = _hits_for(work)

    seen = {}
    degenerate = []
    for ia, ib, pt, sa, sb, angle, kind in raw:
        ra, rb = routes[ia], routes[ib]
        if not kind:
            at_end = (sa <= TOL or sa >= lengths[ia] - TOL or sb <= TOL or sb >= lengths[ib] - TOL)
            if at_end:
                kind = "endpoint"
        if ra.id > rb.id:
            ra, rb, sa, sb = rb, ra, sb, sa
        key = (ra.id, rb.id)
        dup = False
        for other in seen.get(key, ()):
            if math.hypot(other[0][0] - pt[0], other[0][1] - pt[1]) <= 1e3 * TOL:
                dup = True
                break
        if dup:
            continue
        seen.setdefault(key, []).append((pt, sa, sb, angle, kind))
    records = []
    for (a, b), hits in seen.items():
        for pt, sa, sb, angle, kind in hits:
            if kind:
                degenerate.append(Degeneracy(a, b, pt, kind))
            else:
                records.append(CrossingRecord(a, b, pt, angle, sa, sb))
    records.sort(key=lambda r: (r.route_a, r.route_b, r.s_a))
    degenerate.sort(key=lambda d: (d.route_a, d.route_b, d.point))
    per = {r.id: 0 for r in routes}
    for rec in records:
        per[rec.route_a] += 1
        per[rec.route_b] += 1
    return CrossingStats(tuple(records), tuple(degenerate), per)


def route_events(route_id, geometry: Sequence, records: Sequence[CrossingRecord]):
    """Traversal-ordered Straight/Bend/Crossing events for one route."""
    positions = sorted(
        (rec.s_a if rec.route_a == route_id else rec.s_b, rec.angle_class)
        for rec in records if rec.involves(route_id))
    events = []
    s0 = 0.0
    idx = 0
    for p in geometry:
        s1 = s0 + p.length
        if p.kind == "arc":
            events.append(Bend(p.radius, p.turn_deg))
            while idx < len(positions) and positions[idx][0] <= s1 + TOL:
                events.append(Crossing(positions[idx][1]))
                idx += 1
        else:
            cur = s0
            while idx < len(positions) and positions[idx][0] <= s1 + TOL:
                s, cls = positions[idx]
                if s - cur > TOL:
                    events.append(Straight((s - cur) / 10.0))
                events.append(Crossing(cls))
                cur = max(cur, s)
                idx += 1
            if s1 - cur > TOL:
                events.append(Straight((s1 - cur) / 10.0))
        s0 = s1
    return tuple(events)


def _check_route(rid, prims):
    if not prims:
        raise GeometryError(f"route {rid} has no geometry")
    for k, (a, b) in enumerate(zip(prims, prims[1:])):
        if math.hypot(a.end[0] - b.start[0], a.end[1] - b.start[1]) > 1e-6:
            raise GeometryError(f"route {rid}: primitive {k + 1} does not start where {k} ends")
    for i in range(len(prims)):
        for j in range(i + 1, len(prims)):
            for h in intersect(prims[i], prims[j]):
                joint = j == i + 1 and math.hypot(h.point[0] - prims[i].end[0],
                                                  h.point[1] - prims[i].end[1]) <= 1e-6
                if not joint:
                    raise GeometryError(f"route {rid} intersects itself near "
                                        f"({h.point[0]:.6f}, {h.point[1]:.6f})")


def build_layout(geometry: Mapping, margin_mm: float = DEFAULT_MARGIN_MM,
                 metadata: Mapping | None = None, workers: int = 1) -> Layout:
    """Validate route geometry, enumerate crossings and derive per-route events."""
    bare = []
    for rid, prims in geometry.items():
        rid = tuple(rid)
        prims = tuple(prims)
        _check_route(rid, prims)
        bare.append(Route(rid, prims))
    bare.sort(key=lambda r: r.id)
    stats = count_crossings(bare, workers=workers)
    routes = tuple(Route(r.id, r.geometry, route_events(r.id, r.geometry, stats.records))
                   for r in bare)
    return Layout(routes, stats.records, stats.degenerate, margin_mm, dict(metadata or {}))


def bounding_box_area(layout: Layout):
    """(width, height, area) of the geometry's bounding box grown by the margin."""
    if not layout.routes:
        raise ValueError("empty layout")
    boxes = [p.bbox() for r in layout.routes for p in r.geometry]
    x0 = min(b[0] for b in boxes) - layout.margin_mm
    y0 = min(b[1] for b in boxes) - layout.margin_mm
    x1 = max(b[2] for b in boxes) + layout.margin_mm
    y1 = max(b[3] for b in boxes) + layout.margin_mm
    w, h = x1 - x0, y1 - y0
    return w, h, w * h


# ---------------------------------------------------------------- file format


def _r6(v):
    return round(float(v), 6)


def _prim_to_dict(p):
    if p.kind == "segment":
        return {"type": "segment", "start": [_r6(c) for c in p.start], "end": [_r6(c) for c in p.end]}
    return {"type": "arc", "center": [_r6(c) for c in p.center], "radius": _r6(p.radius),
            "start_deg": _r6(p.start_deg), "sweep_deg": _r6(p.sweep_deg)}


def layout_to_dict(layout: Layout) -> dict:
    w, h, area = bounding_box_area(layout)
    return {
        "format": LAYOUT_FORMAT,
        "metadata": dict(layout.metadata),
        "margin_mm": _r6(layout.margin_mm),
        "bounding_box_mm": [_r6(w), _r6(h)],
        "statistics": layout.statistics(),
        "routes": [{"id": list(r.id), "geometry": [_prim_to_dict(p) for p in r.geometry]}
                   for r in layout.routes],
        "crossings": [{"routes": [list(c.route_a), list(c.route_b)],
                       "point": [_r6(v) for v in c.point], "angle_deg": _r6(c.angle_deg)}
                      for c in layout.crossings],
        "degenerate": [{"routes": [list(d.route_a), list(d.route_b)],
                        "point": [_r6(v) for v in d.point], "reason": d.reason}
                       for d in layout.degenerate],
    }


def dump_layout(layout: Layout, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(layout_to_dict(layout), fh, indent=1)
        fh.write("\n")


def _prim_from_dict(d, where):
    try:
        if d["type"] == "segment":
            return Segment(tuple(map(float, d["start"])), tuple(map(float, d["end"])))
        if d["type"] == "arc":
            return Arc(tuple(map(float, d["center"])), float(d["radius"]),
                       float(d["start_deg"]), float(d["sweep_deg"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: bad primitive ({exc})") from None
    raise ParseError(f"{where}: unknown primitive type {d.get('type')!r}")


def layout_from_dict(doc: Mapping, workers: int = 1) -> Layout:
    """Rebuild a layout from its exported form; crossings are recomputed."""
    if doc.get("format") != LAYOUT_FORMAT:
        raise ParseError(f"not a layout document (format {doc.get('format')!r})")
    geo = {}
    for n, r in enumerate(doc.get("routes", [])):
        rid = tuple(r["id"]) if isinstance(r.get("id"), list) else (r.get("id"),)
        geo[rid] = [_prim_from_dict(p, f"route {rid} primitive {k}")
                    for k, p in enumerate(r.get("geometry", []))]
    if not geo:
        raise ParseError("layout has no routes")
    return build_layout(geo, margin_mm=float(doc.get("margin_mm", DEFAULT_MARGIN_MM)),
                        metadata=doc.get("metadata", {}), workers=workers)


def load_layout(path, workers: int = 1) -> Layout:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path, exc.lineno, exc.colno) from None
    return layout_from_dict(doc, workers=workers)


def random_layout(seed: int, n_primitives: int = 20, size_mm: float = 20.0,
                  margin_mm: float = 0.0) -> Layout:
    """Random routes in a square, for fixtures and cross-checks.

    Routes are single segments, single arcs, or a segment-arc-segment chain that
    turns by less than 90 degrees, so no route can cross itself.  Only the seed
    determines the result.
    """
    rng = np.random.default_rng(seed)
    geo = {}
    left = n_primitives
    k = 0
    while left > 0:
        kind = rng.integers(0, 3) if left >= 3 else rng.integers(0, 2)
        if kind == 0:
            a, b = rng.uniform(0, size_mm, 2), rng.uniform(0, size_mm, 2)
            prims = (Segment(tuple(a), tuple(b)),)
        elif kind == 1:
            c = rng.uniform(0, size_mm, 2)
            prims = (Arc(tuple(c), float(rng.uniform(0.5, size_mm / 2)),
                         float(rng.uniform(-180, 180)), float(rng.choice([-1, 1]) * rng.uniform(10, 300))),)
        else:
            p0 = rng.uniform(0, size_mm, 2)
            heading = float(rng.uniform(0, 360))
            l1, l2 = rng.uniform(0.5, size_mm / 2, 2)
            radius = float(rng.uniform(0.5, size_mm / 3))
            sweep = float(rng.choice([-1, 1]) * rng.uniform(20, 89))
            c, s = math.cos(math.radians(heading)), math.sin(math.radians(heading))
            p1 = (p0[0] + l1 * c, p0[1] + l1 * s)
            side = 1.0 if sweep > 0 else -1.0
            centre = (p1[0] - side * radius * s, p1[1] + side * radius * c)
            start = math.degrees(math.atan2(p1[1] - centre[1], p1[0] - centre[0]))
            arc = Arc(centre, radius, start, sweep)
            h2 = math.radians(heading + sweep)
            p2 = arc.end
            prims = (Segment(tuple(p0), p1), arc,
                     Segment(p2, (p2[0] + l2 * math.cos(h2), p2[1] + l2 * math.sin(h2))))
        geo[(k,)] = prims
        k += 1
        left -= len(prims)
    return build_layout(geo, margin_mm=margin_mm, metadata={"generator": "random", "seed": seed})
