"""Exhaustive search over waveguide profile and bend radius for a shuffle router."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

from .budget import ModeFilterTable, worst_case_path
from .errors import BudgetError, GeometryError, RangeError
from .layout import (DEFAULT_MARGIN_MM, DEFAULT_WAVEGUIDE_PITCH_MM, BoardSpec, ShuffleSpec,
                     bounding_box_area, generate_shuffle)
from .model import DEFAULT_BANDWIDTH_FACTOR, bend_excess_loss, launch_name, required_bandwidth_ghz

# machine-readable infeasibility reasons
BEND_BUDGET = "bend_budget"
BANDWIDTH = "bandwidth"
BANDWIDTH_UNKNOWN = "bandwidth_unknown"
BOARD_SIZE = "board_size"
RADIUS_RANGE = "radius_out_of_range"
RADIUS_FLOOR = "radius_floor"
GEOMETRY = "geometry"
MISSING_DATA = "missing_data"


@dataclass(frozen=True)
class Constraints:
    launch: str = "MMF50"
    bitrate_gbps: float = 40.0
    bend_loss_budget_db: float = 1.0
    max_board_side_mm: float | None = None
    bandwidth_factor: float = DEFAULT_BANDWIDTH_FACTOR
    radius_floor_mm: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "launch", launch_name(self.launch))
        for name in ("bitrate_gbps", "bend_loss_budget_db", "bandwidth_factor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_board_side_mm is not None and not self.max_board_side_mm > 0:
            raise ValueError("max_board_side_mm must be positive")
        object.__setattr__(self, "radius_floor_mm", dict(self.radius_floor_mm or {}))

    @property
    def required_bandwidth_ghz(self) -> float:
        return required_bandwidth_ghz(self.bitrate_gbps, self.bandwidth_factor)


@dataclass(frozen=True)
class LayoutSpec:
    n_cards: int = 10
    waveguide_pitch_mm: float = DEFAULT_WAVEGUIDE_PITCH_MM
    margin_mm: float = DEFAULT_MARGIN_MM


@dataclass(frozen=True)
class DesignPoint:
    profile: str
    bend_radius_mm: float
    launch: str
    worst_case_loss_db: float | None
    worst_case_bandwidth_ghz: float | None
    board_width_mm: float | None
    board_height_mm: float | None
    board_area_mm2: float | None
    feasible: bool
    reasons: tuple = ()
    worst_route: tuple | None = None
    bend_loss_db: float | None = None
    worst_crossings: int | None = None

    @property
    def max_side_mm(self):
        if self.board_width_mm is None:
            return None
        return max(self.board_width_mm, self.board_height_mm)

    def as_dict(self) -> dict:
        return {
            "profile": self.profile,
            "bend_radius_mm": self.bend_radius_mm,
            "launch": self.launch,
            "worst_case_loss_db": self.worst_case_loss_db,
            "worst_case_bandwidth_ghz": self.worst_case_bandwidth_ghz,
            "board_width_mm": self.board_width_mm,
            "board_height_mm": self.board_height_mm,
            "board_area_mm2": self.board_area_mm2,
            "feasible": self.feasible,
            "reasons": list(self.reasons),
            "worst_route": list(self.worst_route) if self.worst_route else None,
            "worst_crossings": self.worst_crossings,
            "bend_loss_db": self.bend_loss_db,
        }


def radius_grid(start: float = 5.0, stop: float = 20.0, step: float = 1.0):
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]


def _shuffle_for(radius, spec: LayoutSpec, cache):
    """Shuffle layout at ``radius`` (False if it cannot be drawn), memoised in ``cache``."""
    if radius not in cache:
        try:
            board = BoardSpec.for_radius(spec.n_cards, radius, spec.waveguide_pitch_mm, spec.margin_mm)
            cache[radius] = generate_shuffle(ShuffleSpec(spec.n_cards, radius), board)
        except (GeometryError, ValueError):
            cache[radius] = False
    return cache[radius]


def _evaluate(profile, radius, spec: LayoutSpec, constraints: Constraints, layout_cache,
              filter_table):
    launch = constraints.launch
    reasons = []
    curve = profile.bend_curve.get(launch)
    bend = None
    if curve is None:
        reasons.append(MISSING_DATA)
    elif not curve.r_min <= radius <= curve.r_max:
        reasons.append(RADIUS_RANGE)
    else:
        bend = bend_excess_loss(curve, radius)
        # design rule: a bend must stay strictly below the budget
        if not bend < constraints.bend_loss_budget_db:
            reasons.append(BEND_BUDGET)
    floor = constraints.radius_floor_mm.get(profile.name)
    if floor is not None and radius < floor:
        reasons.append(RADIUS_FLOOR)

    layout = _shuffle_for(radius, spec, layout_cache)
    w = h = area = None
    if layout is False:
        reasons.append(GEOMETRY)
    else:
        w, h, area = bounding_box_area(layout)
        if constraints.max_board_side_mm is not None and max(w, h) > constraints.max_board_side_mm:
            reasons.append(BOARD_SIZE)

    loss = bw = route = ncross = None
    if layout and RADIUS_RANGE not in reasons and MISSING_DATA not in reasons:
        try:
            wc = worst_case_path(layout, profile, launch, filter_table)
        except (BudgetError, RangeError):
            reasons.append(MISSING_DATA)
        else:
            loss, bw, route = wc.budget.total_db, wc.budget.bandwidth_ghz, wc.route_id
            ncross = wc.budget.n_crossings
            if bw is None:
                reasons.append(BANDWIDTH_UNKNOWN)
            elif bw < constraints.required_bandwidth_ghz:
                reasons.append(BANDWIDTH)
    return DesignPoint(profile.name, float(radius), launch, loss, bw, w, h, area,
                       not reasons, tuple(reasons), route, bend, ncross)


def enumerate_designs(spec: LayoutSpec, profiles: Sequence, radii: Sequence[float],
                      constraints: Constraints, filter_table: ModeFilterTable | None = None,
                      workers: int = 1, layout_cache: dict | None = None):
    """Evaluate every (profile, radius) pair; points come back ordered by (profile, radius).

    Out-of-range and otherwise infeasible points are kept and carry reason codes.
    The shuffle geometry depends only on the radius and is generated once per
    radius; pass the same ``layout_cache`` dict to reuse it across calls with the
    same ``spec``.
    """
    radii = sorted({float(r) for r in radii})
    if not radii:
        raise ValueError("radius grid is empty")
    profiles = sorted(profiles.values() if isinstance(profiles, Mapping) else profiles,
                      key=lambda p: p.name)
    if not profiles:
        raise ValueError("no profiles to evaluate")
    cache = {} if layout_cache is None else layout_cache
    for r in radii:  # geometry first, so parallel evaluation only reads the cache
        _shuffle_for(r, spec, cache)
    jobs = [(p, r) for p in profiles for r in radii]

    def run(job):
        return _evaluate(job[0], job[1], spec, constraints, cache, filter_table)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(run, jobs))
    return [run(j) for j in jobs]


def _key(p: DesignPoint):
    bw = p.worst_case_bandwidth_ghz if p.worst_case_bandwidth_ghz is not None else -math.inf
    return (p.worst_case_loss_db, p.board_area_mm2, -bw, p.profile, p.bend_radius_mm)


@dataclass(frozen=True)
class OptimizationResult:
    best: DesignPoint | None
    points: tuple
    infeasible_summary: Mapping  # reason -> count

    @property
    def feasible(self) -> bool:
        return self.best is not None


def optimize(points: Sequence[DesignPoint]) -> OptimizationResult:
    """Feasible point with the lowest worst-case loss.

    Ties go to the smaller board, then the higher bandwidth, then the profile
    name.  When nothing is feasible ``best`` is None and the summary counts the
    reasons.
    """
    points = list(points)
    if not points:
        raise ValueError("no design points to optimise")
    canonical = tuple(sorted(points, key=lambda p: (p.profile, p.bend_radius_mm)))
    feasible = [p for p in canonical if p.feasible]
    summary = Counter(r for p in canonical if not p.feasible for r in p.reasons)
    best = min(feasible, key=_key) if feasible else None
    return OptimizationResult(best, canonical, dict(sorted(summary.items())))


class Savings(NamedTuple):
    width: float
    height: float
    side: float   # from the square root of the area ratio
    area: float


def area_savings(a: DesignPoint, b: DesignPoint) -> Savings:
    """Fractional reduction going from design ``a`` to design ``b``."""
    for p in (a, b):
        if not p.board_area_mm2:
            raise ValueError(f"design {p.profile}@{p.bend_radius_mm:g} mm has no board area")
    ratio = b.board_area_mm2 / a.board_area_mm2
    return Savings(1 - b.board_width_mm / a.board_width_mm, 1 - b.board_height_mm / a.board_height_mm,
                   1 - math.sqrt(ratio), 1 - ratio)


def _fmt(v, spec):
    return "-" if v is None else format(v, spec)


def comparison_document(result: OptimizationResult, title: str = "",
                        baseline: DesignPoint | None = None) -> dict:
    """Structured form of a comparison; :func:`render_comparison` prints it."""
    doc = {
        "title": title,
        "points": [p.as_dict() for p in result.points],
        "winner": None if result.best is None else result.points.index(result.best),
        "infeasible_summary": dict(result.infeasible_summary),
        "baseline": None,
        "savings": None,
    }
    if baseline is not None and result.best is not None:
        doc["baseline"] = baseline.as_dict()
        doc["savings"] = area_savings(baseline, result.best)._asdict()
    return doc


def render_comparison(doc: dict) -> str:
    """Table of all points with reasons; the winner is marked with ``*``."""
    lines = []
    if doc.get("title"):
        lines.append(doc["title"])
    lines.append(f"  {'profile':<8}{'R_mm':>6}{'loss_dB':>9}{'bw_GHz':>9}{'board_mm':>17}"
                 f"{'area_cm2':>10}  status")
    for i, p in enumerate(doc["points"]):
        mark = "*" if i == doc["winner"] else " "
        board = "-" if p["board_width_mm"] is None else \
            f"{p['board_width_mm']:.1f}x{p['board_height_mm']:.1f}"
        area = None if p["board_area_mm2"] is None else p["board_area_mm2"] / 100.0
        status = "ok" if p["feasible"] else ",".join(p["reasons"])
        lines.append(f"{mark} {p['profile']:<8}{p['bend_radius_mm']:>6g}"
                     f"{_fmt(p['worst_case_loss_db'], '9.2f')}"
                     f"{_fmt(p['worst_case_bandwidth_ghz'], '9.1f')}{board:>17}"
                     f"{_fmt(area, '10.2f')}  {status}")
    if doc["winner"] is None:
        reasons = ", ".join(f"{k}={v}" for k, v in doc["infeasible_summary"].items())
        lines.append(f"no feasible design ({reasons})")
        return "\n".join(lines)
    b = doc["points"][doc["winner"]]
    lines.append(f"winner: {b['profile']} at R = {b['bend_radius_mm']:g} mm, "
                 f"worst-case loss {b['worst_case_loss_db']:.2f} dB")
    if doc.get("savings"):
        base, s = doc["baseline"], doc["savings"]
        lines.append(f"savings vs {base['profile']} at R = {base['bend_radius_mm']:g} mm: "
                     f"width {s['width'] * 100:.1f}%, height {s['height'] * 100:.1f}%, "
                     f"side {s['side'] * 100:.1f}%, area {s['area'] * 100:.1f}%")
    return "\n".join(lines)


def comparison_report(result: OptimizationResult, title: str = "",
                      baseline: DesignPoint | None = None) -> str:
    return render_comparison(comparison_document(result, title, baseline))
