"""Per-path insertion-loss and bandwidth budgets."""

from __future__ import annotations

import bisect
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import BudgetError
from .model import (AngleClass, WaveguideProfile, bend_excess_loss, crossing_excess_loss,
                    get_launch, launch_name, path_bandwidth_ghz)

# The "> 45 GHz*mm" worst-path figure is quoted without unambiguous units.
AMBIGUOUS_BANDWIDTH_FLAG = "reference-bandwidth-units-ambiguous"


@dataclass(frozen=True)
class PathBudget:
    route_id: tuple
    coupling_db: float
    propagation_db: float
    bend_excess_db: float
    crossing_excess_db: Mapping  # AngleClass -> dB
    total_db: float
    length_m: float
    bandwidth_ghz: float | None
    crossings: Mapping = field(default_factory=dict)  # AngleClass -> count
    bends: int = 0
    flags: tuple = ()

    @property
    def n_crossings(self) -> int:
        return sum(self.crossings.values())

    @property
    def path_dependent_db(self) -> float:
        """Everything except the launch coupling, which is common to all paths."""
        return self.propagation_db + self.bend_excess_db + sum(self.crossing_excess_db.values())

    def breakdown(self) -> dict:
        return {
            "coupling_db": self.coupling_db,
            "propagation_db": self.propagation_db,
            "bend_excess_db": self.bend_excess_db,
            "crossing_excess_db_deg90": self.crossing_excess_db.get(AngleClass.DEG90, 0.0),
            "crossing_excess_db_deg45": self.crossing_excess_db.get(AngleClass.DEG45, 0.0),
        }

    def as_dict(self) -> dict:
        return {
            "route": list(self.route_id),
            **self.breakdown(),
            "total_db": self.total_db,
            "length_m": self.length_m,
            "bandwidth_ghz": self.bandwidth_ghz,
            "crossings_deg90": self.crossings.get(AngleClass.DEG90, 0),
            "crossings_deg45": self.crossings.get(AngleClass.DEG45, 0),
            "bends": self.bends,
            "flags": list(self.flags),
        }


class ModeFilterTable:
    """Bandwidth enhancement factors from mode filtering by bends and crossings.

    ``radius_edges`` and ``crossing_edges`` are the lower edges of the buckets
    (ascending); ``factors[launch]`` is a 2-D list indexed
    ``[radius bucket][crossing bucket]``.  A path is looked up by its smallest
    bend radius (paths without bends use the largest-radius bucket) and its
    total crossing count.  Launches without an entry get factor 1.
    """

    def __init__(self, radius_edges: Sequence[float], crossing_edges: Sequence[int],
                 factors: Mapping[str, Sequence[Sequence[float]]]):
        self.radius_edges = tuple(float(r) for r in radius_edges)
        self.crossing_edges = tuple(int(x) for x in crossing_edges)
        if list(self.radius_edges) != sorted(set(self.radius_edges)) or \
                list(self.crossing_edges) != sorted(set(self.crossing_edges)):
            raise ValueError("bucket edges must be strictly increasing")
        self.factors = {}
        for launch, grid in factors.items():
            g = [[float(v) for v in row] for row in grid]
            if len(g) != len(self.radius_edges) or any(len(r) != len(self.crossing_edges) for r in g):
                raise ValueError(f"{launch}: factor grid must be {len(self.radius_edges)} x "
                                 f"{len(self.crossing_edges)}")
            if any(v < 1 for row in g for v in row):
                raise ValueError(f"{launch}: enhancement factors must be >= 1")
            for i in range(len(g)):
                for j in range(len(g[i])):
                    if i + 1 < len(g) and g[i + 1][j] > g[i][j]:
                        raise ValueError(f"{launch}: factors must not decrease as radius decreases")
                    if j + 1 < len(g[i]) and g[i][j + 1] < g[i][j]:
                        raise ValueError(f"{launch}: factors must not decrease with crossing count")
            self.factors[launch_name(launch)] = g

    def factor(self, launch: str, min_radius_mm: float | None, crossings: int) -> float:
        grid = self.factors.get(launch_name(launch))
        if grid is None:
            return 1.0
        if min_radius_mm is None:
            i = len(self.radius_edges) - 1
        else:
            i = max(0, bisect.bisect_right(self.radius_edges, min_radius_mm) - 1)
        j = max(0, bisect.bisect_right(self.crossing_edges, crossings) - 1)
        return grid[i][j]

    @classmethod
    def identity(cls, launches=("MMF50",)):
        return cls([0.0], [0], {l: [[1.0]] for l in launches})


def _events(route):
    return getattr(route, "events", route)


def _route_id(route):
    return tuple(getattr(route, "id", ("path",)))


def event_length_m(events) -> float:
    """Path length implied by an event list: straight runs plus arc lengths."""
    mm = 0.0
    for e in events:
        if e.kind == "straight":
            mm += e.length_cm * 10.0
        elif e.kind == "bend":
            mm += e.radius_mm * math.radians(e.angle_deg)
    return mm / 1000.0


def path_bandwidth(route, profile: WaveguideProfile, launch: str,
                   filter_table: ModeFilterTable | None = None,
                   compare_reference: bool = False):
    """Bandwidth (GHz) of a path: BLP / length, times the mode-filter factor.

    Returns ``(bandwidth, flags)``.  ``compare_reference`` adds a flag noting that
    the quoted worst-path reference figure has ambiguous units.
    """
    events = _events(route)
    length = event_length_m(events)
    if length <= 0:
        raise ValueError(f"route {_route_id(route)}: zero-length path has no defined bandwidth")
    flags = []
    bw = path_bandwidth_ghz(profile.blp(launch), length)
    if filter_table is not None:
        radii = [e.radius_mm for e in events if e.kind == "bend"]
        n = sum(1 for e in events if e.kind == "crossing")
        bw *= filter_table.factor(launch, min(radii) if radii else None, n)
        flags.append("mode-filter-table")
    if compare_reference:
        flags.append(AMBIGUOUS_BANDWIDTH_FLAG)
    return bw, tuple(flags)


def path_insertion_loss(route, profile: WaveguideProfile, launch: str,
                        filter_table: ModeFilterTable | None = None) -> PathBudget:
    """Loss breakdown of one path.

    Crossings are counted over the whole path per angle class before the
    two-slope rule is applied.  Each bend adds the 90 degree curve value
    scaled by its turn angle.
    """
    launch = launch_name(launch)
    get_launch(launch)
    events = _events(route)
    rid = _route_id(route)
    coupling = profile.coupling(launch)
    length_m = event_length_m(events)
    propagation = profile.propagation_loss_db_per_cm * length_m * 100.0

    bend = 0.0
    n_bends = 0
    counts = {a: 0 for a in AngleClass}
    for e in events:
        if e.kind == "bend":
            bend += bend_excess_loss(profile.curve(launch), e.radius_mm) * e.angle_deg / 90.0
            n_bends += 1
        elif e.kind == "crossing":
            counts[AngleClass.parse(e.angle_class)] += 1
    cross = {a: (crossing_excess_loss(profile.slopes(launch, a), counts[a]) if counts[a] else 0.0)
             for a in AngleClass}
    total = coupling + propagation + bend + sum(cross.values())

    flags = list(profile.flags)
    bw = None
    if length_m > 0:
        if launch in profile.blp_ghz_m:
            bw, f = path_bandwidth(events, profile, launch, filter_table)
            flags.extend(f)
        else:
            flags.append(f"no-bandwidth-data:{launch}")
    return PathBudget(rid, coupling, propagation, bend, cross, total, length_m, bw,
                      counts, n_bends, tuple(flags))


def _rank_key(b: PathBudget):
    # coupling is identical for every path of a layout, so it is left out of the
    # key; this keeps the ranking exactly invariant to a coupling offset
    return (-b.path_dependent_db, -b.n_crossings, -b.length_m, b.route_id)


@dataclass(frozen=True)
class WorstCase:
    route_id: tuple
    budget: PathBudget
    ranking: tuple  # PathBudgets, worst first


def evaluate_routes(routes, profile, launch, filter_table=None, workers: int = 1):
    def one(r):
        try:
            return path_insertion_loss(r, profile, launch, filter_table)
        except (BudgetError, ValueError) as exc:
            raise type(exc)(f"route {_route_id(r)}: {exc}") from exc

    routes = list(routes)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(one, routes))
    return [one(r) for r in routes]


def worst_case_path(layout, profile: WaveguideProfile, launch: str,
                    filter_table: ModeFilterTable | None = None, workers: int = 1) -> WorstCase:
    """Evaluate every route and return the one with the highest total loss.

    Ties go to the path with more crossings, then the longer one, then the
    lexicographically smaller id.
    """
    routes = list(getattr(layout, "routes", layout))
    if not routes:
        raise ValueError("layout has no routes")
    budgets = evaluate_routes(routes, profile, launch, filter_table, workers)
    ranking = tuple(sorted(budgets, key=_rank_key))
    return WorstCase(ranking[0].route_id, ranking[0], ranking)


# ------------------------------------------------------------------ reports

_COLUMNS = ("route", "coupling", "prop", "bend", "x90", "x45", "total", "len_cm", "bw_GHz", "flags")


def _fmt_bw(bw):
    return "-" if bw is None else f"{bw:.1f}"


def format_budget_table(budgets, show_flags: bool = False) -> str:
    """Fixed-width table, one row per path; dB at 2 decimals.

    Rows may be :class:`PathBudget` objects or their ``as_dict()`` form.
    """
    rows = []
    for b in budgets:
        d = b.as_dict() if hasattr(b, "as_dict") else b
        flags = d["flags"] if show_flags else [
            f for f in d["flags"]
            if f.startswith(("no-bandwidth", "mode-filter")) or f == AMBIGUOUS_BANDWIDTH_FLAG]
        rows.append((
            "-".join(str(i) for i in d["route"]),
            f"{d['coupling_db']:.2f}", f"{d['propagation_db']:.2f}", f"{d['bend_excess_db']:.2f}",
            f"{d['crossing_excess_db_deg90']:.2f}", f"{d['crossing_excess_db_deg45']:.2f}",
            f"{d['total_db']:.2f}", f"{d['length_m'] * 100:.2f}", _fmt_bw(d["bandwidth_ghz"]),
            ";".join(flags) or "-",
        ))
    widths = [max(len(c), *(len(r[i]) for r in rows)) if rows else len(c)
              for i, c in enumerate(_COLUMNS)]

    def line(cells):
        return "  ".join(v.ljust(w) if i in (0, 9) else v.rjust(w)
                         for i, (v, w) in enumerate(zip(cells, widths))).rstrip()

    return "\n".join([line(_COLUMNS)] + [line(r) for r in rows])


def worst_case_summary(doc: dict) -> str:
    """One line describing the worst path of a :func:`budget_document`."""
    b = doc["worst"]
    return (f"worst path {'-'.join(map(str, b['route']))} ({doc['profile']}, {doc['launch']}): "
            f"{b['total_db']:.2f} dB, {b['crossings_deg90'] + b['crossings_deg45']} crossings, "
            f"{b['bends']} bends, {b['length_m'] * 100:.2f} cm, "
            f"bandwidth {_fmt_bw(b['bandwidth_ghz'])} GHz")


def budget_document(wc: WorstCase, profile: str, launch: str) -> dict:
    return {
        "profile": profile,
        "launch": launch_name(launch),
        "worst_route": list(wc.route_id),
        "worst": wc.budget.as_dict(),
        "ranking": [b.as_dict() for b in wc.ranking],
        "notes": {AMBIGUOUS_BANDWIDTH_FLAG:
                  "quoted worst-path bandwidth reference has ambiguous units; "
                  "bandwidth here is BLP / length in GHz"},
    }
