"""Domain types and closed-form loss/bandwidth rules for polymer waveguides.

Everything here is a pure function of immutable values.  Losses are in dB,
radii in mm, lengths in the unit named by the argument suffix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Mapping, Sequence

from .errors import BudgetError, InfeasibleError, RangeError

# Length of the straight-ish reference guides used to normalise component loss.
REFERENCE_LENGTH_CM = 16.25

DEFAULT_KNEE = 10
DEFAULT_BANDWIDTH_FACTOR = 0.7

_TOL = 1e-9


class AngleClass(str, Enum):
    DEG90 = "DEG90"
    DEG45 = "DEG45"

    @property
    def degrees(self) -> float:
        return 90.0 if self is AngleClass.DEG90 else 45.0

    @classmethod
    def parse(cls, text) -> "AngleClass":
        """Accept ``DEG90``, ``90``, ``90deg`` or ``90°`` (and the 45 variants)."""
        if isinstance(text, AngleClass):
            return text
        s = str(text).strip().upper().replace("°", "").replace("DEG", "")
        try:
            value = float(s)
        except ValueError:
            raise ValueError(f"unknown crossing angle class {text!r}") from None
        if value == 90.0:
            return cls.DEG90
        if value == 45.0:
            return cls.DEG45
        raise ValueError(f"unknown crossing angle class {text!r} (expected 90 or 45)")

    @classmethod
    def from_angle(cls, angle_deg: float) -> "AngleClass":
        """Nearest class for a measured intersection angle in (0, 90]."""
        return cls.DEG90 if angle_deg >= 67.5 else cls.DEG45


@dataclass(frozen=True)
class LaunchCondition:
    name: str
    numerical_aperture: float
    core_diameter_um: float
    fill: int  # 0 = most restricted

    def __post_init__(self):
        if not 0.0 < self.numerical_aperture < 1.0:
            raise ValueError(f"{self.name}: numerical aperture must lie in (0, 1)")
        if self.core_diameter_um <= 0:
            raise ValueError(f"{self.name}: core diameter must be positive")


# NA values are the far-field 5 % points quoted for the fibre inputs.  The lens
# launch has no far-field scan; its NA is that of the 10x objective.
LAUNCHES: Mapping[str, LaunchCondition] = MappingProxyType({
    "LENS10x": LaunchCondition("LENS10x", 0.25, 5.0, 0),
    "SMF9": LaunchCondition("SMF9", 0.13, 9.0, 1),
    "MMF50": LaunchCondition("MMF50", 0.18, 50.0, 2),
    "MMF100MM": LaunchCondition("MMF100MM", 0.26, 100.0, 3),
})

_LAUNCH_ALIASES = {
    "MMF100": "MMF100MM",
    "MMF100+MM": "MMF100MM",
    "LENS10X": "LENS10x",
    "SMF": "SMF9",
}


def launch_name(name: str) -> str:
    """Canonical launch identifier for ``name`` (aliases such as MMF100 allowed)."""
    if name in LAUNCHES:
        return name
    canon = _LAUNCH_ALIASES.get(str(name).strip().upper())
    if canon is None:
        for key in LAUNCHES:
            if key.upper() == str(name).strip().upper():
                return key
        raise KeyError(f"unknown launch condition {name!r}; known: {', '.join(LAUNCHES)}")
    return canon


def get_launch(name: str) -> LaunchCondition:
    return LAUNCHES[launch_name(name)]


@dataclass(frozen=True)
class CrossingSlopeSet:
    k1_db_per_crossing: float
    k2_db_per_crossing: float
    knee: int = DEFAULT_KNEE

    def __post_init__(self):
        if self.k1_db_per_crossing < 0 or self.k2_db_per_crossing < 0:
            raise ValueError("crossing slopes must be non-negative")
        if self.knee < 1:
            raise ValueError("crossing knee must be >= 1")


@dataclass(frozen=True)
class BendLossCurve:
    samples: tuple

    def __init__(self, samples):
        pts = tuple((float(r), float(loss)) for r, loss in samples)
        if len(pts) < 2:
            raise ValueError("a bend-loss curve needs at least two samples")
        for (r0, _), (r1, _) in zip(pts, pts[1:]):
            if not r1 > r0:
                raise ValueError("bend-loss curve radii must be strictly increasing")
        if any(loss < 0 for _, loss in pts):
            raise ValueError("bend excess loss must be non-negative")
        if pts[0][0] <= 0:
            raise ValueError("bend radii must be positive")
        object.__setattr__(self, "samples", pts)

    @property
    def radii(self):
        return [r for r, _ in self.samples]

    @property
    def losses(self):
        return [loss for _, loss in self.samples]

    @property
    def r_min(self) -> float:
        return self.samples[0][0]

    @property
    def r_max(self) -> float:
        return self.samples[-1][0]

    def is_nonincreasing(self) -> bool:
        losses = self.losses
        return all(b <= a for a, b in zip(losses, losses[1:]))

    def repaired(self) -> "BendLossCurve":
        """Copy with losses replaced by their non-increasing isotonic fit."""
        if self.is_nonincreasing():
            return self
        return BendLossCurve(zip(self.radii, pav_nonincreasing(self.losses)))


def _frozen(mapping) -> Mapping:
    return MappingProxyType(dict(mapping or {}))


@dataclass(frozen=True)
class WaveguideProfile:
    """One fabricated waveguide type with its per-launch coefficient tables.

    Per-launch maps are keyed by canonical launch name; ``crossing_slopes`` is
    keyed by ``(launch, AngleClass)``.
    """

    name: str
    width_um: float
    height_um: float
    delta_n: float
    propagation_loss_db_per_cm: float
    coupling_loss_db: Mapping[str, float] = field(default_factory=dict)
    reference_insertion_loss_db: Mapping[str, float] = field(default_factory=dict)
    crossing_slopes: Mapping[tuple, CrossingSlopeSet] = field(default_factory=dict)
    bend_curve: Mapping[str, BendLossCurve] = field(default_factory=dict)
    blp_ghz_m: Mapping[str, float] = field(default_factory=dict)
    numerical_aperture: Mapping[str, float] = field(default_factory=dict)
    flags: tuple = ()

    def __post_init__(self):
        if self.width_um <= 0 or self.height_um <= 0:
            raise ValueError(f"{self.name}: waveguide dimensions must be positive")
        if self.delta_n <= 0:
            raise ValueError(f"{self.name}: index contrast must be positive")
        if self.propagation_loss_db_per_cm < 0:
            raise ValueError(f"{self.name}: propagation loss must be non-negative")
        for label, table in (("coupling", self.coupling_loss_db),
                             ("reference insertion", self.reference_insertion_loss_db)):
            if any(v < 0 for v in table.values()):
                raise ValueError(f"{self.name}: {label} loss must be non-negative")
        if any(v <= 0 for v in self.blp_ghz_m.values()):
            raise ValueError(f"{self.name}: bandwidth-length product must be positive")
        for attr in ("coupling_loss_db", "reference_insertion_loss_db", "bend_curve",
                     "blp_ghz_m", "numerical_aperture"):
            object.__setattr__(self, attr, _frozen({launch_name(k): v
                                                    for k, v in getattr(self, attr).items()}))
        object.__setattr__(self, "crossing_slopes", _frozen(
            {(launch_name(l), AngleClass.parse(a)): s for (l, a), s in self.crossing_slopes.items()}))
        object.__setattr__(self, "flags", tuple(self.flags))

    def _lookup(self, table, key, what):
        try:
            return table[key]
        except KeyError:
            raise BudgetError(f"profile {self.name} has no {what} for {key}") from None

    def coupling(self, launch: str) -> float:
        return self._lookup(self.coupling_loss_db, launch_name(launch), "coupling loss")

    def slopes(self, launch: str, angle) -> CrossingSlopeSet:
        key = (launch_name(launch), AngleClass.parse(angle))
        return self._lookup(self.crossing_slopes, key, "crossing slopes")

    def curve(self, launch: str) -> BendLossCurve:
        return self._lookup(self.bend_curve, launch_name(launch), "bend-loss curve")

    def blp(self, launch: str) -> float:
        return self._lookup(self.blp_ghz_m, launch_name(launch), "bandwidth-length product")

    def loss_launches(self):
        """Launches with a complete set of loss coefficients."""
        out = []
        for name in LAUNCHES:
            if (name in self.coupling_loss_db and name in self.bend_curve
                    and all((name, a) in self.crossing_slopes for a in AngleClass)):
                out.append(name)
        return out


def pav_nonincreasing(values: Sequence[float], weights: Sequence[float] | None = None):
    """Least-squares non-increasing fit by pool-adjacent-violators.

    Adjacent violators are merged into blocks holding their weighted mean, so
    each pooled block keeps the mean of the points it replaced.
    """
    if weights is None:
        weights = [1.0] * len(values)
    blocks = []  # [mean, weight, count]
    for v, w in zip(values, weights):
        blocks.append([float(v), float(w), 1])
        while len(blocks) > 1 and blocks[-2][0] < blocks[-1][0]:
            m2, w2, c2 = blocks.pop()
            m1, w1, c1 = blocks.pop()
            wt = w1 + w2
            blocks.append([(m1 * w1 + m2 * w2) / wt, wt, c1 + c2])
    out = []
    for mean, _, count in blocks:
        out.extend([mean] * count)
    return out


def crossing_excess_loss(slopes: CrossingSlopeSet, x: int) -> float:
    """Two-slope crossing loss: k1 per crossing up to the knee, k2 after it."""
    if x < 0:
        raise ValueError("crossing count must be non-negative")
    k1, k2, knee = slopes.k1_db_per_crossing, slopes.k2_db_per_crossing, slopes.knee
    if x <= knee:
        return k1 * x
    return k1 * knee + k2 * (x - knee)


def bend_excess_loss(curve: BendLossCurve, radius_mm: float) -> float:
    """Excess loss of a 90 degree bend, linearly interpolated between samples."""
    samples = curve.samples
    lo, hi = samples[0][0], samples[-1][0]
    if not (lo - _TOL <= radius_mm <= hi + _TOL):
        raise RangeError(f"bend radius {radius_mm:g} mm outside calibrated range "
                         f"[{lo:g}, {hi:g}] mm", lo, hi)
    for r, loss in samples:
        if abs(r - radius_mm) <= _TOL:
            return loss
    for (r0, l0), (r1, l1) in zip(samples, samples[1:]):
        if r0 <= radius_mm <= r1:
            return l0 + (l1 - l0) * (radius_mm - r0) / (r1 - r0)
    raise AssertionError("unreachable")  # pragma: no cover


def threshold_radius(curve: BendLossCurve, budget_db: float = 1.0) -> float:
    """Smallest radius (unrounded) at which the repaired curve meets ``budget_db``."""
    if budget_db <= 0:
        raise ValueError("bend loss budget must be positive")
    samples = curve.repaired().samples
    if samples[0][1] <= budget_db:
        return samples[0][0]
    if samples[-1][1] > budget_db:
        raise InfeasibleError(f"bend loss exceeds {budget_db:g} dB over the whole "
                              f"calibrated range [{samples[0][0]:g}, {samples[-1][0]:g}] mm")
    for (r0, l0), (r1, l1) in zip(samples, samples[1:]):
        if l1 <= budget_db < l0:
            return r0 + (l0 - budget_db) / (l0 - l1) * (r1 - r0)
    raise AssertionError("unreachable")  # pragma: no cover


def min_bend_radius(curve: BendLossCurve, budget_db: float = 1.0,
                    granularity_mm: float = 1.0) -> float:
    """Design-rule radius for ``budget_db``, rounded up to ``granularity_mm``.

    When the whole curve is already within budget the smallest sampled radius
    is returned as-is.
    """
    r = threshold_radius(curve, budget_db)
    if r == curve.r_min:
        return r
    return math.ceil(r / granularity_mm - _TOL) * granularity_mm


def path_bandwidth_ghz(blp_ghz_m: float, length_m: float) -> float:
    if length_m <= 0:
        raise ValueError("path length must be positive")
    return blp_ghz_m / length_m


def required_bandwidth_ghz(bitrate_gbps: float,
                           bandwidth_factor: float = DEFAULT_BANDWIDTH_FACTOR) -> float:
    if bitrate_gbps <= 0:
        raise ValueError("bit rate must be positive")
    return bandwidth_factor * bitrate_gbps
