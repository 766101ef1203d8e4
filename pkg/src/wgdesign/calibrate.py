"""Reduce raw measurement tables to model coefficients.

Series objects hold measured totals; :func:`normalize_excess` turns them into
excess-loss series that the fitting routines consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AboveMeasurementLimit, CalibrationError, InfeasibleError
from .model import (DEFAULT_KNEE, REFERENCE_LENGTH_CM, AngleClass, BendLossCurve,
                    CrossingSlopeSet, WaveguideProfile, bend_excess_loss, launch_name,
                    min_bend_radius, pav_nonincreasing)

# FWHM-bandwidth product of a Gaussian pulse (2 ln 2 / pi, rounded).
GAUSSIAN_TBP = 0.4413
STANDARD_CROSSING_COUNTS = (1, 5, 10, 20, 40, 80)
STANDARD_BEND_RADII_MM = (5.0, 6.0, 8.0, 11.0, 15.0, 20.0)

# Decimal measurement values differ by binary noise after subtraction; excess
# losses are rounded to this many decimals so that, e.g., 3.262 - 2.262 == 1.
_EXCESS_DECIMALS = 9


@dataclass(frozen=True)
class CrossingLossSeries:
    profile: str
    launch: str
    angle: AngleClass
    points: tuple  # ((crossing_count, loss_db), ...)

    def __post_init__(self):
        object.__setattr__(self, "angle", AngleClass.parse(self.angle))
        pts = tuple((int(x), float(y)) for x, y in self.points)
        for (a, _), (b, _) in zip(pts, pts[1:]):
            if not b > a:
                raise CalibrationError(f"{self.key}: crossing counts must be strictly increasing")
        if any(x < 0 for x, _ in pts):
            raise CalibrationError(f"{self.key}: crossing counts must be non-negative")
        if any(y < 0 for _, y in pts):
            raise CalibrationError(f"{self.key}: losses must be non-negative")
        object.__setattr__(self, "points", pts)

    @property
    def key(self):
        return f"{self.profile}/{self.launch}/{self.angle.value}"


@dataclass(frozen=True)
class BendLossSeries:
    profile: str
    launch: str
    points: tuple  # ((radius_mm, loss_db), ...)

    def __post_init__(self):
        pts = tuple((float(r), float(y)) for r, y in self.points)
        for (a, _), (b, _) in zip(pts, pts[1:]):
            if not b > a:
                raise CalibrationError(f"{self.key}: radii must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @property
    def key(self):
        return f"{self.profile}/{self.launch}/bend"


@dataclass(frozen=True)
class FarFieldScan:
    points: tuple  # ((angle_deg, intensity), ...)
    launch: str = ""

    def __post_init__(self):
        pts = tuple((float(a), float(i)) for a, i in self.points)
        for (a, _), (b, _) in zip(pts, pts[1:]):
            if not b > a:
                raise CalibrationError(f"far-field scan {self.launch}: angles must be strictly increasing")
        if not pts or max(i for _, i in pts) <= 0:
            raise CalibrationError(f"far-field scan {self.launch}: no positive intensity")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class PulsePair:
    fwhm_back_to_back_ps: float
    fwhm_through_dut_ps: float
    dut_length_m: float
    profile: str = ""
    launch: str = ""

    def __post_init__(self):
        if not (self.fwhm_back_to_back_ps > 0 and self.fwhm_through_dut_ps > 0):
            raise CalibrationError("pulse widths must be positive")
        if not self.dut_length_m > 0:
            raise CalibrationError("device length must be positive")


@dataclass(frozen=True)
class CalibrationWarning:
    series: str
    point: object
    message: str

    def __str__(self):
        return f"{self.series} at {self.point}: {self.message}"


@dataclass(frozen=True)
class BendFit:
    curve: BendLossCurve
    min_radius_mm: float | None  # None when the whole curve exceeds the budget
    repaired: bool
    budget_db: float = 1.0


@dataclass(frozen=True)
class BandwidthEstimate:
    dut_fwhm_ps: float
    bandwidth_ghz: float
    blp_ghz_m: float
    flags: tuple = ("gaussian-deconvolution",)


# ------------------------------------------------------------------ reduction


def normalize_excess(series, reference_insertion_loss_db):
    """Subtract the reference insertion loss from every total.

    Accepts a crossing or bend series (a new series is returned) or a plain
    sequence of totals.  Negative differences are clamped to 0 and reported.
    Returns ``(excess, warnings)``.
    """
    if reference_insertion_loss_db is None:
        name = getattr(series, "key", "series")
        raise CalibrationError(f"{name}: no reference insertion loss for this profile and launch")
    ref = float(reference_insertion_loss_db)
    warnings = []
    name = getattr(series, "key", "series")

    def sub(pos, total):
        d = round(total - ref, _EXCESS_DECIMALS)
        if d < 0:
            warnings.append(CalibrationWarning(name, pos, f"total {total:g} dB below reference "
                                                          f"{ref:g} dB; clamped to 0"))
            return 0.0
        return d + 0.0

    if hasattr(series, "points"):
        pts = tuple((x, sub(x, y)) for x, y in series.points)
        return replace(series, points=pts), warnings
    return [sub(i, y) for i, y in enumerate(series)], warnings


def _through_origin(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.dot(x, y) / np.dot(x, x))


def fit_crossing_slopes(series: CrossingLossSeries, knee: int = DEFAULT_KNEE,
                        far_start: int = 20) -> CrossingSlopeSet:
    """Two through-origin least-squares slopes on an excess-loss series.

    ``k1`` uses the points up to the knee, ``k2`` the points from ``far_start``
    on, measured from the knee value ``k1 * knee``.  Slopes that come out
    negative under noise are clamped to zero.
    """
    pts = getattr(series, "points", series)
    near = [(x, y) for x, y in pts if 0 < x <= knee]
    far = [(x, y) for x, y in pts if x >= far_start]
    name = getattr(series, "key", "series")
    if len(near) < 2:
        raise CalibrationError(f"{name}: need at least 2 points with x <= {knee} for k1, got {len(near)}")
    if len(far) < 2:
        raise CalibrationError(f"{name}: need at least 2 points with x >= {far_start} for k2, got {len(far)}")
    k1 = _through_origin([x for x, _ in near], [y for _, y in near])
    k2 = _through_origin([x - knee for x, _ in far], [y - k1 * knee for _, y in far])
    return CrossingSlopeSet(max(k1, 0.0), max(k2, 0.0), knee)


def fit_bend_curve(series: BendLossSeries, budget_db: float = 1.0) -> BendFit:
    """Monotone (non-increasing) bend curve plus its design-rule radius."""
    pts = getattr(series, "points", series)
    if len(pts) < 2:
        raise CalibrationError(f"{getattr(series, 'key', 'series')}: need at least 2 radii")
    radii = [r for r, _ in pts]
    raw = [y for _, y in pts]
    fixed = pav_nonincreasing(raw)
    curve = BendLossCurve(zip(radii, fixed))
    try:
        rmin = min_bend_radius(curve, budget_db)
    except InfeasibleError:
        rmin = None
    return BendFit(curve, rmin, fixed != raw, budget_db)


def _crossing_angle(ang, inten, peak, thr, step):
    i = peak
    while 0 <= i + step < len(inten) and inten[i + step] >= thr:
        i += step
    j = i + step
    if not 0 <= j < len(inten):
        return None, i
    # linear interpolation between the last sample above and the first below
    f = (inten[i] - thr) / (inten[i] - inten[j])
    return ang[i] + f * (ang[j] - ang[i]), i


def na_from_far_field(scan: FarFieldScan, threshold_fraction: float = 0.05) -> float:
    """NA from the half-width of the far field at ``threshold_fraction`` of the peak.

    The two sides are located separately and averaged, which tolerates a
    slightly off-centre or asymmetric scan.
    """
    if not 0 < threshold_fraction < 1:
        raise ValueError("threshold fraction must lie in (0, 1)")
    ang = [a for a, _ in scan.points]
    inten = np.array([i for _, i in scan.points], dtype=float)
    inten = inten / inten.max()
    peak = int(np.argmax(inten))
    left, li = _crossing_angle(ang, inten, peak, threshold_fraction, -1)
    right, ri = _crossing_angle(ang, inten, peak, threshold_fraction, +1)
    if left is None or right is None:
        raise CalibrationError(f"far-field scan {scan.launch}: scan truncated, intensity never "
                               f"falls below {threshold_fraction:g} of the peak on the "
                               f"{'left' if left is None else 'right'}")
    if li == ri == peak:
        raise CalibrationError(f"far-field scan {scan.launch}: beam narrower than the sample spacing")
    half = 0.5 * (right - left)
    return math.sin(math.radians(half))


def bandwidth_from_pulses(pair: PulsePair, tbp: float = GAUSSIAN_TBP,
                          resolution_ps: float | None = None) -> BandwidthEstimate:
    """3 dB bandwidth and BLP by Gaussian deconvolution of pulse widths.

    When the through pulse is no wider than the back-to-back pulse the device
    bandwidth cannot be resolved; :class:`AboveMeasurementLimit` is raised,
    carrying a lower bound if a timing resolution is supplied.
    """
    b, t = pair.fwhm_back_to_back_ps, pair.fwhm_through_dut_ps
    if t <= b:
        bound = None
        if resolution_ps:
            bound = tbp * 1000.0 / math.sqrt((b + resolution_ps) ** 2 - b * b)
        err = AboveMeasurementLimit(
            "bandwidth above measurement limit" + (f" (> {bound:.1f} GHz)" if bound else ""))
        err.lower_bound_ghz = bound
        raise err
    dut = math.sqrt(t * t - b * b)
    f = tbp * 1000.0 / dut  # ps -> GHz
    return BandwidthEstimate(dut, f, f * pair.dut_length_m)


def synthesize_pulse_pair(blp_ghz_m: float, length_m: float, back_ps: float,
                          tbp: float = GAUSSIAN_TBP) -> PulsePair:
    """Pulse pair whose deconvolution gives ``blp_ghz_m``; inverse of the above."""
    dut = tbp * 1000.0 / (blp_ghz_m / length_m)
    return PulsePair(back_ps, math.hypot(back_ps, dut), length_m)


def reference_bend_correction(curve: BendLossCurve, radius_mm: float | None = None,
                              quarter_turns: int = 4) -> float:
    """Modelled excess of the bends built into the reference guides.

    The reference guides carry two 90 degree bends and one long 180 degree bend;
    the long bend is taken at the largest calibrated radius.
    """
    r = curve.r_max if radius_mm is None else radius_mm
    return quarter_turns * bend_excess_loss(curve, r)


def extract_coupling(reference_db: float, propagation_db_per_cm: float,
                     curve: BendLossCurve | None = None,
                     length_cm: float = REFERENCE_LENGTH_CM):
    """Coupling loss implied by a reference measurement: ``(coupling, bend correction)``."""
    corr = reference_bend_correction(curve) if curve is not None else 0.0
    coupling = reference_db - propagation_db_per_cm * length_cm - corr
    if coupling < 0:
        raise CalibrationError(f"reference loss {reference_db:g} dB is below the modelled "
                               f"propagation and bend loss")
    return coupling, corr


# --------------------------------------------------------------- full datasets


@dataclass
class CalibrationDataset:
    """Raw measurement tables, grouped by kind."""

    profiles: dict = field(default_factory=dict)       # name -> {width_um, height_um, delta_n, ...}
    references: dict = field(default_factory=dict)     # (profile, launch) -> dB
    crossings: list = field(default_factory=list)      # CrossingLossSeries
    bends: list = field(default_factory=list)          # BendLossSeries
    scans: list = field(default_factory=list)          # FarFieldScan
    pulses: list = field(default_factory=list)         # PulsePair
    table_slopes: dict = field(default_factory=dict)   # (profile, launch, angle) -> CrossingSlopeSet
    table_radii: dict = field(default_factory=dict)    # (profile, launch) -> tabulated design radius
    sources: list = field(default_factory=list)        # file paths read

    @property
    def n_series(self) -> int:
        return len(self.crossings) + len(self.bends) + len(self.scans) + len(self.pulses)

    def merge(self, other: "CalibrationDataset") -> "CalibrationDataset":
        for name, params in other.profiles.items():
            self.profiles.setdefault(name, {}).update(params)
        self.references.update(other.references)
        self.crossings += other.crossings
        self.bends += other.bends
        self.scans += other.scans
        self.pulses += other.pulses
        self.table_slopes.update(other.table_slopes)
        self.table_radii.update(other.table_radii)
        self.sources += other.sources
        return self


@dataclass
class CalibrationReport:
    slopes: dict = field(default_factory=dict)       # (profile, launch, angle) -> CrossingSlopeSet
    bend_fits: dict = field(default_factory=dict)    # (profile, launch) -> BendFit
    numerical_aperture: dict = field(default_factory=dict)
    bandwidth: dict = field(default_factory=dict)    # (profile, launch) -> BandwidthEstimate
    coupling: dict = field(default_factory=dict)     # (profile, launch) -> (coupling, correction)
    warnings: list = field(default_factory=list)
    failures: list = field(default_factory=list)     # (series key, message)


def calibrate(dataset: CalibrationDataset, slope_source: str = "fit",
              budget_db: float = 1.0, threshold_fraction: float = 0.05,
              tbp: float = GAUSSIAN_TBP):
    """Fit every series in ``dataset`` and assemble :class:`WaveguideProfile` objects.

    ``slope_source`` picks crossing slopes from the fitted series (``"fit"``)
    or from the tabulated coefficients (``"table"``, falling back to the fit
    for missing entries).  Failures are collected per series; they never abort
    the remaining fits.  Returns ``(profiles, report)``.
    """
    if slope_source not in ("fit", "table"):
        raise ValueError("slope_source must be 'fit' or 'table'")
    rep = CalibrationReport()

    def attempt(key, fn):
        try:
            return fn()
        except (CalibrationError, InfeasibleError, ValueError, KeyError) as exc:
            rep.failures.append((key, str(exc)))
            return None

    refs = {(p, launch_name(l)): v for (p, l), v in dataset.references.items()}

    for s in dataset.crossings:
        def fit_one(s=s):
            ex, w = normalize_excess(s, refs.get((s.profile, launch_name(s.launch))))
            rep.warnings.extend(w)
            return fit_crossing_slopes(ex)
        k = attempt(s.key, fit_one)
        if k is not None:
            rep.slopes[(s.profile, launch_name(s.launch), s.angle)] = k

    for s in dataset.bends:
        def fit_b(s=s):
            ex, w = normalize_excess(s, refs.get((s.profile, launch_name(s.launch))))
            rep.warnings.extend(w)
            return fit_bend_curve(ex, budget_db)
        fit = attempt(s.key, fit_b)
        if fit is not None:
            rep.bend_fits[(s.profile, launch_name(s.launch))] = fit

    for scan in dataset.scans:
        na = attempt(f"far-field/{scan.launch}", lambda scan=scan: na_from_far_field(scan, threshold_fraction))
        if na is not None:
            rep.numerical_aperture[launch_name(scan.launch)] = na

    for pair in dataset.pulses:
        key = f"{pair.profile}/{pair.launch}/pulses"
        est = attempt(key, lambda pair=pair: bandwidth_from_pulses(pair, tbp))
        if est is not None:
            rep.bandwidth[(pair.profile, launch_name(pair.launch))] = est

    profiles = {}
    for name in sorted(dataset.profiles):
        params = dataset.profiles[name]
        alpha = float(params["propagation_db_per_cm"])
        coupling, curves, slopes, blps, refs_p = {}, {}, {}, {}, {}
        for (p, launch), ref in sorted(refs.items()):
            if p != name:
                continue
            refs_p[launch] = ref
            fit = rep.bend_fits.get((p, launch))
            res = attempt(f"{p}/{launch}/reference",
                          lambda: extract_coupling(ref, alpha, fit.curve if fit else None))
            if res is not None:
                rep.coupling[(p, launch)] = res
                coupling[launch] = round(res[0], 9)
        for (p, launch), fit in rep.bend_fits.items():
            if p == name:
                curves[launch] = fit.curve
        for (p, launch, angle), k in rep.slopes.items():
            if p == name:
                slopes[(launch, angle)] = k
        if slope_source == "table":
            for (p, launch, angle), k in dataset.table_slopes.items():
                if p == name:
                    slopes[(launch_name(launch), AngleClass.parse(angle))] = k
        for (p, launch), est in rep.bandwidth.items():
            if p == name:
                blps[launch] = est.blp_ghz_m
        flags = ["bend-curves:figure-digitized", "baselines:figure-digitized",
                 "reference-bend-correction", "bandwidth:gaussian-deconvolution"]
        if slope_source == "table":
            flags.append("crossing-slopes:table")
        profiles[name] = WaveguideProfile(
            name=name,
            width_um=float(params["width_um"]),
            height_um=float(params["height_um"]),
            delta_n=float(params["delta_n"]),
            propagation_loss_db_per_cm=alpha,
            coupling_loss_db=coupling,
            reference_insertion_loss_db=refs_p,
            crossing_slopes=slopes,
            bend_curve=curves,
            blp_ghz_m=blps,
            numerical_aperture=dict(rep.numerical_aperture),
            flags=tuple(flags),
        )
    return profiles, rep
