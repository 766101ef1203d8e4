"""Reading measurement tables and reading/writing model cards.

Measurement files are comma-separated with a header row; the table kind is
recognised from its column names.  Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import csv
import functools
import math
from collections import defaultdict
from importlib import resources
from pathlib import Path

import yaml

from .calibrate import (BendLossSeries, CalibrationDataset, CrossingLossSeries, FarFieldScan,
                        PulsePair, calibrate)
from .errors import CalibrationError, ParseError
from .model import AngleClass, BendLossCurve, CrossingSlopeSet, WaveguideProfile, launch_name, min_bend_radius

CARD_KIND = "wgdesign-model-card"

# column set -> table kind
TABLE_KINDS = {
    frozenset({"profile", "width_um", "height_um", "delta_n", "propagation_db_per_cm"}): "profiles",
    frozenset({"profile", "launch", "reference_db"}): "references",
    frozenset({"profile", "launch", "angle_class", "x", "value"}): "crossings",
    frozenset({"profile", "launch", "radius_mm", "value"}): "bends",
    frozenset({"launch", "angle_deg", "value"}): "farfield",
    frozenset({"profile", "launch", "length_m", "path", "fwhm_ps"}): "pulses",
    frozenset({"profile", "launch", "angle_class", "k1", "k2"}): "table_slopes",
    frozenset({"profile", "launch", "min_radius_mm"}): "table_radii",
}

_NUMERIC = {"width_um", "height_um", "delta_n", "propagation_db_per_cm", "reference_db", "value",
            "radius_mm", "angle_deg", "length_m", "fwhm_ps", "k1", "k2", "min_radius_mm"}


def _rows(path):
    """Yield ``(line_number, fields)`` for non-blank, non-comment lines."""
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [(n, line) for n, line in enumerate(fh, start=1)
                 if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.reader(line for _, line in lines)
    for (n, _), fields in zip(lines, reader):
        yield n, [f.strip() for f in fields]


def read_table(path):
    """Parse one measurement file into ``(kind, records)``.

    Each record is a dict with numeric columns converted to float and the
    source line number under ``"_line"``.
    """
    rows = iter(_rows(path))
    try:
        hline, header = next(rows)
    except StopIteration:
        raise ParseError("empty file", path) from None
    cols = [h.lower() for h in header]
    kind = TABLE_KINDS.get(frozenset(cols))
    if kind is None or len(set(cols)) != len(cols):
        raise ParseError(f"unrecognised header {','.join(header)}", path, hline, 1)
    records = []
    for n, fields in rows:
        if len(fields) != len(cols):
            raise ParseError(f"expected {len(cols)} fields, found {len(fields)}", path, n,
                             min(len(fields), len(cols)) + 1)
        rec = {"_line": n}
        for c, (name, text) in enumerate(zip(cols, fields), start=1):
            if name in _NUMERIC:
                try:
                    val = float(text)
                except ValueError:
                    raise ParseError(f"{name}: not a number: {text!r}", path, n, c) from None
                if not math.isfinite(val):
                    raise ParseError(f"{name}: not finite: {text!r}", path, n, c)
                rec[name] = val
            elif name == "x":
                try:
                    rec[name] = int(text)
                except ValueError:
                    raise ParseError(f"x: not an integer crossing count: {text!r}", path, n, c) from None
            elif name == "angle_class":
                try:
                    rec[name] = AngleClass.parse(text)
                except ValueError as exc:
                    raise ParseError(str(exc), path, n, c) from None
            elif name == "launch":
                try:
                    rec[name] = launch_name(text)
                except KeyError as exc:
                    raise ParseError(exc.args[0], path, n, c) from None
            else:
                if not text:
                    raise ParseError(f"{name}: empty", path, n, c)
                rec[name] = text
        records.append(rec)
    return kind, records


def _series_points(recs, xkey):
    pts = sorted((r[xkey], r["value"]) for r in recs)
    for (a, _), (b, _) in zip(pts, pts[1:]):
        if a == b:
            raise CalibrationError(f"duplicate {xkey} {a:g}")
    return pts


def _grouped(records, *keys):
    groups = defaultdict(list)
    for r in records:
        groups[tuple(r[k] for k in keys)].append(r)
    return dict(sorted(groups.items(), key=lambda kv: tuple(str(v) for v in kv[0])))


def dataset_from_tables(tables, failures=None) -> CalibrationDataset:
    """Assemble a dataset from ``[(path, kind, records), ...]``.

    A series that cannot be built (e.g. duplicated points) is appended to
    ``failures`` as ``(key, message)`` instead of aborting.
    """
    ds = CalibrationDataset()
    failures = [] if failures is None else failures

    def add(key, fn):
        try:
            fn()
        except CalibrationError as exc:
            failures.append((key, str(exc)))

    for path, kind, recs in tables:
        ds.sources.append(str(path))
        if kind == "profiles":
            for r in recs:
                ds.profiles[r["profile"]] = {k: r[k] for k in
                                             ("width_um", "height_um", "delta_n", "propagation_db_per_cm")}
        elif kind == "references":
            for r in recs:
                ds.references[(r["profile"], r["launch"])] = r["reference_db"]
        elif kind == "crossings":
            for (p, l, a), g in _grouped(recs, "profile", "launch", "angle_class").items():
                add(f"{p}/{l}/{a.value}", lambda p=p, l=l, a=a, g=g: ds.crossings.append(
                    CrossingLossSeries(p, l, a, _series_points(g, "x"))))
        elif kind == "bends":
            for (p, l), g in _grouped(recs, "profile", "launch").items():
                add(f"{p}/{l}/bend", lambda p=p, l=l, g=g: ds.bends.append(
                    BendLossSeries(p, l, _series_points(g, "radius_mm"))))
        elif kind == "farfield":
            for (l,), g in _grouped(recs, "launch").items():
                add(f"far-field/{l}", lambda l=l, g=g: ds.scans.append(
                    FarFieldScan(_series_points(g, "angle_deg"), l)))
        elif kind == "pulses":
            for (p, l, length), g in _grouped(recs, "profile", "launch", "length_m").items():
                def pair(p=p, l=l, length=length, g=g):
                    widths = {r["path"].lower(): r["fwhm_ps"] for r in g}
                    if set(widths) != {"back_to_back", "through"} or len(g) != 2:
                        raise CalibrationError("pulse records need one back_to_back and one through row")
                    ds.pulses.append(PulsePair(widths["back_to_back"], widths["through"], length, p, l))
                add(f"{p}/{l}/pulses", pair)
        elif kind == "table_slopes":
            for r in recs:
                ds.table_slopes[(r["profile"], r["launch"], r["angle_class"])] = \
                    CrossingSlopeSet(r["k1"], r["k2"])
        elif kind == "table_radii":
            for r in recs:
                ds.table_radii[(r["profile"], r["launch"])] = r["min_radius_mm"]
    return ds


def measurement_files(paths):
    """Expand files and directories into a sorted list of ``.csv`` files."""
    out = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            out.extend(sorted(p.rglob("*.csv")))
        elif p.exists():
            out.append(p)
        else:
            raise ParseError("no such file or directory", p)
    return out


def read_dataset(paths, failures=None) -> CalibrationDataset:
    tables = []
    for f in measurement_files(paths):
        kind, recs = read_table(f)
        tables.append((f, kind, recs))
    return dataset_from_tables(tables, failures)


# ------------------------------------------------------------- shipped data


def data_dir() -> Path:
    return Path(str(resources.files("wgdesign") / "data"))


def shipped_dataset() -> CalibrationDataset:
    d = data_dir()
    return read_dataset([d / "figure-digitized", d / "table-authoritative"])


@functools.lru_cache(maxsize=None)
def _default_profiles(slope_source):
    profiles, _ = calibrate(shipped_dataset(), slope_source=slope_source)
    return profiles


def default_profiles(slope_source: str = "table"):
    """Profiles calibrated from the shipped data (tabulated crossing slopes by default)."""
    return dict(_default_profiles(slope_source))


# -------------------------------------------------------------- model cards


def _r3(v):
    return round(float(v), 3)


def card_dict(profile: WaveguideProfile, launch: str, budget_db: float = 1.0) -> dict:
    launch = launch_name(launch)
    doc = {
        "kind": CARD_KIND,
        "version": 1,
        "profile": profile.name,
        "launch": launch,
        "width_um": float(profile.width_um),
        "height_um": float(profile.height_um),
        "delta_n": float(profile.delta_n),
        "propagation_loss_db_per_cm": float(profile.propagation_loss_db_per_cm),
    }
    if launch in profile.coupling_loss_db:
        doc["coupling_loss_db"] = _r3(profile.coupling_loss_db[launch])
    if launch in profile.reference_insertion_loss_db:
        doc["reference_insertion_loss_db"] = _r3(profile.reference_insertion_loss_db[launch])
    slopes = {a.value: {"k1": _r3(k.k1_db_per_crossing), "k2": _r3(k.k2_db_per_crossing),
                        "knee": int(k.knee)}
              for (l, a), k in sorted(profile.crossing_slopes.items(), key=lambda kv: kv[0][1].value)
              if l == launch}
    if slopes:
        doc["crossing_slopes"] = slopes
    if launch in profile.bend_curve:
        curve = profile.bend_curve[launch]
        doc["bend_curve"] = [[float(r), _r3(v)] for r, v in curve.samples]
        try:
            doc["min_bend_radius_mm"] = float(min_bend_radius(curve, budget_db))
        except Exception:
            doc["min_bend_radius_mm"] = None
    if launch in profile.numerical_aperture:
        doc["numerical_aperture"] = round(float(profile.numerical_aperture[launch]), 4)
    if launch in profile.blp_ghz_m:
        doc["blp_ghz_m"] = _r3(profile.blp_ghz_m[launch])
    doc["flags"] = list(profile.flags)
    return doc


def write_cards(profiles, out_dir, launches=None):
    """One YAML card per (profile, launch); returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in sorted(profiles):
        prof = profiles[name]
        known = set(prof.coupling_loss_db) | set(prof.bend_curve) | set(prof.blp_ghz_m) | \
            {l for l, _ in prof.crossing_slopes}
        for launch in sorted(known):
            if launches and launch not in launches:
                continue
            path = out_dir / f"{name}_{launch}.yaml"
            with open(path, "w", encoding="utf-8") as fh:
                yaml.safe_dump(card_dict(prof, launch), fh, sort_keys=False)
            paths.append(path)
    return paths


def read_cards(paths):
    """Rebuild profiles from model-card files or directories of them."""
    files = []
    for p in paths:
        p = Path(p)
        files.extend(sorted(p.glob("*.yaml")) if p.is_dir() else [p])
    per = defaultdict(list)
    for f in files:
        try:
            with open(f, encoding="utf-8") as fh:
                doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ParseError(str(getattr(exc, "problem", exc)), f,
                             mark.line + 1 if mark else None, mark.column + 1 if mark else None) from None
        if not isinstance(doc, dict) or doc.get("kind") != CARD_KIND:
            raise ParseError("not a model card", f)
        per[doc.get("profile")].append((f, doc))
    if not per:
        raise ParseError("no model cards found", ", ".join(map(str, paths)))
    profiles = {}
    for name, docs in sorted(per.items()):
        base = docs[0][1]
        kw = dict(coupling_loss_db={}, reference_insertion_loss_db={}, crossing_slopes={},
                  bend_curve={}, blp_ghz_m={}, numerical_aperture={})
        flags = []
        for f, d in docs:
            try:
                launch = launch_name(d["launch"])
                if "coupling_loss_db" in d:
                    kw["coupling_loss_db"][launch] = float(d["coupling_loss_db"])
                if "reference_insertion_loss_db" in d:
                    kw["reference_insertion_loss_db"][launch] = float(d["reference_insertion_loss_db"])
                for a, k in (d.get("crossing_slopes") or {}).items():
                    kw["crossing_slopes"][(launch, AngleClass.parse(a))] = CrossingSlopeSet(
                        float(k["k1"]), float(k["k2"]), int(k.get("knee", 10)))
                if d.get("bend_curve"):
                    kw["bend_curve"][launch] = BendLossCurve(d["bend_curve"])
                if d.get("blp_ghz_m") is not None:
                    kw["blp_ghz_m"][launch] = float(d["blp_ghz_m"])
                if d.get("numerical_aperture") is not None:
                    kw["numerical_aperture"][launch] = float(d["numerical_aperture"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad model card field: {exc}", f) from None
            flags.extend(x for x in d.get("flags", []) if x not in flags)
        try:
            profiles[name] = WaveguideProfile(
                name=name, width_um=float(base["width_um"]), height_um=float(base["height_um"]),
                delta_n=float(base["delta_n"]),
                propagation_loss_db_per_cm=float(base["propagation_loss_db_per_cm"]),
                flags=tuple(flags), **kw)
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad model card for {name}: {exc}", docs[0][0]) from None
    return profiles
