"""Command-line entry point: ``wgdesign {fit,gen,budget,optimize,report}``.

Every run writes a text report and a JSON document with identical values
(the text is rendered from the document), both carrying a run manifest.
"""

from __future__ import annotations

import argparse
import copy
import datetime as _dt
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .budget import ModeFilterTable, budget_document, format_budget_table, worst_case_path, worst_case_summary
from .calibrate import GAUSSIAN_TBP, calibrate
from .datafiles import data_dir, default_profiles, measurement_files, read_cards, read_dataset, write_cards
from .errors import CalibrationError, GeometryError, InfeasibleError, ParseError, WGDesignError
from .geometry import TOL
from .layout import (BoardSpec, ShuffleSpec, bounding_box_area, dump_layout, generate_shuffle,
                     load_layout, random_layout)
from .model import AngleClass, launch_name
from .optimize import (Constraints, LayoutSpec, comparison_document, enumerate_designs, optimize,
                       radius_grid, render_comparison)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4

DEFAULTS = {
    "model_cards": "default",
    "slope_source": "table",
    "launch": "MMF50",
    "profile": None,
    "profiles": None,
    "workers": 1,
    "seed": 0,
    "layout": {"n_cards": 10, "bend_radius_mm": 8.0, "waveguide_pitch_mm": 0.125,
               "margin_mm": 1.0, "board": None, "file": None, "random_primitives": None},
    "radii_mm": {"start": 5.0, "stop": 20.0, "step": 1.0},
    "constraints": {"bitrate_gbps": 40.0, "bend_loss_budget_db": 1.0, "bandwidth_factor": 0.7,
                    "max_board_side_mm": None, "radius_floor_mm": {}},
    "scenarios": [{"name": "default"}],
    "baseline": None,
    "mode_filter": None,
    "fit": {"inputs": [], "slope_source": "fit", "budget_db": 1.0,
            "threshold_fraction": 0.05, "time_bandwidth_product": GAUSSIAN_TBP},
}


class InputError(WGDesignError):
    """Bad command-line or configuration input."""


@dataclass
class RunManifest:
    command: str
    tool_version: str = __version__
    inputs: dict = field(default_factory=dict)   # label -> sha256
    config: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: {"geometry_mm": TOL})
    timestamp: str = ""

    def add_input(self, path, label=None):
        path = Path(path)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.inputs[label or str(path)] = digest

    def as_dict(self):
        return asdict(self)

    def header(self):
        lines = [f"# wgdesign {self.tool_version} {self.command}", f"# timestamp {self.timestamp}"]
        cfg = hashlib.sha256(json.dumps(self.config, sort_keys=True).encode()).hexdigest()[:16]
        lines.append(f"# config {cfg}, {len(self.inputs)} input file(s)")
        return "\n".join(lines)


def _timestamp():
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        t = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc)
    else:
        t = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0)
    return t.isoformat().replace("+00:00", "Z")


def _merge(base, over, where="config"):
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if k not in base:
            raise InputError(f"{where}: unknown key {k!r}")
        if isinstance(base[k], dict) and base[k] and isinstance(v, dict):
            out[k] = _merge(base[k], v, f"{where}.{k}")
        else:
            out[k] = v
    return out


def load_config(path, manifest: RunManifest):
    doc = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                doc = yaml.safe_load(fh) or {}
        except FileNotFoundError:
            raise InputError(f"config file not found: {path}") from None
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ParseError(str(getattr(exc, "problem", exc)), path,
                             mark.line + 1 if mark else None, mark.column + 1 if mark else None) from None
        if not isinstance(doc, dict):
            raise ParseError("config must be a mapping", path)
        manifest.add_input(path)
    cfg = _merge(DEFAULTS, doc)
    base = Path(path).parent if path else Path(".")
    cfg["_base"] = str(base)
    return cfg


def _resolve(cfg, p):
    p = Path(p)
    return p if p.is_absolute() else Path(cfg["_base"]) / p


def _shipped_inputs(manifest):
    root = data_dir()
    for f in measurement_files([root]):
        manifest.add_input(f, "wgdesign:data/" + f.relative_to(root).as_posix())


def load_profiles(cfg, manifest):
    src = cfg["model_cards"]
    if src in (None, "default"):
        _shipped_inputs(manifest)
        return default_profiles(cfg["slope_source"])
    path = _resolve(cfg, src)
    files = sorted(path.glob("*.yaml")) if path.is_dir() else [path]
    for f in files:
        manifest.add_input(f)
    return read_cards([path])


def _pick_profile(profiles, name):
    if name not in profiles:
        raise InputError(f"unknown profile {name!r}; known: {', '.join(sorted(profiles))}")
    return profiles[name]


def _launch(name):
    try:
        return launch_name(name)
    except KeyError as exc:
        raise InputError(exc.args[0]) from None


def build_layout_from_config(cfg, manifest, seed):
    lc = cfg["layout"]
    workers = int(cfg["workers"])
    if lc.get("file"):
        path = _resolve(cfg, lc["file"])
        manifest.add_input(path)
        return load_layout(path, workers=workers)
    if lc.get("random_primitives"):
        return random_layout(seed, int(lc["random_primitives"]))
    n, r = int(lc["n_cards"]), float(lc["bend_radius_mm"])
    if lc.get("board"):
        b = lc["board"]
        board = BoardSpec(float(b["width_mm"]), float(b["height_mm"]), float(b["card_pitch_mm"]),
                          float(lc["margin_mm"]), float(lc["waveguide_pitch_mm"]))
    else:
        board = BoardSpec.for_radius(n, r, float(lc["waveguide_pitch_mm"]), float(lc["margin_mm"]))
    return generate_shuffle(ShuffleSpec(n, r), board, workers=workers)


# ------------------------------------------------------------------ renderers


def render_fit(doc):
    lines = [f"{'profile':<8}{'launch':<10}{'k1_90':>7}{'k2_90':>7}{'k1_45':>7}{'k2_45':>7}"
             f"{'R_1dB':>7}{'NA':>7}{'BLP':>8}{'coupl':>7}"]

    def f(v, spec):
        width = int(spec.split(".")[0].rstrip("gf") or 0)
        return "-".rjust(width) if v is None else format(v, spec)

    for c in doc["cards"]:
        s90, s45 = c["slopes"].get("DEG90"), c["slopes"].get("DEG45")
        lines.append(f"{c['profile']:<8}{c['launch']:<10}"
                     f"{f(s90 and s90['k1'], '7.3f')}{f(s90 and s90['k2'], '7.3f')}"
                     f"{f(s45 and s45['k1'], '7.3f')}{f(s45 and s45['k2'], '7.3f')}"
                     f"{f(c['min_bend_radius_mm'], '7g')}{f(c['numerical_aperture'], '7.3f')}"
                     f"{f(c['blp_ghz_m'], '8.1f')}{f(c['coupling_loss_db'], '7.3f')}")
    lines.append(f"{len(doc['cards'])} card(s), {len(doc['failures'])} failure(s), "
                 f"{len(doc['warnings'])} warning(s)")
    for fail in doc["failures"]:
        lines.append(f"FAILED {fail['series']}: {fail['message']}")
    for w in doc["warnings"]:
        lines.append(f"warning: {w}")
    return "\n".join(lines)


def render_gen(doc):
    s = doc["statistics"]
    w, h = doc["bounding_box_mm"]
    lines = [f"routes={s['routes']} bends={s['bends']} crossings={s['crossings']} worst={s['worst']}",
             f"bounding box {w:.3f} x {h:.3f} mm, area {doc['area_mm2']:.3f} mm2"]
    if s["degenerate"]:
        lines.append(f"degenerate contacts excluded: {s['degenerate']}")
    lines.append(f"{'route':<10}{'crossings':>10}{'deg90':>7}{'deg45':>7}{'bends':>7}{'length_mm':>11}")
    for r in doc["routes"]:
        lines.append(f"{'-'.join(map(str, r['route'])):<10}{r['crossings']:>10}{r['deg90']:>7}"
                     f"{r['deg45']:>7}{r['bends']:>7}{r['length_mm']:>11.3f}")
    return "\n".join(lines)


def render_budget(doc):
    return worst_case_summary(doc) + "\n" + format_budget_table(doc["ranking"])


def render_optimize(doc):
    out = []
    for sc in doc["scenarios"]:
        out.append(render_comparison(sc["comparison"]))
        out.append("")
    for sc in doc["scenarios"]:
        w = sc["winner"]
        out.append(f"scenario {sc['name']}: " + (
            "no feasible design" if w is None else
            f"{w['profile']} R={w['bend_radius_mm']:g} mm {w['worst_case_loss_db']:.2f} dB"))
    return "\n".join(out)


RENDERERS = {"fit": render_fit, "gen": render_gen, "budget": render_budget, "optimize": render_optimize}


def emit(command, doc, manifest, out_dir):
    doc = {"manifest": manifest.as_dict(), **doc}
    text = manifest.header() + "\n" + RENDERERS[command](doc) + "\n"
    sys.stdout.write(text)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{command}.txt").write_text(text, encoding="utf-8")
        with open(out / f"{command}.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    return doc


# ------------------------------------------------------------------ commands


def cmd_fit(args, cfg, manifest):
    fc = cfg["fit"]
    inputs = args.inputs or [str(_resolve(cfg, p)) for p in fc["inputs"]]
    if not inputs:
        inputs = [str(data_dir())]
    files = measurement_files(inputs)
    for f in files:
        manifest.add_input(f)
    failures = []
    ds = read_dataset(files, failures)
    if ds.n_series == 0 and not failures:
        raise InputError("no series found in " + ", ".join(inputs))
    profiles, rep = calibrate(ds, slope_source=fc["slope_source"], budget_db=float(fc["budget_db"]),
                              threshold_fraction=float(fc["threshold_fraction"]),
                              tbp=float(fc["time_bandwidth_product"]))
    failures += rep.failures
    seen = sorted({(k[0], k[1]) for k in rep.slopes} | set(rep.bend_fits) | set(rep.bandwidth))
    for name in sorted({p for p, _ in seen} - set(profiles)):
        failures.append((name, "no profile parameters (width, height, index contrast, "
                               "propagation loss); card not written"))
    if args.profile:
        seen = [k for k in seen if k[0] == args.profile]
    if args.launch:
        seen = [k for k in seen if k[1] == _launch(args.launch)]
    cards = []
    for p, l in seen:
        if p not in profiles:
            continue
        prof = profiles[p]
        fit = rep.bend_fits.get((p, l))
        slopes = {a.value: {"k1": k.k1_db_per_crossing, "k2": k.k2_db_per_crossing}
                  for (ll, a), k in sorted(prof.crossing_slopes.items(), key=lambda kv: kv[0][1].value)
                  if ll == l}
        cards.append({
            "profile": p, "launch": l, "slopes": slopes,
            "min_bend_radius_mm": fit.min_radius_mm if fit else None,
            "table_radius_mm": ds.table_radii.get((p, l)),
            "numerical_aperture": prof.numerical_aperture.get(l),
            "blp_ghz_m": prof.blp_ghz_m.get(l),
            "coupling_loss_db": prof.coupling_loss_db.get(l),
        })
    written = []
    if args.out and profiles:
        launches = {_launch(args.launch)} if args.launch else None
        chosen = {k: v for k, v in profiles.items() if not args.profile or k == args.profile}
        written = [p.name for p in write_cards(chosen, Path(args.out) / "cards", launches)]
    doc = {"cards": cards, "written": written,
           "failures": [{"series": k, "message": m} for k, m in failures],
           "warnings": [str(w) for w in rep.warnings]}
    emit("fit", doc, manifest, args.out)
    if not cards:
        return EXIT_INPUT
    return EXIT_OK


def cmd_gen(args, cfg, manifest):
    layout = build_layout_from_config(cfg, manifest, args.seed if args.seed is not None else cfg["seed"])
    w, h, area = bounding_box_area(layout)
    routes = []
    for r in layout.routes:
        c = r.crossing_counts()
        routes.append({"route": list(r.id), "crossings": r.n_crossings, "deg90": c[AngleClass.DEG90],
                       "deg45": c[AngleClass.DEG45], "bends": len(r.bends), "length_mm": r.length_mm})
    doc = {"statistics": layout.statistics(), "bounding_box_mm": [w, h], "area_mm2": area,
           "metadata": dict(layout.metadata), "routes": routes,
           "degenerate": [{"routes": [list(d.route_a), list(d.route_b)], "point": list(d.point),
                           "reason": d.reason} for d in layout.degenerate]}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        dump_layout(layout, Path(args.out) / "layout.json")
    emit("gen", doc, manifest, args.out)
    return EXIT_OK


def _filter_table(cfg):
    mf = cfg.get("mode_filter")
    if not mf:
        return None
    try:
        return ModeFilterTable(mf["radius_edges"], mf["crossing_edges"], mf["factors"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"mode_filter: {exc}") from None


def cmd_budget(args, cfg, manifest):
    profiles = load_profiles(cfg, manifest)
    name = args.profile or cfg["profile"]
    if not name:
        raise InputError("budget needs a profile (--profile or 'profile' in the config)")
    profile = _pick_profile(profiles, name)
    launch = _launch(args.launch or cfg["launch"])
    layout = build_layout_from_config(cfg, manifest, args.seed if args.seed is not None else cfg["seed"])
    wc = worst_case_path(layout, profile, launch, _filter_table(cfg), workers=int(cfg["workers"]))
    doc = budget_document(wc, profile.name, launch)
    doc["layout"] = layout.statistics()
    emit("budget", doc, manifest, args.out)
    return EXIT_OK


def cmd_optimize(args, cfg, manifest):
    profiles = load_profiles(cfg, manifest)
    names = [args.profile] if args.profile else (cfg["profiles"] or sorted(profiles))
    chosen = [_pick_profile(profiles, n) for n in names]
    launch = _launch(args.launch or cfg["launch"])
    lc = cfg["layout"]
    spec = LayoutSpec(int(lc["n_cards"]), float(lc["waveguide_pitch_mm"]), float(lc["margin_mm"]))
    rg = cfg["radii_mm"]
    radii = rg if isinstance(rg, list) else radius_grid(float(rg["start"]), float(rg["stop"]),
                                                          float(rg["step"]))
    table = _filter_table(cfg)
    cache = {}
    scenarios, results = [], {}
    for sc in cfg["scenarios"]:
        sc = dict(sc)
        sname = sc.pop("name", f"scenario{len(scenarios) + 1}")
        cons = _merge(cfg["constraints"], sc, f"scenario {sname}")
        try:
            constraints = Constraints(launch=launch, **cons)
        except (TypeError, ValueError) as exc:
            raise InputError(f"scenario {sname}: {exc}") from None
        pts = enumerate_designs(spec, chosen, radii, constraints, table,
                                workers=int(cfg["workers"]), layout_cache=cache)
        results[sname] = (optimize(pts), cons)
    base_name = cfg["baseline"]
    if base_name is not None and base_name not in results:
        raise InputError(f"baseline scenario {base_name!r} not defined")
    baseline = results[base_name][0].best if base_name else None
    for sname, (res, cons) in results.items():
        ref = baseline if sname != base_name else None
        scenarios.append({
            "name": sname, "constraints": cons,
            "comparison": comparison_document(res, f"scenario {sname} ({launch})", ref),
            "winner": res.best.as_dict() if res.best else None,
        })
    emit("optimize", {"launch": launch, "scenarios": scenarios}, manifest, args.out)
    if any(s["winner"] is None for s in scenarios):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_report(args, cfg, manifest):
    if not args.inputs:
        raise InputError("report needs a JSON document produced by another subcommand")
    path = Path(args.inputs[0])
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path, exc.lineno, exc.colno) from None
    command = doc.get("manifest", {}).get("command")
    if command not in RENDERERS:
        raise InputError(f"{path}: not a wgdesign report document")
    m = RunManifest(**doc["manifest"])
    text = m.header() + "\n" + RENDERERS[command](doc) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / f"{command}.txt").write_text(text, encoding="utf-8")
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "gen": cmd_gen, "budget": cmd_budget, "optimize": cmd_optimize,
            "report": cmd_report}


def build_parser():
    ap = argparse.ArgumentParser(prog="wgdesign", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"wgdesign {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "fit": "fit model cards from measurement tables",
        "gen": "generate a layout and count crossings",
        "budget": "per-path loss and bandwidth budget",
        "optimize": "search profiles and bend radii",
        "report": "re-render the text report of a JSON document",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        if name in ("fit", "report"):
            p.add_argument("inputs", nargs="*", help="measurement files/directories (fit) or a JSON report")
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--out", help="output directory")
        p.add_argument("--launch", help="launch condition (SMF9, MMF50, MMF100MM, LENS10x)")
        p.add_argument("--profile", help="waveguide profile name")
        p.add_argument("--seed", type=int, help="seed for randomised layouts")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not hasattr(args, "inputs"):
        args.inputs = []
    manifest = RunManifest(args.command, timestamp=_timestamp())
    try:
        cfg = load_config(args.config, manifest)
        snapshot = {k: v for k, v in cfg.items() if not k.startswith("_")}
        snapshot["cli"] = {k: getattr(args, k) for k in ("launch", "profile", "seed")}
        manifest.config = snapshot
        return COMMANDS[args.command](args, cfg, manifest)
    except (InputError, ParseError, CalibrationError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        print(f"wgdesign {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except (GeometryError, InfeasibleError) as exc:
        kind = "geometry" if isinstance(exc, GeometryError) else "infeasible"
        err = {"manifest": manifest.as_dict(), "error": {"type": kind, "message": str(exc)}}
        print(json.dumps(err["error"]), file=sys.stderr)
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            with open(Path(args.out) / "error.json", "w", encoding="utf-8") as fh:
                json.dump(err, fh, indent=1)
                fh.write("\n")
        return EXIT_INFEASIBLE
    except (WGDesignError, ValueError) as exc:
        print(f"wgdesign {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - last resort
        print(f"wgdesign {args.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
