import json
import re
from pathlib import Path

import pytest

from wgdesign.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture(autouse=True)
def fixed_clock(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write_config(tmp_path, text, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_gen_shuffle(tmp_path, capsys):
    code, out, _ = run(capsys, "gen", "--config", CONFIGS / "shuffle_gen.yaml", "--out", tmp_path)
    assert code == 0
    assert "routes=100 bends=100 crossings=1650 worst=90" in out
    assert "# timestamp 2023-11-14T22:13:20Z" in out
    doc = json.loads((tmp_path / "gen.json").read_text())
    assert doc["statistics"]["crossings"] == 1650
    assert (tmp_path / "layout.json").exists()
    assert (tmp_path / "gen.txt").read_text() == out


def test_gen_from_layout_file_and_random(tmp_path, capsys):
    run(capsys, "gen", "--config", CONFIGS / "shuffle_gen.yaml", "--out", tmp_path / "a")
    cfg = write_config(tmp_path, "layout:\n  file: a/layout.json\n")
    code, out, _ = run(capsys, "gen", "--config", cfg)
    assert code == 0 and "crossings=1650" in out
    cfg = write_config(tmp_path, "layout:\n  random_primitives: 12\n", "rnd.yaml")
    code, a, _ = run(capsys, "gen", "--config", cfg, "--seed", 5)
    code2, b, _ = run(capsys, "gen", "--config", cfg, "--seed", 5)
    assert code == code2 == 0 and a == b


def test_budget_report_and_rerender(tmp_path, capsys):
    code, out, _ = run(capsys, "budget", "--config", CONFIGS / "shuffle_budget.yaml", "--out", tmp_path)
    assert code == 0
    assert "worst path 0-9 (WG03, MMF50): 6.10 dB, 90 crossings, 1 bends" in out
    doc = json.loads((tmp_path / "budget.json").read_text())
    # every table total is the structured value rounded to 2 decimals
    rows = [l.split() for l in out.splitlines() if re.match(r"^\d+-\d+\s", l)]
    assert len(rows) == 100
    for row, rec in zip(rows, doc["ranking"]):
        assert row[0] == "-".join(map(str, rec["route"]))
        assert row[6] == f"{rec['total_db']:.2f}"
        assert row[8] == f"{rec['bandwidth_ghz']:.1f}"
    code, again, _ = run(capsys, "report", tmp_path / "budget.json")
    assert code == 0 and again == out


def test_budget_parallel_matches_serial(tmp_path, capsys):
    base = (CONFIGS / "shuffle_budget.yaml").read_text()
    par = write_config(tmp_path, base + "workers: 3\n")
    run(capsys, "budget", "--config", CONFIGS / "shuffle_budget.yaml", "--out", tmp_path / "s")
    run(capsys, "budget", "--config", par, "--out", tmp_path / "p")
    a = json.loads((tmp_path / "s" / "budget.json").read_text())
    b = json.loads((tmp_path / "p" / "budget.json").read_text())
    a.pop("manifest"), b.pop("manifest")
    assert a == b


def test_optimize_study_is_byte_identical(tmp_path, capsys):
    cfg = CONFIGS / "shuffle_router_study.yaml"
    par = write_config(tmp_path, cfg.read_text() + "workers: 4\n")
    outs = []
    for d in ("a", "b"):
        code, out, _ = run(capsys, "optimize", "--config", par, "--out", tmp_path / d)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]
    for name in ("optimize.txt", "optimize.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert "scenario unconstrained: WG02 R=12 mm 5.99 dB" in outs[0]
    assert "scenario size-capped: WG03 R=8 mm 6.10 dB" in outs[0]
    assert "savings vs WG02 at R = 12 mm: width 30.0%, height 29.7%, side 29.9%, area 50.8%" in outs[0]
    code, again, _ = run(capsys, "report", tmp_path / "a" / "optimize.json")
    assert again == outs[0]


def test_optimize_infeasible_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, "constraints:\n  max_board_side_mm: 10\n")
    code, out, _ = run(capsys, "optimize", "--config", cfg)
    assert code == 3
    assert "no feasible design" in out


def test_fit_writes_cards(tmp_path, capsys):
    code, out, _ = run(capsys, "fit", "--out", tmp_path)
    assert code == 0
    assert "0 failure(s)" in out
    assert len(list((tmp_path / "cards").glob("*.yaml"))) == 12
    doc = json.loads((tmp_path / "fit.json").read_text())
    wg02 = [c for c in doc["cards"] if c["profile"] == "WG02" and c["launch"] == "MMF100MM"][0]
    assert wg02["min_bend_radius_mm"] == 15.0
    # cards feed back into budgeting
    cfg = write_config(tmp_path, f"model_cards: {tmp_path / 'cards'}\nprofile: WG03\n")
    code, out, _ = run(capsys, "budget", "--config", cfg)
    assert code == 0 and "worst path 0-9" in out


@pytest.mark.parametrize("argv,needle", [
    (["budget", "--profile", "WG09"], "unknown profile"),
    (["budget"], "needs a profile"),
    (["budget", "--profile", "WG01", "--launch", "MMF62"], "unknown launch"),
    (["report"], "needs a JSON document"),
])
def test_input_errors_exit_2(capsys, argv, needle):
    code, _, err = run(capsys, *argv)
    assert code == 2 and needle in err


def test_bad_config(tmp_path, capsys):
    cfg = write_config(tmp_path, "layout:\n  n_card: 10\n")
    code, _, err = run(capsys, "gen", "--config", cfg)
    assert code == 2 and "unknown key 'n_card'" in err
    cfg = write_config(tmp_path, "layout: [1,\n", "broken.yaml")
    code, _, err = run(capsys, "gen", "--config", cfg)
    assert code == 2 and "line" in err
    code, _, err = run(capsys, "gen", "--config", tmp_path / "missing.yaml")
    assert code == 2


def test_fit_empty_directory(tmp_path, capsys):
    code, _, err = run(capsys, "fit", tmp_path)
    assert code == 2 and "no series found" in err


def test_geometry_error_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path, "layout:\n  board: {width_mm: 200, height_mm: 200, card_pitch_mm: 5}\n")
    code, _, err = run(capsys, "gen", "--config", cfg, "--out", tmp_path / "o")
    assert code == 3
    doc = json.loads((tmp_path / "o" / "error.json").read_text())
    assert doc["error"]["type"] == "geometry" and "card pitch" in doc["error"]["message"]
