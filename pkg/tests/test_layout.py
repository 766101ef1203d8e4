import math

import pytest
from hypothesis import given, settings, strategies as st

from oracles import subdivision_crossings
from wgdesign.errors import GeometryError, ParseError
from wgdesign.geometry import Arc, Segment
from wgdesign.layout import (BoardSpec, ShuffleSpec, bounding_box_area, build_layout,
                             count_crossings, generate_shuffle, layout_from_dict,
                             layout_to_dict, load_layout, random_layout)
from wgdesign.model import AngleClass


@pytest.fixture(scope="module")
def shuffle10():
    return generate_shuffle(ShuffleSpec(10, 8.0))


def test_shuffle_statistics(shuffle10):
    stats = shuffle10.statistics()
    assert stats == {"routes": 100, "bends": 100, "crossings": 1650, "worst": 90, "degenerate": 0}
    assert abs(stats["crossings"] - 1800) <= 180
    per = shuffle10.per_route_counts()
    assert sum(per.values()) == 2 * stats["crossings"]
    worst = [rid for rid, c in per.items() if c == 90]
    assert worst == [(0, 9)]
    assert len(shuffle10.route((0, 9)).bends) == 1


def test_every_route_has_one_quarter_bend(shuffle10):
    for r in shuffle10.routes:
        (b,) = r.bends
        assert b.radius_mm == 8.0 and b.angle_deg == pytest.approx(90.0)


def test_shuffle_crossings_are_all_right_angles(shuffle10):
    assert {c.angle_class for c in shuffle10.crossings} == {AngleClass.DEG90}


@pytest.mark.parametrize("n,expected", [(1, 0), (2, 2), (3, 12)])
def test_small_shuffles(n, expected):
    lay = generate_shuffle(ShuffleSpec(n, 5.0))
    assert len(lay.routes) == n * n
    assert len(lay.crossings) == expected
    assert subdivision_crossings(lay.routes)[0] == expected


def test_shuffle_board_size():
    w, h, _ = bounding_box_area(generate_shuffle(ShuffleSpec(10, 8.0)))
    assert (w, h) == (pytest.approx(102.625), pytest.approx(94.5))
    w, h, _ = bounding_box_area(generate_shuffle(ShuffleSpec(10, 12.0)))
    assert (w, h) == (pytest.approx(146.625), pytest.approx(134.5))


def test_worst_route_length(shuffle10):
    R, w = 8.0, 0.125
    assert shuffle10.route((0, 9)).length_mm == pytest.approx(9 * R + math.pi * R / 2 + 92 * w)


def test_generation_is_deterministic():
    a = layout_to_dict(generate_shuffle(ShuffleSpec(6, 7.0)))
    b = layout_to_dict(generate_shuffle(ShuffleSpec(6, 7.0), workers=2))
    assert a == b


def test_board_too_small_names_constraint():
    with pytest.raises(GeometryError, match="card pitch"):
        generate_shuffle(ShuffleSpec(10, 8.0), BoardSpec(200, 200, card_pitch_mm=5.0))
    with pytest.raises(GeometryError, match="wide"):
        generate_shuffle(ShuffleSpec(10, 8.0), BoardSpec(50, 200, card_pitch_mm=10.0))


def test_spec_validation():
    with pytest.raises(ValueError):
        ShuffleSpec(0, 8.0)
    with pytest.raises(ValueError):
        ShuffleSpec(4, -1.0)


def test_single_crossing_and_events():
    lay = build_layout({("a",): [Segment((0, 5), (10, 5))], ("b",): [Segment((5, 0), (5, 10))]})
    (rec,) = lay.crossings
    assert rec.point == pytest.approx((5, 5))
    kinds = [e.kind for e in lay.route(("a",)).events]
    assert kinds == ["straight", "crossing", "straight"]
    assert sum(e.length_cm for e in lay.route(("a",)).events if e.kind == "straight") == pytest.approx(1.0)


def test_crossing_on_arc_measured_against_tangent():
    arc = Arc((0, 0), 10.0, 0, 90)
    seg = Segment((0, 0), (20, 20))  # radial line, perpendicular to the arc
    lay = build_layout({("arc",): [arc], ("ray",): [seg]})
    (rec,) = lay.crossings
    assert rec.angle_deg == pytest.approx(90.0)
    kinds = [e.kind for e in lay.route(("arc",)).events]
    assert kinds == ["bend", "crossing"]


def test_tangency_reported_not_counted():
    lay = build_layout({("a",): [Arc((0, 0), 1.0, 0, 180)], ("b",): [Segment((-2, 1), (2, 1))]})
    assert lay.crossings == ()
    assert [d.reason for d in lay.degenerate] == ["tangent"]


def test_endpoint_contact_reported_not_counted():
    lay = build_layout({("a",): [Segment((0, 0), (1, 0))], ("b",): [Segment((1, -1), (1, 1))]})
    assert lay.crossings == ()
    assert [d.reason for d in lay.degenerate] == ["endpoint"]


def test_route_validation():
    with pytest.raises(GeometryError, match="does not start"):
        build_layout({("a",): [Segment((0, 0), (1, 0)), Segment((2, 0), (3, 0))]})
    zigzag = [Segment((0, 0), (2, 0)), Segment((2, 0), (2, 1)), Segment((2, 1), (1, -1))]
    with pytest.raises(GeometryError, match="intersects itself"):
        build_layout({("a",): zigzag})


def test_segment_bounding_box_and_scaling():
    lay = build_layout({("a",): [Segment((0, 0), (10, 0))]})
    w, h, area = bounding_box_area(lay)
    assert (w, h) == (12.0, 2.0)
    lay2 = lay.scaled(2.0)
    assert bounding_box_area(lay2)[2] == pytest.approx(4 * area)


def test_json_roundtrip(tmp_path, shuffle10):
    doc = layout_to_dict(shuffle10)
    again = layout_from_dict(doc)
    assert again.statistics() == shuffle10.statistics()
    with pytest.raises(ParseError):
        layout_from_dict({"format": "other"})
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  \"format\": \n")
    with pytest.raises(ParseError) as err:
        load_layout(bad)
    assert err.value.line == 3


def test_parallel_counting_matches_serial():
    lay = random_layout(7, n_primitives=60, size_mm=30)
    a = count_crossings(lay.routes, workers=1)
    b = count_crossings(lay.routes, workers=3)
    assert a.records == b.records


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(st.integers(0, 2 ** 32 - 1))
def test_crossings_match_subdivision_oracle(seed):
    lay = random_layout(seed, n_primitives=8, size_mm=20)
    assert not lay.degenerate
    total, per = subdivision_crossings(lay.routes)
    assert len(lay.crossings) == total
    assert lay.per_route_counts() == per
