import json
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import circ_diff, rotate_point, transform_scene
from situgen.errors import DegenerateGeometry, NoEligiblePivot, UnknownId
from situgen.geometry import DirectionBin, yaw_to_quaternion
from situgen.scene import Obb3D, Object3D, Scene, footprint2d
from situgen.situated import (SITUATION_TEMPLATE, GraphConfig, SituatedObjectRecord,
                              SituatedSceneGraph, Situation, build_situated_graph,
                              candidate_stands, direction_from_description, graph_to_json,
                              sample_situation, situated_description, situation_at,
                              situation_rng)
from situgen.synthetic import random_scene


def box(oid, label, c, e=(0.2, 0.2, 0.2), z=0.2, yaw=0.0, attrs=None):
    return Object3D(oid, label, Obb3D((c[0], c[1], z), e, yaw), attrs or {})


def test_candidate_stands_worked_example():
    pivot = Object3D("bed_1", "bed", Obb3D((2, 1.5, 0.3), (1, 0.5, 0.3)))
    other = box("lamp_2", "lamp", (-2, -1.5), z=1.0)
    scene = Scene("s", (pivot, other))
    assert footprint2d(pivot).min == (1, 1) and footprint2d(pivot).max == (3, 2)
    assert candidate_stands(scene, pivot) == [(1.0, 1.5), (2.0, 1.0)]
    s = situation_at(scene, "bed_1", (1, 1.5), "lamp_2")
    assert s.yaw == pytest.approx(-90)
    assert s.orientation.as_list() == pytest.approx([0, 0, -0.70711, 0.70711], abs=1e-5)
    assert s.stand == (1.0, 1.5, 0.0)


def test_stand_offset_moves_outward():
    pivot = Object3D("bed_1", "bed", Obb3D((2, 1.5, 0.3), (1, 0.5, 0.3)))
    scene = Scene("s", (pivot, box("lamp_2", "lamp", (-2, -1.5), z=1.0)))
    assert candidate_stands(scene, pivot, 0.25) == [(0.75, 1.5), (2.0, 0.75)]


def test_sampling_deterministic(livingroom_scene):
    a = sample_situation(livingroom_scene, random.Random(42))
    b = sample_situation(livingroom_scene, random.Random(42))
    assert a == b and a.digest == b.digest


def test_situation_rng_streams_independent():
    a = situation_rng(1, "s", 0).random()
    assert a == situation_rng(1, "s", 0).random()
    assert a != situation_rng(1, "s", 1).random()
    assert a != situation_rng(1, "s", 0, "attr_rel").random()


def test_no_eligible_pivot():
    scene = Scene("s", (box("wall_1", "wall", (0, 0), z=0.1), box("lamp_2", "lamp", (1, 1), z=2)))
    with pytest.raises(NoEligiblePivot):
        sample_situation(scene, random.Random(0))


def test_degenerate_stand_rejected():
    scene = Scene("s", (box("a_1", "a", (0, 0)), box("b_2", "b", (1, 0), z=1.0)))
    with pytest.raises(DegenerateGeometry):
        situation_at(scene, "a_1", (0, 0), "b_2")
    with pytest.raises(DegenerateGeometry):
        situation_at(scene, "a_1", (1, 0), "b_2")
    with pytest.raises(DegenerateGeometry):
        situation_at(scene, "a_1", (0.5, 0), "a_1")


def test_situation_dict_round_trip(livingroom_scene):
    s = sample_situation(livingroom_scene, random.Random(3))
    doc = s.to_dict()
    assert doc["stand"][2] == 0.0 and len(doc["quaternion"]) == 4
    assert Situation.from_dict(json.loads(json.dumps(doc))) == s
    legacy = {k: v for k, v in doc.items() if k not in ("yaw", "referent_direction")}
    back = Situation.from_dict(legacy)
    assert back.referent_direction is s.referent_direction
    assert back.yaw == pytest.approx(s.yaw, abs=1e-9)


def test_livingroom_graph(livingroom_scene):
    s = situation_at(livingroom_scene, "sofa_1", (0, -1.55), "table_3")
    g = build_situated_graph(livingroom_scene, s)
    tv = g.record("tv_2")
    assert tv.direction is DirectionBin.FRONT and tv.angle == 0.0
    assert tv.distance == pytest.approx(2.45)
    table = g.record("table_3")
    assert table.direction is DirectionBin.BACK
    assert table.angle == pytest.approx(180 + math.degrees(math.atan2(1.5, 2.25)), abs=1e-9)
    cab = g.record("kitchen_cabinet_4")
    assert cab.angle == pytest.approx(180 + math.degrees(math.atan2(3.0, 4.55)), abs=1e-9)
    assert cab.passby == ("table_3",)
    window = g.record("window_5")
    assert window.angle == pytest.approx(90 + math.degrees(math.atan2(2.55, 2.5)), abs=1e-9)
    assert g.record("wall_6").direction is DirectionBin.RIGHT
    assert s.referent_direction is DirectionBin.BACK
    assert s.description == "You are standing beside sofa, and there is table on the backward."
    with pytest.raises(UnknownId):
        g.record("sofa_1")


def test_livingroom_json_shape(livingroom_scene):
    s = situation_at(livingroom_scene, "sofa_1", (0, -1.55), "table_3")
    data = graph_to_json(build_situated_graph(livingroom_scene, s))
    doc = json.loads(data)
    assert list(doc) == ["Left", "Right", "Front", "Backwards"]
    assert doc["Left"] == {}
    assert doc["Front"]["tv_2"] == {"distance": 2.45, "passby": [], "affordances": ["watching"],
                                    "attributes": {"color": "black"}, "angle": 0.0,
                                    "relations": ["hanging on wall_6"]}
    assert list(doc["Backwards"]) == ["table_3", "window_5", "kitchen_cabinet_4"]
    assert data == graph_to_json(build_situated_graph(livingroom_scene, s))


def test_json_matches_reference_fragment(livingroom_scene):
    s = situation_at(livingroom_scene, "sofa_1", (0, -1.55), "table_3")
    rec = SituatedObjectRecord("table_8", "table", 2.6, 257.48, DirectionBin.LEFT, ("chair_21",),
                               {"color": "red"}, ("placing items on",), ("close by chair_36",))
    buckets = {b: () for b in DirectionBin}
    buckets[DirectionBin.LEFT] = (rec,)
    text = graph_to_json(SituatedSceneGraph("x", s, buckets)).decode()
    assert text.startswith(
        '{"Left": {"table_8": {"distance": 2.6, "passby": ["chair_21"], '
        '"affordances": ["placing items on"], "attributes": {"color": "red"}, '
        '"angle": 257.48, "relations": ["close by chair_36"]}}')


def test_object_on_facing_ray_is_front():
    scene = Scene("s", (box("a_1", "a", (0, 0), (0.5, 0.5, 0.2)), box("b_2", "b", (0, 5), z=1.0)))
    s = situation_at(scene, "a_1", (0, -0.5), "b_2")
    rec = build_situated_graph(scene, s).record("b_2")
    assert rec.angle == 0.0 and rec.direction is DirectionBin.FRONT


def test_full_3d_distance_flag(livingroom_scene):
    s = situation_at(livingroom_scene, "sofa_1", (0, -1.55), "table_3")
    g = build_situated_graph(livingroom_scene, s, GraphConfig(full_3d_distance=True))
    assert g.record("tv_2").distance == pytest.approx(math.hypot(2.45, 1.0))


def check_graph_invariants(scene, s, g):
    recs = list(g.records())
    assert len(recs) == len(scene.objects) - 1
    assert {r.object_id for r in recs} == set(scene.by_id) - {s.pivot_id}
    for b, bucket in g.buckets.items():
        assert all(r.direction is b for r in bucket)
        ds = [r.distance for r in bucket]
        assert ds == sorted(ds)
        for r in bucket:
            assert 0.0 <= r.angle < 360.0 and r.distance >= 0.0
            assert r.object_id not in r.passby and s.pivot_id not in r.passby
    assert g.record(s.referent_id).direction is s.referent_direction
    assert direction_from_description(s.description) is s.referent_direction
    assert s.orientation == yaw_to_quaternion(s.yaw)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_graph_invariants_random_scenes(seed):
    rng = random.Random(seed)
    scene = random_scene(rng, f"r{seed}", rng.randint(3, 14))
    try:
        s = sample_situation(scene, rng)
    except NoEligiblePivot:
        return
    pivot = footprint2d(scene[s.pivot_id])
    assert (s.stand[0], s.stand[1]) in candidate_stands(scene, scene[s.pivot_id])
    assert pivot.contains(s.stand, tol=1e-12)
    check_graph_invariants(scene, s, build_situated_graph(scene, s))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.floats(0, 2 * math.pi), st.floats(-50, 50), st.floats(-50, 50))
def test_rigid_invariance_property(seed, theta, tx, ty):
    rng = random.Random(seed)
    scene = random_scene(rng, "r", 10)
    try:
        s = sample_situation(scene, rng)
    except NoEligiblePivot:
        return
    moved = transform_scene(scene, theta, (tx, ty))
    s2 = situation_at(moved, s.pivot_id, rotate_point(s.stand, theta, (tx, ty)), s.referent_id)
    g1, g2 = build_situated_graph(scene, s), build_situated_graph(moved, s2)
    for r1 in g1.records():
        r2 = g2.record(r1.object_id)
        assert circ_diff(r1.angle, r2.angle) < 1e-6
        assert abs(r1.distance - r2.distance) < 1e-6
        assert r1.passby == r2.passby
        if r1.direction is not r2.direction:
            assert min(circ_diff(r1.angle, b) for b in (45, 135, 225, 315)) < 1e-6


# descriptions

def test_description_empty_scene():
    scene = Scene("solo", (box("chair_1", "chair", (1, 1), attrs={"color": "white"}),))
    d = situated_description(scene, "chair_1")
    assert d.text == ("Stand besides white chair and facing the center of the white chair, "
                      "in front, there are no objects; on the right, there are no objects; "
                      "behind, there are no objects; and on the left, there are no objects.")


def test_description_caps_at_five_nearest():
    target = Object3D("desk_1", "desk", Obb3D((0, 0, 0.4), (0.5, 0.5, 0.4)))
    # scene center must sit below the desk so it is faced from the -y side
    others = [box(f"book_{i}", "book", (0.05 * i, 2 + i), z=1.0) for i in range(2, 9)]
    anchor = box("rug_20", "rug", (0, -100))
    scene = Scene("s", (target, *others, anchor))
    d = situated_description(scene, "desk_1")
    front = d.text.split("in front, ")[1].split(";")[0]
    assert front == "there are " + ", ".join(["book"] * 5)
    g = build_situated_graph(scene, situation_at(scene, "desk_1", (0, -0.5), "book_2"))
    nearest = [r.object_id for r in g.buckets[DirectionBin.FRONT]][:5]
    assert nearest == [f"book_{i}" for i in range(2, 7)]


def test_description_white_label(livingroom_scene):
    d = situated_description(livingroom_scene, "sofa_1")
    assert d.text.startswith("Stand besides big white sofa")
    assert "black tv" in d.text


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_description_cap_property(seed):
    scene = random_scene(random.Random(seed), "r", 16)
    for o in scene.objects[:3]:
        text = situated_description(scene, o.id).text
        for section in text.split(";"):
            listed = section.split("there are ", 1)[1]
            if listed.startswith("no objects"):
                continue
            assert len(listed.split(", ")) <= 5


def test_template_constant():
    assert SITUATION_TEMPLATE.format(pivot="sofa", referent="table", direction="left") == \
        "You are standing beside sofa, and there is table on the left."
