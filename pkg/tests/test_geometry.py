import importlib
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from situgen import _kernels_py
from situgen.errors import DegenerateError, RangeError, UnknownId
from situgen.geometry import (KERNEL_BACKEND, DirectionBin, Quaternion, ccw_angle,
                              classify_direction, euclid_dist, feature_at, pairwise_features,
                              passby_objects, rotation_angle, rotation_angles,
                              segment_intersects_rect, yaw_to_quaternion)
from situgen.scene import Obb3D, Object3D, Rect2D, Scene

from helpers import determinate_cases, oracle_verdict

coord = st.floats(-100, 100, allow_nan=False)
point = st.tuples(coord, coord)


def test_oracle_itself_on_known_cases():
    assert oracle_verdict((0, 0), (4, 0), Rect2D((1.5, -0.5), (2.5, 0.5))) is True
    assert oracle_verdict((0, 0), (4, 0), Rect2D((1.5, 2.5), (2.5, 3.5))) is False


def test_segment_rect_examples():
    assert segment_intersects_rect((0, 0), (4, 0), Rect2D((1.5, -0.5), (2.5, 0.5)))
    assert not segment_intersects_rect((0, 0), (4, 0), Rect2D((1.5, 2.5), (2.5, 3.5)))


def test_segment_rect_closed_boundaries():
    r = Rect2D((0, 0), (1, 1))
    assert segment_intersects_rect((-1, 1), (2, 1), r)  # runs along the top edge
    assert segment_intersects_rect((1, 1), (2, 2), r)  # touches a corner
    assert segment_intersects_rect((0.5, 0.5), (0.5, 0.5), r)  # point inside
    assert not segment_intersects_rect((2, 2), (2, 2), r)
    assert not segment_intersects_rect((-1, 1.0000001), (2, 1.0000001), r)


def test_segment_rect_matches_oracle_sample():
    for a, b, rect, verdict in determinate_cases(200, seed=11):
        assert segment_intersects_rect(a, b, rect) == verdict, (a, b, rect)


# -- angles ---------------------------------------------------------------------------

def test_ccw_examples():
    assert ccw_angle((0, 0), (1, 0)) == 0.0
    assert ccw_angle((0, 0), (0, 1)) == 90.0
    assert ccw_angle((0, 0), (-1, -1)) == 225.0
    with pytest.raises(DegenerateError):
        ccw_angle((1, 1), (1, 1))


@given(point, point)
def test_ccw_range(p, q):
    assume(p != q)
    assert 0.0 <= ccw_angle(p, q) < 360.0


def test_rotation_angle_examples():
    assert rotation_angle((0, 0), (0, 1), (1, 0)) == 90.0
    assert rotation_angle((0, 0), (0, 1), (0, 2)) == 0.0
    assert rotation_angle((0, 0), (0, 1), (-1, 0)) == 270.0


@given(point, point)
def test_faced_point_is_front(s, f):
    assume(s != f)
    assert rotation_angle(s, f, f) == 0.0


def test_rotation_angles_batch_matches_scalar():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-5, 5, (200, 2))
    batch = rotation_angles((0.3, -0.2), (1.0, 2.0), pts)
    for p, r in zip(pts, batch):
        assert r == pytest.approx(rotation_angle((0.3, -0.2), (1.0, 2.0), p), abs=1e-12)


def test_rotation_angles_nan_on_stand():
    out = rotation_angles((0, 0), (0, 1), [(0, 0), (1, 0)])
    assert math.isnan(out[0]) and out[1] == 90.0
    with pytest.raises(DegenerateError):
        rotation_angles((0, 0), (0, 0), [(1, 0)])


def rigid(p, theta, t):
    c, s = math.cos(theta), math.sin(theta)
    return (c * p[0] - s * p[1] + t[0], s * p[0] + c * p[1] + t[1])


def circ_diff(a, b):
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


@given(point, point, point, st.floats(0, 2 * math.pi), point)
def test_rotation_angle_rigid_invariance(s, f, o, theta, t):
    assume(math.dist(s, f) > 1e-3 and math.dist(s, o) > 1e-3)
    before = rotation_angle(s, f, o)
    after = rotation_angle(rigid(s, theta, t), rigid(f, theta, t), rigid(o, theta, t))
    assert circ_diff(before, after) < 1e-9 * 1e3  # atan2 of ~1e2-magnitude inputs


@given(st.tuples(coord, coord, coord), st.tuples(coord, coord, coord),
       st.floats(0, 2 * math.pi), point)
def test_distance_rigid_invariance(p, q, theta, t):
    p2 = rigid(p[:2], theta, t) + (p[2],)
    q2 = rigid(q[:2], theta, t) + (q[2],)
    assert euclid_dist(p, q) == pytest.approx(euclid_dist(p2, q2), abs=1e-9 * max(1, euclid_dist(p, q)))


# -- direction bins -------------------------------------------------------------------

@pytest.mark.parametrize("angle,expected", [
    (0, DirectionBin.FRONT), (90, DirectionBin.RIGHT), (180, DirectionBin.BACK),
    (270, DirectionBin.LEFT), (45, DirectionBin.RIGHT), (135, DirectionBin.BACK),
    (225, DirectionBin.LEFT), (315, DirectionBin.FRONT), (44.999999, DirectionBin.FRONT),
    (359.9999999, DirectionBin.FRONT),
])
def test_classify_examples(angle, expected):
    assert classify_direction(angle) is expected


@pytest.mark.parametrize("bad", [-0.1, 360.0, 720, float("nan")])
def test_classify_range(bad):
    with pytest.raises(RangeError):
        classify_direction(bad)


@given(st.floats(0, 360, exclude_max=True))
def test_classify_equivariance(theta):
    shifted = (theta + 90.0) % 360.0
    # the float sum can land on the other side of a boundary
    assume(all(abs(shifted - b) > 1e-9 for b in (45, 135, 225, 315, 0, 360)))
    assert classify_direction(shifted) is classify_direction(theta).clockwise_next()


def test_clockwise_order():
    assert [b.clockwise_next() for b in DirectionBin] == [
        DirectionBin.RIGHT, DirectionBin.BACK, DirectionBin.LEFT, DirectionBin.FRONT]


def test_euclid_examples():
    assert euclid_dist((0, 0, 0), (3, 4, 0)) == 5.0
    assert euclid_dist((1, 2, 3), (1, 2, 3)) == 0.0
    assert euclid_dist((1, 2, 3), (4, 6, 3)) == 5.0


# -- quaternions ----------------------------------------------------------------------

def test_quaternion_examples():
    assert yaw_to_quaternion(0).as_list() == [0.0, 0.0, 0.0, 1.0]
    q = yaw_to_quaternion(180)
    assert q.as_list() == pytest.approx([0, 0, 1, 0], abs=1e-12)
    assert yaw_to_quaternion(-90).as_list() == pytest.approx([0, 0, -0.70711, 0.70711], abs=1e-5)


def test_quaternion_unit_norm_enforced():
    with pytest.raises(ValueError):
        Quaternion(0, 0, 0.5, 0.5)


@given(st.floats(-1e4, 1e4))
def test_quaternion_unit(yaw):
    q = yaw_to_quaternion(yaw)
    assert abs(sum(v * v for v in q.as_list()) - 1.0) < 1e-9


# -- passby ---------------------------------------------------------------------------

def box(oid, label, c, e=(0.3, 0.3, 0.3), yaw=0.0):
    return Object3D(oid, label, Obb3D((c[0], c[1], 0.3), e, yaw))


def test_passby_livingroom(livingroom_scene):
    assert passby_objects(livingroom_scene, (0, -1.55), "kitchen_cabinet_4", {"sofa_1"}) == ["table_3"]


def test_passby_adjacent_empty(livingroom_scene):
    assert passby_objects(livingroom_scene, (0, -1.55), "sofa_1") == []


def test_passby_collinear_sorted():
    scene = Scene("line", (
        box("target_1", "target", (10, 0)),
        box("c_2", "c", (7, 0)), box("a_3", "a", (2, 0)), box("b_4", "b", (4.5, 0.1)),
        box("off_5", "off", (5, 3)),
    ))
    assert passby_objects(scene, (0, 0), "target_1") == ["a_3", "b_4", "c_2"]
    assert passby_objects(scene, (0, 0), "target_1", {"b_4"}) == ["a_3", "c_2"]


def test_passby_ignores_non_obstacles():
    scene = Scene("w", (box("target_1", "target", (10, 0)), box("wall_2", "wall", (5, 0)),
                        box("floor_3", "floor", (5, 0), (20, 20, 0.01))))
    assert passby_objects(scene, (0, 0), "target_1") == []
    assert passby_objects(scene, (0, 0), "target_1", non_obstacle_labels=frozenset()) == [
        "floor_3", "wall_2"] or passby_objects(scene, (0, 0), "target_1",
                                                non_obstacle_labels=frozenset()) == ["wall_2", "floor_3"]


def test_passby_oriented_vs_hull():
    # a diamond whose axis-aligned hull corner covers the path end but the diamond does not:
    # hull spans [4.29, 5.71] x [-0.11, 1.31]; at (4.4, 0) |dx| + |dy| = 1.2 > 0.707
    scene = Scene("r", (box("target_1", "target", (4.4, 0), (0.05, 0.05, 0.3)),
                        box("plank_2", "plank", (5, 0.6), (0.5, 0.5, 0.3), 45.0)))
    assert passby_objects(scene, (0, 0), "target_1") == []
    assert passby_objects(scene, (0, 0), "target_1", oriented=False) == ["plank_2"]


def test_passby_unknown_target(livingroom_scene):
    with pytest.raises(UnknownId):
        passby_objects(livingroom_scene, (0, 0), "lamp_9")


# -- pairwise features ----------------------------------------------------------------

def test_features_examples():
    f = pairwise_features([(0, 0, 0), (1, 0, 0)])
    assert f[0, 1].tolist() == [1, 0, 1, 0, 1]
    assert f[0, 0].tolist() == [0, 0, 1, 0, 1]
    g = pairwise_features([(0, 0, 0), (0, 3, 4)])
    assert g[0, 1].tolist() == pytest.approx([5, 1, 0, 0.8, 0.6], abs=1e-12)
    assert feature_at(g, 0, 1).d == 5.0


def test_features_vertical_stack():
    f = pairwise_features([(0, 0, 0), (0, 0, 2)])
    assert f[0, 1].tolist() == pytest.approx([2, 0, 1, 1, 0], abs=1e-12)
    assert f[1, 0].tolist() == pytest.approx([2, 0, 1, -1, 0], abs=1e-12)


@settings(max_examples=50)
@given(st.lists(st.tuples(coord, coord, coord), min_size=2, max_size=6, unique=True))
def test_features_antisymmetry_and_unit_circle(centers):
    f = pairwise_features(centers)
    k = len(centers)
    for i in range(k):
        for j in range(k):
            d, sh, ch, sv, cv = f[i, j]
            assert abs(sh * sh + ch * ch - 1) < 1e-9 and abs(sv * sv + cv * cv - 1) < 1e-9
            if i == j or math.dist(centers[i][:2], centers[j][:2]) < 1e-6:
                continue
            assert d == f[j, i, 0]
            th_ij = math.degrees(math.atan2(sh, ch)) % 360
            th_ji = math.degrees(math.atan2(f[j, i, 1], f[j, i, 2])) % 360
            assert circ_diff(th_ij, (th_ji + 180) % 360) < 1e-9
            assert math.atan2(sv, cv) == pytest.approx(-math.atan2(f[j, i, 3], f[j, i, 4]), abs=1e-12)


# -- compiled kernels vs pure-Python fallback -----------------------------------------

def test_backend_reported():
    assert KERNEL_BACKEND in ("cython", "python")


@pytest.fixture(scope="module")
def cython_kernels():
    try:
        return importlib.import_module("situgen._kernels")
    except ImportError:
        pytest.skip("compiled extension not built")


def test_backends_bit_identical(cython_kernels):
    py = _kernels_py
    rng = np.random.default_rng(5)
    pts = rng.uniform(-5, 5, (300, 2))
    pts[0] = (0.5, 0.25)  # coincides with the stand
    a = cython_kernels.rotation_angles(0.5, 0.25, 1.0, 3.0, pts)
    b = py.rotation_angles(0.5, 0.25, 1.0, 3.0, pts)
    assert np.array_equal(a, b, equal_nan=True)
    rects = np.sort(rng.uniform(-4, 4, (300, 2, 2)), axis=1).transpose(0, 2, 1).reshape(300, 4)
    rects = rects[:, [0, 2, 1, 3]]
    boxes = np.column_stack([rng.uniform(-4, 4, (300, 2)), rng.uniform(0.05, 1.5, (300, 2)),
                             rng.uniform(0, 2 * math.pi, 300)])
    for _ in range(50):
        ax, ay, bx, by = rng.uniform(-5, 5, 4)
        assert np.array_equal(cython_kernels.segment_hits_aabb(ax, ay, bx, by, rects),
                              py.segment_hits_aabb(ax, ay, bx, by, rects))
        assert np.array_equal(cython_kernels.segment_hits_obb(ax, ay, bx, by, boxes),
                              py.segment_hits_obb(ax, ay, bx, by, boxes))
    centers = rng.uniform(-3, 3, (60, 3))
    centers[3] = centers[1]
    assert np.array_equal(cython_kernels.pairwise_features(centers), py.pairwise_features(centers))
    for dx, dy in rng.uniform(-3, 3, (100, 2)):
        assert cython_kernels.ccw_deg(dx, dy) == py.ccw_deg(dx, dy)
