import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_axis, random_rotation, random_transform
from oracles import line_from_points, rotation_about, screw_by_conjugation
from screwdist.geometry import (
    ANGLE_EPS,
    Configuration,
    PluckerLine,
    RigidTransform,
    ScrewAxis,
    canonicalize,
    line_motion_matrix,
    orthogonal_unit,
    relative_screw_sequence,
    screw_to_transform,
    transform_axis,
    transform_line,
    transform_to_screw,
    wrap_angle,
)

seeds = st.integers(0, 2**32 - 1)


def test_zero_config_is_identity(rng):
    T = screw_to_transform(random_axis(rng), Configuration(0.0, 0.0))
    np.testing.assert_allclose(T.matrix(), np.eye(4), atol=1e-15)


def test_quarter_turn_about_z():
    z = np.array([0.0, 0.0, 1.0])
    T = screw_to_transform(ScrewAxis(z, orthogonal_unit(z), 0.0), Configuration(math.pi / 2, 0.0))
    np.testing.assert_allclose(T.rotation, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)
    np.testing.assert_allclose(T.translation, 0.0, atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_screw_matches_conjugation(seed):
    rng = np.random.default_rng(seed)
    point, u = rng.normal(size=3), rng.normal(size=3)
    u /= np.linalg.norm(u)
    theta, d = rng.uniform(0, 2 * math.pi), rng.uniform(0, 2)
    T = screw_to_transform(ScrewAxis.from_point_direction(point, u), Configuration(theta, d))
    np.testing.assert_allclose(T.matrix(), screw_by_conjugation(point, u, theta, d), atol=1e-12)


def test_identity_extraction_is_degenerate():
    ext = transform_to_screw(RigidTransform.identity())
    assert ext.degenerate
    assert ext.config == Configuration(0.0, 0.0)


def test_pure_translation_extraction():
    ext = transform_to_screw(RigidTransform(np.eye(3), [0, 0, 0.3]))
    assert not ext.degenerate
    np.testing.assert_allclose(ext.axis.l_hat, [0, 0, 1])
    assert ext.axis.m_norm == 0.0
    assert ext.config.theta == 0.0
    assert ext.config.d == pytest.approx(0.3)
    assert ext.axis.is_valid()


def test_negative_translation_flips_direction():
    ext = transform_to_screw(RigidTransform(np.eye(3), [0, 0, -0.3]))
    np.testing.assert_allclose(ext.axis.l_hat, [0, 0, -1])
    assert ext.config.d == pytest.approx(0.3)


@settings(max_examples=300, deadline=None)
@given(seeds)
def test_roundtrip_random_transform(seed):
    rng = np.random.default_rng(seed)
    T = random_transform(rng, scale=2.0)
    ext = transform_to_screw(T)
    assert ext.axis.is_valid()
    assert ext.config.is_canonical()
    np.testing.assert_allclose(screw_to_transform(ext.axis, ext.config).matrix(), T.matrix(), atol=1e-9)


@pytest.mark.parametrize("theta", [1e-6, 0.5, math.pi - 1e-6, math.pi, math.pi + 1e-5, 2 * math.pi - 1e-3])
def test_roundtrip_near_special_angles(theta, rng):
    axis = random_axis(rng)
    T = screw_to_transform(axis, Configuration(theta, 0.7))
    ext = transform_to_screw(T)
    np.testing.assert_allclose(screw_to_transform(ext.axis, ext.config).matrix(), T.matrix(), atol=1e-9)
    assert ext.config.is_canonical()


def test_extraction_recovers_generating_screw(rng):
    for _ in range(50):
        axis = random_axis(rng)
        cfg = Configuration(rng.uniform(0.1, 3.0), rng.uniform(0.0, 1.0))
        ext = transform_to_screw(screw_to_transform(axis, cfg))
        assert ext.axis.allclose(axis, atol=1e-9)
        assert ext.config.theta == pytest.approx(cfg.theta, abs=1e-9)
        assert ext.config.d == pytest.approx(cfg.d, abs=1e-9)


def test_line_motion_identity():
    np.testing.assert_array_equal(line_motion_matrix(np.eye(3), np.zeros(3)), np.eye(6))


def test_line_motion_translation_by_hand():
    line = PluckerLine([0, 0, 1], [0, 0, 0])
    out = transform_line(line, RigidTransform(np.eye(3), [1, 0, 0]))
    np.testing.assert_allclose(out.l_hat, [0, 0, 1])
    np.testing.assert_allclose(out.m, [0, -1, 0])


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_line_motion_matches_two_point_oracle(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=3), rng.normal(size=3)
    T = random_transform(rng)
    out = transform_line(PluckerLine(*line_from_points(a, b)), T)
    assert out.is_valid()
    u, m = line_from_points(T.apply(a), T.apply(b))
    np.testing.assert_allclose(out.l_hat, u, atol=1e-9)
    np.testing.assert_allclose(out.m, m, atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_line_motion_composition(seed):
    rng = np.random.default_rng(seed)
    T1, T2 = random_transform(rng), random_transform(rng)
    T = T2 @ T1
    D = line_motion_matrix(T2.rotation, T2.translation) @ line_motion_matrix(T1.rotation, T1.translation)
    np.testing.assert_allclose(D, line_motion_matrix(T.rotation, T.translation), atol=1e-9)


def test_canonicalize_idempotent(rng):
    for _ in range(100):
        axis = random_axis(rng)
        cfg = Configuration(rng.uniform(-10, 10), rng.uniform(-2, 2))
        a1, c1 = canonicalize(axis, cfg)
        assert c1.is_canonical()
        a2, c2 = canonicalize(a1, c1)
        assert a2.allclose(a1, atol=0) and c2 == c1
        # same motion before and after
        np.testing.assert_allclose(screw_to_transform(a1, c1).matrix(),
                                   screw_to_transform(axis, cfg).matrix(), atol=1e-9)


def test_wrap_angle_range():
    for t in [-1e-17, -2 * math.pi, 0.0, 2 * math.pi, 7.0, -7.0, 1e6]:
        w = wrap_angle(t)
        assert 0.0 <= w < 2 * math.pi
        assert math.cos(w) == pytest.approx(math.cos(t), abs=1e-9)


def test_orthogonal_unit_is_deterministic_and_orthogonal(rng):
    for _ in range(100):
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        v = orthogonal_unit(u)
        assert abs(u @ v) < 1e-12 and abs(np.linalg.norm(v) - 1) < 1e-12
        np.testing.assert_array_equal(v, orthogonal_unit(u))


def test_pitch_accessor():
    assert Configuration(2.0, 0.1).pitch == pytest.approx(0.05)
    with pytest.raises(ValueError):
        Configuration(0.0, 0.1).pitch


def _hinge_poses(base, hinge_point, hinge_dir, angles):
    axis = ScrewAxis.from_point_direction(hinge_point, hinge_dir)
    return axis, [base @ screw_to_transform(axis, Configuration(a, 0.0)) for a in angles]


def test_door_sequence():
    base = RigidTransform.identity()
    axis, poses = _hinge_poses(base, [0.4, 0.0, 1.5], [0, 1, 0], np.radians([0, 30, 60]))
    got, configs = relative_screw_sequence(base, poses)
    assert got.allclose(axis, atol=1e-9)
    np.testing.assert_allclose([c.theta for c in configs], [0.5236, 1.0472], atol=1e-4)
    np.testing.assert_allclose([c.d for c in configs], [0, 0], atol=1e-12)


def test_drawer_sequence():
    base = RigidTransform.identity()
    poses = [RigidTransform(np.eye(3), [0.1, 0.2, 1.0 + s]) for s in (0.0, 0.05, 0.10)]
    axis, configs = relative_screw_sequence(base, poses)
    np.testing.assert_allclose(axis.l_hat, [0, 0, 1], atol=1e-12)
    assert axis.m_norm == 0.0
    np.testing.assert_allclose([c.theta for c in configs], [0, 0])
    np.testing.assert_allclose([c.d for c in configs], [0.05, 0.10], atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_revolute_scene_in_camera_frame(seed):
    rng = np.random.default_rng(seed)
    camera = random_transform(rng)
    local = random_axis(rng, scale=0.3)
    angles = np.sort(rng.uniform(0.05, 2.5, size=4))
    poses = [camera @ screw_to_transform(local, Configuration(a, 0.0)) for a in np.r_[0.0, angles]]
    got, configs = relative_screw_sequence(camera, poses)
    assert got.allclose(transform_axis(local, camera), atol=1e-6)
    np.testing.assert_allclose([c.theta for c in configs], angles, atol=1e-9)


def test_rotation_helper_agrees_with_oracle(rng):
    from screwdist.geometry import rodrigues
    for _ in range(20):
        u = rng.normal(size=3)
        a = rng.uniform(-4, 4)
        np.testing.assert_allclose(rodrigues(u / np.linalg.norm(u), a), rotation_about(u, a), atol=1e-12)


def test_rigid_transform_inverse(rng):
    T = RigidTransform(random_rotation(rng), rng.normal(size=3))
    np.testing.assert_allclose((T @ T.inverse()).matrix(), np.eye(4), atol=1e-12)
    assert T.is_valid()
