"""Screw and Plücker-line geometry on SE(3).

A screw axis is stored in factored form ``(l_hat, m_hat, m_norm)`` so that
``(l_hat, m_hat)`` is a point of the Stiefel manifold V(2, 3) and ``m_norm`` a
nonnegative scalar. Configurations ``(theta, d)`` are kept in the canonical
ranges ``theta in [0, 2*pi)`` and ``d >= 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

TWO_PI = 2.0 * math.pi

# Numerical thresholds (stability, not model parameters).
ANGLE_EPS = 1e-7
TRANSLATION_EPS = 1e-9
INVARIANT_TOL = 1e-9
AXIS_AGREEMENT_TOL = 1e-6


class InconsistentAxis(ValueError):
    """Per-step screw axes of a sequence disagree (multi-DoF or corrupted input)."""


def skew(v) -> np.ndarray:
    """Skew-symmetric matrix ``[v]_x`` with ``[v]_x @ w == cross(v, w)``."""
    v = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def orthogonal_unit(l_hat) -> np.ndarray:
    """Deterministic unit vector orthogonal to ``l_hat``.

    Gram-Schmidt against the standard basis vector least aligned with ``l_hat``.
    """
    l_hat = np.asarray(l_hat, dtype=float)
    e = np.zeros(3)
    e[int(np.argmin(np.abs(l_hat)))] = 1.0
    v = e - np.dot(e, l_hat) * l_hat
    return v / np.linalg.norm(v)


def rodrigues(axis, angle: float) -> np.ndarray:
    K = skew(axis)
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


@dataclass(frozen=True)
class PluckerLine:
    """Line with unit direction ``l_hat`` and moment ``m = p x l_hat``."""

    l_hat: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "l_hat", np.asarray(self.l_hat, dtype=float).reshape(3))
        object.__setattr__(self, "m", np.asarray(self.m, dtype=float).reshape(3))

    @classmethod
    def from_point_direction(cls, point, direction) -> "PluckerLine":
        l_hat = np.asarray(direction, dtype=float)
        l_hat = l_hat / np.linalg.norm(l_hat)
        return cls(l_hat, np.cross(np.asarray(point, dtype=float), l_hat))

    @property
    def closest_point(self) -> np.ndarray:
        """Point of the line closest to the origin."""
        return np.cross(self.l_hat, self.m)

    def is_valid(self, tol: float = INVARIANT_TOL) -> bool:
        return (abs(np.linalg.norm(self.l_hat) - 1.0) <= tol
                and abs(np.dot(self.l_hat, self.m)) <= tol)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.l_hat, self.m])

    def factored(self) -> "ScrewAxis":
        return ScrewAxis.from_moment(self.l_hat, self.m)


@dataclass(frozen=True)
class ScrewAxis:
    """Screw axis ``(l_hat, m_hat, m_norm)``; ``[l_hat, m_hat]`` lies on V(2, 3)."""

    l_hat: np.ndarray
    m_hat: np.ndarray
    m_norm: float

    def __post_init__(self):
        object.__setattr__(self, "l_hat", np.asarray(self.l_hat, dtype=float).reshape(3))
        object.__setattr__(self, "m_hat", np.asarray(self.m_hat, dtype=float).reshape(3))
        object.__setattr__(self, "m_norm", float(self.m_norm))

    @classmethod
    def from_moment(cls, l_hat, m, tol: float = TRANSLATION_EPS) -> "ScrewAxis":
        l_hat = np.asarray(l_hat, dtype=float)
        l_hat = l_hat / np.linalg.norm(l_hat)
        m = np.asarray(m, dtype=float)
        m = m - np.dot(m, l_hat) * l_hat
        norm = float(np.linalg.norm(m))
        if norm <= tol:
            return cls(l_hat, orthogonal_unit(l_hat), 0.0)
        return cls(l_hat, m / norm, norm)

    @classmethod
    def from_point_direction(cls, point, direction) -> "ScrewAxis":
        return PluckerLine.from_point_direction(point, direction).factored()

    @property
    def m(self) -> np.ndarray:
        return self.m_norm * self.m_hat

    @property
    def point(self) -> np.ndarray:
        """Point on the axis closest to the origin."""
        return np.cross(self.l_hat, self.m)

    @property
    def stiefel(self) -> np.ndarray:
        """The 3x2 matrix ``[l_hat, m_hat]``."""
        return np.column_stack([self.l_hat, self.m_hat])

    def line(self) -> PluckerLine:
        return PluckerLine(self.l_hat, self.m)

    def flipped(self) -> "ScrewAxis":
        return ScrewAxis(-self.l_hat, -self.m_hat, self.m_norm)

    def is_valid(self, tol: float = INVARIANT_TOL) -> bool:
        X = self.stiefel
        return (self.m_norm >= 0.0 and np.all(np.isfinite(X))
                and np.abs(X.T @ X - np.eye(2)).max() <= tol)

    def allclose(self, other: "ScrewAxis", atol: float = AXIS_AGREEMENT_TOL) -> bool:
        return (np.allclose(self.l_hat, other.l_hat, atol=atol)
                and np.allclose(self.m, other.m, atol=atol))


@dataclass(frozen=True)
class Configuration:
    """Rotation ``theta`` (rad) about and displacement ``d`` (m) along an axis."""

    theta: float
    d: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "d", float(self.d))

    @property
    def pitch(self) -> float:
        if self.theta <= 0.0:
            raise ValueError("pitch is undefined for theta == 0")
        return self.d / self.theta

    def is_canonical(self) -> bool:
        return 0.0 <= self.theta < TWO_PI and self.d >= 0.0


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, T) -> "RigidTransform":
        T = np.asarray(T, dtype=float)
        return cls(T[:3, :3], T[:3, 3])

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation + self.translation)

    def inverse(self) -> "RigidTransform":
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def apply(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    def is_valid(self, tol: float = INVARIANT_TOL) -> bool:
        R = self.rotation
        return (np.abs(R.T @ R - np.eye(3)).max() <= tol
                and abs(np.linalg.det(R) - 1.0) <= tol)


class ScrewExtraction(NamedTuple):
    axis: ScrewAxis
    config: Configuration
    degenerate: bool


def wrap_angle(theta: float) -> float:
    """Wrap to ``[0, 2*pi)``."""
    w = math.fmod(theta, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    return 0.0 if w >= TWO_PI else w


def screw_to_transform(axis: ScrewAxis, config: Configuration) -> RigidTransform:
    """Rigid transform of rotating ``theta`` about and sliding ``d`` along ``axis``."""
    R = rodrigues(axis.l_hat, config.theta)
    p = axis.point
    t = (np.eye(3) - R) @ p + config.d * axis.l_hat
    return RigidTransform(R, t)


def _rotation_log(R: np.ndarray) -> tuple[np.ndarray, float]:
    """Axis and angle in ``[0, pi]`` of a rotation matrix."""
    rotvec = Rotation.from_matrix(R).as_rotvec()
    theta = float(np.linalg.norm(rotvec))
    if theta < ANGLE_EPS:
        return np.array([0.0, 0.0, 1.0]), 0.0
    return rotvec / theta, theta


def transform_to_screw(T: RigidTransform) -> ScrewExtraction:
    """Extract the canonical screw ``(axis, (theta, d))`` generating ``T``.

    Pure translations get the zero-moment axis along the translation. For the
    identity, the axis is undefined: a default axis is returned and the
    ``degenerate`` flag is set.
    """
    R, t = T.rotation, T.translation
    l_hat, theta = _rotation_log(R)
    if theta < ANGLE_EPS:
        dist = float(np.linalg.norm(t))
        if dist < TRANSLATION_EPS:
            z = np.array([0.0, 0.0, 1.0])
            return ScrewExtraction(ScrewAxis(z, orthogonal_unit(z), 0.0),
                                   Configuration(0.0, 0.0), True)
        l_hat = t / dist
        return ScrewExtraction(ScrewAxis(l_hat, orthogonal_unit(l_hat), 0.0),
                               Configuration(0.0, dist), False)
    d = float(np.dot(l_hat, t))
    if abs(d) <= TRANSLATION_EPS:
        d = 0.0  # revolute: keep the rotation-log direction, theta in (0, pi]
    if d < 0.0:
        # same motion as a rotation of 2*pi - theta about -l_hat
        l_hat, theta, d = -l_hat, TWO_PI - theta, -d
    # (I - R) p = t - d l_hat has a unique solution with p orthogonal to l_hat
    A = np.eye(3) - R + np.outer(l_hat, l_hat)
    p = np.linalg.solve(A, t - d * l_hat)
    axis = ScrewAxis.from_moment(l_hat, np.cross(p, l_hat))
    return ScrewExtraction(axis, Configuration(wrap_angle(theta), d), False)


def line_motion_matrix(R, t) -> np.ndarray:
    """6x6 operator mapping ``(l_hat, m)`` of a line from frame A into frame B.

    ``R, t`` give the pose of frame A in frame B (``x_B = R x_A + t``).
    """
    R = np.asarray(R, dtype=float)
    D = np.zeros((6, 6))
    D[:3, :3] = R
    D[3:, :3] = skew(t) @ R
    D[3:, 3:] = R
    return D


def transform_line(line: PluckerLine, T: RigidTransform) -> PluckerLine:
    v = line_motion_matrix(T.rotation, T.translation) @ line.as_vector()
    return PluckerLine(v[:3], v[3:])


def transform_axis(axis: ScrewAxis, T: RigidTransform) -> ScrewAxis:
    """Express ``axis`` (given in frame A) in frame B, where ``T`` is A's pose in B."""
    v = line_motion_matrix(T.rotation, T.translation) @ np.concatenate([axis.l_hat, axis.m])
    return ScrewAxis.from_moment(v[:3], v[3:])


def canonicalize(axis: ScrewAxis, config: Configuration) -> tuple[ScrewAxis, Configuration]:
    """Map ``(axis, config)`` into ``theta in [0, 2*pi)``, ``d >= 0``."""
    theta, d = config.theta, config.d
    if d < 0.0:
        axis, theta, d = axis.flipped(), -theta, -d
    return axis, Configuration(wrap_angle(theta), d)


def _flip_config(config: Configuration) -> Configuration:
    """The same motion described about the reversed axis (before canonicalization)."""
    return Configuration(wrap_angle(-config.theta), -config.d)


def relative_screw_sequence(base_pose: RigidTransform,
                            moving_poses: Sequence[RigidTransform],
                            tol: float = AXIS_AGREEMENT_TOL) -> tuple[ScrewAxis, list[Configuration]]:
    """Common screw axis (camera frame) and configurations of a pose sequence.

    Each displacement is taken between the moving part's first pose and pose
    ``k`` relative to the base, expressed in the frame of the first pose, and
    the common axis is then moved to the camera frame with the line motion
    matrix. All poses are camera-frame poses.

    Raises
    ------
    InconsistentAxis
        If the per-step axes disagree by more than ``tol``.
    """
    if len(moving_poses) < 2:
        raise ValueError("need at least two moving poses")
    base_inv = base_pose.inverse()
    rel = [base_inv @ P for P in moving_poses]
    first = rel[0]
    first_inv = first.inverse()
    steps = [transform_to_screw(first_inv @ P) for P in rel[1:]]

    reference = next((s.axis for s in steps if not s.degenerate), None)
    configs: list[Configuration] = []
    if reference is None:
        reference = steps[0].axis
        configs = [Configuration(0.0, 0.0) for _ in steps]
    else:
        prismatic = reference.m_norm == 0.0 and all(
            s.degenerate or s.config.theta == 0.0 for s in steps)
        for s in steps:
            if s.degenerate:
                configs.append(Configuration(0.0, 0.0))
                continue
            axis, cfg = s.axis, s.config
            if np.dot(axis.l_hat, reference.l_hat) < 0.0:
                axis, cfg = axis.flipped(), _flip_config(cfg)
            same_line = np.allclose(axis.l_hat, reference.l_hat, atol=tol) and (
                prismatic or np.allclose(axis.m, reference.m, atol=tol))
            if not same_line or cfg.d < -tol:
                raise InconsistentAxis(
                    f"step axis {axis.l_hat}, {axis.m} disagrees with {reference.l_hat}, {reference.m}")
            configs.append(Configuration(cfg.theta, max(cfg.d, 0.0)))

    # reference is expressed in the frame of the first moving pose
    camera_axis = transform_axis(reference, base_pose @ first)
    if reference.m_norm == 0.0 and all(c.theta == 0.0 for c in configs):
        # pure translation: the zero-moment member of the parallel family
        camera_axis = ScrewAxis(camera_axis.l_hat, orthogonal_unit(camera_axis.l_hat), 0.0)
    return camera_axis, configs
