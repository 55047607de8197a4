"""Synthetic articulation labels with camera-frame ground truth and controlled noise.

A scene has an object base at ``camera_pose`` (object frame to camera frame)
and a moving part whose pose after configuration ``q`` is
``camera_pose @ S(q)``, where ``S(q)`` is the screw displacement about the
object-local axis. The label is the camera-frame axis plus the
configurations of poses ``2..n`` relative to pose 1.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import special_ortho_group

from .distributions import (
    MatrixVMFParams,
    TruncatedNormalParams,
    mvmf_sample,
    truncnorm_sample,
)
from .geometry import (
    TWO_PI,
    Configuration,
    RigidTransform,
    ScrewAxis,
    orthogonal_unit,
    rodrigues,
    screw_to_transform,
    transform_axis,
    wrap_angle,
)
from .validation import labels_to_array

CATEGORIES = ("rigid", "revolute", "prismatic", "helical")
DATASET_VERSION = 1
DEFAULT_N_CONFIGS = 15


@dataclass(frozen=True)
class Frustum:
    """Axis-aligned box (camera frame, meters) from which axis anchors are drawn."""

    low: tuple = (-0.5, -0.5, 1.0)
    high: tuple = (0.5, 0.5, 2.5)

    def __post_init__(self):
        if np.any(np.asarray(self.high) <= np.asarray(self.low)):
            raise ValueError("frustum bounds must satisfy high > low")

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        return np.all((p >= self.low) & (p <= self.high), axis=1)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high)


@dataclass(frozen=True)
class ArticulationSpec:
    """One articulated scene; ``schedule`` holds the ``n - 1`` relative configurations."""

    category: str
    local_axis: ScrewAxis
    schedule: tuple
    camera_pose: RigidTransform = field(default_factory=RigidTransform.identity)
    pitch: float = 0.0

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        object.__setattr__(self, "schedule", tuple(self.schedule))
        if not self.schedule:
            raise ValueError("schedule needs at least one configuration")
        if self.category != "helical" and self.pitch != 0.0:
            raise ValueError(f"pitch is only meaningful for helical joints, got {self.pitch}")
        for q in self.schedule:
            if not q.is_canonical():
                raise ValueError(f"configuration {q} outside canonical ranges")
            if self.category == "rigid" and (q.theta != 0.0 or q.d != 0.0):
                raise ValueError("rigid schedule must be all zero")
            if self.category == "revolute" and q.d != 0.0:
                raise ValueError("revolute schedule must have d = 0")
            if self.category == "prismatic" and q.theta != 0.0:
                raise ValueError("prismatic schedule must have theta = 0")
        if self.category == "helical" and not self.pitch > 0.0:
            raise ValueError("helical joints need a positive pitch")

    @property
    def n_configs(self) -> int:
        return len(self.schedule)


@dataclass(frozen=True)
class NoiseSpec:
    """Label perturbations.

    ``axis_lambda`` sets matrix-vMF concentrations ``(lambda1, lambda2)``
    around the clean ``[l_hat, m_hat]``; ``scalar_precision`` sets the
    truncated-normal precisions of ``(|m|, theta, d)``. ``bisector_spread``
    (radians) rotates ``l_hat`` and ``m_hat`` together about their bisector
    by a normal angle, which correlates the two directions' errors.
    """

    axis_lambda: tuple | None = None
    scalar_precision: tuple | None = None
    bisector_spread: float | None = None

    def __post_init__(self):
        if self.axis_lambda is not None:
            lam = tuple(float(x) for x in self.axis_lambda)
            if len(lam) != 2 or min(lam) <= 0:
                raise ValueError("axis_lambda needs two positive concentrations")
            object.__setattr__(self, "axis_lambda", tuple(sorted(lam, reverse=True)))
        if self.scalar_precision is not None:
            b = tuple(float(x) for x in self.scalar_precision)
            if len(b) != 3 or min(b) <= 0:
                raise ValueError("scalar_precision needs three positive precisions")
            object.__setattr__(self, "scalar_precision", b)
        if self.bisector_spread is not None and not self.bisector_spread > 0:
            raise ValueError("bisector_spread must be positive")

    @property
    def is_none(self) -> bool:
        return self.axis_lambda is None and self.scalar_precision is None and self.bisector_spread is None

    def to_dict(self) -> dict:
        return {"axis_lambda": None if self.axis_lambda is None else list(self.axis_lambda),
                "scalar_precision": None if self.scalar_precision is None else list(self.scalar_precision),
                "bisector_spread": self.bisector_spread}

    @classmethod
    def from_dict(cls, d: dict | None) -> "NoiseSpec":
        return cls(**(d or {}))


@dataclass(frozen=True)
class LabeledSequence:
    """Camera-frame label of one scene, optionally noised; ``clean`` keeps the ground truth."""

    axis: ScrewAxis
    configs: tuple
    category: str = "revolute"
    id: str = ""
    seed: int | None = None
    noise: NoiseSpec | None = None
    clean: tuple | None = None  # (ScrewAxis, tuple of Configuration)
    spec: ArticulationSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "configs", tuple(self.configs))

    @property
    def n_configs(self) -> int:
        return len(self.configs)

    @property
    def label(self) -> tuple:
        return self.axis, list(self.configs)

    @property
    def truth(self) -> tuple:
        """Clean label (identical to ``label`` without noise)."""
        if self.clean is None:
            return self.label
        return self.clean[0], list(self.clean[1])


# ---------------------------------------------------------------------------
# scenes


def scene_poses(spec: ArticulationSpec) -> tuple[RigidTransform, list[RigidTransform]]:
    """Base pose and the moving part's ``n`` camera-frame poses."""
    base = spec.camera_pose
    poses = [base]
    for q in spec.schedule:
        poses.append(base @ screw_to_transform(spec.local_axis, q))
    return base, poses


def _camera_label_axis(spec: ArticulationSpec) -> ScrewAxis:
    if spec.category == "rigid":
        # no motion: the z-axis of the part's first pose, zero moment
        l_hat = spec.camera_pose.rotation[:, 2]
        return ScrewAxis(l_hat, orthogonal_unit(l_hat), 0.0)
    axis = transform_axis(spec.local_axis, spec.camera_pose)
    if spec.category == "prismatic":
        return ScrewAxis(axis.l_hat, orthogonal_unit(axis.l_hat), 0.0)
    return axis


def generate_sequence(spec: ArticulationSpec, rng: np.random.Generator | None = None,
                      id: str = "", seed: int | None = None) -> LabeledSequence:
    """Ground-truth camera-frame label of ``spec``; no randomness is consumed."""
    axis = _camera_label_axis(spec)
    return LabeledSequence(axis, spec.schedule, spec.category, id, seed, None, None, spec)


def reconstruct_poses(seq: LabeledSequence, first_pose: RigidTransform) -> list[RigidTransform]:
    """Camera-frame poses implied by the label, given the first moving pose."""
    out = [first_pose]
    for q in seq.configs:
        out.append(screw_to_transform(seq.axis, q) @ first_pose)
    return out


# ---------------------------------------------------------------------------
# noise


def _rotate_about_bisector(stiefel: np.ndarray, angle: float) -> np.ndarray:
    b = stiefel[:, 0] + stiefel[:, 1]
    b /= np.linalg.norm(b)
    return rodrigues(b, angle) @ stiefel


def inject_noise(seq: LabeledSequence, noise: NoiseSpec | None, rng: np.random.Generator) -> LabeledSequence:
    """Perturb a label; canonical ranges hold afterwards. ``None`` or empty noise is the identity."""
    if noise is None or noise.is_none:
        return seq
    X = seq.axis.stiefel
    m_norm = seq.axis.m_norm
    configs = list(seq.configs)
    if noise.axis_lambda is not None:
        X = mvmf_sample(MatrixVMFParams.from_mode(X, *noise.axis_lambda), rng, 1)[0]
    if noise.bisector_spread is not None:
        X = _rotate_about_bisector(X, rng.normal(0.0, noise.bisector_spread))
    if noise.scalar_precision is not None:
        b_m, b_t, b_d = noise.scalar_precision
        m_norm = float(truncnorm_sample(TruncatedNormalParams(m_norm, b_m), rng))
        configs = [
            Configuration(
                wrap_angle(float(truncnorm_sample(TruncatedNormalParams(q.theta, b_t), rng))),
                float(truncnorm_sample(TruncatedNormalParams(q.d, b_d), rng)))
            for q in configs
        ]
    clean = seq.clean if seq.clean is not None else (seq.axis, tuple(seq.configs))
    axis = ScrewAxis(X[:, 0], X[:, 1], m_norm)
    return replace(seq, axis=axis, configs=tuple(configs), noise=noise, clean=clean)


# ---------------------------------------------------------------------------
# datasets


def equally_spaced_schedule(category: str, total: float, n_configs: int, pitch: float = 0.0,
                            rng: np.random.Generator | None = None, max_skip: int = 0) -> tuple:
    """Monotone schedule reaching ``total`` (rad, or m for prismatic) after ``n_configs`` steps.

    With ``max_skip > 0`` each step advances by a random 1..1+max_skip frames
    of the equally spaced grid, dropping the skipped frames.
    """
    if max_skip and rng is None:
        raise ValueError("frame skipping needs an rng")
    steps = np.ones(n_configs) if not max_skip else rng.integers(1, max_skip + 2, n_configs)
    frames = np.cumsum(steps)
    q = total * frames / frames[-1]
    if category == "rigid":
        return tuple(Configuration(0.0, 0.0) for _ in q)
    if category == "prismatic":
        return tuple(Configuration(0.0, v) for v in q)
    if category == "revolute":
        return tuple(Configuration(wrap_angle(v), 0.0) for v in q)
    return tuple(Configuration(wrap_angle(v), pitch * v) for v in q)


@dataclass(frozen=True)
class SceneSampler:
    """Ranges for randomized scenes.

    Revolute and helical totals stay below pi so the extracted rotation
    direction is unambiguous. The anchor of the axis (the camera-frame
    position of the object origin) is uniform in ``frustum`` and its
    direction uniform on the sphere.
    """

    theta_total: tuple = (0.5, 2.5)
    d_total: tuple = (0.1, 0.5)
    pitch: tuple = (0.02, 0.1)
    n_configs: int = DEFAULT_N_CONFIGS
    max_skip: int = 0
    frustum: Frustum = field(default_factory=Frustum)
    camera_pose: RigidTransform | None = None

    def sample(self, category: str, rng: np.random.Generator) -> ArticulationSpec:
        """Random scene; with ``camera_pose`` set only the schedule is random."""
        if category not in CATEGORIES:
            raise ValueError(f"unknown category {category!r}")
        if self.camera_pose is None:
            R = special_ortho_group.rvs(3, random_state=rng)
            pose = RigidTransform(R, self.frustum.sample(rng))
        else:
            pose = self.camera_pose
        local = ScrewAxis([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], 0.0)
        pitch = float(rng.uniform(*self.pitch)) if category == "helical" else 0.0
        total = rng.uniform(*(self.d_total if category == "prismatic" else self.theta_total))
        schedule = equally_spaced_schedule(category, total, self.n_configs, pitch, rng, self.max_skip)
        return ArticulationSpec(category, local, schedule, pose, pitch)


def generate_dataset(template: Sequence, count: int, noise: NoiseSpec | None = None, seed: int = 0,
                     sampler: SceneSampler | None = None) -> list[LabeledSequence]:
    """``count`` sequences cycling through ``template``.

    Template entries are category names (a fresh scene is drawn per
    sequence, anchored uniformly in the frustum with a uniform orientation)
    or fixed :class:`ArticulationSpec` objects. Sequence ``i`` uses the
    random stream ``default_rng([seed, i])``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    template = [template] if isinstance(template, (str, ArticulationSpec)) else list(template)
    if not template:
        raise ValueError("empty template")
    sampler = sampler or SceneSampler()
    out = []
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        entry = template[i % len(template)]
        spec = sampler.sample(entry, rng) if isinstance(entry, str) else entry
        seq = generate_sequence(spec, id=f"{seed}-{i}", seed=seed)
        out.append(inject_noise(seq, noise, rng))
    return out


def dataset_array(dataset: Iterable[LabeledSequence], clean: bool = False) -> np.ndarray:
    """Stack labels into the flat label-array layout used by the estimators."""
    return labels_to_array(s.truth if clean else s.label for s in dataset)


# ---------------------------------------------------------------------------
# JSON Lines


def _axis_dict(axis: ScrewAxis) -> dict:
    return {"l": axis.l_hat.tolist(), "m_hat": axis.m_hat.tolist(), "m_norm": axis.m_norm}


def _axis_from(d: dict) -> ScrewAxis:
    return ScrewAxis(d["l"], d["m_hat"], d["m_norm"])


def _configs_list(configs) -> list:
    return [{"theta": q.theta, "d": q.d} for q in configs]


def _configs_from(items) -> tuple:
    return tuple(Configuration(c["theta"], c["d"]) for c in items)


def sequence_to_dict(seq: LabeledSequence) -> dict:
    d = {
        "version": DATASET_VERSION,
        "id": seq.id,
        "category": seq.category,
        "axis": _axis_dict(seq.axis),
        "configs": _configs_list(seq.configs),
        "noise": None if seq.noise is None else seq.noise.to_dict(),
        "seed": seq.seed,
    }
    if seq.clean is not None:
        d["clean"] = {"axis": _axis_dict(seq.clean[0]), "configs": _configs_list(seq.clean[1])}
    if seq.spec is not None:
        s = seq.spec
        d["scene"] = {"local_axis": _axis_dict(s.local_axis), "pitch": s.pitch,
                      "camera_pose": s.camera_pose.matrix().tolist(),
                      "schedule": _configs_list(s.schedule)}
    return d


def sequence_from_dict(d: dict) -> LabeledSequence:
    version = d.get("version")
    if version != DATASET_VERSION:
        raise ValueError(f"unsupported dataset version {version!r}")
    clean = None
    if d.get("clean") is not None:
        clean = (_axis_from(d["clean"]["axis"]), _configs_from(d["clean"]["configs"]))
    spec = None
    if d.get("scene") is not None:
        s = d["scene"]
        spec = ArticulationSpec(d["category"], _axis_from(s["local_axis"]), _configs_from(s["schedule"]),
                                RigidTransform.from_matrix(s["camera_pose"]), s["pitch"])
    noise = None if d.get("noise") is None else NoiseSpec.from_dict(d["noise"])
    return LabeledSequence(_axis_from(d["axis"]), _configs_from(d["configs"]), d["category"],
                           d.get("id", ""), d.get("seed"), noise, clean, spec)


def dumps_dataset(dataset: Iterable[LabeledSequence]) -> str:
    return "".join(json.dumps(sequence_to_dict(s), sort_keys=True) + "\n" for s in dataset)


def write_dataset(path, dataset: Iterable[LabeledSequence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_dataset(dataset))


def read_dataset(path) -> list[LabeledSequence]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(sequence_from_dict(json.loads(line)))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return out
