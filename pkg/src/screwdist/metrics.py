"""Evaluation metrics between predicted and ground-truth screw labels.

MAAD compares each label component separately; the screw loss compares the
axes as lines (angle and common-perpendicular distance) and the
configurations as motions.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import ScrewAxis

METRIC_FIELDS = (
    "maad_l", "maad_mhat", "maad_mnorm", "maad_theta", "maad_d",
    "screw_ang", "screw_dist", "screw_theta_err", "screw_d_err",
)
CSV_COLUMNS = ("id",) + METRIC_FIELDS
SCHEMA_VERSION = 1
D_ERR_REFERENCE = "ground-truth axis point closest to the camera origin"
PARALLEL_EPS = 1e-10


def angle_between(u, v) -> float:
    """Angle in ``[0, pi]`` between two nonzero vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    c = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.acos(min(1.0, max(-1.0, c)))


def circular_difference(a, b):
    """Absolute angle difference on the circle, in ``[0, pi]``."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % (2.0 * math.pi)
    return np.minimum(d, 2.0 * math.pi - d)


def anchor_point(axis: ScrewAxis) -> np.ndarray:
    """``l x m / |l|^2``; the point closest to the origin for a valid axis."""
    return np.cross(axis.l_hat, axis.m) / float(np.dot(axis.l_hat, axis.l_hat))


def line_distance(p1, u1, p2, u2) -> float:
    """Length of the common perpendicular between lines ``p_i + t u_i``."""
    p1, u1, p2, u2 = (np.asarray(a, dtype=float) for a in (p1, u1, p2, u2))
    w = p2 - p1
    n = np.cross(u1, u2)
    nn = float(np.linalg.norm(n))
    if nn <= PARALLEL_EPS * float(np.linalg.norm(u1) * np.linalg.norm(u2)):
        return float(np.linalg.norm(np.cross(w, u1)) / np.linalg.norm(u1))
    return abs(float(np.dot(w, n))) / nn


def _split(label):
    if hasattr(label, "axis") and hasattr(label, "configs"):
        return label.axis, list(label.configs)
    axis, configs = label
    return axis, list(configs)


def _check_lengths(pc, tc):
    if len(pc) != len(tc):
        raise ValueError(f"configuration counts differ: {len(pc)} vs {len(tc)}")


def maad(pred, truth) -> dict:
    """Per-component absolute deviations; angular terms are geodesic angles."""
    pa, pc = _split(pred)
    ta, tc = _split(truth)
    _check_lengths(pc, tc)
    th_p = np.array([c.theta for c in pc])
    th_t = np.array([c.theta for c in tc])
    d_p = np.array([c.d for c in pc])
    d_t = np.array([c.d for c in tc])
    return {
        "maad_l": angle_between(pa.l_hat, ta.l_hat),
        "maad_mhat": angle_between(pa.m_hat, ta.m_hat),
        "maad_mnorm": abs(pa.m_norm - ta.m_norm),
        "maad_theta": float(np.mean(circular_difference(th_p, th_t))),
        "maad_d": float(np.mean(np.abs(d_p - d_t))),
    }


def screw_loss(pred, truth) -> dict:
    """Axis angle, axis distance and configuration errors.

    The displacement error moves the ground-truth axis point closest to the
    origin by ``d`` along each axis and measures the gap between the two
    results.
    """
    pa, pc = _split(pred)
    ta, tc = _split(truth)
    _check_lengths(pc, tc)
    ref = anchor_point(ta)
    lp = pa.l_hat / np.linalg.norm(pa.l_hat)
    d_err = [float(np.linalg.norm((ref + p.d * lp) - (ref + t.d * ta.l_hat))) for p, t in zip(pc, tc)]
    th_err = circular_difference([c.theta for c in pc], [c.theta for c in tc])
    return {
        "screw_ang": angle_between(pa.l_hat, ta.l_hat),
        "screw_dist": line_distance(anchor_point(pa), pa.l_hat, ref, ta.l_hat),
        "screw_theta_err": float(np.mean(th_err)),
        "screw_d_err": float(np.mean(d_err)),
    }


@dataclass
class MetricReport:
    ids: list
    rows: np.ndarray  # (N, len(METRIC_FIELDS))
    metadata: dict = field(default_factory=dict)

    @property
    def aggregate(self) -> dict:
        return dict(zip(METRIC_FIELDS, map(float, self.rows.mean(axis=0))))

    def per_sequence(self) -> list[dict]:
        return [dict(zip(METRIC_FIELDS, map(float, r)), id=i) for i, r in zip(self.ids, self.rows)]

    def __getitem__(self, name: str) -> float:
        return self.aggregate[name]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "fields": list(METRIC_FIELDS),
            "aggregate": self.aggregate,
            "per_sequence": self.per_sequence(),
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        """One row per sequence, then a ``mean`` row; columns are :data:`CSV_COLUMNS`."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for i, r in zip(self.ids, self.rows):
            w.writerow([i, *map(repr, map(float, r))])
        w.writerow(["mean", *map(repr, map(float, self.rows.mean(axis=0)))])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        rows = np.array([[r[f] for f in METRIC_FIELDS] for r in d["per_sequence"]], dtype=float)
        return cls([r["id"] for r in d["per_sequence"]], rows, d.get("metadata", {}))

    @classmethod
    def from_csv(cls, text: str) -> "MetricReport":
        reader = list(csv.reader(io.StringIO(text)))
        if tuple(reader[0]) != CSV_COLUMNS:
            raise ValueError("unexpected CSV header")
        body = [r for r in reader[1:] if r[0] != "mean"]
        return cls([r[0] for r in body], np.array([[float(x) for x in r[1:]] for r in body]))


def evaluate(predictions, dataset: Sequence, against: str = "clean") -> MetricReport:
    """Metrics of ``predictions`` against a dataset of labels.

    ``predictions`` is either one prediction per sequence, a single
    ``(axis, configs)`` pair, or an object with a ``prediction()`` method
    (a fit report), whose point estimate is used for every sequence.
    ``against="clean"`` compares with the noise-free ground truth when the
    sequences carry one; ``"label"`` uses the stored labels.
    """
    if against not in ("clean", "label"):
        raise ValueError("against must be 'clean' or 'label'")
    dataset = list(dataset)
    truths, ids = [], []
    for i, s in enumerate(dataset):
        if hasattr(s, "truth"):
            truths.append(s.truth if against == "clean" else s.label)
            ids.append(s.id or str(i))
        else:
            truths.append(_split(s))
            ids.append(str(i))
    if hasattr(predictions, "prediction"):
        preds = [predictions.prediction()] * len(truths)
    elif isinstance(predictions, tuple) and len(predictions) == 2 and isinstance(predictions[0], ScrewAxis):
        preds = [predictions] * len(truths)
    else:
        preds = list(predictions)
    if len(preds) != len(truths):
        raise ValueError(f"{len(preds)} predictions for {len(truths)} sequences")
    rows = np.array([[*maad(p, t).values(), *screw_loss(p, t).values()] for p, t in zip(preds, truths)])
    return MetricReport(ids, rows.reshape(len(truths), len(METRIC_FIELDS)),
                        {"d_err_reference": D_ERR_REFERENCE, "against": against})
