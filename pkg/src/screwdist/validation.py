"""Input validation and conversion between label objects and flat arrays.

A label is ``(ScrewAxis, [Configuration, ...])``. The flat row layout is
``[l_hat (3), m_hat (3), m_norm, theta_1..theta_n, d_1..d_n]``.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .geometry import TWO_PI, Configuration, ScrewAxis

LABEL_TOL = 1e-6


class InvalidLabel(ValueError):
    """A label violates the screw-axis or configuration invariants."""


Label = tuple  # (ScrewAxis, list[Configuration])


def label_width(n_configs: int) -> int:
    return 7 + 2 * n_configs


def n_configs_from_width(width: int) -> int:
    if width < 9 or (width - 7) % 2:
        raise InvalidLabel(f"label width {width} is not 7 + 2n with n >= 1")
    return (width - 7) // 2


def label_to_row(label) -> np.ndarray:
    axis, configs = _unpack(label)
    return np.concatenate([axis.l_hat, axis.m_hat, [axis.m_norm],
                           [c.theta for c in configs], [c.d for c in configs]])


def labels_to_array(labels: Iterable) -> np.ndarray:
    rows = [label_to_row(lab) for lab in labels]
    if not rows:
        raise InvalidLabel("empty dataset")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidLabel(f"inconsistent configuration counts: widths {sorted(widths)}")
    return np.vstack(rows)


def row_to_label(row) -> tuple[ScrewAxis, list[Configuration]]:
    row = np.asarray(row, dtype=float)
    k = n_configs_from_width(len(row))
    axis = ScrewAxis(row[0:3], row[3:6], row[6])
    configs = [Configuration(t, d) for t, d in zip(row[7:7 + k], row[7 + k:7 + 2 * k])]
    return axis, configs


def array_to_labels(X) -> list[tuple[ScrewAxis, list[Configuration]]]:
    return [row_to_label(r) for r in np.atleast_2d(X)]


def _unpack(label):
    if hasattr(label, "axis") and hasattr(label, "configs"):
        return label.axis, list(label.configs)
    axis, configs = label
    return axis, list(configs)


def _is_numeric(X) -> bool:
    if isinstance(X, np.ndarray):
        return True
    if not isinstance(X, Sequence) or not X:
        return False
    first = X[0]
    if hasattr(first, "axis") or (isinstance(first, tuple) and first and isinstance(first[0], ScrewAxis)):
        return False
    return True


def check_label_array(X, n_configs: int | None = None, tol: float = LABEL_TOL,
                      check_invariants: bool = True) -> np.ndarray:
    """Validate labels and return them as a float array of shape ``(N, 7 + 2n)``.

    Accepts an array or a sequence of labels / labeled sequences.

    Raises
    ------
    InvalidLabel
        Wrong shape, non-finite entries, or invariant violations
        (``[l_hat, m_hat]`` not orthonormal, negative ``m_norm``, ``d``,
        or ``theta`` outside ``[0, 2 pi)``).
    """
    arr = np.asarray(X, dtype=float) if _is_numeric(X) else labels_to_array(X)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise InvalidLabel(f"expected a non-empty 2-D label array, got shape {arr.shape}")
    k = n_configs_from_width(arr.shape[1])
    if n_configs is not None and k != n_configs:
        raise InvalidLabel(f"labels carry {k} configurations, expected {n_configs}")
    if not np.all(np.isfinite(arr)):
        raise InvalidLabel("labels contain non-finite values")
    if check_invariants:
        L, Mh = arr[:, 0:3], arr[:, 3:6]
        gram = np.stack([np.sum(L * L, 1) - 1.0, np.sum(Mh * Mh, 1) - 1.0, np.sum(L * Mh, 1)], 1)
        bad = np.abs(gram).max(axis=1) > tol
        if bad.any():
            raise InvalidLabel(f"{int(bad.sum())} labels have [l_hat, m_hat] off V(2, 3)")
        if (arr[:, 6] < 0).any():
            raise InvalidLabel("negative m_norm")
        theta, d = arr[:, 7:7 + k], arr[:, 7 + k:]
        if (theta < 0).any() or (theta >= TWO_PI).any():
            raise InvalidLabel("theta outside [0, 2*pi)")
        if (d < 0).any():
            raise InvalidLabel("negative displacement")
    return arr


def split_label_array(X: np.ndarray):
    """``(stiefel (N, 3, 2), m_norm (N,), theta (N, n), d (N, n))``."""
    k = n_configs_from_width(X.shape[1])
    stiefel = np.stack([X[:, 0:3], X[:, 3:6]], axis=2)
    return stiefel, X[:, 6], X[:, 7:7 + k], X[:, 7 + k:]
