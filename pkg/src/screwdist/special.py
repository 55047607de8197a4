"""Zonal polynomials and the hypergeometric function 0F1 of a 2x2 matrix argument.

Zonal polynomials are computed exactly (rational arithmetic) in the monomial
symmetric basis from the Jack (alpha = 2) recurrence, then normalized so that
``sum_{|nu| = n} C_nu(Y) = (tr Y)^n``. The 0F1 series used as the matrix
von Mises-Fisher normalizer is summed weight layer by weight layer.
"""
from __future__ import annotations

import itertools
import json
import math
import os
import warnings
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

DEFAULT_TRUNCATION = 25
LAMBDA_MAX = 50.0
CACHE_ENV_VAR = "SCREWDIST_ZONAL_CACHE"
CACHE_VERSION = 1

Partition = tuple  # non-increasing tuple of positive ints


class DivergenceWarning(RuntimeWarning):
    """The truncated series is not decreasing at the truncation order."""


def partitions(n: int, max_len: int | None = None) -> list[tuple[int, ...]]:
    """Partitions of ``n`` with at most ``max_len`` parts, reverse-lexicographic."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if max_len is None:
        max_len = n
    out: list[tuple[int, ...]] = []

    def rec(remaining, largest, prefix):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        if len(prefix) == max_len:
            return
        for part in range(min(remaining, largest), 0, -1):
            prefix.append(part)
            rec(remaining - part, part, prefix)
            prefix.pop()

    rec(n, n, [])
    return out


def rising_factorial(a, k: int):
    out = a * 0 + 1
    for i in range(k):
        out = out * (a + i)
    return out


def gen_pochhammer(a, nu: Sequence[int]):
    """Generalized Pochhammer symbol ``prod_i (a - (i - 1)/2)_{nu_i}``.

    Exact when ``a`` is a ``Fraction``.
    """
    half = Fraction(1, 2) if isinstance(a, Fraction) else 0.5
    out = a * 0 + 1
    for i, part in enumerate(nu):
        out = out * rising_factorial(a - i * half, part)
    return out


def _conjugate(kappa: Sequence[int]) -> list[int]:
    return [sum(1 for k in kappa if k > j) for j in range(kappa[0])] if kappa else []


def _dominated(mu: Sequence[int], kappa: Sequence[int]) -> bool:
    s_mu = s_k = 0
    for i in range(max(len(mu), len(kappa))):
        s_mu += mu[i] if i < len(mu) else 0
        s_k += kappa[i] if i < len(kappa) else 0
        if s_mu > s_k:
            return False
    return True


def _rho(kappa: Sequence[int]) -> int:
    return sum(k * (k - i) for i, k in enumerate(kappa, start=1))


def _hook_normalizer(kappa: Sequence[int]) -> Fraction:
    """``2^n n! / prod_s (2 arm(s) + leg(s) + 2)``: monic Jack -> C normalization."""
    conj = _conjugate(kappa)
    prod = 1
    for i, row in enumerate(kappa):
        for j in range(row):
            prod *= 2 * (row - j - 1) + (conj[j] - i - 1) + 2
    n = sum(kappa)
    return Fraction(2 ** n * math.factorial(n), prod)


@lru_cache(maxsize=None)
def zonal_coefficients(kappa: tuple[int, ...], n_vars: int = 2) -> dict[tuple[int, ...], Fraction]:
    """Coefficients of ``C_kappa`` in the monomial basis ``m_mu``, ``len(mu) <= n_vars``.

    Empty when ``kappa`` has more parts than variables.
    """
    kappa = tuple(k for k in kappa if k > 0)
    if len(kappa) > n_vars:
        return {}
    n = sum(kappa)
    rho_k = _rho(kappa)
    coef: dict[tuple[int, ...], Fraction] = {kappa: Fraction(1)}
    for lam in partitions(n, n_vars):
        if lam >= kappa or not _dominated(lam, kappa):
            continue
        rho_l = _rho(lam)
        total = Fraction(0)
        for i in range(len(lam)):
            for j in range(i + 1, len(lam)):
                for t in range(1, lam[j] + 1):
                    mu = list(lam)
                    mu[i] += t
                    mu[j] -= t
                    mu = tuple(sorted((p for p in mu if p > 0), reverse=True))
                    c = coef.get(mu)
                    if c:
                        total += (lam[i] - lam[j] + 2 * t) * c
        if total:
            coef[lam] = total / (rho_k - rho_l)
    scale = _hook_normalizer(kappa)
    return {mu: c * scale for mu, c in coef.items()}


def monomial_symmetric(mu: Sequence[int], y: Sequence[float]) -> float:
    """``m_mu(y)``: sum of distinct permutations of ``prod y_i^mu_i``."""
    exps = list(mu) + [0] * (len(y) - len(mu))
    if len(exps) > len(y):
        return 0.0
    total = 0.0
    for perm in set(itertools.permutations(exps)):
        term = 1.0
        for yi, e in zip(y, perm):
            term *= yi ** e
        total += term
    return total


def zonal(nu: Sequence[int], eigenvalues: Sequence[float]) -> float:
    """Zonal polynomial ``C_nu`` evaluated at ``diag(eigenvalues)``."""
    nu = tuple(p for p in nu if p > 0)
    y = [float(v) for v in eigenvalues]
    coef = zonal_coefficients(nu, len(y))
    return math.fsum(float(c) * monomial_symmetric(mu, y) for mu, c in coef.items())


class ZonalTable:
    """Precomputed 0F1(3/2; .) weight layers for two eigenvalues.

    Layer ``n`` is the symmetric polynomial
    ``sum_{|nu| = n, len(nu) <= 2} C_nu(y) / ((3/2)_nu n!)`` stored as
    coefficients ``W[n][b]`` of ``y1^(n-b) y2^b`` (full, not symmetrized).
    """

    normalization = "C"

    def __init__(self, max_weight: int = DEFAULT_TRUNCATION, layers=None):
        self.max_weight = int(max_weight)
        if layers is None:
            layers = self._build(self.max_weight)
        self.layers = [np.asarray(w, dtype=float) for w in layers]
        # dense (n, b) layout: W[n, b] multiplies y1^(n-b) y2^b; zero for b > n
        T = self.max_weight
        self._W = np.zeros((T + 1, T + 1))
        for n, w in enumerate(self.layers):
            self._W[n, :n + 1] = w
        n_idx, b_idx = np.indices((T + 1, T + 1))
        self._a = np.where(b_idx <= n_idx, n_idx - b_idx, 0)
        self._b = np.where(b_idx <= n_idx, b_idx, 0)

    @staticmethod
    def _build(max_weight: int) -> list[list[float]]:
        a = Fraction(3, 2)
        layers = []
        for n in range(max_weight + 1):
            w = [Fraction(0)] * (n + 1)
            denom_n = math.factorial(n)
            for nu in partitions(n, 2):
                scale = 1 / (gen_pochhammer(a, nu) * denom_n)
                for mu, c in zonal_coefficients(nu, 2).items():
                    p, q = (mu + (0, 0))[:2]
                    w[q] += c * scale
                    if p != q:
                        w[p] += c * scale
            layers.append([float(x) for x in w])
        return layers

    def to_json(self) -> str:
        return json.dumps({"version": CACHE_VERSION, "max_weight": self.max_weight,
                           "normalization": self.normalization,
                           "layers": [list(map(float, w)) for w in self.layers]})

    @classmethod
    def from_json(cls, text: str) -> "ZonalTable":
        blob = json.loads(text)
        if blob.get("version") != CACHE_VERSION or blob.get("normalization") != cls.normalization:
            raise ValueError("incompatible zonal table cache")
        return cls(blob["max_weight"], blob["layers"])

    def layer_values(self, y1: float, y2: float, truncation: int) -> np.ndarray:
        """Value of each weight layer ``0..truncation`` at ``(y1, y2)``.

        All coefficients are nonnegative, so plain summation within a layer
        loses no accuracy to cancellation.
        """
        t = truncation + 1
        p1 = float(y1) ** np.arange(t)
        p2 = float(y2) ** np.arange(t)
        a, b = self._a[:t, :t], self._b[:t, :t]
        return np.sum(self._W[:t, :t] * p1[a] * p2[b], axis=1)

    def layer_gradients(self, y1: float, y2: float, truncation: int) -> np.ndarray:
        """Derivatives of each layer with respect to ``(y1, y2)``; shape (truncation+1, 2)."""
        t = truncation + 1
        e = np.arange(t)
        p1 = float(y1) ** e
        p2 = float(y2) ** e
        # d/dy y^k = k y^(k-1), with the k = 0 term dropped
        dp1 = np.concatenate([[0.0], e[1:] * p1[:-1]])
        dp2 = np.concatenate([[0.0], e[1:] * p2[:-1]])
        W, a, b = self._W[:t, :t], self._a[:t, :t], self._b[:t, :t]
        return np.column_stack([np.sum(W * dp1[a] * p2[b], axis=1),
                                np.sum(W * p1[a] * dp2[b], axis=1)])


_TABLE: ZonalTable | None = None


def get_table(max_weight: int = DEFAULT_TRUNCATION) -> ZonalTable:
    """Shared table, loaded from ``$SCREWDIST_ZONAL_CACHE`` when present."""
    global _TABLE
    if _TABLE is not None and _TABLE.max_weight >= max_weight:
        return _TABLE
    path = os.environ.get(CACHE_ENV_VAR)
    table = None
    if path and os.path.exists(path):
        try:
            with open(path) as fh:
                table = ZonalTable.from_json(fh.read())
        except (ValueError, KeyError, OSError):
            table = None
        if table is not None and table.max_weight < max_weight:
            table = None
    if table is None:
        table = ZonalTable(max(max_weight, DEFAULT_TRUNCATION))
        if path:
            try:
                with open(path, "w") as fh:
                    fh.write(table.to_json())
            except OSError:
                pass
    _TABLE = table
    return table


def _check_lambdas(lam1: float, lam2: float) -> tuple[float, float]:
    lam1, lam2 = float(lam1), float(lam2)
    if lam1 < 0 or lam2 < 0:
        raise ValueError("singular values must be nonnegative")
    return (lam1, lam2) if lam1 >= lam2 else (lam2, lam1)


def _warn_if_diverging(layers: np.ndarray):
    if len(layers) >= 2 and layers[-1] > 0 and layers[-1] >= layers[-2]:
        warnings.warn(f"0F1 series not decreasing at order {len(layers) - 1} "
                      f"(last layers {layers[-2]:.3g}, {layers[-1]:.3g})",
                      DivergenceWarning, stacklevel=3)


def hyp0f1_matrix(lam1: float, lam2: float, truncation: int = DEFAULT_TRUNCATION,
                  table: ZonalTable | None = None) -> tuple[float, float]:
    """Truncated ``0F1(3/2; diag(lam1^2, lam2^2) / 4)``.

    Returns
    -------
    value : float
        Sum of weight layers ``0..truncation``.
    tail_estimate : float
        Magnitude of the last included layer.
    """
    lam1, lam2 = _check_lambdas(lam1, lam2)
    table = table or get_table(truncation)
    layers = table.layer_values(lam1 * lam1 / 4.0, lam2 * lam2 / 4.0, truncation)
    _warn_if_diverging(layers)
    return math.fsum(layers), float(abs(layers[-1]))


def log_hyp0f1(lam1: float, lam2: float, truncation: int = DEFAULT_TRUNCATION,
               table: ZonalTable | None = None) -> float:
    return math.log(hyp0f1_matrix(lam1, lam2, truncation, table)[0])


def log_hyp0f1_grad(lam1: float, lam2: float, truncation: int = DEFAULT_TRUNCATION,
                    table: ZonalTable | None = None) -> np.ndarray:
    """Gradient of ``log 0F1`` with respect to ``(lam1, lam2)`` (input order kept)."""
    lam1, lam2 = float(lam1), float(lam2)
    if lam1 < 0 or lam2 < 0:
        raise ValueError("singular values must be nonnegative")
    table = table or get_table(truncation)
    y1, y2 = lam1 * lam1 / 4.0, lam2 * lam2 / 4.0
    layers = table.layer_values(y1, y2, truncation)
    _warn_if_diverging(layers)
    value = math.fsum(layers)
    dy = table.layer_gradients(y1, y2, truncation)
    g1 = math.fsum(dy[:, 0]) * lam1 / 2.0
    g2 = math.fsum(dy[:, 1]) * lam2 / 2.0
    return np.array([g1, g2]) / value


def log_vmf_norm_c3(kappa: float) -> float:
    """``log C_3(kappa)``, the log-normalizer of the vMF density on the 2-sphere."""
    kappa = float(kappa)
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if kappa < 1e-8:
        return -math.log(4.0 * math.pi) - kappa  # first-order limit
    return math.log(kappa) - kappa - math.log(2.0 * math.pi) - math.log(-math.expm1(-2.0 * kappa))


def vmf_norm_c3(kappa: float) -> float:
    """``C_3(kappa) = kappa e^-kappa / (2 pi (1 - e^-2 kappa))``; ``1/(4 pi)`` at 0."""
    return math.exp(log_vmf_norm_c3(kappa))


def dlog_vmf_norm_c3(kappa: float) -> float:
    """``d/dkappa log C_3 = 1/kappa - coth(kappa)``."""
    kappa = float(kappa)
    if kappa < 1e-4:
        return -kappa / 3.0
    return 1.0 / kappa - 1.0 / math.tanh(kappa)
