"""Distributions over screw axes and configurations.

* matrix von Mises-Fisher on V(2, 3), parameterized by the SVD factors of F
* truncated normal on ``[0, inf)`` in precision form
* vector von Mises-Fisher on the 2-sphere (baseline)
* the joint screw distribution combining them, and the mapping from an
  unconstrained raw vector onto its parameters
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import log_ndtr, ndtri_exp

from .geometry import TWO_PI, Configuration, ScrewAxis, orthogonal_unit
from .special import LAMBDA_MAX, DEFAULT_TRUNCATION, log_hyp0f1, log_vmf_norm_c3

MANIFOLD_TOL = 1e-9
LOG_2PI = math.log(2.0 * math.pi)


class NotOnManifold(ValueError):
    """A matrix is not a point of V(2, 3)."""


# ---------------------------------------------------------------------------
# rotation helpers


def _rz(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(b):
    c, s = math.cos(b), math.sin(b)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rx(g):
    c, s = math.cos(g), math.sin(g)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _drz(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[-s, -c, 0.0], [c, -s, 0.0], [0.0, 0.0, 0.0]])


def _dry(b):
    c, s = math.cos(b), math.sin(b)
    return np.array([[-s, 0.0, c], [0.0, 0.0, 0.0], [-c, 0.0, -s]])


def _drx(g):
    c, s = math.cos(g), math.sin(g)
    return np.array([[0.0, 0.0, 0.0], [0.0, -s, -c], [0.0, c, -s]])


def euler_zyx(alpha, beta, gamma) -> np.ndarray:
    """Rotation ``Rz(alpha) Ry(beta) Rx(gamma)`` (ZYX, rotating frame)."""
    return _rz(alpha) @ _ry(beta) @ _rx(gamma)


def euler_zyx_jacobian(alpha, beta, gamma) -> list[np.ndarray]:
    """Derivatives of :func:`euler_zyx` with respect to each angle."""
    Rz, Ry, Rx = _rz(alpha), _ry(beta), _rx(gamma)
    return [_drz(alpha) @ Ry @ Rx, Rz @ _dry(beta) @ Rx, Rz @ Ry @ _drx(gamma)]


def planar_rotation(omega) -> np.ndarray:
    c, s = math.cos(omega), math.sin(omega)
    return np.array([[c, -s], [s, c]])


def _wrap(a):
    a = math.fmod(a, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    return 0.0 if a >= TWO_PI else a


def _euler_from_frame(G: np.ndarray, omega: float) -> tuple[float, float, float, float]:
    """Canonical ``(alpha, beta, gamma, omega)`` for the frame ``G`` and angle ``omega``.

    ``beta`` must lie in ``[0, pi)``, which forces ``G[2, 0] <= 0``; when that
    fails both columns of ``G`` and of ``Omega`` are negated, leaving
    ``F = G Lambda Omega^T`` unchanged.
    """
    if G[2, 0] > 0.0:
        G = -G
        omega += math.pi
    R = np.column_stack([G[:, 0], G[:, 1], np.cross(G[:, 0], G[:, 1])])
    beta = math.asin(min(1.0, max(-1.0, -R[2, 0])))
    if math.cos(beta) > 1e-12:
        alpha = math.atan2(R[1, 0], R[0, 0])
        gamma = math.atan2(R[2, 1], R[2, 2])
    else:
        alpha = math.atan2(-R[0, 1], R[1, 1])
        gamma = 0.0
    beta = 0.0 if beta <= 0.0 else beta
    return _wrap(alpha), beta, _wrap(gamma), _wrap(omega)


def polar_factor(A: np.ndarray) -> np.ndarray:
    """Closest V(2, 3) point to a 3x2 matrix (orthogonal polar factor)."""
    U, _, Vt = np.linalg.svd(A, full_matrices=False)
    return U @ Vt


def is_on_manifold(X, tol: float = MANIFOLD_TOL) -> bool:
    X = np.asarray(X, dtype=float)
    return X.shape == (3, 2) and np.abs(X.T @ X - np.eye(2)).max() <= tol


# ---------------------------------------------------------------------------
# matrix von Mises-Fisher


@dataclass(frozen=True)
class MatrixVMFParams:
    """Matrix vMF on V(2, 3) with ``F = Gamma Lambda Omega^T``.

    ``Gamma`` is the first two columns of ``Rz(alpha) Ry(beta) Rx(gamma)``,
    ``Omega`` the planar rotation by ``omega``, ``Lambda = diag(lambda1, lambda2)``.
    """

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    omega: float = 0.0
    lambda1: float = 0.0
    lambda2: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "omega", "lambda1", "lambda2"):
            object.__setattr__(self, name, float(getattr(self, name)))
        problems = []
        if not (0.0 <= self.alpha < TWO_PI and 0.0 <= self.gamma < TWO_PI and 0.0 <= self.omega < TWO_PI):
            problems.append("alpha, gamma, omega must lie in [0, 2*pi)")
        if not 0.0 <= self.beta < math.pi:
            problems.append("beta must lie in [0, pi)")
        if not self.lambda1 >= self.lambda2 >= 0.0:
            problems.append("need lambda1 >= lambda2 >= 0")
        if problems:
            raise ValueError("; ".join(problems) + f": {self}")

    @classmethod
    def from_factors(cls, G, omega: float, lambda1: float, lambda2: float) -> "MatrixVMFParams":
        """Parameters from a frame ``G`` (3x2, orthonormal) and rotation angle ``omega``."""
        a, b, g, w = _euler_from_frame(np.asarray(G, dtype=float), float(omega))
        return cls(a, b, g, w, lambda1, lambda2)

    @classmethod
    def from_mode(cls, M, lambda1: float, lambda2: float | None = None) -> "MatrixVMFParams":
        """Distribution with mode ``M`` and concentration ``diag(lambda1, lambda2)``."""
        lambda2 = lambda1 if lambda2 is None else lambda2
        return cls.from_factors(M, 0.0, lambda1, lambda2)

    @classmethod
    def from_F(cls, F) -> "MatrixVMFParams":
        F = np.asarray(F, dtype=float)
        U, S, Vt = np.linalg.svd(F, full_matrices=False)
        V = Vt.T
        if np.linalg.det(V) < 0:
            U[:, 1] *= -1.0
            V[:, 1] *= -1.0
        return cls.from_factors(U, math.atan2(V[1, 0], V[0, 0]), S[0], S[1])

    @property
    def Gamma(self) -> np.ndarray:
        return euler_zyx(self.alpha, self.beta, self.gamma)[:, :2]

    @property
    def Omega(self) -> np.ndarray:
        return planar_rotation(self.omega)

    @property
    def Lambda(self) -> np.ndarray:
        return np.diag([self.lambda1, self.lambda2])

    @property
    def F(self) -> np.ndarray:
        return self.Gamma @ self.Lambda @ self.Omega.T

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2])

    def canonical_factors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(Gamma, Lambda, Omega)`` with the first row of ``Gamma`` nonnegative.

        Column pairs ``(Gamma_i, Omega_i)`` are negated together so ``F`` is
        unchanged; ``Omega`` may become a reflection.
        """
        G, O = self.Gamma.copy(), self.Omega.copy()
        for i in range(2):
            if G[0, i] < 0.0:
                G[:, i] *= -1.0
                O[:, i] *= -1.0
        return G, self.Lambda, O


def mvmf_mode(params: MatrixVMFParams) -> np.ndarray:
    """Mode ``M = Gamma Omega^T``."""
    return params.Gamma @ params.Omega.T


def mvmf_concentration(params: MatrixVMFParams) -> np.ndarray:
    """Concentration ``K = Omega Lambda Omega^T``."""
    O = params.Omega
    return O @ params.Lambda @ O.T


def mvmf_log_density(params: MatrixVMFParams, X, truncation: int = DEFAULT_TRUNCATION) -> float:
    """Log density with respect to the normalized invariant measure on V(2, 3)."""
    X = np.asarray(X, dtype=float)
    if not is_on_manifold(X):
        raise NotOnManifold(f"X^T X deviates from I_2: {X}")
    return float(np.sum(params.F * X)) - log_hyp0f1(params.lambda1, params.lambda2, truncation)


def uniform_stiefel(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` draws from the uniform distribution on V(2, 3), shape ``(n, 3, 2)``."""
    Z = rng.standard_normal((n, 3, 2))
    Q, R = np.linalg.qr(Z)
    signs = np.sign(np.diagonal(R, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    return Q * signs[:, None, :]


def _orthonormalize(X: np.ndarray) -> np.ndarray:
    x0 = X[:, :, 0] / np.linalg.norm(X[:, :, 0], axis=1, keepdims=True)
    x1 = X[:, :, 1] - np.sum(x0 * X[:, :, 1], axis=1, keepdims=True) * x0
    x1 /= np.linalg.norm(x1, axis=1, keepdims=True)
    return np.stack([x0, x1], axis=2)


def _cross_rows(a, b):
    """Row-wise cross product; avoids the axis bookkeeping of ``np.cross`` in the sampler loop."""
    a0, a1, a2 = a[:, 0], a[:, 1], a[:, 2]
    b0, b1, b2 = b[:, 0], b[:, 1], b[:, 2]
    return np.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=1)


def _circle_move(rng, f, u, v):
    """Draw ``cos(phi) u + sin(phi) v`` with density proportional to ``exp(f . x)``."""
    a = u @ f
    b = v @ f
    phi = rng.vonmises(np.arctan2(b, a), np.hypot(a, b))
    return np.cos(phi)[:, None] * u + np.sin(phi)[:, None] * v, phi


def _gibbs_sweep(rng, F, X):
    f0, f1 = F[:, 0], F[:, 1]
    x0, x1 = X[:, :, 0], X[:, :, 1]
    # first column on the circle orthogonal to the second
    x0, _ = _circle_move(rng, f0, x0, _cross_rows(x1, x0))
    # second column on the circle orthogonal to the first
    x1, _ = _circle_move(rng, f1, x1, _cross_rows(x0, x1))
    # in-plane rotation of both columns
    a = x0 @ f0 + x1 @ f1
    b = x1 @ f0 - x0 @ f1
    phi = rng.vonmises(np.arctan2(b, a), np.hypot(a, b))
    c, s = np.cos(phi)[:, None], np.sin(phi)[:, None]
    x0, x1 = c * x0 + s * x1, c * x1 - s * x0
    return np.stack([x0, x1], axis=2)


def mvmf_sample(params: MatrixVMFParams | np.ndarray, rng: np.random.Generator, n_samples: int,
                burn_in: int = 50, thin: int = 5, n_chains: int | None = None) -> np.ndarray:
    """Draw from the matrix vMF by Gibbs sampling over exact circle conditionals.

    Each sweep resamples the first column given the second, the second given
    the first, and the in-plane rotation of the pair; every conditional is a
    von Mises distribution on a circle. Parallel chains start from uniform
    draws; each contributes draws every ``thin`` sweeps after ``burn_in``.

    Returns
    -------
    ndarray of shape ``(n_samples, 3, 2)``
    """
    F = params.F if isinstance(params, MatrixVMFParams) else np.asarray(params, dtype=float)
    if n_samples <= 0:
        return np.empty((0, 3, 2))
    if n_chains is None:
        n_chains = min(n_samples, 4096)
    per_chain = -(-n_samples // n_chains)
    X = uniform_stiefel(rng, n_chains)
    for _ in range(burn_in):
        X = _gibbs_sweep(rng, F, X)
    draws = []
    for k in range(per_chain):
        for _ in range(thin if k else 1):
            X = _gibbs_sweep(rng, F, X)
        X = _orthonormalize(X)
        draws.append(X.copy())
    out = np.stack(draws, axis=0).reshape(per_chain * n_chains, 3, 2)
    return out[:n_samples]


def mvmf_rejection_sample(params: MatrixVMFParams, rng: np.random.Generator, n_samples: int,
                          batch: int = 100_000) -> np.ndarray:
    """Uniform-proposal rejection sampler; practical only for small concentrations."""
    F = params.F
    bound = params.lambda1 + params.lambda2  # max of tr(F^T X) on V(2, 3)
    out, have = [], 0
    while have < n_samples:
        X = uniform_stiefel(rng, batch)
        logw = np.einsum("ij,nij->n", F, X) - bound
        keep = np.log(rng.random(batch)) < logw
        out.append(X[keep])
        have += int(keep.sum())
    return np.concatenate(out)[:n_samples]


# ---------------------------------------------------------------------------
# truncated normal on [0, inf)


@dataclass(frozen=True)
class TruncatedNormalParams:
    """Normal ``N(mu, 1/precision)`` renormalized to ``[0, inf)``."""

    mu: float
    precision: float

    def __post_init__(self):
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "precision", float(self.precision))
        if not self.precision > 0.0:
            raise ValueError("precision must be positive")

    @property
    def sigma(self) -> float:
        return 1.0 / math.sqrt(self.precision)


def truncnorm_log_density(params: TruncatedNormalParams, x):
    """Log density; ``-inf`` for ``x < 0``."""
    x = np.asarray(x, dtype=float)
    rb = math.sqrt(params.precision)
    z = (x - params.mu) * rb
    out = -0.5 * z * z - 0.5 * LOG_2PI + math.log(rb) - log_ndtr(params.mu * rb)
    out = np.where(x >= 0.0, out, -np.inf)
    return float(out) if out.ndim == 0 else out


def truncnorm_sample(params: TruncatedNormalParams, rng: np.random.Generator, size=None):
    """Inverse-CDF draws, computed in log space so far tails stay finite."""
    rb = math.sqrt(params.precision)
    a = -params.mu * rb  # standardized lower bound
    u = rng.random(size)
    # Phi(-Z) is uniform on (0, Phi(-a)) for Z restricted to (a, inf)
    z = -ndtri_exp(np.log1p(-u) + log_ndtr(-a))
    x = params.mu + z / rb
    return np.maximum(x, 0.0)


def truncnorm_moments(params: TruncatedNormalParams) -> tuple[float, float]:
    """Analytic mean and variance."""
    s = params.sigma
    a = -params.mu / s
    h = math.exp(-0.5 * a * a - 0.5 * LOG_2PI - float(log_ndtr(-a)))  # phi(a) / (1 - Phi(a))
    mean = params.mu + s * h
    var = s * s * (1.0 + a * h - h * h)
    return mean, var


# ---------------------------------------------------------------------------
# vector von Mises-Fisher on S^2


@dataclass(frozen=True)
class VectorVMFParams:
    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(3)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kappa", float(self.kappa))
        if abs(np.linalg.norm(mu) - 1.0) > 1e-9:
            raise ValueError("mu must be a unit vector")
        if self.kappa < 0.0:
            raise ValueError("kappa must be nonnegative")


def vvmf_log_density(params: VectorVMFParams, x):
    """``log C_3(kappa) + kappa <mu, x>`` with respect to surface area."""
    x = np.asarray(x, dtype=float)
    out = log_vmf_norm_c3(params.kappa) + params.kappa * (x @ params.mu)
    return float(out) if np.ndim(out) == 0 else out


def vvmf_sample(params: VectorVMFParams, rng: np.random.Generator, n_samples: int) -> np.ndarray:
    """Exact draws on the 2-sphere (inverse CDF of the cosine to the mean)."""
    k = params.kappa
    u = rng.random(n_samples)
    if k < 1e-8:
        w = 2.0 * u - 1.0
    else:
        w = 1.0 + np.log(u + (1.0 - u) * math.exp(-2.0 * k)) / k
    phi = rng.uniform(0.0, TWO_PI, n_samples)
    e1 = orthogonal_unit(params.mu)
    e2 = np.cross(params.mu, e1)
    r = np.sqrt(np.clip(1.0 - w * w, 0.0, None))
    return (w[:, None] * params.mu + (r * np.cos(phi))[:, None] * e1
            + (r * np.sin(phi))[:, None] * e2)


# ---------------------------------------------------------------------------
# joint screw distribution


@dataclass(frozen=True, eq=False)
class JointScrewDistribution:
    """Matrix vMF over ``(l_hat, m_hat)``, truncated normals over ``|m|`` and configurations.

    All configuration steps share one precision per kind (rotation, displacement).
    """

    axis_vmf: MatrixVMFParams
    m_norm: TruncatedNormalParams
    theta_means: np.ndarray
    theta_precision: float
    d_means: np.ndarray
    d_precision: float
    truncation: int = field(default=DEFAULT_TRUNCATION, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "theta_means", np.asarray(self.theta_means, dtype=float).reshape(-1))
        object.__setattr__(self, "d_means", np.asarray(self.d_means, dtype=float).reshape(-1))
        object.__setattr__(self, "theta_precision", float(self.theta_precision))
        object.__setattr__(self, "d_precision", float(self.d_precision))
        if len(self.theta_means) != len(self.d_means):
            raise ValueError("theta_means and d_means must have equal length")
        if not (self.theta_precision > 0.0 and self.d_precision > 0.0):
            raise ValueError("precisions must be positive")

    @property
    def n_configs(self) -> int:
        return len(self.theta_means)

    def theta_dist(self, i: int) -> TruncatedNormalParams:
        return TruncatedNormalParams(self.theta_means[i], self.theta_precision)

    def d_dist(self, i: int) -> TruncatedNormalParams:
        return TruncatedNormalParams(self.d_means[i], self.d_precision)

    def mode(self) -> tuple[ScrewAxis, list[Configuration]]:
        """Most probable label (configuration modes are the clipped locations)."""
        M = mvmf_mode(self.axis_vmf)
        axis = ScrewAxis(M[:, 0], M[:, 1], max(self.m_norm.mu, 0.0))
        configs = [Configuration(max(t, 0.0), max(d, 0.0))
                   for t, d in zip(self.theta_means, self.d_means)]
        return axis, configs

    def to_dict(self) -> dict:
        v = self.axis_vmf
        return {
            "axis_vmf": {k: getattr(v, k) for k in ("alpha", "beta", "gamma", "omega", "lambda1", "lambda2")},
            "m_norm": {"mu": self.m_norm.mu, "precision": self.m_norm.precision},
            "theta_means": self.theta_means.tolist(), "theta_precision": self.theta_precision,
            "d_means": self.d_means.tolist(), "d_precision": self.d_precision,
            "truncation": self.truncation,
        }

    @classmethod
    def from_dict(cls, blob: dict) -> "JointScrewDistribution":
        return cls(MatrixVMFParams(**blob["axis_vmf"]), TruncatedNormalParams(**blob["m_norm"]),
                   blob["theta_means"], blob["theta_precision"], blob["d_means"], blob["d_precision"],
                   blob.get("truncation", DEFAULT_TRUNCATION))


def joint_log_density(dist: JointScrewDistribution,
                      y: tuple[ScrewAxis, Sequence[Configuration]]) -> float:
    """Sum of the matrix vMF, ``|m|`` and per-step configuration log densities."""
    axis, configs = y
    if len(configs) != dist.n_configs:
        raise ValueError(f"expected {dist.n_configs} configurations, got {len(configs)}")
    theta = np.array([c.theta for c in configs])
    d = np.array([c.d for c in configs])
    total = mvmf_log_density(dist.axis_vmf, axis.stiefel, dist.truncation)
    total += truncnorm_log_density(dist.m_norm, axis.m_norm)
    total += sum(truncnorm_log_density(dist.theta_dist(i), theta[i]) for i in range(dist.n_configs))
    total += sum(truncnorm_log_density(dist.d_dist(i), d[i]) for i in range(dist.n_configs))
    return float(total)


def joint_sample(dist: JointScrewDistribution, rng: np.random.Generator, n_samples: int,
                 **sampler_kw) -> np.ndarray:
    """Draw labels as rows ``[l_hat, m_hat, |m|, theta (n), d (n)]``; ``theta`` is wrapped to ``[0, 2pi)``."""
    k = dist.n_configs
    X = mvmf_sample(dist.axis_vmf, rng, n_samples, **sampler_kw)
    m = truncnorm_sample(dist.m_norm, rng, n_samples)
    theta = np.column_stack([truncnorm_sample(dist.theta_dist(i), rng, n_samples) for i in range(k)])
    d = np.column_stack([truncnorm_sample(dist.d_dist(i), rng, n_samples) for i in range(k)])
    theta = np.mod(theta, 2.0 * math.pi)
    theta[theta >= 2.0 * math.pi] = 0.0
    return np.column_stack([X[:, :, 0], X[:, :, 1], m, theta, d]).reshape(n_samples, 7 + 2 * k)


# ---------------------------------------------------------------------------
# raw parameter mapping


def softplus(x):
    return np.logaddexp(0.0, x)


def softplus_inv(y):
    y = np.asarray(y, dtype=float)
    return y + np.log(-np.expm1(-y))


def raw_length(n_configs: int) -> int:
    return 10 + 2 * n_configs


class RawLayout:
    """Index layout of the raw parameter vector.

    ``[alpha, beta, gamma, omega, s1, s2, m_loc, m_prec, theta_prec, d_prec,
    theta_loc (n), d_loc (n)]``
    """

    ANGLES = slice(0, 4)
    LAMBDAS = slice(4, 6)
    M_LOC, M_PREC, THETA_PREC, D_PREC = 6, 7, 8, 9

    def __init__(self, n_configs: int):
        self.n_configs = n_configs
        self.theta_loc = slice(10, 10 + n_configs)
        self.d_loc = slice(10 + n_configs, 10 + 2 * n_configs)
        self.size = raw_length(n_configs)


def raw_lambdas(raw, lambda_max: float = LAMBDA_MAX) -> tuple[float, float]:
    s1, s2 = softplus(raw[4]), softplus(raw[5])
    return float(min(s1 + s2, lambda_max)), float(min(s2, lambda_max))


def map_raw_parameters(raw, n_configs: int | None = None, lambda_max: float = LAMBDA_MAX,
                       precision_max: float = math.inf,
                       truncation: int = DEFAULT_TRUNCATION) -> JointScrewDistribution:
    """Map an unconstrained vector of length ``10 + 2 n`` onto a joint distribution.

    The four angle entries act through ``cos``/``sin`` so the map is smooth on
    the circle; the reported angles are the canonical representatives within
    ``[0, 2pi) x [0, pi) x [0, 2pi) x [0, 2pi)`` of the same ``F``. Every other
    entry goes through softplus: ``lambda1 = s1 + s2``, ``lambda2 = s2``
    (capped at ``lambda_max``), then the ``|m|`` location and precision, the
    shared rotation and displacement precisions, and the per-step locations.
    """
    raw = np.asarray(raw, dtype=float).reshape(-1)
    if n_configs is None:
        if (len(raw) - 10) % 2 or len(raw) < 10:
            raise ValueError(f"raw length {len(raw)} is not 10 + 2n")
        n_configs = (len(raw) - 10) // 2
    lay = RawLayout(n_configs)
    if len(raw) != lay.size:
        raise ValueError(f"raw length {len(raw)} does not match {lay.size} for n_configs={n_configs}")
    lam1, lam2 = raw_lambdas(raw, lambda_max)
    G = euler_zyx(*raw[0:3])[:, :2]
    vmf = MatrixVMFParams.from_factors(G, float(raw[3]), lam1, lam2)
    pos = softplus(raw[6:])
    prec = np.minimum(pos[1:4], precision_max)
    return JointScrewDistribution(
        vmf, TruncatedNormalParams(pos[0], prec[0]),
        pos[lay.theta_loc.start - 6:lay.theta_loc.stop - 6], prec[1],
        pos[lay.d_loc.start - 6:lay.d_loc.stop - 6], prec[2], truncation)


def raw_from_distribution(dist: JointScrewDistribution, lambda_floor: float = 1e-3) -> np.ndarray:
    """A raw vector that maps back onto ``dist`` (lambda1 == lambda2 is nudged apart)."""
    v = dist.axis_vmf
    s2 = max(v.lambda2, lambda_floor)
    s1 = max(v.lambda1 - v.lambda2, lambda_floor)
    head = [v.alpha, v.beta, v.gamma, v.omega, float(softplus_inv(s1)), float(softplus_inv(s2))]
    pos = np.concatenate([[dist.m_norm.mu, dist.m_norm.precision, dist.theta_precision, dist.d_precision],
                          dist.theta_means, dist.d_means])
    return np.concatenate([head, softplus_inv(np.maximum(pos, 1e-12))])

