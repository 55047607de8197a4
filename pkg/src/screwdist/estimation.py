"""Maximum-likelihood fitting of screw distributions to labeled screw displacements.

Three parameterizations are fitted by the same first-order optimizer:

``dustnet``
    SVD factors of F (Euler angles, planar angle, singular values) with the
    three-stage schedule: axis angles only with ``Lambda = diag(lambda0,
    lambda0)``, then everything but ``Lambda``, then everything.
``direct-f``
    The six entries of F directly; mode and concentration come from its SVD.
``vm-soft-ortho``
    Two independent vector vMFs for ``l_hat`` and ``m_hat`` plus a penalty on
    the squared inner product of their mean directions.

The configuration and ``|m|`` factors are truncated normals in all three.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit, log_ndtr

from .distributions import (
    JointScrewDistribution,
    MatrixVMFParams,
    RawLayout,
    TruncatedNormalParams,
    VectorVMFParams,
    euler_zyx,
    euler_zyx_jacobian,
    map_raw_parameters,
    planar_rotation,
    polar_factor,
    softplus,
    softplus_inv,
    truncnorm_log_density,
    vvmf_log_density,
)
from .geometry import Configuration, ScrewAxis
from .special import (
    DEFAULT_TRUNCATION,
    LAMBDA_MAX,
    DivergenceWarning,
    dlog_vmf_norm_c3,
    log_hyp0f1,
    log_hyp0f1_grad,
    log_vmf_norm_c3,
)
from .validation import check_label_array, split_label_array

METHODS = ("dustnet", "direct-f", "vm-soft-ortho")
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass
class FitConfig:
    """Optimizer and schedule settings.

    ``stage_params`` lists, per stage, which parameter groups move
    (``"axis"``, ``"lambda"``, ``"scalars"``); ``Lambda`` is held at
    ``diag(lambda0, lambda0)`` in every stage that does not train ``"lambda"``.
    """

    stage_budgets: tuple = (300, 300, 2000)
    stage_params: tuple = (("axis",), ("axis", "scalars"), ("axis", "lambda", "scalars"))
    learning_rate: float = 0.05
    tol: float = 1e-10
    patience: int = 20
    max_halvings: int = 30
    lambda_max: float = LAMBDA_MAX
    lambda0: float = 1.0
    precision_max: float = 1e6
    precision_floor_variance: float = 1e-2
    truncation: int = DEFAULT_TRUNCATION
    penalty: float = 1.0

    def __post_init__(self):
        self.stage_budgets = tuple(int(b) for b in self.stage_budgets)
        self.stage_params = tuple(tuple(s) for s in self.stage_params)
        if len(self.stage_budgets) != len(self.stage_params):
            raise ValueError("stage_budgets and stage_params differ in length")
        if any(b <= 0 for b in self.stage_budgets):
            raise ValueError("stage budgets must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.lambda0 <= self.lambda_max:
            raise ValueError("need 0 < lambda0 <= lambda_max")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")

    @property
    def total_budget(self) -> int:
        return sum(self.stage_budgets)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stage_budgets"] = list(self.stage_budgets)
        d["stage_params"] = [list(s) for s in self.stage_params]
        return d


@dataclass(frozen=True)
class SoftOrthoDistribution:
    """Baseline: independent vMFs on ``l_hat`` and ``m_hat`` plus truncated normals."""

    l_vmf: VectorVMFParams
    m_vmf: VectorVMFParams
    m_norm: TruncatedNormalParams
    theta_means: np.ndarray
    theta_precision: float
    d_means: np.ndarray
    d_precision: float

    @property
    def n_configs(self) -> int:
        return len(self.theta_means)

    def mode(self) -> tuple[ScrewAxis, list[Configuration]]:
        """Point estimate; ``m_hat`` is the raw mean direction and may not be orthogonal to ``l_hat``."""
        axis = ScrewAxis(self.l_vmf.mu, self.m_vmf.mu, max(self.m_norm.mu, 0.0))
        configs = [Configuration(max(t, 0.0), max(d, 0.0))
                   for t, d in zip(self.theta_means, self.d_means)]
        return axis, configs

    def to_dict(self) -> dict:
        return {
            "l_vmf": {"mu": self.l_vmf.mu.tolist(), "kappa": self.l_vmf.kappa},
            "m_vmf": {"mu": self.m_vmf.mu.tolist(), "kappa": self.m_vmf.kappa},
            "m_norm": {"mu": self.m_norm.mu, "precision": self.m_norm.precision},
            "theta_means": list(map(float, self.theta_means)), "theta_precision": self.theta_precision,
            "d_means": list(map(float, self.d_means)), "d_precision": self.d_precision,
        }

    @classmethod
    def from_dict(cls, blob: dict) -> "SoftOrthoDistribution":
        return cls(VectorVMFParams(**blob["l_vmf"]), VectorVMFParams(**blob["m_vmf"]),
                   TruncatedNormalParams(**blob["m_norm"]),
                   np.asarray(blob["theta_means"]), blob["theta_precision"],
                   np.asarray(blob["d_means"]), blob["d_precision"])


@dataclass
class FitReport:
    method: str
    distribution: JointScrewDistribution | SoftOrthoDistribution
    raw: np.ndarray
    nll_trace: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    stage_converged: list = field(default_factory=list)
    normalizer_diverging: bool = False
    config: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return bool(self.stage_converged) and bool(self.stage_converged[-1])

    @property
    def final_nll(self) -> float:
        return float(self.nll_trace[-1][-1])

    @property
    def lambdas(self) -> np.ndarray:
        """Singular values of F (concentrations ``kappa_l, kappa_m`` for the baseline)."""
        d = self.distribution
        if isinstance(d, SoftOrthoDistribution):
            return np.array([d.l_vmf.kappa, d.m_vmf.kappa])
        return d.axis_vmf.lambdas

    def prediction(self):
        return self.distribution.mode()

    def to_dict(self) -> dict:
        axis, configs = self.prediction()
        d = self.distribution
        return {
            "method": self.method,
            "n_configs": d.n_configs,
            "distribution": d.to_dict(),
            "raw": list(map(float, self.raw)),
            "prediction": {
                "l": axis.l_hat.tolist(), "m_hat": axis.m_hat.tolist(), "m_norm": axis.m_norm,
                "configs": [{"theta": c.theta, "d": c.d} for c in configs],
            },
            "lambda_hat": self.lambdas.tolist(),
            "nll_trace": [list(map(float, t)) for t in self.nll_trace],
            "grad_norms": [list(map(float, g)) for g in self.grad_norms],
            "stage_converged": list(map(bool, self.stage_converged)),
            "converged": self.converged,
            "normalizer_diverging": self.normalizer_diverging,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, blob: dict) -> "FitReport":
        if blob["method"] == "vm-soft-ortho":
            dist = SoftOrthoDistribution.from_dict(blob["distribution"])
        else:
            dist = JointScrewDistribution.from_dict(blob["distribution"])
        return cls(blob["method"], dist, np.asarray(blob["raw"]), blob["nll_trace"],
                   blob["grad_norms"], blob["stage_converged"],
                   blob.get("normalizer_diverging", False), blob.get("config", {}))


# ---------------------------------------------------------------------------
# objective pieces


class _Data:
    """Sufficient statistics of a validated label array."""

    def __init__(self, X: np.ndarray):
        self.X = X
        self.stiefel, self.m_norm, self.theta, self.d = split_label_array(X)
        self.n = X.shape[0]
        self.n_configs = self.theta.shape[1]
        self.S = self.stiefel.sum(axis=0)


def _tn_terms(x, mu, beta):
    """Negative log density of ``N+(mu, 1/beta)`` summed over the leading axis.

    Returns ``(nll, d/dmu, d/dbeta)``; ``mu`` and ``beta`` broadcast against
    the trailing shape of ``x``.
    """
    rb = np.sqrt(beta)
    r = x - mu
    z = mu * rb
    lnd = log_ndtr(z)
    nll = 0.5 * beta * r * r + LOG_SQRT_2PI - np.log(rb) + lnd
    h = np.exp(-0.5 * z * z - LOG_SQRT_2PI - lnd)  # phi(z) / Phi(z)
    dmu = -beta * r + rb * h
    dbeta = 0.5 * r * r - 0.5 / beta + 0.5 * h * mu / rb
    return nll.sum(axis=0), dmu.sum(axis=0), dbeta.sum(axis=0)


def _capped(value, cap):
    return np.minimum(value, cap), value >= cap


def _project_cap(g_value, at_cap):
    """Drop gradient components that would push a capped quantity outward."""
    return np.where(at_cap & (g_value < 0.0), 0.0, g_value)


def _scalar_block(raw_s: np.ndarray, data: _Data, cfg: FitConfig):
    """NLL and raw gradient of the ``|m|`` and configuration factors.

    ``raw_s`` is ``[m_loc, m_prec, theta_prec, d_prec, theta_loc (n), d_loc (n)]``.
    """
    k = data.n_configs
    pos = softplus(raw_s)
    dpos = expit(raw_s)
    prec, at_cap = _capped(pos[1:4], cfg.precision_max)
    m_mu, th_mu, d_mu = pos[0], pos[4:4 + k], pos[4 + k:]
    f_m, gm_mu, gm_b = _tn_terms(data.m_norm, m_mu, prec[0])
    f_t, gt_mu, gt_b = _tn_terms(data.theta, th_mu, prec[1])
    f_d, gd_mu, gd_b = _tn_terms(data.d, d_mu, prec[2])
    g_pos = np.empty_like(raw_s)
    g_pos[0] = gm_mu
    g_pos[1:4] = _project_cap(np.array([gm_b, gt_b.sum(), gd_b.sum()]), at_cap)
    g_pos[4:4 + k] = gt_mu
    g_pos[4 + k:] = gd_mu
    return float(f_m + f_t.sum() + f_d.sum()), g_pos * dpos


def _quiet_log_hyp0f1(l1, l2, truncation):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DivergenceWarning)
        return log_hyp0f1(l1, l2, truncation)


def _quiet_log_hyp0f1_grad(l1, l2, truncation):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DivergenceWarning)
        return log_hyp0f1_grad(l1, l2, truncation)


def _dust_lambdas(raw, cfg: FitConfig, fixed: float | None):
    if fixed is not None:
        return np.array([fixed, fixed]), np.array([False, False])
    s1, s2 = softplus(raw[4]), softplus(raw[5])
    lam = np.array([s1 + s2, s2])
    return _capped(lam, cfg.lambda_max)


def dust_objective(raw, data: _Data, cfg: FitConfig, lambda_fixed: float | None = None,
                   with_grad: bool = True):
    """NLL (and raw gradient) of the SVD parameterization."""
    raw = np.asarray(raw, dtype=float)
    a, b, g, w = raw[0:4]
    R = euler_zyx(a, b, g)
    G = R[:, :2]
    O = planar_rotation(w)
    lam, at_cap = _dust_lambdas(raw, cfg, lambda_fixed)
    L = np.diag(lam)
    F = G @ L @ O.T
    log_norm = _quiet_log_hyp0f1(lam[0], lam[1], cfg.truncation)
    f_axis = -float(np.sum(F * data.S)) + data.n * log_norm
    f_s, g_s = _scalar_block(raw[6:], data, cfg)
    if not with_grad:
        return f_axis + f_s
    grad = np.zeros_like(raw)
    for i, dR in enumerate(euler_zyx_jacobian(a, b, g)):
        grad[i] = -np.sum((dR[:, :2] @ L @ O.T) * data.S)
    dO = np.array([[-math.sin(w), -math.cos(w)], [math.cos(w), -math.sin(w)]])
    grad[3] = -np.sum((G @ L @ dO.T) * data.S)
    if lambda_fixed is None:
        # d/dlambda_i of -tr(F^T S) is -Gamma_i^T S Omega_i
        g_lam = np.array([-G[:, i] @ data.S @ O[:, i] for i in range(2)])
        g_lam += data.n * _quiet_log_hyp0f1_grad(lam[0], lam[1], cfg.truncation)
        g_lam = _project_cap(g_lam, at_cap)
        grad[4] = g_lam[0] * expit(raw[4])
        grad[5] = (g_lam[0] + g_lam[1]) * expit(raw[5])
    grad[6:] = g_s
    return f_axis + f_s, grad


def direct_f_objective(raw, data: _Data, cfg: FitConfig, with_grad: bool = True):
    """NLL (and gradient) with the six entries of F as free parameters."""
    raw = np.asarray(raw, dtype=float)
    F = raw[:6].reshape(3, 2)
    U, sv, Vt = np.linalg.svd(F, full_matrices=False)
    log_norm = _quiet_log_hyp0f1(sv[0], sv[1], cfg.truncation)
    f_axis = -float(np.sum(F * data.S)) + data.n * log_norm
    f_s, g_s = _scalar_block(raw[6:], data, cfg)
    if not with_grad:
        return f_axis + f_s
    g_sv = data.n * _quiet_log_hyp0f1_grad(sv[0], sv[1], cfg.truncation)
    gF = -data.S + U @ np.diag(g_sv) @ Vt
    at_cap = sv >= cfg.lambda_max * (1.0 - 1e-12)
    for i in range(2):
        d_sigma = float(U[:, i] @ gF @ Vt[i])
        if at_cap[i] and d_sigma < 0.0:
            gF -= d_sigma * np.outer(U[:, i], Vt[i])
    grad = np.concatenate([gF.ravel(), g_s])
    return f_axis + f_s, grad


def soft_ortho_objective(raw, data: _Data, cfg: FitConfig, with_grad: bool = True):
    """NLL (and gradient) of the two-vMF baseline with the orthogonality penalty."""
    raw = np.asarray(raw, dtype=float)
    vl, vm = raw[0:3], raw[3:6]
    nl, nm = np.linalg.norm(vl), np.linalg.norm(vm)
    mu_l, mu_m = vl / nl, vm / nm
    kap, at_cap = _capped(softplus(raw[6:8]), cfg.lambda_max)
    Lsum = data.stiefel[:, :, 0].sum(axis=0)
    Msum = data.stiefel[:, :, 1].sum(axis=0)
    c = float(mu_l @ mu_m)
    pen = cfg.penalty * data.n
    f = (-data.n * (log_vmf_norm_c3(kap[0]) + log_vmf_norm_c3(kap[1]))
         - kap[0] * (mu_l @ Lsum) - kap[1] * (mu_m @ Msum) + pen * c * c)
    f_s, g_s = _scalar_block(raw[8:], data, cfg)
    if not with_grad:
        return f + f_s
    g_mu_l = -kap[0] * Lsum + 2.0 * pen * c * mu_m
    g_mu_m = -kap[1] * Msum + 2.0 * pen * c * mu_l
    g_kap = np.array([-data.n * dlog_vmf_norm_c3(kap[0]) - mu_l @ Lsum,
                      -data.n * dlog_vmf_norm_c3(kap[1]) - mu_m @ Msum])
    g_kap = _project_cap(g_kap, at_cap)
    grad = np.concatenate([
        (g_mu_l - (g_mu_l @ mu_l) * mu_l) / nl,
        (g_mu_m - (g_mu_m @ mu_m) * mu_m) / nm,
        g_kap * expit(raw[6:8]),
        g_s,
    ])
    return f + f_s, grad


# ---------------------------------------------------------------------------
# public objective API


def nll(dist: JointScrewDistribution, dataset) -> float:
    """Negative log-likelihood of ``dataset`` (labels or label array) under ``dist``.

    Raises
    ------
    InvalidLabel
        If a label violates the type invariants or the configuration count
        does not match ``dist``.
    """
    X = check_label_array(dataset, dist.n_configs)
    data = _Data(X)
    v = dist.axis_vmf
    f = -float(np.sum(v.F * data.S)) + data.n * log_hyp0f1(v.lambda1, v.lambda2, dist.truncation)
    f -= float(np.sum(truncnorm_log_density(dist.m_norm, data.m_norm)))
    for i in range(dist.n_configs):
        f -= float(np.sum(truncnorm_log_density(dist.theta_dist(i), data.theta[:, i])))
        f -= float(np.sum(truncnorm_log_density(dist.d_dist(i), data.d[:, i])))
    return f


def nll_raw(raw, dataset, config: FitConfig | None = None) -> float:
    """NLL as a function of the raw vector (see :func:`map_raw_parameters`)."""
    cfg = config or FitConfig()
    raw = np.asarray(raw, dtype=float)
    X = check_label_array(dataset, (len(raw) - 10) // 2)
    return dust_objective(raw, _Data(X), cfg, with_grad=False)


def nll_gradient(raw, dataset, config: FitConfig | None = None) -> np.ndarray:
    """Gradient of :func:`nll_raw` with respect to the raw vector.

    Components that would push a singular value or precision past its cap
    are reported as zero.
    """
    cfg = config or FitConfig()
    raw = np.asarray(raw, dtype=float)
    X = check_label_array(dataset, (len(raw) - 10) // 2)
    return dust_objective(raw, _Data(X), cfg)[1]


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class _StageResult:
    x: np.ndarray
    trace: list
    grad_norms: list
    converged: bool


def _minimize(fun: Callable, x0: np.ndarray, mask: np.ndarray, scale_mask: np.ndarray,
              project: Callable, cfg: FitConfig, budget: int) -> _StageResult:
    """Adaptive-moment descent with step halving; accepted steps never raise the objective.

    Steps on entries flagged in ``scale_mask`` are scaled by ``max(1, |x|)``
    so softplus-mapped quantities can grow geometrically.
    """
    b1, b2, eps = 0.9, 0.99, 1e-12
    x = project(x0.copy())
    f, g = fun(x)
    trace, gnorms = [f], []
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    eta, quiet, converged = 1.0, 0, False
    gtol = 1e-9 * max(1.0, abs(f))
    for t in range(1, budget + 1):
        gm = g * mask
        gnorm = float(np.abs(gm).max()) if gm.size else 0.0
        gnorms.append(gnorm)
        if gnorm <= gtol:
            converged = True
            break
        m = b1 * m + (1 - b1) * gm
        v = b2 * v + (1 - b2) * gm * gm
        step = m / (1 - b1 ** t) / (np.sqrt(v / (1 - b2 ** t)) + eps)
        step *= cfg.learning_rate * np.where(scale_mask, np.maximum(1.0, np.abs(x)), 1.0) * mask
        accepted = False
        for direction in (step, cfg.learning_rate * gm / gnorm):
            e = eta
            for _ in range(cfg.max_halvings):
                x_new = project(x - e * direction)
                f_new = fun(x_new, with_grad=False)
                if np.isfinite(f_new) and f_new <= f:
                    accepted = True
                    break
                e *= 0.5
            if accepted:
                eta = min(1.0, 2.0 * e)
                break
            m[:] = 0.0
            v[:] = 0.0
        if not accepted:
            converged = True  # no descent at float resolution
            break
        rel = (f - f_new) / max(1.0, abs(f))
        x = x_new
        f, g = fun(x)
        trace.append(f)
        quiet = quiet + 1 if rel <= cfg.tol else 0
        if quiet >= cfg.patience:
            converged = True
            break
    return _StageResult(x, trace, gnorms, converged)


def _with_grad_switch(obj, *args, **kwargs):
    def fun(x, with_grad=True):
        return obj(x, *args, with_grad=with_grad, **kwargs)
    return fun


# ---------------------------------------------------------------------------
# initialization


def _init_scalars(data: _Data, cfg: FitConfig) -> np.ndarray:
    floor = cfg.precision_floor_variance

    def prec(x):
        return min(1.0 / max(float(np.var(x)), floor), cfg.precision_max)

    loc = np.concatenate([[data.m_norm.mean()], data.theta.mean(axis=0), data.d.mean(axis=0)])
    loc = np.maximum(loc, 1e-3)
    precs = np.array([prec(data.m_norm), prec(data.theta), prec(data.d)])
    k = data.n_configs
    raw = np.empty(4 + 2 * k)
    raw[0] = softplus_inv(loc[0])
    raw[1:4] = softplus_inv(precs)
    raw[4:] = softplus_inv(loc[1:])
    return raw


def _scalar_projector(offset: int, cfg: FitConfig):
    cap = float(softplus_inv(cfg.precision_max)) if math.isfinite(cfg.precision_max) else math.inf

    def project(x):
        x[offset + 1:offset + 4] = np.minimum(x[offset + 1:offset + 4], cap)
        return x
    return project


def _check_method_data(dataset, n_configs=None) -> _Data:
    return _Data(check_label_array(dataset, n_configs))


# ---------------------------------------------------------------------------
# fitting


def fit(dataset, config: FitConfig | None = None, rng: np.random.Generator | None = None) -> FitReport:
    """Staged maximum-likelihood fit of the SVD-parameterized joint distribution.

    The fit is deterministic; ``rng`` is accepted for interface symmetry.
    Non-convergence is reported through ``FitReport.stage_converged``.
    """
    cfg = config or FitConfig()
    data = _check_method_data(dataset)
    k = data.n_configs
    lay = RawLayout(k)
    M0 = polar_factor(data.S / data.n)
    v0 = MatrixVMFParams.from_mode(M0, cfg.lambda0)
    raw = np.empty(lay.size)
    raw[0:4] = [v0.alpha, v0.beta, v0.gamma, v0.omega]
    raw[4] = softplus_inv(1e-3 * cfg.lambda0)
    raw[5] = softplus_inv(cfg.lambda0)
    raw[6:] = _init_scalars(data, cfg)

    scalar_project = _scalar_projector(6, cfg)
    lam_cap = float(softplus_inv(cfg.lambda_max))

    def project(x):
        x = scalar_project(x)
        if softplus(x[5]) > cfg.lambda_max:
            x[5] = lam_cap
        excess = softplus(x[4]) + softplus(x[5]) - cfg.lambda_max
        if excess > 0:
            x[4] = softplus_inv(max(softplus(x[4]) - excess, 1e-12))
        return x

    groups = {"axis": lay.ANGLES, "lambda": lay.LAMBDAS, "scalars": slice(6, lay.size)}
    scale_mask = np.ones(lay.size, dtype=bool)
    scale_mask[lay.ANGLES] = False

    report = FitReport("dustnet", map_raw_parameters(raw, k, cfg.lambda_max), raw,
                       config=cfg.to_dict())
    for budget, params in zip(cfg.stage_budgets, cfg.stage_params):
        mask = np.zeros(lay.size)
        for name in params:
            mask[groups[name]] = 1.0
        fixed = None if "lambda" in params else cfg.lambda0
        fun = _with_grad_switch(dust_objective, data, cfg, lambda_fixed=fixed)
        res = _minimize(fun, raw, mask, scale_mask, project, cfg, budget)
        raw = res.x
        report.nll_trace.append(res.trace)
        report.grad_norms.append(res.grad_norms)
        report.stage_converged.append(res.converged)
    _finish(report, raw, cfg, lambda_trained=any("lambda" in p for p in cfg.stage_params))
    return report


def _finish(report: FitReport, raw, cfg: FitConfig, lambda_trained: bool = True):
    k = (len(raw) - 10) // 2
    if not lambda_trained:
        raw = raw.copy()
        raw[4] = softplus_inv(1e-12)
        raw[5] = softplus_inv(cfg.lambda0)
    report.raw = raw
    report.distribution = map_raw_parameters(raw, k, cfg.lambda_max, cfg.precision_max, cfg.truncation)
    lam = report.distribution.axis_vmf.lambdas
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DivergenceWarning)
        log_hyp0f1(lam[0], lam[1], cfg.truncation)
    report.normalizer_diverging = any(issubclass(w.category, DivergenceWarning) for w in caught)


def fit_direct_f(dataset, config: FitConfig | None = None,
                 rng: np.random.Generator | None = None) -> FitReport:
    """Fit with the entries of F as free parameters in one stage of the total budget."""
    cfg = config or FitConfig()
    data = _check_method_data(dataset)
    k = data.n_configs
    M0 = polar_factor(data.S / data.n)
    x0 = np.concatenate([(cfg.lambda0 * M0).ravel(), _init_scalars(data, cfg)])
    scalar_project = _scalar_projector(6, cfg)

    def project(x):
        x = scalar_project(x)
        F = x[:6].reshape(3, 2)
        U, sv, Vt = np.linalg.svd(F, full_matrices=False)
        if sv[0] > cfg.lambda_max:
            x[:6] = (U @ np.diag(np.minimum(sv, cfg.lambda_max)) @ Vt).ravel()
        return x

    mask = np.ones(len(x0))
    scale_mask = np.ones(len(x0), dtype=bool)
    fun = _with_grad_switch(direct_f_objective, data, cfg)
    res = _minimize(fun, x0, mask, scale_mask, project, cfg, cfg.total_budget)
    x = res.x
    vmf = MatrixVMFParams.from_F(x[:6].reshape(3, 2))
    pos = softplus(x[6:])
    prec = np.minimum(pos[1:4], cfg.precision_max)
    dist = JointScrewDistribution(vmf, TruncatedNormalParams(pos[0], prec[0]),
                                  pos[4:4 + k], prec[1], pos[4 + k:], prec[2], cfg.truncation)
    report = FitReport("direct-f", dist, x, [res.trace], [res.grad_norms], [res.converged],
                       config=cfg.to_dict())
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DivergenceWarning)
        log_hyp0f1(vmf.lambda1, vmf.lambda2, cfg.truncation)
    report.normalizer_diverging = bool(caught)
    return report


def fit_vm_soft_ortho(dataset, config: FitConfig | None = None,
                      rng: np.random.Generator | None = None) -> FitReport:
    """Fit the two-vMF baseline; ``config.penalty`` weights ``<mu_l, mu_m>^2`` per label."""
    cfg = config or FitConfig()
    data = _check_method_data(dataset)
    k = data.n_configs

    def unit(v):
        n = np.linalg.norm(v)
        return v / n if n > 0 else np.array([0.0, 0.0, 1.0])

    mu_l = unit(data.stiefel[:, :, 0].sum(axis=0))
    mu_m = unit(data.stiefel[:, :, 1].sum(axis=0))
    x0 = np.concatenate([mu_l, mu_m, softplus_inv([cfg.lambda0, cfg.lambda0]), _init_scalars(data, cfg)])
    scalar_project = _scalar_projector(8, cfg)
    kap_cap = float(softplus_inv(cfg.lambda_max))

    def project(x):
        x = scalar_project(x)
        x[0:3] = unit(x[0:3])
        x[3:6] = unit(x[3:6])
        x[6:8] = np.minimum(x[6:8], kap_cap)
        return x

    mask = np.ones(len(x0))
    scale_mask = np.ones(len(x0), dtype=bool)
    scale_mask[:6] = False
    fun = _with_grad_switch(soft_ortho_objective, data, cfg)
    res = _minimize(fun, x0, mask, scale_mask, project, cfg, cfg.total_budget)
    x = res.x
    kap = np.minimum(softplus(x[6:8]), cfg.lambda_max)
    pos = softplus(x[8:])
    prec = np.minimum(pos[1:4], cfg.precision_max)
    dist = SoftOrthoDistribution(VectorVMFParams(unit(x[0:3]), kap[0]), VectorVMFParams(unit(x[3:6]), kap[1]),
                                 TruncatedNormalParams(pos[0], prec[0]),
                                 pos[4:4 + k], prec[1], pos[4 + k:], prec[2])
    return FitReport("vm-soft-ortho", dist, x, [res.trace], [res.grad_norms], [res.converged],
                     config=cfg.to_dict())


def soft_ortho_log_density(dist: SoftOrthoDistribution, X) -> np.ndarray:
    """Per-label log density of the baseline (densities w.r.t. sphere area)."""
    X = check_label_array(X, dist.n_configs)
    stiefel, m_norm, theta, d = split_label_array(X)
    out = vvmf_log_density(dist.l_vmf, stiefel[:, :, 0]) + vvmf_log_density(dist.m_vmf, stiefel[:, :, 1])
    out = out + truncnorm_log_density(dist.m_norm, m_norm)
    for i in range(dist.n_configs):
        out = out + truncnorm_log_density(TruncatedNormalParams(dist.theta_means[i], dist.theta_precision), theta[:, i])
        out = out + truncnorm_log_density(TruncatedNormalParams(dist.d_means[i], dist.d_precision), d[:, i])
    return out


def fit_method(method: str, dataset, config: FitConfig | None = None,
               rng: np.random.Generator | None = None) -> FitReport:
    if method == "dustnet":
        return fit(dataset, config, rng)
    if method == "direct-f":
        return fit_direct_f(dataset, config, rng)
    if method == "vm-soft-ortho":
        return fit_vm_soft_ortho(dataset, config, rng)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
