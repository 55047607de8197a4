"""Scikit-learn style density estimators over screw labels.

Each estimator fits one screw distribution to a label array of shape
``(n_labels, 7 + 2 n)`` (see :mod:`screwdist.validation`) or to a list of
labels / labeled sequences.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, DensityMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_is_fitted

from .distributions import (
    TruncatedNormalParams,
    joint_sample,
    mvmf_log_density,
    truncnorm_log_density,
    truncnorm_sample,
    vvmf_sample,
)
from .estimation import FitConfig, FitReport, fit, fit_direct_f, fit_vm_soft_ortho, soft_ortho_log_density
from .special import DEFAULT_TRUNCATION, LAMBDA_MAX
from .synthetic import LabeledSequence
from .validation import check_label_array, label_to_row, split_label_array


def _as_label_array(X, n_configs=None, check_invariants=True) -> np.ndarray:
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], LabeledSequence):
        X = [s.label for s in X]
    return check_label_array(X, n_configs, check_invariants=check_invariants)


class _ScrewEstimatorBase(DensityMixin, BaseEstimator):
    _fit_function = staticmethod(fit)

    def __init__(self, stage_budgets=(300, 300, 2000), learning_rate=0.05, tol=1e-10, patience=20,
                 lambda_max=LAMBDA_MAX, lambda0=1.0, precision_max=1e6, truncation=DEFAULT_TRUNCATION):
        self.stage_budgets = stage_budgets
        self.learning_rate = learning_rate
        self.tol = tol
        self.patience = patience
        self.lambda_max = lambda_max
        self.lambda0 = lambda0
        self.precision_max = precision_max
        self.truncation = truncation

    def _config(self) -> FitConfig:
        return FitConfig(stage_budgets=tuple(self.stage_budgets), learning_rate=self.learning_rate,
                         tol=self.tol, patience=self.patience, lambda_max=self.lambda_max,
                         lambda0=self.lambda0, precision_max=self.precision_max,
                         truncation=self.truncation)

    def fit(self, X, y=None):
        """Fit by staged maximum likelihood; ``y`` is ignored."""
        X = _as_label_array(X)
        report = self._fit_function(X, self._config())
        self.report_ = report
        self.distribution_ = report.distribution
        self.n_configs_ = report.distribution.n_configs
        self.n_features_in_ = X.shape[1]
        self.converged_ = report.converged
        return self

    def score_samples(self, X) -> np.ndarray:
        """Log density of each label."""
        check_is_fitted(self, "distribution_")
        X = _as_label_array(X, self.n_configs_)
        return _joint_log_density_rows(self.distribution_, X)

    def score(self, X, y=None) -> float:
        """Mean log-likelihood per label."""
        return float(np.mean(self.score_samples(X)))

    def predict(self, X) -> np.ndarray:
        """The fitted point estimate, repeated for every input label."""
        check_is_fitted(self, "distribution_")
        X = _as_label_array(X, self.n_configs_, check_invariants=False)
        row = label_to_row(self.report_.prediction())
        return np.tile(row, (X.shape[0], 1))

    def sample(self, n_samples=1, random_state=None) -> np.ndarray:
        check_is_fitted(self, "distribution_")
        rng = np.random.default_rng(check_random_state(random_state).randint(2**32 - 1))
        return joint_sample(self.distribution_, rng, n_samples)


def _joint_log_density_rows(dist, X) -> np.ndarray:
    stiefel, m_norm, theta, d = split_label_array(X)
    out = np.array([mvmf_log_density(dist.axis_vmf, S, dist.truncation) for S in stiefel])
    out += truncnorm_log_density(dist.m_norm, m_norm)
    for i in range(dist.n_configs):
        out += truncnorm_log_density(dist.theta_dist(i), theta[:, i])
        out += truncnorm_log_density(dist.d_dist(i), d[:, i])
    return out


class ScrewDistributionEstimator(_ScrewEstimatorBase):
    """Matrix vMF plus truncated normals, fitted through the SVD factors of F.

    Parameters
    ----------
    stage_budgets : tuple of int
        Iteration budgets of the three stages (axis only with fixed
        concentration, everything but the concentration, everything).
    learning_rate : float
        Base step of the adaptive optimizer.
    tol : float
        Relative NLL change below which an iteration counts as stalled.
    patience : int
        Stalled iterations that end a stage.
    lambda_max : float
        Cap on the singular values of F.
    lambda0 : float
        Fixed singular value during the first two stages.
    precision_max : float
        Cap on truncated-normal precisions.
    truncation : int
        Series order of the normalizing constant.

    Attributes
    ----------
    distribution_ : JointScrewDistribution
    report_ : FitReport
    n_configs_ : int
    converged_ : bool
    """


class DirectFScrewEstimator(_ScrewEstimatorBase):
    """Same density, fitted over the six entries of F in a single stage of the summed budget."""

    _fit_function = staticmethod(fit_direct_f)


class SoftOrthoScrewEstimator(_ScrewEstimatorBase):
    """Baseline with independent vMFs on ``l_hat`` and ``m_hat``.

    ``penalty`` weights the squared inner product of the two mean directions
    per label. Predictions and samples need not have orthogonal
    ``(l_hat, m_hat)``.
    """

    _fit_function = staticmethod(fit_vm_soft_ortho)

    def __init__(self, stage_budgets=(300, 300, 2000), learning_rate=0.05, tol=1e-10, patience=20,
                 lambda_max=LAMBDA_MAX, lambda0=1.0, precision_max=1e6, truncation=DEFAULT_TRUNCATION,
                 penalty=1.0):
        super().__init__(stage_budgets, learning_rate, tol, patience, lambda_max, lambda0,
                         precision_max, truncation)
        self.penalty = penalty

    def _config(self) -> FitConfig:
        cfg = super()._config()
        cfg.penalty = self.penalty
        return cfg

    def score_samples(self, X) -> np.ndarray:
        check_is_fitted(self, "distribution_")
        return soft_ortho_log_density(self.distribution_, _as_label_array(X, self.n_configs_))

    def sample(self, n_samples=1, random_state=None) -> np.ndarray:
        check_is_fitted(self, "distribution_")
        rng = np.random.default_rng(check_random_state(random_state).randint(2**32 - 1))
        dist = self.distribution_
        cols = [vvmf_sample(dist.l_vmf, rng, n_samples), vvmf_sample(dist.m_vmf, rng, n_samples),
                truncnorm_sample(dist.m_norm, rng, n_samples)[:, None]]
        for means, prec in ((dist.theta_means, dist.theta_precision), (dist.d_means, dist.d_precision)):
            cols.append(np.column_stack([truncnorm_sample(TruncatedNormalParams(mu, prec), rng, n_samples)
                                         for mu in means]))
        out = np.hstack(cols)
        k = dist.n_configs
        out[:, 7:7 + k] = np.mod(out[:, 7:7 + k], 2.0 * np.pi)
        return out


ESTIMATORS = {
    "dustnet": ScrewDistributionEstimator,
    "direct-f": DirectFScrewEstimator,
    "vm-soft-ortho": SoftOrthoScrewEstimator,
}

__all__ = ["ScrewDistributionEstimator", "DirectFScrewEstimator", "SoftOrthoScrewEstimator",
           "ESTIMATORS", "FitReport"]
