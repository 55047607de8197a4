import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import random_rotation
from screwdist.estimators import (
    ESTIMATORS,
    DirectFScrewEstimator,
    ScrewDistributionEstimator,
    SoftOrthoScrewEstimator,
)
from screwdist.geometry import Configuration, ScrewAxis
from screwdist.distributions import polar_factor
from screwdist.synthetic import generate_dataset
from screwdist.validation import (
    InvalidLabel,
    array_to_labels,
    check_label_array,
    label_to_row,
    labels_to_array,
    row_to_label,
)

SMALL_BUDGET = (40, 40, 80)


def scattered_labels(rng, n, k=3, spread=0.3):
    M = random_rotation(rng)[:, :2]
    labels = []
    for _ in range(n):
        X = polar_factor(M + spread * rng.normal(size=(3, 2)))
        labels.append((ScrewAxis(X[:, 0], X[:, 1], abs(0.3 + 0.05 * rng.normal())),
                       [Configuration(0.5 * (i + 1) + 0.05 * rng.normal(), abs(0.02 * rng.normal()))
                        for i in range(k)]))
    return labels_to_array(labels)


@pytest.fixture(scope="module")
def data():
    return scattered_labels(np.random.default_rng(3), 30)


# --- validation helpers


def test_row_roundtrip(data):
    label = row_to_label(data[0])
    np.testing.assert_array_equal(label_to_row(label), data[0])
    assert len(array_to_labels(data)) == len(data)


def test_check_accepts_sequences_and_arrays():
    seqs = generate_dataset("revolute", 4, seed=1)
    from_seqs = check_label_array(seqs)
    from_labels = check_label_array([s.label for s in seqs])
    np.testing.assert_array_equal(from_seqs, from_labels)
    np.testing.assert_array_equal(check_label_array(from_seqs[0]), from_seqs[:1])


@pytest.mark.parametrize("column, value", [(0, 2.0), (6, -0.1), (7, 7.0), (-1, -0.5), (2, np.nan)])
def test_check_rejects_invariant_violations(data, column, value):
    bad = data.copy()
    bad[1, column] = value
    with pytest.raises(InvalidLabel):
        check_label_array(bad)


def test_check_rejects_shapes(data):
    with pytest.raises(InvalidLabel):
        check_label_array(data[:, :8])
    with pytest.raises(InvalidLabel):
        check_label_array(data, n_configs=4)
    with pytest.raises(InvalidLabel):
        check_label_array(np.empty((0, 13)))
    with pytest.raises(InvalidLabel):
        labels_to_array([])


def test_invalid_label_is_value_error():
    assert issubclass(InvalidLabel, ValueError)


# --- estimator API


@pytest.mark.parametrize("name", sorted(ESTIMATORS))
def test_params_and_clone(name):
    est = ESTIMATORS[name](stage_budgets=SMALL_BUDGET, learning_rate=0.02)
    params = est.get_params()
    assert params["stage_budgets"] == SMALL_BUDGET and params["learning_rate"] == 0.02
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(tol=1e-6)
    assert twin.tol == 1e-6 and est.tol == 1e-10


def test_soft_ortho_exposes_penalty():
    assert SoftOrthoScrewEstimator(penalty=3.0).get_params()["penalty"] == 3.0
    assert "penalty" not in ScrewDistributionEstimator().get_params()


@pytest.mark.parametrize("name", sorted(ESTIMATORS))
def test_unfitted_raises(name, data):
    with pytest.raises(NotFittedError):
        ESTIMATORS[name]().predict(data)


@pytest.mark.parametrize("cls", [ScrewDistributionEstimator, DirectFScrewEstimator, SoftOrthoScrewEstimator])
def test_fit_predict_score_sample(cls, data):
    est = cls(stage_budgets=SMALL_BUDGET).fit(data)
    assert est.n_configs_ == 3 and est.n_features_in_ == data.shape[1]
    pred = est.predict(data[:5])
    assert pred.shape == (5, data.shape[1])
    assert np.all(pred == pred[0])
    scores = est.score_samples(data)
    assert scores.shape == (len(data),) and np.all(np.isfinite(scores))
    assert est.score(data) == pytest.approx(scores.mean())
    draws = est.sample(7, random_state=0)
    assert draws.shape == (7, data.shape[1])
    np.testing.assert_array_equal(draws, est.sample(7, random_state=0))
    k = est.n_configs_
    assert np.all((draws[:, 7:7 + k] >= 0) & (draws[:, 7:7 + k] < 2 * np.pi))
    assert np.all(draws[:, 6] >= 0) and np.all(draws[:, 7 + k:] >= 0)


@pytest.mark.parametrize("cls", [ScrewDistributionEstimator, DirectFScrewEstimator])
def test_stiefel_outputs_are_orthonormal(cls, data):
    est = cls(stage_budgets=SMALL_BUDGET).fit(data)
    check_label_array(est.predict(data[:1]))
    check_label_array(est.sample(20, random_state=1))


def test_score_matches_negative_nll(data):
    from screwdist.estimation import nll
    est = ScrewDistributionEstimator(stage_budgets=SMALL_BUDGET).fit(data)
    assert est.score_samples(data).sum() == pytest.approx(-nll(est.distribution_, data), rel=1e-9)


def test_fitted_density_beats_unrelated_labels(data):
    est = ScrewDistributionEstimator(stage_budgets=SMALL_BUDGET).fit(data)
    other = scattered_labels(np.random.default_rng(77), 30)
    assert est.score(data) > est.score(other)


def test_score_rejects_wrong_width(data):
    est = ScrewDistributionEstimator(stage_budgets=SMALL_BUDGET).fit(data)
    wider = scattered_labels(np.random.default_rng(1), 4, k=4)
    with pytest.raises(InvalidLabel):
        est.score_samples(wider)


def test_fit_accepts_labeled_sequences():
    seqs = generate_dataset("prismatic", 8, seed=2)
    est = ScrewDistributionEstimator(stage_budgets=SMALL_BUDGET).fit(seqs)
    assert est.n_configs_ == seqs[0].n_configs
