import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from larkms.estimator import LarkSpectrumModel
from larkms.model import (
    BackgroundParams,
    KernelKind,
    LikelihoodKind,
    PeakParams,
)
from larkms.simulate import TruthSpec, generate_spectrum


@pytest.fixture(scope="module")
def synthetic_spectrum():
    truth = TruthSpec(
        peaks=(PeakParams(45.0, 250.0, 4.0), PeakParams(75.0, 250.0, 6.0)),
        background=BackgroundParams(25.0, 12.0),
        s=0.4,
        gamma=400.0,
        noise=LikelihoodKind.NORMAL,
        noise_scale=18.0,
        t_lo=10.0,
        t_hi=100.0,
        n_points=900,
        n_replicates=8,
    )
    out = generate_spectrum(truth, KernelKind.GAUSSIAN, np.random.default_rng(12))
    mean = out.mean()
    return truth, mean


def fitted(synthetic_spectrum, **overrides):
    truth, mean = synthetic_spectrum
    params = dict(
        kernel="gaussian",
        likelihood="normal",
        expected_peaks=10.0,
        mu_r=250.0,
        n_iter=6000,
        thin=10,
        seed=3,
        ma_refine=2,
    )
    params.update(overrides)
    est = LarkSpectrumModel(**params)
    return est.fit(mean.t, mean.y)


class TestSklearnProtocol:
    def test_get_set_params_roundtrip(self):
        est = LarkSpectrumModel(expected_peaks=7.0, seed=5)
        params = est.get_params()
        assert params["expected_peaks"] == 7.0
        est2 = LarkSpectrumModel().set_params(**params)
        assert est2.get_params() == params

    def test_clone(self):
        est = LarkSpectrumModel(expected_peaks=7.0, kernel="gaussian")
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            LarkSpectrumModel(expected_peaks=5.0).predict([[1.0]])

    def test_requires_expected_peaks(self):
        t = np.linspace(1, 10, 50)
        with pytest.raises(ValueError):
            LarkSpectrumModel().fit(t, np.ones_like(t))

    def test_rejects_bad_shapes(self):
        est = LarkSpectrumModel(expected_peaks=5.0)
        with pytest.raises(ValueError):
            est.fit(np.ones((4, 2)), np.ones(4))
        with pytest.raises(ValueError):
            est.fit([3.0, 2.0, 1.0], [0.0, 0.0, 0.0])  # decreasing grid


class TestFitPredict:
    def test_fit_populates_attributes(self, synthetic_spectrum):
        est = fitted(synthetic_spectrum)
        assert hasattr(est, "samples_")
        assert est.hp_report_.method == "HP"
        assert est.ma_report_.method == "MA"
        assert set(est.summary_) >= {"s", "phi", "big_r", "j_pm", "j_hp", "j_dv"}
        assert est.sigma_ is not None

    def test_finds_true_peaks(self, synthetic_spectrum):
        truth, _ = synthetic_spectrum
        est = fitted(synthetic_spectrum)
        found = est.peak_masses("HP")
        for true_mass in truth.true_masses():
            assert np.any(np.abs(found - true_mass) <= 0.003 * true_mass)

    def test_predict_tracks_data(self, synthetic_spectrum):
        truth, mean = synthetic_spectrum
        est = fitted(synthetic_spectrum)
        score = est.score(mean.t, mean.y)
        assert score > 0.8  # posterior mean explains most of the variance

    def test_accepts_column_vector_input(self, synthetic_spectrum):
        truth, mean = synthetic_spectrum
        est = fitted(synthetic_spectrum)
        preds_col = est.predict(mean.t[:50].reshape(-1, 1))
        preds_flat = est.predict(mean.t[:50])
        np.testing.assert_array_equal(preds_col, preds_flat)

    def test_deterministic_given_seed(self, synthetic_spectrum):
        a = fitted(synthetic_spectrum)
        b = fitted(synthetic_spectrum)
        assert [d.log_posterior for d in a.samples_.draws] == [
            d.log_posterior for d in b.samples_.draws
        ]

    def test_rho_min_filters_report(self, synthetic_spectrum):
        est_all = fitted(synthetic_spectrum)
        est_filtered = fitted(synthetic_spectrum, rho_min=1e6)
        assert len(est_filtered.hp_report_) == 0
        assert len(est_all.hp_report_) >= len(est_filtered.hp_report_)

    def test_gamma_likelihood_path(self, synthetic_spectrum):
        truth, mean = synthetic_spectrum
        est = LarkSpectrumModel(
            kernel="cauchy",
            likelihood="gamma",
            expected_peaks=10.0,
            mu_r=250.0,
            n_iter=3000,
            thin=10,
            seed=4,
            phi_block_width=10.0,
        )
        est.fit(mean.t, mean.y)
        assert est.sigma_ is None
        assert len(est.samples_.draws) > 0
