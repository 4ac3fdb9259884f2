"""Scikit-learn style estimator wrapping elicitation, sampling and peak reports.

``X`` is the TOF grid (1-d or single-column 2-d, microseconds) and ``y`` the
standardized intensities.  ``fit`` elicits every prior hyperparameter that is
not supplied explicitly, runs the reversible-jump chain, and exposes the
posterior draws and both peak reports as fitted attributes; ``predict``
evaluates the posterior mean intensity.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .model import KernelKind, LikelihoodKind, ObservationModel
from .peaks import (
    filter_by_resolution,
    hp_peaks,
    ma_peaks,
    posterior_mean_curve,
    posterior_summary,
)
from .priors import (
    DEFAULT_A_PHI,
    Hyperparameters,
    elicit_abundance,
    elicit_background,
    elicit_phi,
    elicit_scale,
    elicit_signal_fraction,
    estimate_noise_sd,
)
from .sampler import ChainConfig, run_chain
from .spectra import Calibration, Spectrum
from .validation import check_intensities, check_positive, check_tof_grid


class LarkSpectrumModel(BaseEstimator, RegressorMixin):
    """Bayesian kernel-mixture peak model fit by reversible-jump MCMC.

    Parameters
    ----------
    kernel : {"cauchy", "gaussian"}
        Peak shape.
    likelihood : {"gamma", "normal"}
        Observation law: gamma with variance proportional to the mean, or
        Gaussian with constant variance.
    expected_peaks : float
        Prior expected number of peaks (required; there is no safe default).
    n_iter, burnin, thin, seed :
        Chain length, burn-in count (default n_iter // 2), thinning stride
        and PRNG seed.
    mu_r, sigma2_r, sigma2_rho, sigma2_omega0 :
        Resolution-hierarchy and background-width prior constants.
    calib_u, calib_t0 :
        Quadratic TOF-to-mass calibration m/z = u * (t - t0)**2.
    noise_region : (lo, hi) or None
        TOF band used to elicit the signal-fraction prior; defaults to the
        final 5% of the window.
    background_window : (lo, hi) or None
        TOF band for the background decay fit; defaults to the first 10% of
        the window.
    sigma : float or None
        Fixed noise SD for the normal likelihood; estimated robustly from
        finest-scale differences when None.
    sigma_sampled : bool
        Sample the normal-likelihood variance instead of fixing it.
    phi_block_width : float
        Block width (microseconds) for the precision-prior elicitation.
    b_phi, a_s, omega0_hat, lambda0 : float or None
        Manual overrides for the data-elicited prior constants.
    rho_min : float
        Resolution threshold applied to the HP peak report.
    ma_refine : int
        Grid refinement factor for locating model-averaged peaks.
    move_probs, rw_scales, cache_refresh :
        Sampler tuning passed through to the chain configuration.
    """

    def __init__(
        self,
        kernel: str = "cauchy",
        likelihood: str = "gamma",
        expected_peaks: float | None = None,
        n_iter: int = 20000,
        burnin: int | None = None,
        thin: int = 10,
        seed: int = 0,
        mu_r: float = 200.0,
        sigma2_r: float = 0.49,
        sigma2_rho: float = 0.1225,
        sigma2_omega0: float = 0.25,
        calib_u: float = 1.0,
        calib_t0: float = 0.0,
        noise_region: tuple[float, float] | None = None,
        background_window: tuple[float, float] | None = None,
        sigma: float | None = None,
        sigma_sampled: bool = False,
        phi_block_width: float = 50.0,
        b_phi: float | None = None,
        a_s: float | None = None,
        omega0_hat: float | None = None,
        lambda0: float | None = None,
        rho_min: float = 0.0,
        ma_refine: int = 4,
        move_probs: dict | None = None,
        rw_scales: dict | None = None,
        cache_refresh: int = 1000,
    ):
        self.kernel = kernel
        self.likelihood = likelihood
        self.expected_peaks = expected_peaks
        self.n_iter = n_iter
        self.burnin = burnin
        self.thin = thin
        self.seed = seed
        self.mu_r = mu_r
        self.sigma2_r = sigma2_r
        self.sigma2_rho = sigma2_rho
        self.sigma2_omega0 = sigma2_omega0
        self.calib_u = calib_u
        self.calib_t0 = calib_t0
        self.noise_region = noise_region
        self.background_window = background_window
        self.sigma = sigma
        self.sigma_sampled = sigma_sampled
        self.phi_block_width = phi_block_width
        self.b_phi = b_phi
        self.a_s = a_s
        self.omega0_hat = omega0_hat
        self.lambda0 = lambda0
        self.rho_min = rho_min
        self.ma_refine = ma_refine
        self.move_probs = move_probs
        self.rw_scales = rw_scales
        self.cache_refresh = cache_refresh

    def _elicit(self, spectrum: Spectrum, calib: Calibration) -> Hyperparameters:
        t_lo, t_hi = spectrum.window
        nu_j = check_positive(self.expected_peaks, "expected_peaks")
        lam, eps = elicit_abundance(nu_j, t_lo, t_hi)
        gamma_fixed = elicit_scale(spectrum)
        if gamma_fixed <= 0:
            raise ValueError("spectrum has zero mean intensity; cannot set the scale")
        if self.b_phi is not None:
            a_phi, b_phi = DEFAULT_A_PHI, check_positive(self.b_phi, "b_phi")
        elif self.likelihood == "normal" and not self.sigma_sampled:
            # the precision prior never enters a fixed-variance normal fit
            a_phi, b_phi = DEFAULT_A_PHI, 1.0
        else:
            a_phi, b_phi = elicit_phi(spectrum, block_width=self.phi_block_width)
        if self.a_s is not None:
            a_s, b_s = check_positive(self.a_s, "a_s"), 1.0
        else:
            a_s, b_s = elicit_signal_fraction(spectrum, self.noise_region)
        if self.omega0_hat is not None and self.lambda0 is not None:
            omega0_hat = check_positive(self.omega0_hat, "omega0_hat")
            lam0 = check_positive(self.lambda0, "lambda0")
        else:
            window = self.background_window
            if window is None:
                window = (t_lo, t_lo + 0.10 * (t_hi - t_lo))
            omega0_hat, lam0 = elicit_background(
                spectrum, calib, eps, tof_window=window
            )
        return Hyperparameters(
            nu_j=nu_j,
            lam=lam,
            eps=eps,
            t_lo=t_lo,
            t_hi=t_hi,
            mu_r=self.mu_r,
            sigma2_r=self.sigma2_r,
            sigma2_rho=self.sigma2_rho,
            a_phi=a_phi,
            b_phi=b_phi,
            a_s=a_s,
            b_s=b_s,
            lam0=lam0,
            omega0_hat=omega0_hat,
            sigma2_omega0=self.sigma2_omega0,
            gamma_fixed=gamma_fixed,
        )

    def fit(self, X, y):
        t = check_tof_grid(X)
        intensities = check_intensities(y, t.size)
        spectrum = Spectrum(t, intensities)
        calib = Calibration(u=self.calib_u, t0=self.calib_t0)
        kind = KernelKind(self.kernel)
        lik = LikelihoodKind(self.likelihood)

        self.hyper_ = self._elicit(spectrum, calib)
        if lik == LikelihoodKind.NORMAL:
            sigma = self.sigma if self.sigma is not None else estimate_noise_sd(spectrum)
            self.sigma_ = check_positive(sigma, "sigma")
            obs = ObservationModel(
                kind=lik, sample_variance=self.sigma_sampled, sigma2=self.sigma_**2
            )
        else:
            self.sigma_ = None
            obs = ObservationModel(kind=lik)

        burnin = self.n_iter // 2 if self.burnin is None else self.burnin
        cfg = ChainConfig(
            n_iter=self.n_iter,
            n_burn=burnin,
            thin=self.thin,
            seed=self.seed,
            move_probs=self.move_probs,
            rw_scales=self.rw_scales,
            cache_refresh=self.cache_refresh,
        )
        self.samples_ = run_chain(spectrum, self.hyper_, kind, obs, cfg)

        report = hp_peaks(self.samples_, calib)
        if self.rho_min > 0:
            report = filter_by_resolution(report, self.rho_min)
        self.hp_report_ = report
        grid = np.linspace(t[0], t[-1], (t.size - 1) * max(1, int(self.ma_refine)) + 1)
        self.ma_report_ = ma_peaks(self.samples_, grid, kind, calib)
        self.summary_ = posterior_summary(self.samples_, self.hp_report_, self.ma_report_)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        if not hasattr(self, "samples_"):
            raise NotFittedError("call fit before predict")
        points = np.asarray(X, dtype=float)
        if points.ndim == 2 and points.shape[1] == 1:
            points = points[:, 0]
        if points.ndim != 1:
            raise ValueError(f"expected 1-d or (n, 1) TOF input, got {points.shape}")
        return posterior_mean_curve(self.samples_, points)

    def peak_masses(self, method: str = "HP") -> np.ndarray:
        """Identified peak masses (Da/e) from the fitted reports."""
        if not hasattr(self, "samples_"):
            raise NotFittedError("call fit before peak_masses")
        report = self.hp_report_ if method.upper() == "HP" else self.ma_report_
        return report.masses
