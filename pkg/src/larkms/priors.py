"""Prior construction: data-based elicitation, joint density, ancestral sampling.

The joint prior factors as

    J ~ Geometric with mean nu_J (support 0, 1, ...),
    tau_j ~ iid Uniform(T0, T1),
    log R ~ N(log mu_R, sigma2_R),   log rho_j | R ~ iid N(log R, sigma2_rho),
    eta_j ~ iid truncated gamma (alpha=0, rate lam, truncation eps),
    log omega0 ~ N(log omega0_hat, sigma2_omega0),
    eta0 ~ truncated gamma (alpha=0, rate lam0, truncation eps),
    s ~ Beta(a_s, b_s),   phi ~ Gamma(a_phi, rate b_phi),

with the overall scale gamma fixed at the observed mean intensity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .errors import ElicitationError
from .model import BackgroundParams, ModelState, PeakParams
from .special import (
    exp_integral_e1,
    trunc_gamma_logpdf,
    trunc_gamma_mean,
    trunc_gamma_sample,
    trunc_gamma_sample_array,
)
from .spectra import Calibration, Spectrum, mz_to_tof

# Ratio of the minimum detectable abundance to the mean abundance: the
# midpoint of the 5-10% expert range for the smallest distinguishable peak.
MIN_DETECTABLE_FRACTION = 0.075

# Defaults carried over across experiments.
DEFAULT_SIGMA2_RHO = 0.1225  # 0.35**2, individual-resolution dispersion
DEFAULT_SIGMA2_R = 0.49  # 0.7**2, experiment-resolution dispersion
DEFAULT_SIGMA2_OMEGA0 = 0.25
DEFAULT_A_PHI = 0.25  # coefficient of variation 2 for the precision prior


@dataclass(frozen=True)
class Hyperparameters:
    """All prior constants for one run."""

    nu_j: float  # expected number of peaks
    lam: float  # abundance rate
    eps: float  # abundance truncation (minimum detectable abundance)
    t_lo: float  # TOF window start (xi_a)
    t_hi: float  # TOF window end (xi_b)
    mu_r: float = 200.0  # experiment resolution center
    sigma2_r: float = DEFAULT_SIGMA2_R
    sigma2_rho: float = DEFAULT_SIGMA2_RHO
    a_phi: float = DEFAULT_A_PHI
    b_phi: float = 1.0
    a_s: float = 1.0
    b_s: float = 1.0
    lam0: float = 0.001  # background abundance rate
    omega0_hat: float = 100.0  # background decay center
    sigma2_omega0: float = DEFAULT_SIGMA2_OMEGA0
    gamma_fixed: float = 1.0  # overall scale, fixed at the mean intensity

    def __post_init__(self):
        if not self.t_lo < self.t_hi:
            raise ValueError("need t_lo < t_hi")
        positive = {
            "nu_j": self.nu_j,
            "lam": self.lam,
            "eps": self.eps,
            "mu_r": self.mu_r,
            "sigma2_r": self.sigma2_r,
            "sigma2_rho": self.sigma2_rho,
            "a_phi": self.a_phi,
            "b_phi": self.b_phi,
            "a_s": self.a_s,
            "b_s": self.b_s,
            "lam0": self.lam0,
            "omega0_hat": self.omega0_hat,
            "sigma2_omega0": self.sigma2_omega0,
            "gamma_fixed": self.gamma_fixed,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ValueError(f"hyperparameter {name} must be > 0, got {value}")

    @property
    def window_length(self) -> float:
        return self.t_hi - self.t_lo

    def with_updates(self, **kwargs) -> "Hyperparameters":
        return replace(self, **kwargs)


def solve_lambda_eps() -> float:
    """Root x of x * exp(x) * E1(x) = MIN_DETECTABLE_FRACTION on (0, 1).

    x = lam * eps links the abundance rate to the truncation point; the
    left side is increasing on (0, 1) so the root is unique.
    """
    target = MIN_DETECTABLE_FRACTION

    def g(x):
        return x * math.exp(x) * exp_integral_e1(x) - target

    return brentq(g, 1e-12, 1.0, xtol=1e-12, rtol=1e-12)


def elicit_scale(spectrum: Spectrum) -> float:
    """Overall scale gamma: the mean standardized intensity."""
    return spectrum.mean_intensity


def elicit_abundance(nu_j: float, t_lo: float, t_hi: float) -> tuple[float, float]:
    """Abundance prior (lam, eps) from the expected peak count and TOF window.

    eps makes the normalized signal have unit prior mean; lam then follows
    from the minimum-detectable-abundance constraint.
    """
    if not t_hi > t_lo:
        raise ValueError("need t_hi > t_lo")
    if nu_j <= 0:
        raise ValueError("nu_j must be > 0")
    eps = MIN_DETECTABLE_FRACTION * (t_hi - t_lo) / nu_j
    lam = solve_lambda_eps() / eps
    return lam, eps


def elicit_phi(spectrum: Spectrum, block_width: float = 50.0) -> tuple[float, float]:
    """Precision prior (a_phi, b_phi) from blockwise mean/variance regression.

    Intensities are binned into ``block_width``-microsecond blocks; the
    through-origin slope of block means on block variances estimates the
    mean-to-variance ratio phi, which becomes the prior mean a_phi/b_phi
    with a_phi fixed at 0.25.
    """
    edges = np.arange(spectrum.t[0], spectrum.t[-1] + block_width, block_width)
    means, variances = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (spectrum.t >= lo) & (spectrum.t < hi)
        if np.count_nonzero(sel) < 2:
            continue
        block = spectrum.y[sel]
        means.append(np.mean(block))
        variances.append(np.var(block, ddof=1))
    if len(means) < 3:
        raise ElicitationError(
            "b_phi: fewer than 3 usable blocks; supply b_phi manually"
        )
    v = np.asarray(variances)
    m = np.asarray(means)
    denom = float(np.sum(v * v))
    if denom <= 0:
        raise ElicitationError("b_phi: zero block variances; supply b_phi manually")
    slope = float(np.sum(m * v)) / denom
    if slope <= 0:
        raise ElicitationError(
            "b_phi: non-positive mean/variance slope; supply b_phi manually"
        )
    return DEFAULT_A_PHI, DEFAULT_A_PHI / slope


def elicit_background(
    spectrum: Spectrum,
    calib: Calibration,
    eps: float,
    mz_window: tuple[float, float] = (2000.0, 3500.0),
    tof_window: tuple[float, float] | None = None,
) -> tuple[float, float]:
    """Background prior (omega0_hat, lam0) by log-linear fit of the early decay.

    Fits log intensity against TOF over the initial segment (by default the
    2-3.5 kDa/e band mapped through the calibration), reading off the decay
    time from the slope and the intensity from the intercept; lam0 is then
    the truncated-gamma rate whose mean equals that intensity.
    """
    if tof_window is None:
        tof_window = (mz_to_tof(mz_window[0], calib), mz_to_tof(mz_window[1], calib))
    lo, hi = tof_window
    # the model background vanishes exactly at the window start, so that
    # boundary sample carries no decay information
    sel = (spectrum.t >= lo) & (spectrum.t <= hi) & (spectrum.t > spectrum.window[0])
    if np.count_nonzero(sel) < 3:
        raise ElicitationError(
            f"omega0_hat: background window [{lo:.4g}, {hi:.4g}] us has fewer "
            "than 3 samples; supply omega0_hat and lambda0 manually"
        )
    t = spectrum.t[sel]
    y = spectrum.y[sel] + 1e-6 * spectrum.mean_intensity
    slope, intercept = np.polyfit(t, np.log(y), 1)
    if slope >= 0:
        raise ElicitationError(
            "omega0_hat: background does not decay; supply omega0_hat and "
            "lambda0 manually"
        )
    omega0_hat = -1.0 / slope
    xi_a = spectrum.window[0]
    eta0_hat = omega0_hat * math.exp(intercept + slope * xi_a)
    lam0 = solve_rate_for_mean(eta0_hat, eps)
    return float(omega0_hat), float(lam0)


def solve_rate_for_mean(mean: float, eps: float) -> float:
    """Rate lam with truncated-gamma mean equal to ``mean`` (requires mean > eps)."""
    if mean <= eps:
        raise ElicitationError(
            f"lambda0: target mean {mean:.4g} does not exceed truncation {eps:.4g}"
        )

    def g(log_lam):
        return trunc_gamma_mean(math.exp(log_lam), eps) - mean

    lo, hi = -5.0, 5.0
    while g(lo) < 0:
        lo -= 5.0
        if lo < -200:
            raise ElicitationError("lambda0: rate bracket underflow")
    while g(hi) > 0:
        hi += 5.0
        if hi > 200:
            raise ElicitationError("lambda0: rate bracket overflow")
    return math.exp(brentq(g, lo, hi, xtol=1e-13, rtol=1e-13))


def elicit_signal_fraction(
    spectrum: Spectrum, noise_region: tuple[float, float] | None = None
) -> tuple[float, float]:
    """Signal-fraction prior (a_s, b_s) from a low-intensity noise region.

    With r the noise-to-overall mean-intensity ratio, the Beta(a_s, 1) prior
    gets mean 1 - r, so its mode sits at one whenever the noise mean is
    below half the overall mean.  Defaults to the final 5% of the window.
    """
    if noise_region is None:
        lo, hi = spectrum.window
        noise_region = (hi - 0.05 * (hi - lo), hi)
    sel = (spectrum.t >= noise_region[0]) & (spectrum.t <= noise_region[1])
    if not np.any(sel):
        raise ElicitationError("a_s: empty noise region; supply a_s manually")
    y_bar = spectrum.mean_intensity
    if y_bar <= 0:
        raise ElicitationError("a_s: zero overall mean intensity")
    r = float(np.mean(spectrum.y[sel])) / y_bar
    if r >= 1.0:
        raise ElicitationError(
            f"a_s: noise mean exceeds overall mean (ratio {r:.3g}); supply "
            "a_s manually"
        )
    if r <= 0.0:
        raise ElicitationError("a_s: noise region has zero mean intensity")
    return (1.0 - r) / r, 1.0


def estimate_noise_sd(spectrum: Spectrum) -> float:
    """Robust noise SD from finest-scale detail differences.

    Median absolute deviation of (y[2i+1] - y[2i]) / sqrt(2), scaled by the
    0.6745 normal consistency constant; a plug-in noise scale for the
    constant-variance Gaussian observation model.
    """
    y = spectrum.y
    n_pairs = y.size // 2
    detail = (y[1 : 2 * n_pairs : 2] - y[0 : 2 * n_pairs : 2]) / math.sqrt(2.0)
    mad = float(np.median(np.abs(detail - np.median(detail))))
    sd = mad / 0.6745
    if sd <= 0:
        raise ElicitationError("sigma: zero robust noise estimate; supply sigma")
    return sd


def lognormal_logpdf(x: float, log_center: float, variance: float) -> float:
    if x <= 0:
        return -math.inf
    z = math.log(x) - log_center
    return -math.log(x) - 0.5 * math.log(2.0 * math.pi * variance) - z * z / (
        2.0 * variance
    )


def beta_logpdf(x: float, a: float, b: float) -> float:
    if not 0.0 < x < 1.0:
        return -math.inf
    return float(
        (a - 1.0) * math.log(x)
        + (b - 1.0) * math.log1p(-x)
        + gammaln(a + b)
        - gammaln(a)
        - gammaln(b)
    )


def gamma_logpdf(x: float, a: float, rate: float) -> float:
    if x <= 0:
        return -math.inf
    return float(
        a * math.log(rate) - gammaln(a) + (a - 1.0) * math.log(x) - rate * x
    )


def geometric_logpmf(j: int, nu: float) -> float:
    if j < 0:
        return -math.inf
    return -math.log1p(nu) + j * (math.log(nu) - math.log1p(nu))


def peak_triplet_logpdf(peak: PeakParams, big_r: float, h: Hyperparameters) -> float:
    """Joint prior density of one (tau, rho, eta) triplet given R."""
    if not h.t_lo <= peak.tau <= h.t_hi:
        return -math.inf
    lp = -math.log(h.window_length)
    lp += lognormal_logpdf(peak.rho, math.log(big_r), h.sigma2_rho)
    lp += trunc_gamma_logpdf(peak.eta, h.lam, h.eps)
    return lp


def log_prior(state: ModelState, h: Hyperparameters) -> float:
    """Joint log prior density of a model state; -inf off support."""
    lp = geometric_logpmf(state.n_peaks, h.nu_j)
    lp += lognormal_logpdf(state.big_r, math.log(h.mu_r), h.sigma2_r)
    log_r = math.log(state.big_r)
    for peak in state.peaks:
        if not h.t_lo <= peak.tau <= h.t_hi:
            return -math.inf
        lp += -math.log(h.window_length)
        lp += lognormal_logpdf(peak.rho, log_r, h.sigma2_rho)
        lp += trunc_gamma_logpdf(peak.eta, h.lam, h.eps)
    lp += lognormal_logpdf(state.bg.omega0, math.log(h.omega0_hat), h.sigma2_omega0)
    lp += trunc_gamma_logpdf(state.bg.eta0, h.lam0, h.eps)
    lp += beta_logpdf(state.s, h.a_s, h.b_s)
    lp += gamma_logpdf(state.phi, h.a_phi, h.b_phi)
    return lp


def sample_peak_triplet(
    rng: np.random.Generator, big_r: float, h: Hyperparameters
) -> PeakParams:
    """Ancestral draw of one peak triplet given the experiment resolution."""
    tau = rng.uniform(h.t_lo, h.t_hi)
    rho = math.exp(rng.normal(math.log(big_r), math.sqrt(h.sigma2_rho)))
    eta = trunc_gamma_sample(rng, h.lam, h.eps)
    return PeakParams(tau, rho, eta)


def sample_prior(rng: np.random.Generator, h: Hyperparameters) -> ModelState:
    """Exact ancestral draw from the joint prior."""
    n_peaks = int(rng.geometric(1.0 / (1.0 + h.nu_j)) - 1)
    big_r = math.exp(rng.normal(math.log(h.mu_r), math.sqrt(h.sigma2_r)))
    tau = rng.uniform(h.t_lo, h.t_hi, size=n_peaks)
    rho = np.exp(rng.normal(math.log(big_r), math.sqrt(h.sigma2_rho), size=n_peaks))
    eta = trunc_gamma_sample_array(rng, h.lam, h.eps, n_peaks)
    peaks = tuple(
        PeakParams(float(t), float(r), float(e)) for t, r, e in zip(tau, rho, eta)
    )
    bg = BackgroundParams(
        omega0=math.exp(
            rng.normal(math.log(h.omega0_hat), math.sqrt(h.sigma2_omega0))
        ),
        eta0=trunc_gamma_sample(rng, h.lam0, h.eps),
    )
    s = float(rng.beta(h.a_s, h.b_s))
    phi = float(rng.gamma(h.a_phi, 1.0 / h.b_phi))
    return ModelState(
        gamma=h.gamma_fixed, s=s, peaks=peaks, bg=bg, phi=phi, big_r=big_r
    )
