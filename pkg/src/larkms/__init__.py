"""Bayesian kernel-mixture modeling of MALDI-TOF spectra.

Fits an adaptive sum of Gaussian or Cauchy peaks plus an exponential matrix
background to a spectrum by reversible-jump MCMC, identifies peaks from the
posterior, and evaluates detections against known truth.
"""

from .estimator import LarkSpectrumModel
from .errors import (
    ConfigError,
    ElicitationError,
    LarkError,
    SamplerError,
    SpectrumFormatError,
)
from .model import (
    BackgroundParams,
    KernelKind,
    LikelihoodKind,
    ModelState,
    ObservationModel,
    PeakParams,
    background_eval,
    fwhm,
    kernel_deriv,
    kernel_eval,
    log_likelihood,
    mean_intensity,
    signature_eval,
    width_from_resolution,
)
from .peaks import (
    MatchResult,
    PeakReport,
    filter_by_resolution,
    hp_peaks,
    ma_peaks,
    match_peaks,
    posterior_mean_curve,
)
from .priors import (
    Hyperparameters,
    elicit_abundance,
    elicit_background,
    elicit_phi,
    elicit_scale,
    elicit_signal_fraction,
    log_prior,
    sample_prior,
    solve_lambda_eps,
)
from .sampler import (
    ChainConfig,
    ChainEngine,
    PosteriorSamples,
    init_mode_seek,
    run_chain,
)
from .simulate import TruthSpec, generate_spectrum, mean_of_replicates
from .spectra import (
    Calibration,
    RawSpectrum,
    Spectrum,
    clip_range,
    load_spectrum,
    mean_spectrum,
    mz_to_tof,
    standardize,
    tof_to_mz,
)
from .special import (
    exp_integral_e1,
    trunc_gamma_logpdf,
    trunc_gamma_mean,
    trunc_gamma_sample,
)

__version__ = "0.1.0"
