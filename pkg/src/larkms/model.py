"""Kernel shapes, resolution algebra, and the spectral intensity model.

A spectrum's expected intensity is

    mu(t) = gamma * ((1 - s) + s * (f(t) + b(t))),

where ``f`` is a sum of kernels (one per peak, parameterized by TOF location
tau, resolution rho and abundance eta), ``b`` is an exponentially decaying
matrix background, ``s`` is the fraction of intensity due to molecular
signal, and ``gamma`` is the overall scale.  Observations are modeled as
gamma-distributed with mean mu(t) and relative precision phi (variance
proportional to the mean), or as Gaussian with constant variance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

_SQRT_LN4 = math.sqrt(math.log(4.0))
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Relative offset added to intensities before gamma-likelihood evaluation so
# that exact zeros (guaranteed by standardization) stay inside the support.
GAMMA_OFFSET_FRACTION = 1e-6


class KernelKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    CAUCHY = "cauchy"


class LikelihoodKind(str, enum.Enum):
    GAMMA = "gamma"
    NORMAL = "normal"


@dataclass(frozen=True)
class PeakParams:
    """One protein peak: TOF location tau (us), resolution rho, abundance eta."""

    tau: float
    rho: float
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "eta", float(self.eta))
        if self.rho <= 0 or self.eta <= 0:
            raise ValueError("peak rho and eta must be > 0")


@dataclass(frozen=True)
class BackgroundParams:
    """Matrix background: decay time omega0 (us) and intensity eta0."""

    omega0: float
    eta0: float

    def __post_init__(self):
        object.__setattr__(self, "omega0", float(self.omega0))
        object.__setattr__(self, "eta0", float(self.eta0))
        if self.omega0 <= 0 or self.eta0 <= 0:
            raise ValueError("background omega0 and eta0 must be > 0")


@dataclass(frozen=True)
class ModelState:
    """Full parameter vector of the intensity model.

    ``phi`` is the relative precision under the gamma likelihood and the
    precision 1/sigma**2 under the Gaussian one.  ``big_r`` is the
    experiment-level resolution that centers the per-peak resolution prior.
    """

    gamma: float
    s: float
    peaks: tuple[PeakParams, ...]
    bg: BackgroundParams
    phi: float
    big_r: float

    def __post_init__(self):
        object.__setattr__(self, "peaks", tuple(self.peaks))
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if not 0.0 <= self.s <= 1.0:
            raise ValueError("signal fraction s must lie in [0, 1]")
        if self.phi <= 0 or self.big_r <= 0:
            raise ValueError("phi and big_r must be > 0")

    @property
    def n_peaks(self) -> int:
        return len(self.peaks)

    def peak_arrays(self):
        """Peak parameters as (tau, rho, eta) float arrays."""
        if not self.peaks:
            empty = np.empty(0)
            return empty, empty.copy(), empty.copy()
        tau = np.array([p.tau for p in self.peaks])
        rho = np.array([p.rho for p in self.peaks])
        eta = np.array([p.eta for p in self.peaks])
        return tau, rho, eta


def width_from_resolution(kind: KernelKind, tau, rho):
    """Kernel scale omega for a peak at tau with resolution rho = tau/FWHM."""
    tau = np.asarray(tau, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(tau <= 0) or np.any(rho <= 0):
        raise ValueError("tau and rho must be > 0")
    if kind == KernelKind.GAUSSIAN:
        out = tau / (2.0 * rho * _SQRT_LN4)
    else:
        out = tau / (2.0 * rho)
    return float(out) if out.ndim == 0 else out


def resolution_from_width(kind: KernelKind, tau, omega):
    """Inverse of :func:`width_from_resolution`."""
    tau = np.asarray(tau, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if np.any(tau <= 0) or np.any(omega <= 0):
        raise ValueError("tau and omega must be > 0")
    if kind == KernelKind.GAUSSIAN:
        out = tau / (2.0 * omega * _SQRT_LN4)
    else:
        out = tau / (2.0 * omega)
    return float(out) if out.ndim == 0 else out


def fwhm(kind: KernelKind, omega):
    """Full width at half maximum of a kernel with scale omega."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be > 0")
    if kind == KernelKind.GAUSSIAN:
        out = 2.0 * omega * _SQRT_LN4
    else:
        out = 2.0 * omega
    return float(out) if out.ndim == 0 else out


def kernel_eval(kind: KernelKind, t, tau, omega):
    """Kernel density at t for a peak centered at tau with scale omega."""
    t = np.asarray(t, dtype=float)
    if omega <= 0:
        raise ValueError("omega must be > 0")
    d = t - tau
    if kind == KernelKind.GAUSSIAN:
        out = np.exp(-(d * d) / (2.0 * omega * omega)) / (_SQRT_2PI * omega)
    else:
        out = omega / (math.pi * (omega * omega + d * d))
    return float(out) if out.ndim == 0 else out


def kernel_deriv(kind: KernelKind, t, tau, omega):
    """Analytic d/dt of :func:`kernel_eval`."""
    t = np.asarray(t, dtype=float)
    if omega <= 0:
        raise ValueError("omega must be > 0")
    d = t - tau
    if kind == KernelKind.GAUSSIAN:
        k = np.exp(-(d * d) / (2.0 * omega * omega)) / (_SQRT_2PI * omega)
        out = -d / (omega * omega) * k
    else:
        denom = omega * omega + d * d
        out = -2.0 * omega * d / (math.pi * denom * denom)
    return float(out) if out.ndim == 0 else out


def kernel_peak_height(kind: KernelKind, omega: float) -> float:
    """Kernel value at its center."""
    if kind == KernelKind.GAUSSIAN:
        return 1.0 / (_SQRT_2PI * omega)
    return 1.0 / (math.pi * omega)


def signature_eval(state: ModelState, kind: KernelKind, t):
    """Protein signature f(t) = sum_j eta_j * k(t; tau_j, omega_j)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for p in state.peaks:
        omega = width_from_resolution(kind, p.tau, p.rho)
        out += p.eta * kernel_eval(kind, t, p.tau, omega)
    return float(out) if out.ndim == 0 else out


def signature_deriv(state: ModelState, kind: KernelKind, t):
    """d/dt of the protein signature."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for p in state.peaks:
        omega = width_from_resolution(kind, p.tau, p.rho)
        out += p.eta * kernel_deriv(kind, t, p.tau, omega)
    return float(out) if out.ndim == 0 else out


def background_eval(bg: BackgroundParams, t, xi_a: float):
    """Matrix background (eta0/omega0) * exp(-(t - xi_a)/omega0) for t > xi_a."""
    t = np.asarray(t, dtype=float)
    out = np.where(
        t > xi_a,
        (bg.eta0 / bg.omega0) * np.exp(-np.clip(t - xi_a, 0.0, None) / bg.omega0),
        0.0,
    )
    return float(out) if out.ndim == 0 else out


def background_deriv(bg: BackgroundParams, t, xi_a: float):
    """d/dt of the matrix background (zero at and below xi_a)."""
    t = np.asarray(t, dtype=float)
    out = -background_eval(bg, t, xi_a) / bg.omega0
    return float(out) if np.ndim(out) == 0 else out


def mean_intensity(state: ModelState, kind: KernelKind, t, xi_a: float):
    """Expected intensity mu(t) = gamma * ((1-s) + s*(f(t) + b(t)))."""
    f = signature_eval(state, kind, t)
    b = background_eval(state.bg, t, xi_a)
    return state.gamma * ((1.0 - state.s) + state.s * (f + b))


def mean_intensity_deriv(state: ModelState, kind: KernelKind, t, xi_a: float):
    """d/dt of the expected intensity."""
    df = signature_deriv(state, kind, t)
    db = background_deriv(state.bg, t, xi_a)
    return state.gamma * state.s * (df + db)


def gamma_loglik(y: np.ndarray, mu: np.ndarray, phi: float) -> float:
    """Sum of log Ga(y_i; phi*mu_i, phi) densities; -inf on invalid input."""
    if phi <= 0 or np.any(mu <= 0) or np.any(y <= 0):
        return -math.inf
    alpha = phi * mu
    val = np.sum(
        alpha * math.log(phi) - gammaln(alpha) + (alpha - 1.0) * np.log(y) - phi * y
    )
    return float(val)


def normal_loglik(y: np.ndarray, mu: np.ndarray, sigma2: float) -> float:
    """Sum of log N(y_i; mu_i, sigma2) densities."""
    if sigma2 <= 0:
        return -math.inf
    resid = y - mu
    n = y.size
    return float(
        -0.5 * n * math.log(2.0 * math.pi * sigma2) - np.sum(resid * resid) / (2.0 * sigma2)
    )


@dataclass(frozen=True)
class ObservationModel:
    """Observation law selector.

    Under ``NORMAL`` the noise variance is carried by the state as 1/phi;
    ``sigma2`` supplies its starting value and ``sample_variance`` says
    whether the sampler treats it as unknown or keeps it fixed.
    """

    kind: LikelihoodKind = LikelihoodKind.GAMMA
    sample_variance: bool = True
    sigma2: float | None = None

    def __post_init__(self):
        if self.kind == LikelihoodKind.NORMAL and self.sigma2 is not None:
            if self.sigma2 <= 0:
                raise ValueError("sigma2 must be > 0")

    @property
    def updates_phi(self) -> bool:
        return self.kind == LikelihoodKind.GAMMA or self.sample_variance


def log_likelihood(
    state: ModelState,
    kind: KernelKind,
    obs: ObservationModel,
    spectrum,
) -> float:
    """Log likelihood of a spectrum under the chosen observation law.

    For the gamma law a fixed offset of GAMMA_OFFSET_FRACTION times the mean
    intensity is added to the data so that exact zeros remain in the support.
    """
    xi_a = spectrum.window[0]
    mu = mean_intensity(state, kind, spectrum.t, xi_a)
    if obs.kind == LikelihoodKind.GAMMA:
        y = spectrum.y + GAMMA_OFFSET_FRACTION * spectrum.mean_intensity
        return gamma_loglik(y, mu, state.phi)
    return normal_loglik(spectrum.y, mu, 1.0 / state.phi)
