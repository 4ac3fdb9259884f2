"""Reversible-jump MCMC over peak configurations.

The chain mixes six move types: peak birth and death (dimension +-1, the new
triplet proposed from its conditional prior so the proposal density cancels
the prior terms), a within-dimension random walk on a randomly chosen triplet
(log scale for rho and eta), peak split and merge (dimension +-1 with an
exact deterministic inverse pair and full dimension-matching Jacobian), and a
sweep of random-walk updates over the fixed-dimension parameters (logit scale
for the signal fraction, log scale elsewhere).

The merge move considers unordered pairs whose separation is below twice the
width at the prior-center resolution; a split always produces such a pair, so
the two moves share their support exactly.  For a split of peak (tau, rho,
eta) with shares/offsets (u1, u2, u3):

    tau_a = tau - u2*d*(1-u1),  tau_b = tau + u2*d*u1,    d = tau / mu_R,
    eta_a = u1*eta,             eta_b = (1-u1)*eta,
    log rho_a = log rho + (1-u1)*u3,  log rho_b = log rho - u1*u3,

so the abundance-weighted mean TOF, total abundance and abundance-weighted
mean log resolution of the children reproduce the parent exactly, and
|d(children)/d(parent, u)| = eta * d * rho_a * rho_b / rho in the natural
(tau, rho, eta) coordinates the prior densities live in.

Likelihood evaluations reuse a cached signature curve that is updated
incrementally by each move and fully recomputed on a fixed schedule to bound
floating-point drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls
from scipy.special import gammaln

from .errors import SamplerError
from .io import file_header
from .model import (
    GAMMA_OFFSET_FRACTION,
    BackgroundParams,
    KernelKind,
    LikelihoodKind,
    ModelState,
    ObservationModel,
    PeakParams,
    kernel_eval,
    kernel_peak_height,
    width_from_resolution,
)
from .priors import (
    Hyperparameters,
    beta_logpdf,
    gamma_logpdf,
    geometric_logpmf,
    lognormal_logpdf,
    sample_peak_triplet,
    trunc_gamma_mean,
)
from .special import trunc_gamma_logpdf
from .spectra import Spectrum

MOVE_NAMES = ("birth", "death", "update", "split", "merge", "fixed")

DEFAULT_MOVE_PROBS = {
    "birth": 0.1,
    "death": 0.1,
    "update": 0.3,
    "split": 0.1,
    "merge": 0.1,
    "fixed": 0.3,
}

DEFAULT_RW_SCALES = {
    "tau": 0.1,
    "log_rho": 0.1,
    "log_eta": 0.1,
    "logit_s": 0.1,
    "log_phi": 0.1,
    "log_r": 0.1,
    "log_omega0": 0.1,
    "log_eta0": 0.1,
}

_FIXED_DIM_PARAMS = ("s", "phi", "big_r", "omega0", "eta0")


@dataclass(frozen=True)
class ChainConfig:
    """Chain mechanics: lengths, seed, move mixture and step sizes."""

    n_iter: int
    n_burn: int = 0
    thin: int = 1
    seed: int = 0
    move_probs: dict[str, float] | None = None
    rw_scales: dict[str, float] | None = None
    prior_only: bool = False
    cache_refresh: int = 1000

    def __post_init__(self):
        if self.n_burn >= self.n_iter:
            raise ValueError("need n_burn < n_iter")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        probs = dict(DEFAULT_MOVE_PROBS if self.move_probs is None else self.move_probs)
        unknown = set(probs) - set(MOVE_NAMES)
        if unknown:
            raise ValueError(f"unknown move names: {sorted(unknown)}")
        for name in MOVE_NAMES:
            probs.setdefault(name, 0.0)
        values = np.array([probs[name] for name in MOVE_NAMES])
        if np.any(values < 0) or abs(values.sum() - 1.0) > 1e-9:
            raise ValueError("move probabilities must be nonnegative and sum to 1")
        # Each trans-dimensional move needs its reverse to be proposable.
        for fwd, rev in (("birth", "death"), ("split", "merge")):
            if (probs[fwd] > 0) != (probs[rev] > 0):
                raise ValueError(f"moves {fwd} and {rev} must be enabled together")
        object.__setattr__(self, "move_probs", probs)
        scales = dict(DEFAULT_RW_SCALES)
        scales.update(self.rw_scales or {})
        object.__setattr__(self, "rw_scales", scales)


@dataclass
class MoveStats:
    """Per-move proposal/acceptance counts, plus fixed-dim per-parameter detail."""

    proposed: dict[str, int] = field(
        default_factory=lambda: {name: 0 for name in MOVE_NAMES}
    )
    accepted: dict[str, int] = field(
        default_factory=lambda: {name: 0 for name in MOVE_NAMES}
    )
    param_proposed: dict[str, int] = field(
        default_factory=lambda: {name: 0 for name in _FIXED_DIM_PARAMS}
    )
    param_accepted: dict[str, int] = field(
        default_factory=lambda: {name: 0 for name in _FIXED_DIM_PARAMS}
    )


@dataclass(frozen=True)
class SampleDraw:
    iteration: int
    state: ModelState
    log_posterior: float


@dataclass(frozen=True)
class RunInfo:
    """Run constants needed to re-evaluate stored draws.

    ``offset`` is the fixed value added to intensities before
    gamma-likelihood evaluation (zero under the normal likelihood).
    """

    kernel: KernelKind
    likelihood: LikelihoodKind
    sample_variance: bool
    window: tuple[float, float]
    gamma: float
    seed: int
    n_iter: int
    n_burn: int
    thin: int
    offset: float = 0.0


@dataclass
class PosteriorSamples:
    draws: list[SampleDraw]
    move_stats: MoveStats
    info: RunInfo

    def __len__(self) -> int:
        return len(self.draws)

    def peak_counts(self) -> np.ndarray:
        return np.array([d.state.n_peaks for d in self.draws])

    def field_trace(self, name: str) -> np.ndarray:
        if name in ("omega0", "eta0"):
            return np.array([getattr(d.state.bg, name) for d in self.draws])
        return np.array([getattr(d.state, name) for d in self.draws])

    def best_draw(self) -> SampleDraw:
        """Stored draw with the highest log posterior; ties go to the earliest."""
        if not self.draws:
            raise ValueError("no stored draws")
        best = self.draws[0]
        for d in self.draws[1:]:
            if d.log_posterior > best.log_posterior:
                best = d
        return best


def _normal_logpdf(x: float, sd: float) -> float:
    return -0.5 * math.log(2.0 * math.pi * sd * sd) - 0.5 * (x / sd) ** 2


class ChainEngine:
    """Mutable sampler state with incrementally maintained likelihood caches."""

    def __init__(
        self,
        spectrum: Spectrum,
        h: Hyperparameters,
        kind: KernelKind,
        obs: ObservationModel,
        state: ModelState,
        rw_scales: dict[str, float] | None = None,
        move_probs: dict[str, float] | None = None,
        prior_only: bool = False,
    ):
        self.h = h
        self.kind = kind
        self.obs = obs
        self.prior_only = prior_only
        self.move_probs = dict(DEFAULT_MOVE_PROBS if move_probs is None else move_probs)
        self.scales = dict(DEFAULT_RW_SCALES)
        self.scales.update(rw_scales or {})
        self.split_u3_scale = self.scales.get("split_u3") or math.sqrt(h.sigma2_rho)

        self.t = spectrum.t
        self.xi_a = spectrum.window[0]
        if obs.kind == LikelihoodKind.GAMMA:
            self.y = spectrum.y + GAMMA_OFFSET_FRACTION * spectrum.mean_intensity
        else:
            self.y = spectrum.y.copy()
        self.log_y = np.log(self.y) if obs.kind == LikelihoodKind.GAMMA else None
        self.sum_y = float(np.sum(self.y))
        self.n = self.y.size

        # Scalar state
        self.gamma = state.gamma
        self.s = state.s
        self.phi = state.phi
        self.big_r = state.big_r
        self.omega0 = state.bg.omega0
        self.eta0 = state.bg.eta0
        tau, rho, eta = state.peak_arrays()
        self.tau, self.rho, self.eta = tau.copy(), rho.copy(), eta.copy()

        # Log acceptance ratio of the most recent proposal (diagnostics).
        self.last_log_accept = -math.inf

        self.refresh()

    # -- cache management ------------------------------------------------

    @property
    def n_peaks(self) -> int:
        return self.tau.size

    def snapshot(self) -> ModelState:
        peaks = tuple(
            PeakParams(float(t), float(r), float(e))
            for t, r, e in zip(self.tau, self.rho, self.eta)
        )
        return ModelState(
            gamma=self.gamma,
            s=self.s,
            peaks=peaks,
            bg=BackgroundParams(self.omega0, self.eta0),
            phi=self.phi,
            big_r=self.big_r,
        )

    def _peak_curve(self, tau: float, rho: float, eta: float) -> np.ndarray:
        omega = width_from_resolution(self.kind, tau, rho)
        return eta * kernel_eval(self.kind, self.t, tau, omega)

    def _background_curve(self) -> np.ndarray:
        out = np.where(
            self.t > self.xi_a,
            (self.eta0 / self.omega0)
            * np.exp(-np.clip(self.t - self.xi_a, 0.0, None) / self.omega0),
            0.0,
        )
        return out

    def refresh(self) -> None:
        """Recompute all caches from the parameter arrays."""
        if self.prior_only:
            self.f_grid = None
            self.b_grid = None
            self.loglik = 0.0
        else:
            f = np.zeros_like(self.t)
            for j in range(self.n_peaks):
                f += self._peak_curve(self.tau[j], self.rho[j], self.eta[j])
            self.f_grid = f
            self.b_grid = self._background_curve()
            self.loglik = self._loglik(self.f_grid, self.b_grid, self.s, self.phi)
        self.logprior = self._full_logprior()

    def _loglik(self, f, b, s, phi) -> float:
        if self.prior_only:
            return 0.0
        mu = self.gamma * ((1.0 - s) + s * (f + b))
        if self.obs.kind == LikelihoodKind.GAMMA:
            if phi <= 0 or np.any(mu <= 0):
                return -math.inf
            alpha = phi * mu
            val = (
                math.log(phi) * float(np.sum(alpha))
                - float(np.sum(gammaln(alpha)))
                + float(np.dot(alpha - 1.0, self.log_y))
                - phi * self.sum_y
            )
            return val
        sigma2 = 1.0 / phi
        resid = self.y - mu
        return float(
            -0.5 * self.n * math.log(2.0 * math.pi * sigma2)
            - float(np.dot(resid, resid)) / (2.0 * sigma2)
        )

    def _full_logprior(self) -> float:
        h = self.h
        lp = geometric_logpmf(self.n_peaks, h.nu_j)
        lp += lognormal_logpdf(self.big_r, math.log(h.mu_r), h.sigma2_r)
        if self.n_peaks:
            if np.any(self.tau < h.t_lo) or np.any(self.tau > h.t_hi):
                return -math.inf
            lp += -self.n_peaks * math.log(h.window_length)
            log_rho = np.log(self.rho)
            z = log_rho - math.log(self.big_r)
            lp += float(
                np.sum(
                    -log_rho
                    - 0.5 * math.log(2.0 * math.pi * h.sigma2_rho)
                    - z * z / (2.0 * h.sigma2_rho)
                )
            )
            lp += float(np.sum(trunc_gamma_logpdf(self.eta, h.lam, h.eps)))
        lp += lognormal_logpdf(self.omega0, math.log(h.omega0_hat), h.sigma2_omega0)
        lp += trunc_gamma_logpdf(self.eta0, h.lam0, h.eps)
        lp += beta_logpdf(self.s, h.a_s, h.b_s)
        lp += gamma_logpdf(self.phi, h.a_phi, h.b_phi)
        return lp

    def log_posterior(self) -> float:
        return self.loglik + self.logprior

    def _triplet_logpdf(self, tau: float, rho: float, eta: float) -> float:
        h = self.h
        if not h.t_lo <= tau <= h.t_hi:
            return -math.inf
        lp = -math.log(h.window_length)
        lp += lognormal_logpdf(rho, math.log(self.big_r), h.sigma2_rho)
        lp += trunc_gamma_logpdf(eta, h.lam, h.eps)
        return lp

    def _split_scale(self, tau: float) -> float:
        # Width scale of the split offset and the merge radius: the FWHM of a
        # peak at tau under the prior-center resolution.
        return tau / self.h.mu_r

    def _mergeable_pairs(self, tau: np.ndarray, eta: np.ndarray):
        pairs = []
        n = tau.size
        for i in range(n - 1):
            for j in range(i + 1, n):
                sep = abs(tau[j] - tau[i])
                tau_star = (eta[i] * tau[i] + eta[j] * tau[j]) / (eta[i] + eta[j])
                if sep < 2.0 * self._split_scale(tau_star):
                    pairs.append((i, j))
        return pairs

    # -- moves -------------------------------------------------------------

    def move_birth(self, rng: np.random.Generator) -> bool:
        h = self.h
        p = self.move_probs
        peak = sample_peak_triplet(rng, self.big_r, h)
        delta_f = None if self.prior_only else self._peak_curve(peak.tau, peak.rho, peak.eta)
        cand_ll = (
            0.0 if self.prior_only else self._loglik(self.f_grid + delta_f, self.b_grid, self.s, self.phi)
        )
        # The proposal density equals the triplet's prior density, so only the
        # geometric term and the move-probability ratio survive.
        log_a = (
            cand_ll
            - self.loglik
            + math.log(h.nu_j / (1.0 + h.nu_j))
            + math.log(p["death"])
            - math.log(p["birth"])
        )
        self.last_log_accept = log_a
        if math.log(rng.uniform()) < log_a:
            self.tau = np.append(self.tau, peak.tau)
            self.rho = np.append(self.rho, peak.rho)
            self.eta = np.append(self.eta, peak.eta)
            if not self.prior_only:
                self.f_grid = self.f_grid + delta_f
                self.loglik = cand_ll
            self.logprior += math.log(h.nu_j / (1.0 + h.nu_j)) + self._triplet_logpdf(
                peak.tau, peak.rho, peak.eta
            )
            return True
        return False

    def move_death(self, rng: np.random.Generator) -> bool:
        if self.n_peaks == 0:
            return False
        h = self.h
        p = self.move_probs
        j = int(rng.integers(self.n_peaks))
        delta_f = None if self.prior_only else self._peak_curve(
            self.tau[j], self.rho[j], self.eta[j]
        )
        cand_ll = (
            0.0 if self.prior_only else self._loglik(self.f_grid - delta_f, self.b_grid, self.s, self.phi)
        )
        log_a = (
            cand_ll
            - self.loglik
            + math.log((1.0 + h.nu_j) / h.nu_j)
            + math.log(p["birth"])
            - math.log(p["death"])
        )
        self.last_log_accept = log_a
        if math.log(rng.uniform()) < log_a:
            removed_lp = self._triplet_logpdf(self.tau[j], self.rho[j], self.eta[j])
            self.tau = np.delete(self.tau, j)
            self.rho = np.delete(self.rho, j)
            self.eta = np.delete(self.eta, j)
            if not self.prior_only:
                self.f_grid = self.f_grid - delta_f
                self.loglik = cand_ll
            self.logprior += math.log((1.0 + h.nu_j) / h.nu_j) - removed_lp
            return True
        return False

    def move_update_peak(self, rng: np.random.Generator) -> bool:
        if self.n_peaks == 0:
            return False
        j = int(rng.integers(self.n_peaks))
        old = (self.tau[j], self.rho[j], self.eta[j])
        new_tau = old[0] + rng.normal(0.0, self.scales["tau"])
        new_rho = old[1] * math.exp(rng.normal(0.0, self.scales["log_rho"]))
        new_eta = old[2] * math.exp(rng.normal(0.0, self.scales["log_eta"]))
        old_lp = self._triplet_logpdf(*old)
        new_lp = self._triplet_logpdf(new_tau, new_rho, new_eta)
        if new_lp == -math.inf:
            return False
        if self.prior_only:
            cand_ll = 0.0
            delta_old = delta_new = None
        else:
            delta_old = self._peak_curve(*old)
            delta_new = self._peak_curve(new_tau, new_rho, new_eta)
            cand_ll = self._loglik(
                self.f_grid - delta_old + delta_new, self.b_grid, self.s, self.phi
            )
        # Log-scale walks on rho and eta carry their Jacobian terms.
        log_a = (
            cand_ll
            - self.loglik
            + new_lp
            - old_lp
            + math.log(new_rho / old[1])
            + math.log(new_eta / old[2])
        )
        self.last_log_accept = log_a
        if math.log(rng.uniform()) < log_a:
            self.tau[j], self.rho[j], self.eta[j] = new_tau, new_rho, new_eta
            if not self.prior_only:
                self.f_grid = self.f_grid - delta_old + delta_new
                self.loglik = cand_ll
            self.logprior += new_lp - old_lp
            return True
        return False

    def move_split(self, rng: np.random.Generator) -> bool:
        if self.n_peaks == 0:
            return False
        h = self.h
        p = self.move_probs
        n = self.n_peaks
        j = int(rng.integers(n))
        tau_p, rho_p, eta_p = self.tau[j], self.rho[j], self.eta[j]
        d = self._split_scale(tau_p)
        u1 = float(rng.uniform())
        u2 = float(rng.uniform(0.0, 2.0))
        u3 = float(rng.normal(0.0, self.split_u3_scale))
        log_rho_p = math.log(rho_p)
        tau_a = tau_p - u2 * d * (1.0 - u1)
        tau_b = tau_p + u2 * d * u1
        eta_a, eta_b = u1 * eta_p, (1.0 - u1) * eta_p
        rho_a = math.exp(log_rho_p + (1.0 - u1) * u3)
        rho_b = math.exp(log_rho_p - u1 * u3)

        lp_a = self._triplet_logpdf(tau_a, rho_a, eta_a)
        lp_b = self._triplet_logpdf(tau_b, rho_b, eta_b)
        if lp_a == -math.inf or lp_b == -math.inf:
            return False
        lp_parent = self._triplet_logpdf(tau_p, rho_p, eta_p)

        cand_tau = np.append(np.delete(self.tau, j), (tau_a, tau_b))
        cand_eta = np.append(np.delete(self.eta, j), (eta_a, eta_b))
        n_pairs = len(self._mergeable_pairs(cand_tau, cand_eta))

        if self.prior_only:
            cand_ll = 0.0
            delta = None
        else:
            delta = (
                self._peak_curve(tau_a, rho_a, eta_a)
                + self._peak_curve(tau_b, rho_b, eta_b)
                - self._peak_curve(tau_p, rho_p, eta_p)
            )
            cand_ll = self._loglik(self.f_grid + delta, self.b_grid, self.s, self.phi)

        log_g = -math.log(2.0) + _normal_logpdf(u3, self.split_u3_scale)
        delta_prior = (
            math.log(h.nu_j / (1.0 + h.nu_j)) + lp_a + lp_b - lp_parent
        )
        # |d(children)/d(parent, u)| = eta_p * d * rho_a * rho_b / rho_p (the
        # resolution block of the map lives on the log scale).
        log_jac = math.log(eta_p * d) + math.log(rho_a * rho_b / rho_p)
        log_a = (
            cand_ll
            - self.loglik
            + delta_prior
            + math.log(p["merge"] / p["split"])
            + math.log((n + 1.0) * n)
            - math.log(n_pairs)
            + log_jac
            - log_g
        )
        self.last_log_accept = log_a
        if math.log(rng.uniform()) < log_a:
            self.tau = cand_tau
            self.rho = np.append(np.delete(self.rho, j), (rho_a, rho_b))
            self.eta = cand_eta
            if not self.prior_only:
                self.f_grid = self.f_grid + delta
                self.loglik = cand_ll
            self.logprior += delta_prior
            return True
        return False

    def move_merge(self, rng: np.random.Generator) -> bool:
        if self.n_peaks < 2:
            return False
        h = self.h
        p = self.move_probs
        n = self.n_peaks
        pairs = self._mergeable_pairs(self.tau, self.eta)
        if not pairs:
            return False
        i, j = pairs[int(rng.integers(len(pairs)))]
        if self.tau[i] <= self.tau[j]:
            a, b = i, j
        else:
            a, b = j, i
        eta_p = self.eta[a] + self.eta[b]
        tau_p = (self.eta[a] * self.tau[a] + self.eta[b] * self.tau[b]) / eta_p
        log_rho_p = (
            self.eta[a] * math.log(self.rho[a]) + self.eta[b] * math.log(self.rho[b])
        ) / eta_p
        rho_p = math.exp(log_rho_p)
        d = self._split_scale(tau_p)
        # the location offset (tau_b - tau_a)/d lies in (0, 2) by the pair
        # radius, so its uniform density is the constant folded into log_g
        u3 = math.log(self.rho[a]) - math.log(self.rho[b])

        lp_a = self._triplet_logpdf(self.tau[a], self.rho[a], self.eta[a])
        lp_b = self._triplet_logpdf(self.tau[b], self.rho[b], self.eta[b])
        lp_parent = self._triplet_logpdf(tau_p, rho_p, eta_p)
        if lp_parent == -math.inf:
            return False

        if self.prior_only:
            cand_ll = 0.0
            delta = None
        else:
            delta = (
                self._peak_curve(tau_p, rho_p, eta_p)
                - self._peak_curve(self.tau[a], self.rho[a], self.eta[a])
                - self._peak_curve(self.tau[b], self.rho[b], self.eta[b])
            )
            cand_ll = self._loglik(self.f_grid + delta, self.b_grid, self.s, self.phi)

        log_g = -math.log(2.0) + _normal_logpdf(u3, self.split_u3_scale)
        delta_prior = (
            math.log((1.0 + h.nu_j) / h.nu_j) + lp_parent - lp_a - lp_b
        )
        log_jac = math.log(eta_p * d) + math.log(
            self.rho[a] * self.rho[b] / rho_p
        )
        log_a = (
            cand_ll
            - self.loglik
            + delta_prior
            + math.log(p["split"] / p["merge"])
            - math.log(n * (n - 1.0))
            + math.log(len(pairs))
            - log_jac
            + log_g
        )
        self.last_log_accept = log_a
        if math.log(rng.uniform()) < log_a:
            keep = [k for k in range(n) if k not in (a, b)]
            self.tau = np.append(self.tau[keep], tau_p)
            self.rho = np.append(self.rho[keep], rho_p)
            self.eta = np.append(self.eta[keep], eta_p)
            if not self.prior_only:
                self.f_grid = self.f_grid + delta
                self.loglik = cand_ll
            self.logprior += delta_prior
            return True
        return False

    def update_fixed_dim(self, rng: np.random.Generator, stats: MoveStats | None = None) -> bool:
        """One sweep of random-walk updates over s, phi, R, omega0, eta0."""
        any_accepted = False
        for name in _FIXED_DIM_PARAMS:
            if name == "phi" and not self.obs.updates_phi:
                continue
            if stats is not None:
                stats.param_proposed[name] += 1
            accepted = getattr(self, f"_update_{name}")(rng)
            if accepted:
                any_accepted = True
                if stats is not None:
                    stats.param_accepted[name] += 1
        return any_accepted

    def _update_s(self, rng) -> bool:
        h = self.h
        logit = math.log(self.s / (1.0 - self.s))
        new_logit = logit + rng.normal(0.0, self.scales["logit_s"])
        new_s = 1.0 / (1.0 + math.exp(-new_logit))
        if not 0.0 < new_s < 1.0:
            return False
        cand_ll = self._loglik(self.f_grid, self.b_grid, new_s, self.phi) if not self.prior_only else 0.0
        delta_prior = beta_logpdf(new_s, h.a_s, h.b_s) - beta_logpdf(self.s, h.a_s, h.b_s)
        log_jac = math.log(new_s * (1.0 - new_s)) - math.log(self.s * (1.0 - self.s))
        if math.log(rng.uniform()) < cand_ll - self.loglik + delta_prior + log_jac:
            self.s = new_s
            self.loglik = cand_ll
            self.logprior += delta_prior
            return True
        return False

    def _update_phi(self, rng) -> bool:
        h = self.h
        new_phi = self.phi * math.exp(rng.normal(0.0, self.scales["log_phi"]))
        cand_ll = self._loglik(self.f_grid, self.b_grid, self.s, new_phi) if not self.prior_only else 0.0
        delta_prior = gamma_logpdf(new_phi, h.a_phi, h.b_phi) - gamma_logpdf(
            self.phi, h.a_phi, h.b_phi
        )
        log_jac = math.log(new_phi / self.phi)
        if math.log(rng.uniform()) < cand_ll - self.loglik + delta_prior + log_jac:
            self.phi = new_phi
            self.loglik = cand_ll
            self.logprior += delta_prior
            return True
        return False

    def _update_big_r(self, rng) -> bool:
        # R enters only through the resolution hierarchy, never the likelihood.
        h = self.h
        new_r = self.big_r * math.exp(rng.normal(0.0, self.scales["log_r"]))
        delta_prior = lognormal_logpdf(new_r, math.log(h.mu_r), h.sigma2_r) - lognormal_logpdf(
            self.big_r, math.log(h.mu_r), h.sigma2_r
        )
        if self.n_peaks:
            log_rho = np.log(self.rho)
            z_new = log_rho - math.log(new_r)
            z_old = log_rho - math.log(self.big_r)
            delta_prior += float(
                np.sum(z_old * z_old - z_new * z_new) / (2.0 * h.sigma2_rho)
            )
        log_jac = math.log(new_r / self.big_r)
        if math.log(rng.uniform()) < delta_prior + log_jac:
            self.big_r = new_r
            self.logprior += delta_prior
            return True
        return False

    def _update_omega0(self, rng) -> bool:
        h = self.h
        new_omega0 = self.omega0 * math.exp(rng.normal(0.0, self.scales["log_omega0"]))
        old_omega0 = self.omega0
        delta_prior = lognormal_logpdf(
            new_omega0, math.log(h.omega0_hat), h.sigma2_omega0
        ) - lognormal_logpdf(old_omega0, math.log(h.omega0_hat), h.sigma2_omega0)
        if self.prior_only:
            cand_ll, new_b = 0.0, None
        else:
            self.omega0 = new_omega0
            new_b = self._background_curve()
            self.omega0 = old_omega0
            cand_ll = self._loglik(self.f_grid, new_b, self.s, self.phi)
        log_jac = math.log(new_omega0 / old_omega0)
        if math.log(rng.uniform()) < cand_ll - self.loglik + delta_prior + log_jac:
            self.omega0 = new_omega0
            if not self.prior_only:
                self.b_grid = new_b
                self.loglik = cand_ll
            self.logprior += delta_prior
            return True
        return False

    def _update_eta0(self, rng) -> bool:
        h = self.h
        new_eta0 = self.eta0 * math.exp(rng.normal(0.0, self.scales["log_eta0"]))
        delta_prior = trunc_gamma_logpdf(new_eta0, h.lam0, h.eps) - trunc_gamma_logpdf(
            self.eta0, h.lam0, h.eps
        )
        if delta_prior == -math.inf:
            return False
        if self.prior_only:
            cand_ll, new_b = 0.0, None
        else:
            new_b = self.b_grid * (new_eta0 / self.eta0)
            cand_ll = self._loglik(self.f_grid, new_b, self.s, self.phi)
        log_jac = math.log(new_eta0 / self.eta0)
        if math.log(rng.uniform()) < cand_ll - self.loglik + delta_prior + log_jac:
            self.eta0 = new_eta0
            if not self.prior_only:
                self.b_grid = new_b
                self.loglik = cand_ll
            self.logprior += delta_prior
            return True
        return False


def init_mode_seek(
    spectrum: Spectrum, h: Hyperparameters, kind: KernelKind
) -> ModelState:
    """Deterministic starting state near a posterior mode.

    The elicited background curve (whose intensity scale comes from the raw
    regression and therefore lives in data units) is subtracted from the
    spectrum; the residual, rescaled to signal units, is smoothed over one
    median peak width and local maxima above the height of a
    minimum-detectable peak become peak candidates.  Abundances are assigned
    by nonnegative least squares of the kernel design on the residual, the
    remaining parameters start at their prior centers, and the peak count is
    capped at three times the expected count.
    """
    eta0_hat = trunc_gamma_mean(h.lam0, h.eps)
    s0 = h.a_s / (h.a_s + h.b_s)
    phi0 = h.a_phi / h.b_phi
    gamma = h.gamma_fixed

    t = spectrum.t
    xi_a = spectrum.window[0]
    bg_data_curve = np.where(
        t > xi_a,
        (eta0_hat / h.omega0_hat)
        * np.exp(-np.clip(t - xi_a, 0.0, None) / h.omega0_hat),
        0.0,
    )
    residual = (spectrum.y - bg_data_curve) / (gamma * s0)
    # Remove any flat pedestal left by the thermal-noise level so that only
    # localized structure exceeds the candidate threshold.
    residual = residual - np.median(residual)

    # Moving-average smoothing over roughly one median FWHM at the
    # prior-center resolution.
    fwhm_us = float(np.median(t)) / h.mu_r
    spacing = float(np.median(np.diff(t)))
    w = max(1, int(round(fwhm_us / spacing)))
    if w > 1:
        kernel = np.ones(w) / w
        smooth = np.convolve(residual, kernel, mode="same")
    else:
        smooth = residual

    heights = np.array(
        [
            kernel_peak_height(kind, width_from_resolution(kind, ti, h.mu_r))
            for ti in t
        ]
    )
    threshold = h.eps * heights
    interior = np.arange(1, t.size - 1)
    is_max = (smooth[interior] > smooth[interior - 1]) & (
        smooth[interior] > smooth[interior + 1]
    )
    above = smooth[interior] > threshold[interior]
    candidates = interior[is_max & above]

    peaks: list[PeakParams] = []
    if candidates.size:
        design = np.column_stack(
            [
                kernel_eval(
                    kind, t, t[idx], width_from_resolution(kind, t[idx], h.mu_r)
                )
                for idx in candidates
            ]
        )
        coef, _ = nnls(design, residual)
        for idx, eta in zip(candidates, coef):
            if eta > h.eps:
                peaks.append(PeakParams(float(t[idx]), h.mu_r, float(eta)))
    cap = int(3 * h.nu_j)
    if len(peaks) > cap:
        peaks.sort(key=lambda p: p.eta, reverse=True)
        peaks = peaks[:cap]
    peaks.sort(key=lambda p: p.tau)

    # Initial background on the model (signal-unit) scale, kept inside the
    # abundance support.
    eta0_init = max(eta0_hat / (gamma * s0), 1.5 * h.eps)
    bg = BackgroundParams(h.omega0_hat, eta0_init)

    return ModelState(
        gamma=gamma, s=s0, peaks=tuple(peaks), bg=bg, phi=phi0, big_r=h.mu_r
    )


def run_chain(
    spectrum: Spectrum,
    h: Hyperparameters,
    kind: KernelKind,
    obs: ObservationModel,
    cfg: ChainConfig,
    initial_state: ModelState | None = None,
) -> PosteriorSamples:
    """Run the reversible-jump chain and return thinned post-burn-in draws."""
    rng = np.random.default_rng(cfg.seed)
    state0 = initial_state if initial_state is not None else init_mode_seek(
        spectrum, h, kind
    )
    if obs.kind == LikelihoodKind.NORMAL and obs.sigma2 is not None:
        state0 = ModelState(
            gamma=state0.gamma,
            s=state0.s,
            peaks=state0.peaks,
            bg=state0.bg,
            phi=1.0 / obs.sigma2,
            big_r=state0.big_r,
        )
    engine = ChainEngine(
        spectrum,
        h,
        kind,
        obs,
        state0,
        rw_scales=cfg.rw_scales,
        move_probs=cfg.move_probs,
        prior_only=cfg.prior_only,
    )
    if not math.isfinite(engine.log_posterior()):
        raise SamplerError("initial state has non-finite log posterior")

    stats = MoveStats()
    draws: list[SampleDraw] = []
    names = list(MOVE_NAMES)
    probs = np.array([cfg.move_probs[name] for name in names])
    movers = {
        "birth": engine.move_birth,
        "death": engine.move_death,
        "update": engine.move_update_peak,
        "split": engine.move_split,
        "merge": engine.move_merge,
    }

    for it in range(1, cfg.n_iter + 1):
        move = names[int(rng.choice(len(names), p=probs))]
        stats.proposed[move] += 1
        if move == "fixed":
            accepted = engine.update_fixed_dim(rng, stats)
        else:
            accepted = movers[move](rng)
        if accepted:
            stats.accepted[move] += 1
        if it % cfg.cache_refresh == 0:
            engine.refresh()
        if it > cfg.n_burn and (it - cfg.n_burn) % cfg.thin == 0:
            lp = engine.log_posterior()
            if not math.isfinite(lp):
                raise SamplerError(f"non-finite log posterior at iteration {it}")
            draws.append(SampleDraw(it, engine.snapshot(), lp))

    offset = (
        GAMMA_OFFSET_FRACTION * spectrum.mean_intensity
        if obs.kind == LikelihoodKind.GAMMA
        else 0.0
    )
    info = RunInfo(
        kernel=kind,
        likelihood=obs.kind,
        sample_variance=obs.sample_variance,
        window=spectrum.window,
        gamma=engine.gamma,
        seed=cfg.seed,
        n_iter=cfg.n_iter,
        n_burn=cfg.n_burn,
        thin=cfg.thin,
        offset=offset,
    )
    return PosteriorSamples(draws=draws, move_stats=stats, info=info)


# -- sample file serialization ---------------------------------------------


def write_samples(path, samples: PosteriorSamples, seed=None, inputs=None) -> None:
    """Write draws as rows: iteration, log posterior, J, s, phi, R, omega0,
    eta0, then J (tau, rho, eta) triplets."""
    info = samples.info
    meta = (
        f"# meta kernel={info.kernel.value} likelihood={info.likelihood.value}"
        f" sample_variance={str(info.sample_variance).lower()}"
        f" window_lo={info.window[0]!r} window_hi={info.window[1]!r}"
        f" gamma={info.gamma!r} n_iter={info.n_iter} n_burn={info.n_burn}"
        f" thin={info.thin} offset={info.offset!r}"
    )
    with open(path, "w") as fh:
        fh.write(file_header(seed=seed if seed is not None else info.seed, inputs=inputs) + "\n")
        fh.write(meta + "\n")
        for d in samples.draws:
            st = d.state
            row = [
                str(d.iteration),
                repr(d.log_posterior),
                str(st.n_peaks),
                repr(st.s),
                repr(st.phi),
                repr(st.big_r),
                repr(st.bg.omega0),
                repr(st.bg.eta0),
            ]
            for peak in st.peaks:
                row.extend((repr(peak.tau), repr(peak.rho), repr(peak.eta)))
            fh.write(" ".join(row) + "\n")


def read_samples(path) -> PosteriorSamples:
    """Read a samples file written by :func:`write_samples`."""
    meta: dict[str, str] = {}
    draws: list[SampleDraw] = []
    gamma = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("# meta"):
                for item in line[len("# meta") :].split():
                    key, _, value = item.partition("=")
                    meta[key] = value
                continue
            if line.startswith("#"):
                continue
            fields = line.split()
            it = int(fields[0])
            lp = float(fields[1])
            n_peaks = int(fields[2])
            s, phi, big_r, omega0, eta0 = (float(v) for v in fields[3:8])
            triplets = fields[8:]
            if len(triplets) != 3 * n_peaks:
                raise ValueError(f"row {it}: expected {3 * n_peaks} peak fields")
            peaks = tuple(
                PeakParams(
                    float(triplets[3 * k]),
                    float(triplets[3 * k + 1]),
                    float(triplets[3 * k + 2]),
                )
                for k in range(n_peaks)
            )
            gamma = float(meta.get("gamma", "1.0"))
            draws.append(
                SampleDraw(
                    it,
                    ModelState(
                        gamma=gamma,
                        s=s,
                        peaks=peaks,
                        bg=BackgroundParams(omega0, eta0),
                        phi=phi,
                        big_r=big_r,
                    ),
                    lp,
                )
            )
    info = RunInfo(
        kernel=KernelKind(meta.get("kernel", "cauchy")),
        likelihood=LikelihoodKind(meta.get("likelihood", "gamma")),
        sample_variance=meta.get("sample_variance", "true") == "true",
        window=(float(meta.get("window_lo", "0.0")), float(meta.get("window_hi", "1.0"))),
        gamma=float(meta.get("gamma", "1.0")),
        seed=0,
        n_iter=int(meta.get("n_iter", "0")),
        n_burn=int(meta.get("n_burn", "0")),
        thin=int(meta.get("thin", "1")),
        offset=float(meta.get("offset", "0.0")),
    )
    return PosteriorSamples(draws=draws, move_stats=MoveStats(), info=info)


def write_move_stats(path, stats: MoveStats, seed=None, inputs=None) -> None:
    lines = [file_header(seed=seed, inputs=inputs), "# move proposed accepted"]
    for name in MOVE_NAMES:
        lines.append(f"{name} {stats.proposed[name]} {stats.accepted[name]}")
    for name in _FIXED_DIM_PARAMS:
        lines.append(
            f"fixed.{name} {stats.param_proposed[name]} {stats.param_accepted[name]}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
