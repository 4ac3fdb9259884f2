"""Shared statistical helpers and the desk-scale study generator."""

import numpy as np
import scipy.stats as ss

from larkms.model import BackgroundParams, LikelihoodKind, PeakParams
from larkms.simulate import TruthSpec

SQRT_LN4 = np.sqrt(np.log(4.0))


def geometric_pmf(nu, kmax=400):
    return np.array([(1 / (1 + nu)) * (nu / (1 + nu)) ** j for j in range(kmax)])


def chi2_pvalue_against_geometric(counts, nu):
    """Goodness-of-fit p-value with tail bins pooled to expected >= 5."""
    counts = np.asarray(counts)
    n = counts.size
    pmf = geometric_pmf(nu)
    edges, acc, start = [], 0.0, 0
    for j in range(pmf.size - 1):
        acc += pmf[j]
        if acc * n >= 5.0:
            edges.append((start, j))
            start = j + 1
            acc = 0.0
        if pmf[j + 1 :].sum() * n < 5.0:
            break
    edges.append((start, 10_000))
    obs = [np.sum((counts >= lo) & (counts <= hi)) for lo, hi in edges]
    exp = []
    for lo, hi in edges:
        exp.append(pmf[lo : hi + 1].sum() if hi < pmf.size else 1.0 - pmf[:lo].sum())
    exp = np.array(exp) * n
    return ss.chisquare(obs, exp).pvalue


# Desk-scale detection study: 15 Gaussian peaks per spectrum at resolution
# 300, peak signal-to-noise spanning 3-50 on the averaged spectrum (assigned
# in descending order of TOF so that the weakest peaks sit where the kernels
# are widest), over a matrix-style exponential background.
STUDY = {
    "t_lo": 60.0,
    "t_hi": 200.0,
    "n_points": 2000,
    "n_peaks": 15,
    "rho": 300.0,
    "snr_lo": 3.0,
    "snr_hi": 50.0,
    "gamma": 1000.0,
    "s": 0.3,
    "sigma_eff": 57.0,  # noise SD of the averaged spectrum
    "n_replicates": 10,
    "omega0": 50.0,
    "eta0": 60.0,
    "expected_peaks": 15.0,  # fitted nu_J
}


def make_study_truth(seed):
    """One random truth draw for the detection study."""
    cfg = STUDY
    rng = np.random.default_rng(seed)
    while True:
        taus = np.sort(rng.uniform(78.0, 192.0, cfg["n_peaks"]))
        if np.all(np.diff(taus) >= 4.0):
            break
    exponents = np.arange(cfg["n_peaks"]) / (cfg["n_peaks"] - 1)
    snrs = cfg["snr_hi"] * (cfg["snr_lo"] / cfg["snr_hi"]) ** exponents
    omega = taus / (2 * cfg["rho"] * SQRT_LN4)
    etas = (
        snrs
        * cfg["sigma_eff"]
        * np.sqrt(2 * np.pi)
        * omega
        / (cfg["gamma"] * cfg["s"])
    )
    peaks = tuple(
        PeakParams(float(t), cfg["rho"], float(e)) for t, e in zip(taus, etas)
    )
    return TruthSpec(
        peaks=peaks,
        background=BackgroundParams(cfg["omega0"], cfg["eta0"]),
        s=cfg["s"],
        gamma=cfg["gamma"],
        noise=LikelihoodKind.NORMAL,
        noise_scale=cfg["sigma_eff"] * np.sqrt(cfg["n_replicates"]),
        t_lo=cfg["t_lo"],
        t_hi=cfg["t_hi"],
        n_points=cfg["n_points"],
        n_replicates=cfg["n_replicates"],
    )
