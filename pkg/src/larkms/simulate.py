"""Synthetic spectrum generation from the forward model with known truth."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .io import file_header, format_value
from .model import (
    BackgroundParams,
    KernelKind,
    LikelihoodKind,
    ModelState,
    PeakParams,
    mean_intensity,
)
from .spectra import Calibration, Spectrum, mean_spectrum, mz_to_tof


@dataclass(frozen=True)
class TruthSpec:
    """Ground truth for one simulated data set."""

    peaks: tuple[PeakParams, ...]
    background: BackgroundParams | None
    s: float
    gamma: float
    noise: LikelihoodKind
    noise_scale: float  # phi for gamma noise, sd sigma for normal noise
    t_lo: float
    t_hi: float
    n_points: int
    n_replicates: int = 1
    calib: Calibration = Calibration()

    def __post_init__(self):
        object.__setattr__(self, "peaks", tuple(self.peaks))
        if not self.t_lo < self.t_hi:
            raise ValueError("need t_lo < t_hi")
        if self.n_points < 2 or self.n_replicates < 1:
            raise ValueError("need n_points >= 2 and n_replicates >= 1")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        if not 0.0 <= self.s <= 1.0 or self.gamma <= 0:
            raise ValueError("need 0 <= s <= 1 and gamma > 0")

    def grid(self) -> np.ndarray:
        return np.linspace(self.t_lo, self.t_hi, self.n_points)

    def state(self) -> ModelState:
        bg = self.background or BackgroundParams(1.0, 1e-300)
        phi = self.noise_scale if self.noise == LikelihoodKind.GAMMA else 1.0
        return ModelState(
            gamma=self.gamma,
            s=self.s,
            peaks=self.peaks,
            bg=bg,
            phi=max(phi, 1e-12),
            big_r=1.0,
        )

    def true_masses(self) -> np.ndarray:
        return np.array([self.calib.u * (p.tau - self.calib.t0) ** 2 for p in self.peaks])


@dataclass
class SimulationOutput:
    replicates: list[Spectrum]
    truth: TruthSpec
    mu: np.ndarray
    n_floored: int = 0

    def mean(self) -> Spectrum:
        return mean_of_replicates(self)


def generate_spectrum(
    truth: TruthSpec, kind: KernelKind, rng: np.random.Generator
) -> SimulationOutput:
    """Draw replicate spectra around the exact model mean.

    Gamma noise draws Ga(phi*mu, phi) intensities; normal noise draws
    N(mu, sigma^2) and floors negatives at zero, counting the floored
    samples.
    """
    t = truth.grid()
    state = truth.state()
    mu = mean_intensity(state, kind, t, truth.t_lo)
    replicates = []
    n_floored = 0
    window = (truth.t_lo, truth.t_hi)
    for _ in range(truth.n_replicates):
        if truth.noise == LikelihoodKind.GAMMA:
            phi = truth.noise_scale
            if phi <= 0:
                raise ValueError("gamma noise needs phi > 0")
            y = rng.gamma(shape=phi * mu, scale=1.0 / phi)
        else:
            sigma = truth.noise_scale
            y = mu + (rng.normal(0.0, sigma, size=t.size) if sigma > 0 else 0.0)
            floored = y < 0.0
            n_floored += int(np.count_nonzero(floored))
            y = np.where(floored, 0.0, y)
        replicates.append(Spectrum(t.copy(), np.asarray(y, dtype=float), window=window))
    return SimulationOutput(replicates=replicates, truth=truth, mu=mu, n_floored=n_floored)


def mean_of_replicates(output: SimulationOutput) -> Spectrum:
    """Pointwise mean spectrum of the generated replicates."""
    return mean_spectrum(output.replicates)


# -- truth record files ------------------------------------------------------


def write_truth(path, truth: TruthSpec, seed=None, n_floored: int | None = None) -> None:
    """Write a truth record that round-trips bit-exactly through read_truth."""
    lines = [file_header(seed=seed)]
    lines.append(f"noise = {truth.noise.value}")
    lines.append(f"noise_scale = {format_value(truth.noise_scale)}")
    lines.append(f"gamma = {format_value(truth.gamma)}")
    lines.append(f"s = {format_value(truth.s)}")
    if truth.background is not None:
        lines.append(f"omega0 = {format_value(truth.background.omega0)}")
        lines.append(f"eta0 = {format_value(truth.background.eta0)}")
    lines.append(f"t_lo = {format_value(truth.t_lo)}")
    lines.append(f"t_hi = {format_value(truth.t_hi)}")
    lines.append(f"n_points = {truth.n_points}")
    lines.append(f"n_replicates = {truth.n_replicates}")
    lines.append(f"calib_u = {format_value(truth.calib.u)}")
    lines.append(f"calib_t0 = {format_value(truth.calib.t0)}")
    if n_floored is not None:
        lines.append(f"n_floored = {n_floored}")
    for p in truth.peaks:
        lines.append(f"peak = {p.tau!r} {p.rho!r} {p.eta!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_truth(path) -> TruthSpec:
    raw: dict[str, str] = {}
    peaks: list[PeakParams] = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line or "=" not in line:
                continue
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "peak":
                tau, rho, eta = (float(v) for v in value.split())
                peaks.append(PeakParams(tau, rho, eta))
            elif key == "peak_mz":
                fields = [float(v) for v in value.split()]
                raw.setdefault("_mz_peaks", "")
                raw["_mz_peaks"] += f"{fields[0]} {fields[1]} {fields[2]};"
            else:
                raw[key] = value
    try:
        calib = Calibration(
            u=float(raw.get("calib_u", 1.0)), t0=float(raw.get("calib_t0", 0.0))
        )
        for chunk in raw.get("_mz_peaks", "").split(";"):
            if not chunk:
                continue
            mz, rho, eta = (float(v) for v in chunk.split())
            peaks.append(PeakParams(mz_to_tof(mz, calib), rho, eta))
        background = None
        if "omega0" in raw and "eta0" in raw:
            background = BackgroundParams(float(raw["omega0"]), float(raw["eta0"]))
        truth = TruthSpec(
            peaks=tuple(peaks),
            background=background,
            s=float(raw["s"]),
            gamma=float(raw["gamma"]),
            noise=LikelihoodKind(raw.get("noise", "normal")),
            noise_scale=float(raw["noise_scale"]),
            t_lo=float(raw["t_lo"]),
            t_hi=float(raw["t_hi"]),
            n_points=int(raw["n_points"]),
            n_replicates=int(raw.get("n_replicates", "1")),
            calib=calib,
        )
    except KeyError as exc:
        raise ConfigError(f"{path}: missing truth key {exc}") from exc
    return truth


def read_truth_config(path) -> TruthSpec:
    """Truth configs share the truth-record schema."""
    return read_truth(path)
