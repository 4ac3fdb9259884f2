"""Posterior summaries, peak identification and truth matching.

Two identification rules are provided: the peak triplets of the stored draw
with the highest posterior density (HP), and the local maxima of the
model-averaged mean intensity found as downward zero crossings of its
derivative (MA).  Identified peaks are matched to known masses inside a
relative tolerance window, yielding true-positive and false-discovery rates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import file_header
from .model import (
    KernelKind,
    mean_intensity,
    mean_intensity_deriv,
)
from .sampler import PosteriorSamples
from .spectra import Calibration, tof_to_mz


@dataclass(frozen=True)
class ReportedPeak:
    tau: float
    mz: float
    eta: float | None = None
    rho: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "mz", float(self.mz))
        if self.eta is not None:
            object.__setattr__(self, "eta", float(self.eta))
        if self.rho is not None:
            object.__setattr__(self, "rho", float(self.rho))


@dataclass(frozen=True)
class PeakReport:
    """Identified peaks sorted by TOF; MA peaks carry locations only."""

    peaks: tuple[ReportedPeak, ...]
    method: str  # "HP" or "MA"
    source: str = ""

    def __post_init__(self):
        if self.method not in ("HP", "MA"):
            raise ValueError(f"method must be HP or MA, got {self.method}")
        ordered = tuple(sorted(self.peaks, key=lambda p: p.tau))
        object.__setattr__(self, "peaks", ordered)

    def __len__(self) -> int:
        return len(self.peaks)

    @property
    def masses(self) -> np.ndarray:
        return np.array([p.mz for p in self.peaks])


@dataclass(frozen=True)
class MatchResult:
    """Truth-matching outcome: TPR, FDR and per-truth assignments."""

    tpr: float
    fdr: float
    matches: tuple[tuple[float, float | None], ...]  # (true mass, matched mz)
    n_identified: int


def posterior_mean_curve(
    samples: PosteriorSamples,
    grid: np.ndarray,
    kind: KernelKind | None = None,
    deriv: bool = False,
) -> np.ndarray:
    """Average mu(t) (or its derivative) over the stored draws on a grid."""
    if not samples.draws:
        raise ValueError("no stored draws")
    kind = samples.info.kernel if kind is None else kind
    xi_a = samples.info.window[0]
    grid = np.asarray(grid, dtype=float)
    total = np.zeros_like(grid)
    fn = mean_intensity_deriv if deriv else mean_intensity
    for d in samples.draws:
        total += fn(d.state, kind, grid, xi_a)
    return total / len(samples.draws)


def hp_peaks(samples: PosteriorSamples, calib: Calibration = Calibration(), source: str = "") -> PeakReport:
    """Peaks of the stored draw with the highest posterior density."""
    best = samples.best_draw()
    peaks = tuple(
        ReportedPeak(p.tau, tof_to_mz(p.tau, calib), eta=p.eta, rho=p.rho)
        for p in best.state.peaks
    )
    return PeakReport(peaks=peaks, method="HP", source=source)


def ma_peaks(
    samples: PosteriorSamples,
    grid: np.ndarray,
    kind: KernelKind | None = None,
    calib: Calibration = Calibration(),
    source: str = "",
) -> PeakReport:
    """Down-crossings of the model-averaged intensity derivative.

    A peak is reported wherever the averaged derivative changes sign from
    positive to negative between adjacent grid points; the crossing is
    refined by linear interpolation of the derivative.
    """
    grid = np.asarray(grid, dtype=float)
    d = posterior_mean_curve(samples, grid, kind=kind, deriv=True)
    left, right = d[:-1], d[1:]
    # Scan only the interior: the background is discontinuous at the window
    # start, which would otherwise register a spurious crossing there.
    interior = grid[:-1] > samples.info.window[0]
    crossing = np.nonzero((left > 0.0) & (right < 0.0) & interior)[0]
    taus = []
    for i in crossing:
        frac = left[i] / (left[i] - right[i])
        taus.append(grid[i] + frac * (grid[i + 1] - grid[i]))
    peaks = tuple(ReportedPeak(tau, tof_to_mz(tau, calib)) for tau in taus)
    return PeakReport(peaks=peaks, method="MA", source=source)


def filter_by_resolution(report: PeakReport, rho_min: float) -> PeakReport:
    """Drop peaks with resolution below rho_min (HP reports only)."""
    if report.method != "HP":
        raise ValueError("resolution filtering needs an HP report (MA has no rho)")
    kept = tuple(p for p in report.peaks if p.rho is not None and p.rho >= rho_min)
    return PeakReport(peaks=kept, method=report.method, source=report.source)


def match_peaks(
    identified: PeakReport,
    truth_masses,
    tol: float = 0.003,
    calib: Calibration | None = None,
) -> MatchResult:
    """Window-membership matching of identified peaks to true masses.

    A true mass counts as discovered if any identified mass falls within
    +-tol (relative) of it; an identified peak matching no true window is a
    false positive.  FDR is zero by convention when nothing is identified.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    truth = np.asarray(list(truth_masses), dtype=float)
    if calib is not None:
        ident = np.array([tof_to_mz(p.tau, calib) for p in identified.peaks])
    else:
        ident = identified.masses
    matches = []
    n_true_found = 0
    for m_true in truth:
        window = tol * m_true
        hits = ident[np.abs(ident - m_true) <= window] if ident.size else np.empty(0)
        if hits.size:
            n_true_found += 1
            matches.append((float(m_true), float(hits[np.argmin(np.abs(hits - m_true))])))
        else:
            matches.append((float(m_true), None))
    n_false = 0
    for m_id in ident:
        if not np.any(np.abs(m_id - truth) <= tol * truth):
            n_false += 1
    tpr = n_true_found / truth.size if truth.size else 0.0
    fdr = n_false / ident.size if ident.size else 0.0
    return MatchResult(
        tpr=float(tpr), fdr=float(fdr), matches=tuple(matches), n_identified=int(ident.size)
    )


def posterior_summary(
    samples: PosteriorSamples,
    hp_report: PeakReport | None = None,
    ma_report: PeakReport | None = None,
) -> dict[str, tuple[float, float] | int]:
    """Posterior mean and SD of s, phi, R, eta0, omega0 and the peak count,
    plus the HP and MA peak counts."""
    out: dict[str, tuple[float, float] | int] = {}
    for name in ("s", "phi", "big_r"):
        trace = samples.field_trace(name)
        out[name] = (float(np.mean(trace)), float(np.std(trace)))
    for name in ("eta0", "omega0"):
        trace = samples.field_trace(name)
        out[name] = (float(np.mean(trace)), float(np.std(trace)))
    counts = samples.peak_counts()
    out["j_pm"] = (float(np.mean(counts)), float(np.std(counts)))
    if hp_report is not None:
        out["j_hp"] = len(hp_report)
    if ma_report is not None:
        out["j_dv"] = len(ma_report)
    return out


def write_summary(path, summary: dict, seed=None, inputs=None) -> None:
    lines = [file_header(seed=seed, inputs=inputs), "# name mean sd"]
    for name in ("s", "phi", "big_r", "eta0", "omega0", "j_pm"):
        mean, sd = summary[name]
        lines.append(f"{name} {mean!r} {sd!r}")
    for name in ("j_hp", "j_dv"):
        if name in summary:
            lines.append(f"{name} {summary[name]}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# -- report files ------------------------------------------------------------


def write_peak_report(path, report: PeakReport, seed=None, inputs=None) -> None:
    lines = [
        file_header(seed=seed, inputs=inputs),
        "# method tau_us mz_da eta rho",
    ]
    for p in report.peaks:
        eta = "nan" if p.eta is None else repr(p.eta)
        rho = "nan" if p.rho is None else repr(p.rho)
        lines.append(f"{report.method} {p.tau!r} {p.mz!r} {eta} {rho}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_peak_report(path) -> PeakReport:
    peaks = []
    method = "HP"
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            method = fields[0]
            tau, mz, eta, rho = (float(v) for v in fields[1:5])
            peaks.append(
                ReportedPeak(
                    tau,
                    mz,
                    eta=None if np.isnan(eta) else eta,
                    rho=None if np.isnan(rho) else rho,
                )
            )
    return PeakReport(peaks=tuple(peaks), method=method)


def write_match_result(path, result: MatchResult, tol: float, seed=None, inputs=None) -> None:
    lines = [
        file_header(seed=seed, inputs=inputs),
        f"tpr = {result.tpr!r}",
        f"fdr = {result.fdr!r}",
        f"tol = {tol!r}",
        f"n_identified = {result.n_identified}",
        "# true_mass matched_mz",
    ]
    for m_true, m_matched in result.matches:
        matched = "none" if m_matched is None else repr(m_matched)
        lines.append(f"{m_true!r} {matched}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
