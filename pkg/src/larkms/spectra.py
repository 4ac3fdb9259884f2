"""Spectrum containers, standardization, windowing and TOF/mass calibration."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SpectrumFormatError


@dataclass(frozen=True)
class RawSpectrum:
    """Raw detector counts on a strictly increasing TOF grid (microseconds).

    ``n_shots`` is the number of aggregated laser shots represented by the
    counts.
    """

    t: np.ndarray
    y_obs: np.ndarray
    n_shots: int = 1

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.y_obs, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y_obs", y)
        if t.ndim != 1 or y.shape != t.shape:
            raise ValueError("t and y_obs must be 1-d arrays of equal length")
        if t.size < 2:
            raise SpectrumFormatError("spectrum needs at least 2 samples")
        if not np.all(np.isfinite(t)):
            raise SpectrumFormatError("non-finite TOF values")
        if not np.all(np.diff(t) > 0):
            raise SpectrumFormatError("TOF column must be strictly increasing")
        if self.n_shots < 1:
            raise ValueError(f"n_shots must be >= 1, got {self.n_shots}")

    def __len__(self) -> int:
        return self.t.size


@dataclass(frozen=True)
class Spectrum:
    """Standardized (dimensionless, nonnegative) intensities on a TOF grid.

    ``window`` is the [xi_a, xi_b] range of scientific interest; every grid
    point lies inside it.
    """

    t: np.ndarray
    y: np.ndarray
    window: tuple[float, float] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)
        if t.ndim != 1 or y.shape != t.shape:
            raise ValueError("t and y must be 1-d arrays of equal length")
        if t.size < 2:
            raise SpectrumFormatError("spectrum needs at least 2 samples")
        if not np.all(np.diff(t) > 0):
            raise SpectrumFormatError("TOF grid must be strictly increasing")
        if np.any(y < 0):
            raise ValueError("standardized intensities must be nonnegative")
        window = self.window
        if window is None:
            window = (float(t[0]), float(t[-1]))
        lo, hi = float(window[0]), float(window[1])
        if not lo <= t[0] or not t[-1] <= hi:
            raise ValueError("all grid points must lie inside the window")
        object.__setattr__(self, "window", (lo, hi))

    def __len__(self) -> int:
        return self.t.size

    @property
    def mean_intensity(self) -> float:
        return float(np.mean(self.y))


@dataclass(frozen=True)
class Calibration:
    """Quadratic TOF-to-mass map m/z = u * (t - t0)**2."""

    u: float = 1.0
    t0: float = 0.0

    def __post_init__(self):
        if self.u <= 0:
            raise ValueError(f"calibration u must be > 0, got {self.u}")


def tof_to_mz(t, calib: Calibration):
    """Map TOF (microseconds) to m/z (Da/e); requires t > calib.t0."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= calib.t0):
        raise ValueError(f"TOF must exceed calibration offset t0={calib.t0}")
    out = calib.u * (t_arr - calib.t0) ** 2
    return float(out) if np.isscalar(t) else out


def mz_to_tof(m, calib: Calibration):
    """Inverse calibration map; exact round-trip with :func:`tof_to_mz`."""
    m_arr = np.asarray(m, dtype=float)
    if np.any(m_arr <= 0):
        raise ValueError("m/z must be > 0")
    out = calib.t0 + np.sqrt(m_arr / calib.u)
    return float(out) if np.isscalar(m) else out


def load_spectrum(path, n_shots: int = 1) -> RawSpectrum:
    """Read a two-column (TOF, intensity) delimited text file.

    Fields may be separated by commas or whitespace.  Rows that do not parse
    as two numbers (headers, comments, blanks) are dropped.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"spectrum file not found: {path}")
    ts, ys = [], []
    with open(path) as fh:
        for line in fh:
            fields = line.replace(",", " ").split()
            if len(fields) < 2:
                continue
            try:
                t_val, y_val = float(fields[0]), float(fields[1])
            except ValueError:
                continue
            ts.append(t_val)
            ys.append(y_val)
    if len(ts) < 2:
        raise SpectrumFormatError(f"fewer than 2 numeric samples in {path}")
    return RawSpectrum(np.array(ts), np.array(ys), n_shots=n_shots)


def write_spectrum(path, spectrum: Spectrum, header: str | None = None) -> None:
    """Write a spectrum as two-column text, optionally with a comment header."""
    with open(path, "w") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        for t_val, y_val in zip(spectrum.t, spectrum.y):
            fh.write(f"{float(t_val)!r} {float(y_val)!r}\n")


def standardize(raw: RawSpectrum) -> Spectrum:
    """Subtract the minimum count and divide by the number of laser shots."""
    if raw.n_shots <= 0:
        raise ValueError("n_shots must be positive")
    y = (raw.y_obs - np.min(raw.y_obs)) / raw.n_shots
    return Spectrum(raw.t.copy(), y)


def as_spectrum(raw: RawSpectrum) -> Spectrum:
    """Wrap already-standardized intensities without rescaling."""
    return Spectrum(raw.t.copy(), raw.y_obs.copy())


def mean_spectrum(spectra: list[Spectrum]) -> Spectrum:
    """Pointwise average of spectra sharing an identical TOF grid."""
    if not spectra:
        raise ValueError("need at least one spectrum")
    ref = spectra[0]
    for s in spectra[1:]:
        if not np.array_equal(s.t, ref.t):
            raise ValueError("spectra do not share an identical TOF grid")
    y = np.mean([s.y for s in spectra], axis=0)
    return Spectrum(ref.t.copy(), y, window=ref.window)


def clip_range(spectrum: Spectrum, lo: float, hi: float) -> Spectrum:
    """Restrict to samples with lo <= t <= hi and set the window to [lo, hi]."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    keep = (spectrum.t >= lo) & (spectrum.t <= hi)
    if np.count_nonzero(keep) < 2:
        raise ValueError(f"window [{lo}, {hi}] leaves fewer than 2 samples")
    return Spectrum(spectrum.t[keep], spectrum.y[keep], window=(lo, hi))
