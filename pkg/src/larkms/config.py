"""Run configuration files: every prior hyperparameter plus calibration.

The format is ``key = value`` plain text with '#' comments.  The elicit
command writes one of these with a provenance comment per line.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .io import file_header, format_value, parse_keyvalue
from .priors import Hyperparameters
from .spectra import Calibration

_HYPER_KEYS = {
    "nu_j": "nu_j",
    "lambda": "lam",
    "eps": "eps",
    "t0": "t_lo",
    "t1": "t_hi",
    "mu_r": "mu_r",
    "sigma2_r": "sigma2_r",
    "sigma2_rho": "sigma2_rho",
    "a_phi": "a_phi",
    "b_phi": "b_phi",
    "a_s": "a_s",
    "b_s": "b_s",
    "lambda0": "lam0",
    "omega0_hat": "omega0_hat",
    "sigma2_omega0": "sigma2_omega0",
    "gamma_fixed": "gamma_fixed",
}


@dataclass(frozen=True)
class RunConfig:
    """Hyperparameters plus calibration and optional fixed noise scale."""

    hyper: Hyperparameters
    calib: Calibration = Calibration()
    sigma: float | None = None  # fixed noise SD for the normal likelihood
    sigma_sampled: bool = False


def read_config(path) -> RunConfig:
    raw = parse_keyvalue(path)
    missing = [key for key in _HYPER_KEYS if key not in raw]
    if missing:
        raise ConfigError(f"{path}: missing config keys: {', '.join(sorted(missing))}")
    try:
        hyper_kwargs = {
            field: float(raw[key]) for key, field in _HYPER_KEYS.items()
        }
        hyper = Hyperparameters(**hyper_kwargs)
        calib = Calibration(
            u=float(raw.get("calib_u", 1.0)), t0=float(raw.get("calib_t0", 0.0))
        )
        sigma = float(raw["sigma"]) if "sigma" in raw else None
        sigma_sampled = raw.get("sigma_sampled", "false").lower() in ("true", "1", "yes")
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return RunConfig(hyper=hyper, calib=calib, sigma=sigma, sigma_sampled=sigma_sampled)


def write_config(
    path,
    config: RunConfig,
    provenance: dict[str, str] | None = None,
    seed=None,
    inputs: dict[str, str] | None = None,
) -> None:
    """Write a run config with one ``# provenance`` comment per key."""
    provenance = provenance or {}
    h = config.hyper
    lines = [file_header(seed=seed, inputs=inputs)]
    for key, field in _HYPER_KEYS.items():
        note = provenance.get(key, "default")
        lines.append(f"{key} = {format_value(getattr(h, field))}  # {note}")
    lines.append(f"calib_u = {format_value(config.calib.u)}  # {provenance.get('calib_u', 'default')}")
    lines.append(f"calib_t0 = {format_value(config.calib.t0)}  # {provenance.get('calib_t0', 'default')}")
    if config.sigma is not None:
        lines.append(f"sigma = {format_value(config.sigma)}  # {provenance.get('sigma', 'default')}")
        lines.append(f"sigma_sampled = {format_value(config.sigma_sampled)}  # default")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
