"""Command-line interface: elicit priors, fit spectra, simulate, evaluate.

Every command is deterministic given its inputs, flags and seed, and every
output file starts with a header line carrying the tool version, the seed
and SHA-256 digests of the inputs.  On failure a single machine-parsable
``error:<category>: <message>`` line goes to stderr and the exit code is
nonzero.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, read_config, write_config
from .errors import ConfigError, LarkError
from .io import file_header, sha256_digest
from .model import KernelKind, LikelihoodKind, ObservationModel
from .peaks import (
    filter_by_resolution,
    hp_peaks,
    ma_peaks,
    match_peaks,
    posterior_mean_curve,
    posterior_summary,
    read_peak_report,
    write_match_result,
    write_peak_report,
    write_summary,
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
from .sampler import ChainConfig, run_chain, write_move_stats, write_samples
from .simulate import generate_spectrum, read_truth_config, write_truth
from .spectra import (
    Calibration,
    as_spectrum,
    clip_range,
    load_spectrum,
    standardize,
    write_spectrum,
)


def _add_common_fit_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kernel", choices=["gaussian", "cauchy"], default="cauchy")
    parser.add_argument("--likelihood", choices=["gamma", "normal"], default="gamma")
    parser.add_argument("--iterations", type=int, default=20000)
    parser.add_argument("--burnin", type=int, default=None)
    parser.add_argument("--thin", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="larkms",
        description="Bayesian kernel-mixture peak identification for MALDI-TOF spectra",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_elicit = sub.add_parser("elicit", help="fill a run config from a spectrum")
    p_elicit.add_argument("--spectrum", required=True)
    p_elicit.add_argument("--out", required=True, help="config file to write")
    p_elicit.add_argument(
        "--expected-peaks", type=float, required=True, help="prior expected peak count"
    )
    p_elicit.add_argument(
        "--window", nargs=2, type=float, default=None, metavar=("LO", "HI"),
        help="TOF window of interest (default: data range)",
    )
    p_elicit.add_argument(
        "--noise-region", nargs=2, type=float, default=None, metavar=("LO", "HI"),
        help="low-intensity TOF band for the signal-fraction prior "
        "(default: final 5%% of the window)",
    )
    p_elicit.add_argument(
        "--background-window", nargs=2, type=float, default=None, metavar=("LO", "HI"),
        help="TOF band for the background decay fit (default: the 2-3.5 kDa/e "
        "band through the calibration)",
    )
    p_elicit.add_argument("--mu-r", type=float, default=200.0)
    p_elicit.add_argument("--calib-u", type=float, default=1.0)
    p_elicit.add_argument("--calib-t0", type=float, default=0.0)
    p_elicit.add_argument("--b-phi", type=float, default=None, help="override b_phi")
    p_elicit.add_argument("--a-s", type=float, default=None, help="override a_s")
    p_elicit.add_argument(
        "--omega0-hat", type=float, default=None, help="override omega0_hat"
    )
    p_elicit.add_argument("--lambda0", type=float, default=None, help="override lambda0")
    p_elicit.add_argument("--shots", type=int, default=None,
                          help="standardize raw counts over this many laser shots")

    p_fit = sub.add_parser("fit", help="fit a spectrum and write reports")
    p_fit.add_argument("--spectrum", required=True)
    p_fit.add_argument("--config", required=True)
    p_fit.add_argument("--out", required=True, help="output directory")
    p_fit.add_argument("--rho-min", type=float, default=0.0)
    p_fit.add_argument("--ma-refine", type=int, default=1,
                       help="grid refinement factor for model-averaged peaks")
    p_fit.add_argument("--chains", type=int, default=1,
                       help="independent chains written to chain_NN subdirectories")
    _add_common_fit_flags(p_fit)

    p_sim = sub.add_parser("simulate", help="generate spectra from a truth config")
    p_sim.add_argument("--config", required=True, help="truth config file")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--kernel", choices=["gaussian", "cauchy"], default="cauchy")
    p_sim.add_argument("--seed", type=int, default=0)

    p_eval = sub.add_parser("evaluate", help="match a peak report against truth")
    p_eval.add_argument("--report", required=True, help="peak report file")
    p_eval.add_argument("--truth", required=True, help="truth record file")
    p_eval.add_argument("--out", required=True, help="match result file")
    p_eval.add_argument("--tol", type=float, default=0.003,
                        help="relative mass tolerance window")

    return parser


def cmd_elicit(args) -> int:
    raw = load_spectrum(args.spectrum, n_shots=args.shots or 1)
    spec = standardize(raw) if args.shots else as_spectrum(raw)
    if args.window is not None:
        spec = clip_range(spec, args.window[0], args.window[1])
    t_lo, t_hi = spec.window
    calib = Calibration(u=args.calib_u, t0=args.calib_t0)

    provenance: dict[str, str] = {
        "nu_j": "flag",
        "t0": "data-derived" if args.window is None else "flag",
        "t1": "data-derived" if args.window is None else "flag",
        "mu_r": "flag" if args.mu_r != 200.0 else "default",
        "calib_u": "flag",
        "calib_t0": "flag",
        "sigma2_rho": "default",
        "sigma2_r": "default",
        "sigma2_omega0": "default",
        "a_phi": "default",
        "b_s": "default",
        "lambda": "derived",
        "eps": "derived",
        "gamma_fixed": "data-derived",
    }
    lam, eps = elicit_abundance(args.expected_peaks, t_lo, t_hi)
    gamma_fixed = elicit_scale(spec)
    if gamma_fixed <= 0:
        raise ConfigError("gamma_fixed: spectrum has zero mean intensity")
    if args.b_phi is not None:
        a_phi, b_phi = DEFAULT_A_PHI, args.b_phi
        provenance["b_phi"] = "flag"
    else:
        a_phi, b_phi = elicit_phi(spec)
        provenance["b_phi"] = "data-derived"
    if args.a_s is not None:
        a_s, b_s = args.a_s, 1.0
        provenance["a_s"] = "flag"
    else:
        noise_region = tuple(args.noise_region) if args.noise_region else None
        a_s, b_s = elicit_signal_fraction(spec, noise_region)
        provenance["a_s"] = "data-derived"
    if args.omega0_hat is not None and args.lambda0 is not None:
        omega0_hat, lam0 = args.omega0_hat, args.lambda0
        provenance["omega0_hat"] = provenance["lambda0"] = "flag"
    else:
        tof_window = tuple(args.background_window) if args.background_window else None
        omega0_hat, lam0 = elicit_background(spec, calib, eps, tof_window=tof_window)
        provenance["omega0_hat"] = provenance["lambda0"] = "data-derived"

    hyper = Hyperparameters(
        nu_j=args.expected_peaks,
        lam=lam,
        eps=eps,
        t_lo=t_lo,
        t_hi=t_hi,
        mu_r=args.mu_r,
        a_phi=a_phi,
        b_phi=b_phi,
        a_s=a_s,
        b_s=b_s,
        lam0=lam0,
        omega0_hat=omega0_hat,
        gamma_fixed=gamma_fixed,
    )
    config = RunConfig(hyper=hyper, calib=calib)
    write_config(
        args.out,
        config,
        provenance=provenance,
        inputs={"spectrum": sha256_digest(args.spectrum)},
    )
    print(f"wrote {args.out}")
    return 0


def _fit_one(spec, rc: RunConfig, args, out_dir: Path, seed: int, digests) -> None:
    kind = KernelKind(args.kernel)
    lik = LikelihoodKind(args.likelihood)
    if lik == LikelihoodKind.NORMAL:
        sigma = rc.sigma if rc.sigma is not None else estimate_noise_sd(spec)
        obs = ObservationModel(
            kind=lik, sample_variance=rc.sigma_sampled, sigma2=sigma**2
        )
    else:
        obs = ObservationModel(kind=lik)
    burnin = args.iterations // 2 if args.burnin is None else args.burnin
    cfg = ChainConfig(
        n_iter=args.iterations, n_burn=burnin, thin=args.thin, seed=seed
    )
    samples = run_chain(spec, rc.hyper, kind, obs, cfg)

    out_dir.mkdir(parents=True, exist_ok=True)
    write_samples(out_dir / "samples.txt", samples, seed=seed, inputs=digests)
    write_move_stats(out_dir / "move_stats.txt", samples.move_stats, seed=seed, inputs=digests)

    hp = hp_peaks(samples, rc.calib, source=str(out_dir))
    if args.rho_min > 0:
        hp = filter_by_resolution(hp, args.rho_min)
    grid = spec.t
    if args.ma_refine > 1:
        grid = np.linspace(spec.t[0], spec.t[-1], (spec.t.size - 1) * args.ma_refine + 1)
    ma = ma_peaks(samples, grid, kind, rc.calib, source=str(out_dir))
    write_peak_report(out_dir / "peaks_hp.txt", hp, seed=seed, inputs=digests)
    write_peak_report(out_dir / "peaks_ma.txt", ma, seed=seed, inputs=digests)

    curve = posterior_mean_curve(samples, spec.t)
    deriv = posterior_mean_curve(samples, spec.t, deriv=True)
    header = file_header(seed=seed, inputs=digests)
    with open(out_dir / "curve.txt", "w") as fh:
        fh.write(header + "\n")
        for t_val, v in zip(spec.t, curve):
            fh.write(f"{float(t_val)!r} {float(v)!r}\n")
    with open(out_dir / "curve_deriv.txt", "w") as fh:
        fh.write(header + "\n")
        for t_val, v in zip(spec.t, deriv):
            fh.write(f"{float(t_val)!r} {float(v)!r}\n")

    summary = posterior_summary(samples, hp, ma)
    write_summary(out_dir / "summary.txt", summary, seed=seed, inputs=digests)


def cmd_fit(args) -> int:
    raw = load_spectrum(args.spectrum)
    spec = as_spectrum(raw)
    rc = read_config(args.config)
    spec = clip_range(spec, rc.hyper.t_lo, rc.hyper.t_hi)
    digests = {
        "spectrum": sha256_digest(args.spectrum),
        "config": sha256_digest(args.config),
    }
    out_root = Path(args.out)
    if args.chains <= 1:
        _fit_one(spec, rc, args, out_root, args.seed, digests)
    else:
        seeds = np.random.SeedSequence(args.seed).spawn(args.chains)
        for i, ss in enumerate(seeds):
            chain_seed = int(ss.generate_state(1)[0])
            _fit_one(spec, rc, args, out_root / f"chain_{i:02d}", chain_seed, digests)
    print(f"wrote {out_root}")
    return 0


def cmd_simulate(args) -> int:
    truth = read_truth_config(args.config)
    kind = KernelKind(args.kernel)
    rng = np.random.default_rng(args.seed)
    output = generate_spectrum(truth, kind, rng)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    digests = {"config": sha256_digest(args.config)}
    header = file_header(seed=args.seed, inputs=digests)
    for i, rep in enumerate(output.replicates):
        write_spectrum(out_dir / f"spectrum_{i:03d}.txt", rep, header=header)
    write_spectrum(out_dir / "mean.txt", output.mean(), header=header)
    write_truth(out_dir / "truth.txt", truth, seed=args.seed, n_floored=output.n_floored)
    print(f"wrote {out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    report = read_peak_report(args.report)
    truth = read_truth_config(args.truth)
    result = match_peaks(report, truth.true_masses(), tol=args.tol)
    digests = {
        "report": sha256_digest(args.report),
        "truth": sha256_digest(args.truth),
    }
    write_match_result(args.out, result, tol=args.tol, inputs=digests)
    print(f"tpr={result.tpr!r} fdr={result.fdr!r}")
    return 0


_COMMANDS = {
    "elicit": cmd_elicit,
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except LarkError as exc:
        print(f"error:{exc.category}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error:io: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print(f"error:invalid: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
