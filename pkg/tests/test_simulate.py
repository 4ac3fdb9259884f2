import numpy as np
import pytest

from larkms.model import (
    BackgroundParams,
    KernelKind,
    LikelihoodKind,
    PeakParams,
    mean_intensity,
)
from larkms.simulate import (
    TruthSpec,
    generate_spectrum,
    mean_of_replicates,
    read_truth,
    write_truth,
)

GAUSS = KernelKind.GAUSSIAN


def make_truth(noise=LikelihoodKind.NORMAL, noise_scale=2.0, n_replicates=3, n_points=200):
    return TruthSpec(
        peaks=(PeakParams(40.0, 250.0, 3.0), PeakParams(70.0, 250.0, 5.0)),
        background=BackgroundParams(30.0, 10.0),
        s=0.6,
        gamma=50.0,
        noise=noise,
        noise_scale=noise_scale,
        t_lo=10.0,
        t_hi=100.0,
        n_points=n_points,
        n_replicates=n_replicates,
    )


class TestGenerate:
    def test_zero_noise_reproduces_mean_exactly(self):
        truth = make_truth(noise_scale=0.0, n_replicates=1)
        out = generate_spectrum(truth, GAUSS, np.random.default_rng(0))
        state = truth.state()
        mu = mean_intensity(state, GAUSS, truth.grid(), truth.t_lo)
        np.testing.assert_array_equal(out.replicates[0].y, mu)

    def test_gamma_replicate_means_converge(self):
        truth = TruthSpec(
            peaks=(PeakParams(40.0, 250.0, 3.0),),
            background=BackgroundParams(30.0, 10.0),
            s=0.6,
            gamma=50.0,
            noise=LikelihoodKind.GAMMA,
            noise_scale=2.0,
            t_lo=10.0,
            t_hi=100.0,
            n_points=40,
            n_replicates=10_000,
        )
        out = generate_spectrum(truth, GAUSS, np.random.default_rng(1))
        stack = np.stack([rep.y for rep in out.replicates])
        emp_mean = stack.mean(axis=0)
        emp_se = stack.std(axis=0, ddof=1) / np.sqrt(truth.n_replicates)
        assert np.all(np.abs(emp_mean - out.mu) <= 3.5 * emp_se)

    def test_fixed_seed_reproduces_replicates(self):
        truth = make_truth()
        a = generate_spectrum(truth, GAUSS, np.random.default_rng(7))
        b = generate_spectrum(truth, GAUSS, np.random.default_rng(7))
        for ra, rb in zip(a.replicates, b.replicates):
            np.testing.assert_array_equal(ra.y, rb.y)

    def test_normal_noise_floored_and_counted(self):
        truth = make_truth(noise_scale=60.0)  # large noise to force flooring
        out = generate_spectrum(truth, GAUSS, np.random.default_rng(3))
        assert out.n_floored > 0
        for rep in out.replicates:
            assert np.all(rep.y >= 0.0)

    def test_gamma_draws_always_positive(self):
        truth = make_truth(noise=LikelihoodKind.GAMMA, noise_scale=0.5)
        out = generate_spectrum(truth, GAUSS, np.random.default_rng(4))
        for rep in out.replicates:
            assert np.all(rep.y >= 0.0)
        assert out.n_floored == 0


class TestMeanOfReplicates:
    def test_single_replicate_identity(self):
        truth = make_truth(n_replicates=1)
        out = generate_spectrum(truth, GAUSS, np.random.default_rng(5))
        np.testing.assert_array_equal(mean_of_replicates(out).y, out.replicates[0].y)

    def test_noise_reduction_rate(self):
        # mean-spectrum SD ~= sigma / sqrt(n_replicates)
        sigma, n_rep = 5.0, 25
        truth = TruthSpec(
            peaks=(),
            background=None,
            s=0.0,
            gamma=100.0,
            noise=LikelihoodKind.NORMAL,
            noise_scale=sigma,
            t_lo=10.0,
            t_hi=100.0,
            n_points=4000,
            n_replicates=n_rep,
        )
        out = generate_spectrum(truth, GAUSS, np.random.default_rng(6))
        mean_spec = mean_of_replicates(out)
        resid = mean_spec.y - out.mu
        assert resid.std() == pytest.approx(sigma / np.sqrt(n_rep), rel=0.10)

    def test_mean_unbiased(self):
        truth = make_truth(noise_scale=3.0, n_replicates=400, n_points=50)
        out = generate_spectrum(truth, GAUSS, np.random.default_rng(8))
        mean_spec = mean_of_replicates(out)
        se = truth.noise_scale / np.sqrt(truth.n_replicates)
        assert np.all(np.abs(mean_spec.y - out.mu) < 5 * se)


class TestTruthRecord:
    def test_roundtrip_bit_exact(self, tmp_path):
        truth = make_truth(noise_scale=1.2345678901234567)
        path = tmp_path / "truth.txt"
        write_truth(path, truth, seed=3, n_floored=0)
        back = read_truth(path)
        assert back == truth

    def test_roundtrip_without_background(self, tmp_path):
        truth = TruthSpec(
            peaks=(PeakParams(40.0, 250.0, 3.0),),
            background=None,
            s=0.5,
            gamma=10.0,
            noise=LikelihoodKind.GAMMA,
            noise_scale=2.0,
            t_lo=10.0,
            t_hi=100.0,
            n_points=100,
        )
        path = tmp_path / "truth.txt"
        write_truth(path, truth)
        assert read_truth(path) == truth

    def test_mass_specified_peaks(self, tmp_path):
        path = tmp_path / "truth.txt"
        path.write_text(
            "noise = normal\nnoise_scale = 2.0\ngamma = 10.0\ns = 0.5\n"
            "t_lo = 10.0\nt_hi = 100.0\nn_points = 50\ncalib_u = 1.0\ncalib_t0 = 0.0\n"
            "peak_mz = 2500.0 250.0 3.0\n"
        )
        truth = read_truth(path)
        assert truth.peaks[0].tau == pytest.approx(50.0)

    def test_true_masses(self):
        truth = make_truth()
        np.testing.assert_allclose(truth.true_masses(), [40.0**2, 70.0**2])
