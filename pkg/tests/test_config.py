import pytest

from larkms.config import RunConfig, read_config, write_config
from larkms.errors import ConfigError
from larkms.priors import Hyperparameters
from larkms.spectra import Calibration


@pytest.fixture
def config():
    hyper = Hyperparameters(
        nu_j=20.0,
        lam=0.028601322502369714,
        eps=0.7933499999999999,
        t_lo=5.58,
        t_hi=217.14,
        mu_r=200.0,
        b_phi=0.11,
        a_s=8.33,
        lam0=0.0005,
        omega0_hat=290.14,
        gamma_fixed=3.25,
    )
    return RunConfig(hyper=hyper, calib=Calibration(u=0.5, t0=1.5), sigma=66.0)


class TestConfigFile:
    def test_roundtrip(self, config, tmp_path):
        path = tmp_path / "run.cfg"
        write_config(path, config, seed=5)
        back = read_config(path)
        assert back.hyper == config.hyper
        assert back.calib == config.calib
        assert back.sigma == config.sigma
        assert back.sigma_sampled is False

    def test_provenance_comments(self, config, tmp_path):
        path = tmp_path / "run.cfg"
        write_config(path, config, provenance={"b_phi": "data-derived"})
        lines = path.read_text().splitlines()
        b_phi_line = [l for l in lines if l.startswith("b_phi")][0]
        assert "# data-derived" in b_phi_line

    def test_missing_keys_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("nu_j = 20\nlambda = 0.03\n")
        with pytest.raises(ConfigError):
            read_config(path)

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("nu_j 20\n")
        with pytest.raises(ConfigError):
            read_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_config(tmp_path / "none.cfg")
