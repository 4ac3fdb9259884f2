import numpy as np
import pytest

from larkms import Hyperparameters, Spectrum


@pytest.fixture
def small_hyper():
    """Hand-set hyperparameters for a 90-us window."""
    return Hyperparameters(
        nu_j=5.0,
        lam=0.0286,
        eps=0.79,
        t_lo=10.0,
        t_hi=100.0,
        mu_r=200.0,
        gamma_fixed=1.0,
        b_phi=0.5,
        a_s=2.0,
        lam0=0.01,
        omega0_hat=50.0,
    )


@pytest.fixture
def flat_spectrum():
    t = np.linspace(10.0, 100.0, 60)
    return Spectrum(t, np.ones_like(t))


class RiggedRng:
    """Deterministic stand-in for a Generator, yielding preset values."""

    def __init__(self, uniforms=(), normals=(), integers=()):
        self.u = list(uniforms)
        self.n = list(normals)
        self.i = list(integers)

    def uniform(self, lo=0.0, hi=1.0):
        return lo + (hi - lo) * self.u.pop(0)

    def normal(self, mu, sd):
        return mu + sd * self.n.pop(0)

    def integers(self, n):
        return self.i.pop(0)


@pytest.fixture
def rigged_rng_cls():
    return RiggedRng
