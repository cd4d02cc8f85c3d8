import math

import mpmath as mp
import pytest

from jmc import special
from jmc.errors import DomainError

mp.mp.dps = 40

PROBES_X = [-8.0, -3.3, -1.0, -0.1, 0.0, 0.4, 1.7, 5.0, 9.5]
PROBES_GAMMA = [(0.5, 0.1), (1.0, 2.0), (2.5, 0.7), (2.5, 8.0), (7.0, 3.0), (12.0, 15.0), (3.2, 40.0)]
PROBES_BETA = [(2.0, 3.0, 0.4), (0.7, 1.3, 0.05), (5.0, 2.0, 0.9), (1.0, 1.0, 0.3), (3.5, 8.0, 0.2)]


def rel(a, b):
    return abs(a - float(b)) / abs(float(b))


def test_known_values():
    assert special.Phi(0.0) == 0.5
    assert special.phi(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-16)
    for z in (0.0, 0.5, 3.0, 20.0):
        assert special.upper_gamma(1.0, z) == pytest.approx(math.exp(-z), rel=1e-14)
    assert special.incomplete_beta(2.0, 3.0, 1.0) == pytest.approx(1 / 12, rel=1e-14)


@pytest.mark.parametrize("x", PROBES_X)
def test_normal_against_mpmath(x):
    assert rel(special.Phi(x), mp.ncdf(x)) <= 1e-12
    assert rel(special.phi(x), mp.npdf(x)) <= 1e-12
    assert rel(special.erf(x), mp.erf(x)) <= 1e-12 if x != 0 else special.erf(x) == 0


@pytest.mark.parametrize("a,z", PROBES_GAMMA)
def test_upper_gamma_against_quadrature(a, z):
    ref = mp.quad(lambda t: t ** (a - 1) * mp.exp(-t), [z, z + 10, mp.inf])
    assert rel(special.upper_gamma(a, z), ref) <= 1e-12


@pytest.mark.parametrize("a,b,c", PROBES_BETA)
def test_incomplete_beta_against_quadrature(a, b, c):
    ref = mp.quad(lambda t: t ** (a - 1) * (1 - t) ** (b - 1), [0, c])
    assert rel(special.incomplete_beta(a, b, c), ref) <= 1e-12


def test_masses_avoid_cancellation():
    ref = mp.ncdf(-8.5) - mp.ncdf(-9)
    assert rel(special.normal_mass(-9.0, -8.5), ref) <= 1e-12
    assert rel(special.normal_mass(8.5, 9.0), ref) <= 1e-12
    ref = mp.gammainc(3, 40, 41, regularized=True)
    assert rel(special.gamma_mass(3.0, 40.0, 41.0), ref) <= 1e-12
    with mp.workdps(60):
        ref = mp.betainc(2, 30, 0.9, 0.95, regularized=True)
    assert rel(special.beta_mass(2.0, 30.0, 0.9, 0.95), ref) <= 1e-11


def test_domain_errors():
    with pytest.raises(DomainError):
        special.upper_gamma(-1.0, 1.0)
    with pytest.raises(DomainError):
        special.incomplete_beta(1.0, 1.0, 1.5)
    with pytest.raises(DomainError):
        special.normal_mass(1.0, 0.0)
