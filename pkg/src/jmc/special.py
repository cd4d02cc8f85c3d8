"""Special functions used by the primitive distributions.

Thin wrappers over :mod:`scipy.special` that expose the unnormalised forms
(upper incomplete gamma, incomplete beta) plus cancellation-aware
differences of the regularised ones.
"""

from __future__ import annotations

import math

from scipy import special as sc

from .errors import DomainError

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def erf(x: float) -> float:
    return math.erf(x)


def phi(x: float) -> float:
    """Standard normal density."""
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


def Phi(x: float) -> float:
    """Standard normal CDF."""
    return float(sc.ndtr(x))


def normal_mass(a: float, b: float) -> float:
    """Phi(b) - Phi(a) without cancellation in either tail."""
    if a > b:
        raise DomainError(f"empty range [{a}, {b}]")
    if a >= 0.0:
        return float(sc.ndtr(-a) - sc.ndtr(-b))
    if b <= 0.0:
        return float(sc.ndtr(b) - sc.ndtr(a))
    return float(1.0 - sc.ndtr(a) - sc.ndtr(-b))


def upper_gamma(a: float, z: float) -> float:
    """Gamma(a, z) = integral_z^inf t^(a-1) e^-t dt."""
    if a <= 0.0 or z < 0.0:
        raise DomainError(f"upper_gamma({a}, {z}) outside domain")
    return float(sc.gammaincc(a, z) * sc.gamma(a))


def gamma_mass(a: float, z0: float, z1: float) -> float:
    """Regularised mass (Gamma(a, z0) - Gamma(a, z1)) / Gamma(a) for z0 <= z1."""
    if a <= 0.0 or z0 < 0.0 or z0 > z1:
        raise DomainError(f"gamma_mass({a}, {z0}, {z1}) outside domain")
    if z1 <= a:
        return float(sc.gammainc(a, z1) - sc.gammainc(a, z0))
    if z0 >= a:
        return float(sc.gammaincc(a, z0) - sc.gammaincc(a, z1))
    return float(1.0 - sc.gammainc(a, z0) - sc.gammaincc(a, z1))


def incomplete_beta(a: float, b: float, c: float) -> float:
    """B(a, b, c) = integral_0^c t^(a-1) (1-t)^(b-1) dt."""
    if a <= 0.0 or b <= 0.0 or not 0.0 <= c <= 1.0:
        raise DomainError(f"incomplete_beta({a}, {b}, {c}) outside domain")
    return float(sc.betainc(a, b, c) * sc.beta(a, b))


def beta_mass(a: float, b: float, c0: float, c1: float) -> float:
    """Regularised mass (B(a, b, c1) - B(a, b, c0)) / B(a, b, 1) for c0 <= c1."""
    if a <= 0.0 or b <= 0.0 or not 0.0 <= c0 <= c1 <= 1.0:
        raise DomainError(f"beta_mass({a}, {b}, {c0}, {c1}) outside domain")
    median = a / (a + b)
    if c1 <= median:
        return float(sc.betainc(a, b, c1) - sc.betainc(a, b, c0))
    if c0 >= median:
        # 1 - I(a, b, c) = I(b, a, 1 - c)
        return float(sc.betainc(b, a, 1.0 - c0) - sc.betainc(b, a, 1.0 - c1))
    return float(1.0 - sc.betainc(a, b, c0) - sc.betainc(b, a, 1.0 - c1))
