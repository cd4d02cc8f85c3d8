import math

import pytest

from jmc.dist import ProductDistribution, TruncatedNormal, Uniform
from jmc.expr import parse
from jmc.rvtransform import affine_transform, identity

EX1 = "(x1*x2*ln(3+x1*w1*w2)-(x1^2-1)*(x2^2-1)*w2^2)/(2+w1*x1)"
EX2 = "((w1-10)^2*ln(x1)+(x1-5)^2)/w1"
EX3 = ("-(w2*x2*(1+0.99*w1*x1)+w1*x1*(1+w2*x2))"
       "/((1+w1*x1)*(1+w2*x2)*(1+0.99*w1*x1)*(1+0.9*w2*x2))")
EX3_D = (0.097, 0.039)
EX3_A = ((0.0072, 0.0004), (0.0008, 0.0036))


def ex2_exact(x: float) -> float:
    """Closed-form E[f(x, w)] for w ~ U(10, 13)."""
    L = math.log(x)
    prim = lambda w: L * (w * w / 2 - 20 * w + 100 * math.log(w)) + (x - 5) ** 2 * math.log(w)
    return (prim(13.0) - prim(10.0)) / 3.0


@pytest.fixture(scope="session")
def ex1():
    law = ProductDistribution([Uniform(0.0, 1.0), Uniform(0.0, 2.0)])
    return parse(EX1), law


@pytest.fixture(scope="session")
def ex2():
    return parse(EX2), ProductDistribution([Uniform(10.0, 13.0)])


@pytest.fixture(scope="session")
def ex3():
    base = identity([TruncatedNormal(0.0, 1.0, -5.0, 5.0)] * 2)
    return parse(EX3), affine_transform(base, EX3_D, EX3_A)
