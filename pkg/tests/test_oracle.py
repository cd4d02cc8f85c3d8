
import numpy as np
import pytest

from jmc.dist import Beta, TruncatedNormal, Uniform
from jmc.errors import DimensionError
from jmc.expr import parse
from jmc.oracle import Estimate, mc_expect, mc_samples, quad_expect
from jmc.rvtransform import box_muller, identity

from conftest import ex2_exact


def test_quad_identity_mean():
    f = parse("w1", n_x=0, n_w=1)
    est = quad_expect(f, [], [Uniform(0.0, 1.0)])
    assert est.value == pytest.approx(0.5, rel=1e-15) and est.converged


def test_quad_polynomial_exact():
    # E[w^k] on U(0, 1) is 1/(k+1); 16 nodes integrate degree 31 exactly
    for k in (2, 7, 20):
        f = parse(f"w1^{k}", n_x=0, n_w=1)
        est = quad_expect(f, [], [Uniform(0.0, 1.0)], nodes_per_dim=16)
        assert est.value == pytest.approx(1 / (k + 1), rel=1e-14)
    g = parse("w1*w2^2", n_x=0, n_w=2)
    est = quad_expect(g, [], [Uniform(0.0, 2.0), Uniform(-1.0, 1.0)], nodes_per_dim=8)
    assert est.value == pytest.approx(1.0 / 3.0, rel=1e-14)


def test_quad_example2(ex2):
    f, law = ex2
    for x in (24.0, 25.0, 26.0):
        assert quad_expect(f, [x], law).value == pytest.approx(ex2_exact(x), rel=1e-12)


def test_quad_with_density():
    f = parse("w1^2", n_x=0, n_w=1)
    law = [TruncatedNormal(0.0, 1.0, -5.0, 5.0)]
    # variance of N(0,1) truncated to [-5, 5]
    assert quad_expect(f, [], law).value == pytest.approx(0.9999851328686, rel=1e-10)
    assert quad_expect(parse("w1", n_x=0, n_w=1), [], [Beta(2.0, 5.0)]).value == \
        pytest.approx(2 / 7, rel=1e-10)


def test_quad_dimension_limit():
    f = parse("w1+w2+w3", n_x=0, n_w=3)
    with pytest.raises(DimensionError):
        quad_expect(f, [], [Uniform(0.0, 1.0)] * 3)


def test_quad_reports_nonconvergence():
    f = parse("sqrt(w1)", n_x=0, n_w=1)
    est = quad_expect(f, [], [Uniform(0.0, 1.0)], tol=1e-15, cap=64)
    assert not est.converged and est.half_width > 0
    assert est.value == pytest.approx(2 / 3, rel=1e-5)


def test_mc_constant_and_seed():
    c = parse("2.5", n_x=1, n_w=1)
    est = mc_expect(c, [0.0], [Uniform(0.0, 1.0)], 1000, seed=1)
    assert est.value == 2.5 and est.half_width == 0.0
    f = parse("x1*w1^2", n_x=1, n_w=1)
    a = mc_expect(f, [2.0], [Uniform(0.0, 1.0)], 10_000, seed=11)
    b = mc_expect(f, [2.0], [Uniform(0.0, 1.0)], 10_000, seed=11)
    assert a == b
    assert a != mc_expect(f, [2.0], [Uniform(0.0, 1.0)], 10_000, seed=12)
    with pytest.raises(ValueError):
        mc_expect(f, [2.0], [Uniform(0.0, 1.0)], 1)


def test_mc_agrees_with_quad(ex1):
    f, law = ex1
    for x in ([0.5, -0.5], [-1.0, 1.0], [0.9, 0.1]):
        q = quad_expect(f, x, law)
        m = mc_expect(f, x, law, 200_000, seed=2)
        assert m.contains(q.value)


def test_mc_dimension_mismatch():
    f = parse("w1+w2", n_x=0, n_w=2)
    with pytest.raises(DimensionError):
        mc_expect(f, [], [Uniform(0.0, 1.0)], 100)


def test_factorable_rv_routes_agree():
    f = parse("w1^2+w2^2", n_x=0, n_w=2)
    bm = box_muller()
    # r^2 = -2 ln(g1) is log-singular at the lower edge; quadrature only
    # gets close, and says so
    q = quad_expect(f, [], bm)
    assert q.value == pytest.approx(2.0, rel=1e-5)
    assert q.converged or q.half_width > 0
    m = mc_expect(f, [], bm, 100_000, seed=3)
    assert m.contains(2.0)
    rv = identity([Uniform(0.0, 1.0)])
    g = parse("w1", n_x=0, n_w=1)
    assert quad_expect(g, [], rv).value == pytest.approx(0.5)


def test_mc_samples_and_estimate():
    f = parse("x1+w1", n_x=1, n_w=1)
    v = mc_samples(f, [1.0], np.array([[0.0], [2.0]]))
    assert v.tolist() == [1.0, 3.0]
    e = Estimate(1.0, 0.1, "monte-carlo", 10)
    assert e.contains(1.05) and not e.contains(1.2) and e.contains(1.15, margin=0.1)
