import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jmc.errors import DimensionError, DomainError
from jmc.expr import parse
from jmc.interval import Box, Interval
from jmc.relax import (RelaxationScheme, envelope_catalog, mc_product, mid, odd_power_ratio,
                       relax_at, safeguarded_newton)
from jmc.selftest import Report, check_case, random_case

from conftest import EX1, EX2, EX3


def test_bilinear_example():
    v = relax_at(RelaxationScheme(parse("x1*x2"), Box([(-1, 1), (-1, 1)])), [0.0, 0.0])
    assert (v.cv, v.cc) == (-1.0, 1.0)
    assert v.bounds == Interval(-1, 1)


def test_exp_example():
    v = relax_at(RelaxationScheme(parse("exp(x1)"), Box([(0, 1)])), [0.5])
    assert v.cv == pytest.approx(math.exp(0.5), rel=1e-15)
    assert v.cc == pytest.approx(1 + (math.e - 1) * 0.5, rel=1e-15)


@pytest.mark.parametrize("p", [-3.0, 0.0, 1.7])
def test_affine_is_exact(p):
    v = relax_at(RelaxationScheme(parse("2*x1+3"), Box([(-3, 2)])), [p])
    assert v.cv == v.cc == 2 * p + 3


def test_ln_envelope():
    env = envelope_catalog("ln", Interval(1.0, math.e))
    for x in np.linspace(1, math.e, 7):
        assert env.cc(x) == math.log(x)
        assert env.cv(x) == pytest.approx((x - 1) / (math.e - 1), abs=1e-15)


def test_cube_endpoint():
    env = envelope_catalog("pow", Interval(-1.0, 1.0), 3)
    assert env.cv(1.0) == 1.0
    assert env.cc(-1.0) == -1.0


def test_sin_envelope_on_concave_piece():
    env = envelope_catalog("sin", Interval(0.0, math.pi / 2))
    for x in np.linspace(0, math.pi / 2, 9):
        assert env.cc(x) == pytest.approx(math.sin(x), abs=1e-15)
        assert env.cv(x) == pytest.approx(2 * x / math.pi, abs=1e-15)


def test_odd_power_ratios():
    assert odd_power_ratio(3) == pytest.approx(-0.5, abs=1e-13)
    assert odd_power_ratio(5) == pytest.approx(-0.6058295861882680, abs=1e-13)


def test_newton_falls_back_to_bisection():
    # Newton from x0 = 0 diverges for atan; the bracket keeps it safe.
    root = safeguarded_newton(lambda x: math.atan(x - 0.3), lambda x: 1 / (1 + (x - 0.3) ** 2),
                              -10.0, 10.0, 9.0)
    assert root == pytest.approx(0.3, abs=1e-12)


def test_mid_is_median():
    assert mid(1, 3, 2) == 2 and mid(3, 1, 0) == 1 and mid(1, 3, 5) == 3


def test_mc_product_recovers_bounds_at_corners():
    cv, cc = mc_product(-1, 2, 2, 2, 1, 3, 3, 3)
    assert cv == cc == 6


def _hull_gap(fn, lo, hi, env, n=4001):
    xs = np.linspace(lo, hi, n)
    fx = np.array([fn(x) for x in xs])
    cv = np.array([env.cv(x) for x in xs])
    cc = np.array([env.cc(x) for x in xs])
    return fx, cv, cc


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(["exp", "ln", "sqrt", "sin", "cos", "recip", 2, 3, 4, 5, 7]),
       st.floats(-7, 7), st.floats(1e-3, 7))
def test_envelopes_bound_function(op, a, w):
    if op in ("ln", "sqrt") or (op == "recip" and a <= 0 < a + w):
        a = abs(a) + 1e-2
    lo, hi = a, a + w
    if isinstance(op, int):
        fn, env = (lambda x: x ** op), envelope_catalog("pow", Interval(lo, hi), op)
    else:
        fns = {"exp": math.exp, "ln": math.log, "sqrt": math.sqrt, "sin": math.sin,
               "cos": math.cos, "recip": lambda x: 1 / x}
        fn, env = fns[op], envelope_catalog(op, Interval(lo, hi))
    fx, cv, cc = _hull_gap(fn, lo, hi, env, 401)
    scale = 1e-12 * max(1.0, np.abs(fx).max())
    assert np.all(cv <= fx + scale)
    assert np.all(cc >= fx - scale)
    # Convexity of cv and concavity of cc on the sample grid.
    assert np.all(np.diff(cv, 2) >= -scale * 4)
    assert np.all(np.diff(cc, 2) <= scale * 4)
    assert env.cv(env.zmin) <= cv.min() + scale
    assert env.cc(env.zmax) >= cc.max() - scale


def test_trig_envelope_is_tight():
    """Compare with the grid convex hull: the catalogue must be the envelope."""
    for lo, hi in [(-1.0, 2.0), (0.5, 5.5), (-4.0, 4.0), (2.0, 3.5)]:
        env = envelope_catalog("sin", Interval(lo, hi))
        xs = np.linspace(lo, hi, 20001)
        fx = np.sin(xs)
        hull = _lower_hull(xs, fx)
        cv = np.array([env.cv(x) for x in xs])
        assert np.max(np.abs(cv - hull)) < 1e-6


def _lower_hull(xs, ys):
    pts = []
    for x, y in zip(xs, ys):
        while len(pts) >= 2 and (pts[-1][0] - pts[-2][0]) * (y - pts[-2][1]) \
                - (pts[-1][1] - pts[-2][1]) * (x - pts[-2][0]) <= 0:
            pts.pop()
        pts.append((x, y))
    hx, hy = zip(*pts)
    return np.interp(xs, hx, hy)


def test_reciprocal_needs_sign_definite_bounds():
    with pytest.raises(DomainError):
        RelaxationScheme(parse("1/x1"), Box([(-1, 1)]))
    v = relax_at(RelaxationScheme(parse("1/x1"), Box([(-2, -1)])), [-1.5])
    assert v.cv <= -1 / 1.5 <= v.cc


def test_point_outside_box():
    s = RelaxationScheme(parse("x1*w1"), Box([(0, 1), (0, 1)]))
    with pytest.raises(DomainError):
        relax_at(s, [1.1, 0.5])
    with pytest.raises(DimensionError):
        relax_at(s, [0.5])
    # rounding-level excursions are clipped
    v = relax_at(s, [1.0 + 1e-15, 0.5])
    assert v.cv <= 0.5 <= v.cc


@pytest.mark.parametrize("seed", range(5))
def test_random_case_properties(seed):
    rng = np.random.default_rng(seed)
    report = Report()
    for _ in range(400):
        n_x, n_w = int(rng.integers(0, 3)), int(rng.integers(1, 3))
        check_case(random_case(rng, n_x, n_w), rng, report)
    assert report.ok, "\n".join(report.lines())


@pytest.mark.parametrize("text,center", [
    (EX1, [0.3, -0.4, 0.5, 1.0]),
    (EX2, [25.0, 11.5]),
    (EX3, [5.0, 6.0, 0.097, 0.039]),
])
def test_second_order_pointwise(text, center):
    g = parse(text)
    rng = np.random.default_rng(0)
    ratios = []
    scale = 1.0 if text != EX3 else 0.01
    for k in range(1, 8):
        eps = scale * 2.0 ** -k
        box = Box([(c - eps * (1 if i < g.n_x else scale), c + eps * (1 if i < g.n_x else scale))
                   for i, c in enumerate(center)])
        s = RelaxationScheme(g, box)
        gap = max(relax_at(s, [float(rng.uniform(c.lo, c.hi)) for c in box]).gap for _ in range(50))
        ratios.append(gap / eps ** 2)
    # ratio bounded: finest ratio not larger than a small multiple of the coarsest
    assert max(ratios[3:]) <= 2.0 * max(ratios[:3])


def test_product_with_point_factor_is_scaling():
    assert mc_product(-2.0, 1.0, -0.5, 0.25, 3.0, 3.0, 3.0, 3.0) == (-1.5, 0.75)
    assert mc_product(-2.0, 1.0, -0.5, 0.25, -3.0, -3.0, -3.0, -3.0) == (-0.75, 1.5)
    assert mc_product(2.0, 2.0, 2.0, 2.0, -1.0, 4.0, 0.5, 1.5) == (1.0, 3.0)
