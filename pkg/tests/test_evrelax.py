import math

import numpy as np
import pytest

from jmc.dist import ProductDistribution, TruncatedNormal, Uniform
from jmc.errors import DimensionError, DomainError
from jmc.evrelax import (ConvergentScheme, EVRelaxation, build, build_for_rv, eval_cc, eval_cv,
                         point_bounds, scheme_eval)
from jmc.expr import parse
from jmc.interval import Box
from jmc.oracle import mc_expect, quad_expect
from jmc.partition import uniform_partition
from jmc.relax import RelaxationScheme, relax_at

from conftest import ex2_exact

X1 = Box([(-1.0, 1.0), (-1.0, 1.0)])


def test_single_cell_is_relaxation_at_mean(ex1):
    f, law = ex1
    r = build(f, X1, uniform_partition(law.support, (1, 1)), law)
    s = RelaxationScheme(f, X1 * law.support)
    for x in ([0.0, 0.0], [0.5, -0.5], [-1.0, 1.0]):
        v = relax_at(s, x + [0.5, 1.0])
        assert r.evaluate(x) == (v.cv, v.cc)


def test_affine_integrand_is_exact():
    f = parse("2*x1-3*w1+w2+1", n_x=1, n_w=2)
    law = ProductDistribution([TruncatedNormal(1.0, 2.0, -3.0, 4.0), Uniform(0.0, 5.0)])
    mean = law.cond_mean()
    for counts in ((1, 1), (3, 2)):
        r = build(f, [(0.0, 1.0)], uniform_partition(law.support, counts), law)
        for x in (0.0, 0.3, 1.0):
            exact = 2 * x - 3 * mean[0] + mean[1] + 1
            cv, cc = r.evaluate([x])
            assert cv == pytest.approx(exact, rel=1e-14, abs=1e-14)
            assert cc == pytest.approx(exact, rel=1e-14, abs=1e-14)


def test_constant_integrand():
    f = parse("3.5", n_x=1, n_w=1)
    law = ProductDistribution([Uniform(0.0, 1.0)])
    r = build(f, [(0.0, 1.0)], uniform_partition(law.support, (7,)), law)
    assert r.evaluate([0.4]) == (3.5, 3.5)


@pytest.mark.parametrize("counts", [(1,), (2,), (8,), (32,)])
def test_example2_sandwich(ex2, counts):
    f, law = ex2
    r = build(f, [(24.0, 26.0)], uniform_partition(law.support, counts), law)
    for x in np.linspace(24.0, 26.0, 21):
        cv, cc = r.evaluate([x])
        F = ex2_exact(float(x))
        assert cv <= F <= cc


def test_example2_refinement_tightens(ex2):
    f, law = ex2
    gaps = []
    for n in (1, 2, 4, 8, 16):
        r = build(f, [(24.0, 26.0)], uniform_partition(law.support, (n,)), law)
        gaps.append(max(cc - cv for cv, cc in map(r.evaluate, [[x] for x in np.linspace(24, 26, 9)])))
    assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))


def test_example1_refinement_tightens(ex1):
    f, law = ex1
    grid = [[float(a), float(b)] for a in np.linspace(-1, 1, 5) for b in np.linspace(-1, 1, 5)]
    gaps = []
    for n in (1, 4, 8):
        r = build(f, X1, uniform_partition(law.support, (n, n)), law)
        gaps.append(max(cc - cv for cv, cc in map(r.evaluate, grid)))
    assert gaps[0] > gaps[1] > gaps[2]


def test_point_bounds_contain_mc(ex1):
    f, law = ex1
    lo, hi = point_bounds(f, [0.5, -0.5], uniform_partition(law.support, (4, 4)), law)
    est = mc_expect(f, [0.5, -0.5], law, 200_000, seed=5)
    assert lo <= est.value + est.half_width and est.value - est.half_width <= hi
    assert lo < hi


def test_point_bounds_example2(ex2):
    f, law = ex2
    for n in (1, 4, 16):
        lo, hi = point_bounds(f, [25.0], uniform_partition(law.support, (n,)), law)
        assert lo <= ex2_exact(25.0) <= hi


def test_example3_build(ex3):
    f, rv = ex3
    r = build_for_rv(f, [(0.0, 16.0), (0.0, 16.0)], rv, (4, 4))
    assert len(r) == 16
    cv, cc = r.evaluate([3.0, 3.0])
    F = quad_expect(f, [3.0, 3.0], rv).value
    assert cv <= F <= cc


def test_convexity_along_segments(ex1):
    f, law = ex1
    r = build(f, X1, uniform_partition(law.support, (3, 3)), law)
    rng = np.random.default_rng(4)
    for _ in range(200):
        p, q = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        lam = rng.uniform()
        m = lam * p + (1 - lam) * q
        (pv, pc), (qv, qc), (mv, mc) = r.evaluate(p), r.evaluate(q), r.evaluate(m)
        assert mv <= lam * pv + (1 - lam) * qv + 1e-10
        assert mc >= lam * pc + (1 - lam) * qc - 1e-10
        assert mc - mv >= 0.0


def test_threads_give_identical_results(ex1):
    f, law = ex1
    P = uniform_partition(law.support, (4, 4))
    a = build(f, X1, P, law, threads=1)
    b = build(f, X1, P, law, threads=4)
    assert a.evaluate([0.2, 0.7]) == b.evaluate([0.2, 0.7])
    assert eval_cv(a, [0.2, 0.7]) == a.eval_cv([0.2, 0.7])
    assert eval_cc(a, [0.2, 0.7]) == b.eval_cc([0.2, 0.7])


def test_dimension_and_domain_errors(ex1):
    f, law = ex1
    P = uniform_partition(law.support, (2, 2))
    with pytest.raises(DimensionError):
        EVRelaxation(f, Box([(0.0, 1.0)]), P, law)
    r = EVRelaxation(f, X1, P, law)
    with pytest.raises(DomainError):
        r.evaluate([1.5, 0.0])
    with pytest.raises(DimensionError):
        r.evaluate([0.0])
    g = parse("ln(w1-x1)", n_x=1, n_w=1)
    bad = EVRelaxation(g, Box([(0.0, 2.0)]), uniform_partition([(1.0, 3.0)], (2,)),
                       ProductDistribution([Uniform(1.0, 3.0)]))
    with pytest.raises(DomainError, match="cell 0"):
        bad.evaluate([0.5])


def test_convergent_scheme(ex2):
    f, law = ex2
    s = ConvergentScheme(f, law.support, law, 100.0)
    prev = math.inf
    for eps in (0.5, 0.125, 0.03125, 0.0078125):
        cv, cc, gap = scheme_eval(s, [(25 - eps, 25 + eps)], [25.0])
        assert cv <= ex2_exact(25.0) <= cc
        assert gap == cc - cv and gap < prev
        prev = gap
    with pytest.raises(DomainError):
        s.relaxation(Box.point([25.0]))
