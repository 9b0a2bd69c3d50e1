import math

import numpy as np
import numpy.polynomial.laguerre as npl
import pytest

from nghjb.model import MarketParams
from nghjb.quadrature import (
    MAX_ORDER,
    assemble_mv_quadrature,
    expect_psi2,
    laguerre_rule,
    moment_identities,
)
from nghjb.trial import TrialState, initial_params


def test_order_two_closed_form():
    # the order-2 rule is solvable by hand: roots of L_2 = (s^2 - 4s + 2)/2
    x, w = laguerre_rule(2)
    np.testing.assert_allclose(x, [2.0 - math.sqrt(2), 2.0 + math.sqrt(2)], rtol=1e-14)
    np.testing.assert_allclose(
        w, [(2.0 + math.sqrt(2)) / 4.0, (2.0 - math.sqrt(2)) / 4.0], rtol=1e-13
    )


def test_order_one_is_the_mean():
    x, w = laguerre_rule(1)
    np.testing.assert_allclose(x, [1.0], rtol=1e-14)
    np.testing.assert_allclose(w, [1.0], rtol=1e-14)


@pytest.mark.parametrize("order", [1, 2, 3, 5, 8, 16, 32, 64])
def test_against_library_rule(order):
    # independent implementation check: numpy builds the same rule via
    # eigenvalue methods
    x, w = laguerre_rule(order)
    x_ref, w_ref = npl.laggauss(order)
    np.testing.assert_allclose(x, x_ref, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(w, w_ref, rtol=1e-9, atol=1e-14)


def test_weights_sum_to_one():
    for order in range(1, MAX_ORDER + 1):
        _, w = laguerre_rule(order)
        assert abs(w.sum() - 1.0) <= 5e-13


def test_polynomial_exactness_degree_2q_minus_1():
    # integral of s^k e^-s is k!
    for order in (2, 4, 6):
        x, w = laguerre_rule(order)
        for k in range(2 * order):
            got = float(np.dot(w, x ** k))
            assert got == pytest.approx(math.factorial(k), rel=1e-11), (order, k)


def test_order_bounds():
    with pytest.raises(ValueError):
        laguerre_rule(0)
    with pytest.raises(ValueError):
        laguerre_rule(MAX_ORDER + 1)


def test_rule_is_cached_and_frozen():
    a = laguerre_rule(8)
    b = laguerre_rule(8)
    assert a[0] is b[0] and a[1] is b[1]
    with pytest.raises(ValueError):
        a[0][0] = 0.0


def test_expect_psi2_normalization_and_mean():
    s = TrialState(0.0, math.log(2.0), math.log(0.5))
    assert expect_psi2(s, 2, lambda x, y: np.ones_like(x)) == pytest.approx(1.0, rel=1e-14)
    # mean of x under rate-beta exponential is 1/beta
    assert expect_psi2(s, 2, lambda x, y: x) == pytest.approx(0.5, rel=1e-13)
    assert expect_psi2(s, 2, lambda x, y: y[1]) == pytest.approx(2.0, rel=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
def test_moment_identities_pass(n, b):
    recs = moment_identities(n, b)
    assert len(recs) == 5
    for rec in recs:
        assert rec["rel_err"] <= 1e-10, rec


def test_moment_identities_n0_only_x():
    recs = moment_identities(0, 1.0)
    assert [rec["identity"] for rec in recs] == ["mean_x"]


def test_moment_identities_low_order_fails_cubics():
    # order 1 integrates degree <= 1 exactly; the cubic moments must miss
    recs = {rec["identity"]: rec for rec in moment_identities(2, 1.0, order=1)}
    assert recs["mean_x"]["rel_err"] <= 1e-13
    assert recs["triple_products_yyy"]["rel_err"] > 1e-2
    assert recs["sum_yi2_yj"]["rel_err"] > 1e-2


def _random_market(rng, n):
    # baseline experiment ranges
    return MarketParams(
        gamma=0.5,
        r=rng.uniform(0.025, 0.1),
        lam=rng.uniform(0.05, 0.2),
        a0=rng.uniform(0.25, 0.4),
        b0=rng.uniform(0.1, 0.4),
        rho=rng.uniform(-0.5, 0.4),
        n=n,
        k=1.0 if n else 0.0,
    )


@pytest.mark.parametrize("n", [0, 1, 2])
def test_assembled_system_against_closed_forms(n):
    from nghjb.galerkin import assemble_closed

    rng = np.random.default_rng(42 + n)
    for _ in range(10):
        mp = _random_market(rng, n)
        s = initial_params(mp)
        m, v = assemble_mv_quadrature(mp, s)
        sys_closed = assemble_closed(mp, s)
        np.testing.assert_allclose(m, sys_closed.m, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(v, sys_closed.v, rtol=1e-10, atol=1e-12)


def test_assembly_sharpness_in_order():
    # order 4 is the first exact rule (degree 3 integrands); higher orders
    # must agree with it, order 2 must not for the cubic entries
    mp = MarketParams(n=2, k=1.0)
    s = TrialState(0.3, math.log(1.1), math.log(0.7))
    m4, v4 = assemble_mv_quadrature(mp, s, order=4)
    m8, v8 = assemble_mv_quadrature(mp, s, order=8)
    np.testing.assert_allclose(m4, m8, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(v4, v8, rtol=1e-12, atol=1e-14)


def test_mass_matrix_is_symmetric_positive_definite():
    mp = MarketParams(n=2, k=1.0)
    s = TrialState(0.1, 0.2, -0.1)
    m, _ = assemble_mv_quadrature(mp, s)
    np.testing.assert_allclose(m, m.T, rtol=0, atol=0)
    assert np.all(np.linalg.eigvalsh(m) > 0)
