import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfaffnet.polynomials import SparsePoly


def poly_strategy(nx=2, ny=1, max_terms=5, max_exp=3):
    exponent = st.tuples(*([st.integers(0, max_exp)] * (nx + ny)))
    coeff = st.floats(-4, 4, allow_nan=False, allow_infinity=False)
    return st.dictionaries(exponent, coeff, max_size=max_terms).map(
        lambda terms: SparsePoly(nx, ny, terms)
    )


@given(poly_strategy(), poly_strategy())
def test_sum_evaluates_pointwise(p, q):
    x = np.array([[0.3, -0.7], [1.1, 0.2]])
    y = np.array([[0.5], [-0.25]])
    np.testing.assert_allclose(
        (p + q).evaluate(x, y), p.evaluate(x, y) + q.evaluate(x, y), atol=1e-12
    )


@given(poly_strategy(max_exp=2), poly_strategy(max_exp=2))
def test_product_evaluates_pointwise(p, q):
    x = np.array([[0.3, -0.7], [0.9, 0.2]])
    y = np.array([[0.5], [-0.25]])
    np.testing.assert_allclose(
        (p * q).evaluate(x, y), p.evaluate(x, y) * q.evaluate(x, y), rtol=1e-12, atol=1e-12
    )


@given(poly_strategy(), poly_strategy())
def test_degree_bounds(p, q):
    assert (p + q).degree() <= max(p.degree(), q.degree())
    if not p.is_zero() and not q.is_zero():
        assert (p * q).degree() <= p.degree() + q.degree()


@given(poly_strategy(max_exp=2))
def test_derivative_via_difference_quotient(p):
    # check d/dx1 at a point against a symmetric difference of evaluate
    x0 = np.array([[0.4, -0.3]])
    y0 = np.array([[0.6]])
    h = 1e-6
    xp = x0.copy(); xp[0, 0] += h
    xm = x0.copy(); xm[0, 0] -= h
    fd = (p.evaluate(xp, y0) - p.evaluate(xm, y0)) / (2 * h)
    assert p.derivative(0).evaluate(x0, y0)[0] == pytest.approx(float(fd[0]), abs=1e-5)


def test_zero_coefficients_dropped():
    p = SparsePoly(1, 0, {(1,): 0.0, (2,): 3.0})
    assert (1,) not in p.terms
    q = p - p
    assert q.is_zero() and q.degree() == 0


def test_chain_variable_locality():
    p = SparsePoly.y_var(2, 4, 2) * SparsePoly.y_var(2, 4, 0) + SparsePoly.x_var(2, 4, 1)
    assert p.max_chain_var() == 2
    assert SparsePoly.x_var(2, 4, 0).max_chain_var() == -1


def test_pairs_roundtrip():
    p = SparsePoly(2, 1, {(1, 0, 2): -0.5, (0, 3, 0): 2.0})
    q = SparsePoly.from_pairs(2, 1, p.to_pairs())
    assert q.terms == p.terms


def test_pow_and_scalar_ops():
    x = SparsePoly.x_var(1, 0, 0)
    p = (2.0 * x + 1.0).pow(2)
    pts = np.linspace(-1, 1, 5)[:, None]
    np.testing.assert_allclose(p.evaluate(pts), (2 * pts[:, 0] + 1) ** 2, atol=1e-14)


def test_incompatible_variables_rejected():
    with pytest.raises(ValueError):
        SparsePoly.x_var(1, 0, 0) + SparsePoly.x_var(2, 0, 0)
    with pytest.raises(ValueError):
        SparsePoly(1, 0, {(1, 1): 1.0})
