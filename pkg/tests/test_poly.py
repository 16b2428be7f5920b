import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdsopt.poly import (
    Polynomial,
    basis_size,
    first_order_gap,
    gradient,
    grlex_key,
    monomial_basis,
    poly_combine,
    poly_eval,
)

from conftest import coupled_quadratic


def random_poly(rng: np.random.Generator, n: int, d: int) -> Polynomial:
    exps = monomial_basis(n, d).exponents
    pick = rng.random(len(exps)) < 0.6
    terms = {e: float(c) for e, c, keep in zip(exps, rng.normal(size=len(exps)), pick) if keep}
    return Polynomial(n, terms)


class TestBasis:
    def test_two_vars_degree_two_order(self):
        b = monomial_basis(2, 2)
        assert b.exponents == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))

    def test_sizes(self):
        assert len(monomial_basis(2, 4)) == 15
        assert len(monomial_basis(1, 0)) == 1
        for n in range(1, 5):
            for d in range(5):
                assert len(monomial_basis(n, d)) == basis_size(n, d) == math.comb(n + d, n)

    def test_grlex_sorted(self):
        b = monomial_basis(3, 4)
        keys = [grlex_key(e) for e in b.exponents]
        assert keys == sorted(keys)

    def test_index_roundtrip(self):
        b = monomial_basis(3, 3)
        for k, e in enumerate(b):
            assert b.index(e) == k
            assert e in b
        assert (3, 3, 3) not in b

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            monomial_basis(0, 2)
        with pytest.raises(ValueError):
            monomial_basis(2, -1)


class TestPolynomial:
    def test_eval_quartic(self):
        p = Polynomial(2, {(4, 0): 1.0, (0, 1): -1.0})
        assert poly_eval(p, (0.0, 0.4142)) == pytest.approx(-0.4142)

    def test_eval_zero(self):
        z = Polynomial.zero(3)
        assert poly_eval(z, (1.0, -2.0, 0.5)) == 0.0

    def test_eval_quadratic(self):
        p = Polynomial(2, {(2, 0): 1.0, (0, 2): 2.0})
        assert poly_eval(p, (1.0, 1.0)) == pytest.approx(3.0)

    def test_eval_batch(self):
        p = coupled_quadratic(0.5)
        pts = np.array([[1.0, 1.0], [0.0, 0.0], [-1.0, 2.0]])
        got = poly_eval(p, pts)
        assert got.shape == (3,)
        for row, v in zip(pts, got):
            assert v == pytest.approx(poly_eval(p, row))

    def test_eval_rejects_wrong_width(self):
        with pytest.raises(ValueError):
            poly_eval(Polynomial.variable(2, 0), (1.0, 2.0, 3.0))

    def test_zero_coefficients_dropped(self):
        p = Polynomial(2, {(1, 0): 0.0, (0, 1): 2.0})
        assert p.support() == ((0, 1),)

    def test_immutable(self):
        p = Polynomial.variable(2, 0)
        with pytest.raises(AttributeError):
            p.n = 3

    def test_degree(self):
        assert Polynomial.zero(2).degree == 0
        assert Polynomial.constant(2, 5.0).degree == 0
        assert coupled_quadratic().degree == 2
        assert Polynomial(1, {(7,): 1.0}).degree == 7

    def test_combine_cancellation(self):
        x = Polynomial.variable(2, 0)
        got = poly_combine([1.0, -1.0], [x, x])
        assert got.is_zero()
        assert got.terms == {}

    def test_combine_weights(self):
        x1 = Polynomial.variable(2, 0)
        x2 = Polynomial.variable(2, 1)
        got = poly_combine([2.0, 3.0], [x1 * x1, x2])
        assert got == Polynomial(2, {(2, 0): 2.0, (0, 1): 3.0})

    def test_combine_rejects_mismatch(self):
        with pytest.raises(ValueError):
            poly_combine([1.0], [])
        with pytest.raises(ValueError):
            poly_combine([1.0, 1.0], [Polynomial.variable(1, 0), Polynomial.variable(2, 0)])


class TestCalculus:
    def test_gradient_quartic(self):
        p = Polynomial(2, {(4, 0): 1.0, (0, 1): -1.0})
        gx, gy = gradient(p)
        assert gx == Polynomial(2, {(3, 0): 4.0})
        assert gy == Polynomial.constant(2, -1.0)

    def test_gradient_constant(self):
        for g in gradient(Polynomial.constant(3, 7.0)):
            assert g.is_zero()

    def test_gradient_coupled(self):
        g1, g2 = gradient(coupled_quadratic(0.3))
        assert g1 == Polynomial(2, {(1, 0): 2.0, (0, 1): 0.6})
        assert g2 == Polynomial(2, {(0, 1): 4.0, (1, 0): 0.6})


class TestFirstOrderGap:
    def test_affine_gap_vanishes(self):
        p = Polynomial(2, {(1, 0): 3.0, (0, 1): -2.0, (0, 0): 5.0})
        assert first_order_gap(p).is_zero()

    def test_univariate_quartic(self):
        # x^4 - z^4 - 4z^3(x - z) = x^4 - 4xz^3 + 3z^4
        gap = first_order_gap(Polynomial(1, {(4,): 1.0}))
        assert gap == Polynomial(2, {(4, 0): 1.0, (1, 3): -4.0, (0, 4): 3.0})

    @pytest.mark.parametrize("y", [-1.0, 0.0, 0.5, 1.0, 2.0])
    def test_coupled_quadratic_gap_matrix(self, y):
        # for a quadratic x^T M x the gap is (x - z)^T M (x - z); as a form in
        # (x1, x2, z1, z2) its Gram rows are (M, -M; -M, M)
        gap = first_order_gap(coupled_quadratic(y))
        m = np.array([[1.0, y], [y, 2.0]])
        q = np.block([[m, -m], [-m, m]])
        expect = np.array(
            [[1, y, -1, -y], [y, 2, -y, -2], [-1, -y, 1, y], [-y, -2, y, 2]], dtype=float
        )
        assert np.array_equal(q, expect)
        rng = np.random.default_rng(3)
        for _ in range(20):
            v = rng.normal(size=4)
            assert poly_eval(gap, v) == pytest.approx(v @ q @ v, abs=1e-12)

    def test_gap_vanishes_on_diagonal(self):
        rng = np.random.default_rng(0)
        for k in range(1000):
            n = int(rng.integers(1, 4))
            p = random_poly(rng, n, int(rng.integers(1, 5)))
            x = rng.normal(size=n)
            v = poly_eval(first_order_gap(p), np.concatenate([x, x]))
            assert abs(v) <= 1e-12 * (1.0 + abs(poly_eval(p, x)))

    def test_gap_variable_count(self):
        assert first_order_gap(Polynomial.variable(3, 1)).n == 6


coef = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def polys(draw, n=2, d=3):
    exps = monomial_basis(n, d).exponents
    terms = draw(
        st.dictionaries(st.sampled_from(exps), coef, max_size=6)
    )
    return Polynomial(n, terms)


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), st.lists(st.floats(-2, 2), min_size=2, max_size=2))
def test_ring_operations_match_pointwise(p, q, pt):
    x = np.array(pt)
    assert poly_eval(p + q, x) == pytest.approx(poly_eval(p, x) + poly_eval(q, x), abs=1e-6)
    assert poly_eval(p - q, x) == pytest.approx(poly_eval(p, x) - poly_eval(q, x), abs=1e-6)
    assert poly_eval(p * q, x) == pytest.approx(poly_eval(p, x) * poly_eval(q, x), rel=1e-9, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(polys(d=4))
def test_derivative_of_sum_of_monomials(p):
    # d/dx1 agrees with a finite difference at a benign point
    from sdsopt.poly import differentiate

    g = differentiate(p, 0)
    x = np.array([0.37, -0.21])
    h = 1e-6
    fd = (poly_eval(p, x + [h, 0]) - poly_eval(p, x - [h, 0])) / (2 * h)
    assert poly_eval(g, x) == pytest.approx(fd, abs=1e-4)
