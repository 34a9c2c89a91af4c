from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from constrained_dirac.exact import GaussianRational
from constrained_dirac.grassmann import (GrassmannElement, IncompatibleAlgebras, Parity, format_element,
                                         gproduct, graded_commutator, identity_suite, left_derivative,
                                         parse_element, right_derivative)

N = 6


@st.composite
def elements(draw, n=N, parity=None):
    k = draw(st.integers(1, 5))
    terms = {}
    for _ in range(k):
        mask = draw(st.integers(0, 2 ** n - 1))
        if parity is not None and bin(mask).count("1") % 2 != parity:
            mask ^= 1
        terms[mask] = GaussianRational(draw(st.integers(-5, 5)), draw(st.integers(-5, 5)))
    return GrassmannElement(n, terms)


def sgn(bit):
    return -1 if bit else 1


def xi(i, n=3):
    return GrassmannElement.generator(n, i)


def test_product_examples():
    assert xi(0) * xi(1) == GrassmannElement.monomial(3, [0, 1])
    assert xi(1) * xi(0) == -GrassmannElement.monomial(3, [0, 1])
    assert (xi(0) * xi(0)).is_zero()
    with pytest.raises(IncompatibleAlgebras):
        gproduct(xi(0, 2), xi(0, 3))


def test_derivative_examples():
    x12 = xi(0) * xi(1)
    assert left_derivative(x12, 0) == xi(1)
    assert left_derivative(x12, 1) == -xi(0)
    assert left_derivative(x12, 2).is_zero()
    assert right_derivative(x12, 0) == -xi(1)
    assert right_derivative(x12, 1) == xi(0)
    assert right_derivative(xi(0), 0) == GrassmannElement.scalar(3)
    with pytest.raises(IndexError):
        left_derivative(x12, 3)


def test_parity():
    assert xi(0).parity is Parity.ODD
    assert (xi(0) * xi(1)).parity is Parity.EVEN
    assert (GrassmannElement.scalar(3) + xi(0)).parity is Parity.MIXED
    assert GrassmannElement(3).parity is Parity.EVEN


def test_canonical_sparse_form():
    e = GrassmannElement(3, {1: 2, 2: 0})
    assert e.terms == {1: 2}


@given(elements(), elements(), elements())
def test_associative(a, b, c):
    assert (a * b) * c == a * (b * c)


@given(elements(parity=0), elements(parity=1), elements())
def test_graded_commutativity(e, o, f):
    assert graded_commutator(e, f).is_zero()
    assert graded_commutator(o, o * e).is_zero()


@given(st.integers(0, 1), st.integers(0, 1), st.data())
def test_leibniz_and_relation(pf, pg, data):
    f = data.draw(elements(parity=pf))
    g = data.draw(elements(parity=pg))
    for i in range(N):
        assert left_derivative(f, i) == right_derivative(f, i) * sgn((1 + pf) & 1)
        assert left_derivative(f * g, i) == left_derivative(f, i) * g + (f * left_derivative(g, i)) * sgn(pf)
        assert right_derivative(f * g, i) == f * right_derivative(g, i) + (right_derivative(f, i) * g) * sgn(pg)


@given(elements())
def test_text_roundtrip(e):
    text = format_element(e)
    assert text.startswith("# generators")
    assert parse_element(text) == e


def test_text_fractions():
    e = GrassmannElement(2, {3: GaussianRational(Fraction(1, 3), Fraction(-2, 7))})
    assert parse_element(format_element(e)) == e


def test_identity_suite_clean():
    assert all(ok for _, ok in identity_suite(100, seed=3))
