from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from constrained_dirac.exact import I, GaussianRational, SingularMatrixError, gr, inverse, mat_mul, identity

ints = st.integers(-20, 20)
nonzero = st.builds(GaussianRational, ints, ints).filter(bool)


def test_str_and_pairs():
    assert str(GaussianRational(Fraction(1, 2), 0)) == "1/2"
    z = GaussianRational(Fraction(-3, 4), Fraction(5, 6))
    assert GaussianRational.from_pair(z.to_pair()) == z
    assert I * I == -1


@given(nonzero, nonzero, nonzero)
def test_field_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert (a / b) * b == a
    assert a * a.inverse() == 1


def test_inverse_roundtrip():
    m = [[gr(2), I], [gr(1), gr(3)]]
    assert mat_mul(m, inverse(m)) == identity(2)


def test_singular():
    with pytest.raises(SingularMatrixError):
        inverse([[gr(1), gr(2)], [gr(2), gr(4)]])
