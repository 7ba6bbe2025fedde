from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdl.errors import DomainMismatchError
from qdl.scalars import (
    QuadScalar,
    RootSum,
    normalize_root,
    scalar_arith,
    squarefree_decomposition,
)


def q2(a, b):
    return QuadScalar(a, b, 2)


def test_norm_identity():
    assert q2(1, 1) * q2(1, -1) == QuadScalar(-1)


def test_rational_add():
    assert QuadScalar(0) + QuadScalar(Fraction(3, 2)) == QuadScalar(Fraction(3, 2))


def test_inverse_of_one_plus_sqrt2():
    # solve (1 + sqrt2)(a + b sqrt2) = 1 by hand: a + 2b = 1, a + b = 0
    assert q2(1, 1).inverse() == q2(-1, 1)
    assert q2(1, 1) * q2(1, 1).inverse() == QuadScalar(1)


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        QuadScalar(1) / QuadScalar(0)


def test_mismatched_domains():
    with pytest.raises(DomainMismatchError):
        QuadScalar(0, 1, 2) * QuadScalar(0, 1, 3)


def test_scalar_arith_ops():
    a, b = q2(1, 2), q2(3, -1)
    assert scalar_arith(a, b, "add") == q2(4, 1)
    assert scalar_arith(a, b, "sub") == q2(-2, 3)
    assert scalar_arith(a, b, "mul") == q2(-1, 5)  # (1+2r)(3-r) = 3 - r + 6r - 2*2
    assert scalar_arith(a, b, "div") * b == a


def test_sign_cases():
    assert q2(1, 1).sign() == 1
    assert q2(-1, -1).sign() == -1
    assert q2(-1, 1).sign() == 1     # sqrt2 > 1
    assert q2(2, -1).sign() == 1     # 2 > sqrt2
    assert q2(1, -1).sign() == -1    # 1 < sqrt2
    assert QuadScalar(0).sign() == 0


def test_squarefree_decomposition():
    assert squarefree_decomposition(72) == (6, 2)
    assert squarefree_decomposition(1) == (1, 1)
    assert squarefree_decomposition(30) == (1, 30)


def test_normalize_root():
    # sqrt(1/2) = (1/2) sqrt(2)
    assert normalize_root(Fraction(1, 2)) == (Fraction(1, 2), 2)
    assert normalize_root(Fraction(8)) == (Fraction(2), 2)
    assert normalize_root(Fraction(9, 4)) == (Fraction(3, 2), 1)


def test_json_round_trip():
    vals = [QuadScalar(Fraction(-7, 3)), q2(Fraction(1, 2), Fraction(-5, 4))]
    for v in vals:
        assert QuadScalar.from_json(v.to_json()) == v


small_fractions = st.builds(
    Fraction,
    st.integers(min_value=-20, max_value=20),
    st.integers(min_value=1, max_value=12),
)
quad_scalars = st.builds(q2, small_fractions, small_fractions)


@settings(max_examples=150, deadline=None)
@given(quad_scalars, quad_scalars, quad_scalars)
def test_field_axioms(x, y, z):
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x + y == y + x and x * y == y * x
    if x:
        assert x * x.inverse() == QuadScalar(1)


@settings(max_examples=100, deadline=None)
@given(quad_scalars, quad_scalars)
def test_rootsum_ring(x, y):
    rx, ry = RootSum.from_quadscalar(x), RootSum.from_quadscalar(y)
    assert rx * ry == RootSum.from_quadscalar(x * y)
    assert rx + ry == RootSum.from_quadscalar(x + y)


def test_rootsum_root_products():
    r2 = RootSum.from_root(1, Fraction(2))
    r3 = RootSum.from_root(1, Fraction(3))
    assert r2 * r2 == RootSum.coerce(2)
    assert r2 * r3 == RootSum.from_root(1, Fraction(6))
    assert (r2 + r3) * (r2 - r3) == RootSum.coerce(-1)


def test_rootsum_single_root():
    val = RootSum.from_root(1, Fraction(1, 2))
    coeff, tag = val.single_root()
    assert tag == 2 and coeff == QuadScalar(Fraction(1, 2))
    mixed = RootSum.from_quadscalar(q2(1, 1)) * RootSum.from_root(1, Fraction(3))
    coeff, tag = mixed.single_root()
    # (1 + sqrt2) sqrt3 = coeff * sqrt(tag)
    assert tag == 3 and coeff == q2(1, 1)
