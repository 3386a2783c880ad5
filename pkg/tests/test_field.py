import math

import mpmath
import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from ergodic_towers.field import (Cmp, FieldMismatch, QuadNumber, arith, cmp, floor_mod1, golden,
                                  parse_quad, parse_rational, to_decimal)

from conftest import quads

mpmath.mp.dps = 60


def hi(x: QuadNumber):
    """Independent high-precision value of a field element."""
    a = mpmath.mpf(int(x.a.numerator)) / int(x.a.denominator)
    b = mpmath.mpf(int(x.b.numerator)) / int(x.b.denominator)
    return a + b * mpmath.sqrt(x.D)


def test_golden_identities():
    a = golden()
    assert a * a == QuadNumber(mpq(3, 2), mpq(-1, 2))
    assert a * a + a - 1 == 0
    assert cmp(a, 1 - a) is Cmp.GT
    assert 0 < a < 1


def test_floor_mod1_examples():
    a = golden()
    assert floor_mod1(2 * a) == (1, 2 * a - 1)
    assert floor_mod1(-a) == (-1, 1 - a)
    assert floor_mod1(QuadNumber(mpq(7, 2))) == (3, QuadNumber(mpq(1, 2)))
    assert floor_mod1(QuadNumber(-3)) == (-3, QuadNumber(0))


def test_field_mismatch_is_rejected():
    with pytest.raises(FieldMismatch):
        QuadNumber(1, 1, D=5) + QuadNumber(1, 1, D=2)


def test_rationals_embed():
    x = QuadNumber(mpq(1, 3))
    assert x == mpq(1, 3)
    assert hash(x) == hash(mpq(1, 3))
    assert x + 1 == QuadNumber(mpq(4, 3))
    assert 1 - x == QuadNumber(mpq(2, 3))


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        golden() / QuadNumber(0)


@pytest.mark.parametrize("text,value", [("1/8", mpq(1, 8)), ("0.125", mpq(1, 8)),
                                        ("-3", mpq(-3)), (" 7/2 ", mpq(7, 2))])
def test_parse_rational_accepts(text, value):
    assert parse_rational(text) == value


@pytest.mark.parametrize("text", ["0.1.1", "", "1/0", "abc", "1/2/3"])
def test_parse_rational_rejects(text):
    with pytest.raises(ValueError):
        parse_rational(text)


def test_parse_quad_forms():
    a = golden()
    assert parse_quad("golden") == a
    assert parse_quad("1-golden") == 1 - a
    assert parse_quad("-1/2+1/2*sqrt(5)") == a
    assert parse_quad("3/2-1/2*sqrt(5)") == a * a
    with pytest.raises(FieldMismatch):
        parse_quad("1+1*sqrt(2)")
    with pytest.raises(ValueError):
        parse_quad("1+*sqrt")


def test_to_decimal():
    assert to_decimal(golden()) == "0.618033988750"
    assert to_decimal(QuadNumber(mpq(-1, 3)), 4) == "-0.3333"
    assert to_decimal(QuadNumber(0)) == "0.000000000000"


@given(quads(), quads(), quads())
def test_ring_axioms(x, y, z):
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x - x == 0
    assert x + y == y + x


@given(quads(nonzero=True))
def test_inverse(x):
    assert x * x.inverse() == 1
    assert arith("div", QuadNumber(1), x) == x.inverse()


@given(quads(), quads())
def test_comparison_matches_high_precision(x, y):
    d = hi(x) - hi(y)
    c = cmp(x, y)
    if x == y:
        assert c is Cmp.EQ
    else:
        # two distinct elements never agree to 40 digits at these sizes
        assert abs(d) > mpmath.mpf(10) ** -40
        assert c is (Cmp.GT if d > 0 else Cmp.LT)


@given(quads())
def test_floor_matches_high_precision(x):
    f, r = floor_mod1(x)
    assert f == int(mpmath.floor(hi(x)))
    assert 0 <= r < 1
    assert r + f == x


@given(quads())
def test_serialization_round_trip(x):
    assert parse_quad(str(x)) == x
    assert math.isclose(float(x), float(hi(x)), rel_tol=1e-12, abs_tol=1e-12)


@given(quads(), quads())
def test_order_is_total_and_consistent(x, y):
    assert (x < y) + (x == y) + (x > y) == 1
    assert (x <= y) == (not x > y)


@given(quads())
def test_abs(x):
    assert abs(x) >= 0 and (abs(x) == x or abs(x) == -x)
