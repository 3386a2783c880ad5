import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from ergodic_towers.field import QuadNumber, golden
from ergodic_towers.sets import IntervalSet, normalize
from ergodic_towers.systems import (Address, LeveledSet, OrbitCapExceeded, PiecewiseTranslation,
                                    build_inflation, rotation, system_from_spec)

from conftest import interval_sets, unit_points

R = rotation(golden())
Y4 = build_inflation(R, 4)


def test_rotation_rejects_bad_angles():
    with pytest.raises(ValueError):
        rotation(QuadNumber(mpq(1, 3)))
    with pytest.raises(ValueError):
        rotation(golden() + 1)


def test_rotation_point():
    a = golden()
    assert R(QuadNumber(0)) == a
    assert R(a) == 2 * a - 1
    assert R.inverse(R(QuadNumber(mpq(1, 7)))) == mpq(1, 7)
    assert R.step_point(QuadNumber(0), 3) == 3 * a - 1


def test_non_invertible_map_rejected():
    with pytest.raises(ValueError):
        PiecewiseTranslation([(0, mpq(1, 2), mpq(1, 4)), (mpq(1, 2), 1, mpq(-1, 4))])


def test_interval_exchange():
    # swap the two halves
    T = PiecewiseTranslation([(0, mpq(1, 2), mpq(1, 2)), (mpq(1, 2), 1, mpq(-1, 2))])
    S = IntervalSet.interval(0, mpq(1, 4))
    assert T.image(S) == IntervalSet.interval(mpq(1, 2), mpq(3, 4))
    assert T.image(S, 2) == S
    assert T.uniform_shift is not None  # both shifts are 1/2 mod 1


def test_orbit_cap():
    small = rotation(golden(), orbit_cap=10)
    with pytest.raises(OrbitCapExceeded):
        small.image(IntervalSet.full(), 11)


@given(interval_sets(), st.integers(-20, 20))
def test_rotation_image_preserves_measure_and_inverts(S, n):
    U = R.image(S, n)
    assert U.measure() == S.measure()
    assert R.image(U, -n) == S


@given(interval_sets(), unit_points(), st.integers(0, 12))
def test_rotation_image_matches_points(S, x, n):
    assert R.image(S, n).contains(R.step_point(x, n)) == S.contains(x)


def test_inflation_cells():
    Y = build_inflation(R, 10)
    assert len(Y.cells) == 11
    for i in range(1, 11):
        c = Y.cells[Y.cell_index(i)]
        assert c.height == 2**i
        assert c.base.measure() == mpq(3, 4**i)
    tail = Y.cells[Y.cell_index("tail")]
    assert tail.height == 1 and tail.base.measure() == mpq(1, 4**10)
    assert Y.Z == 3 - mpq(3, 1024) + mpq(1, 1048576)
    assert Y.full_space().measure() == 1


def test_inflation_needs_two_cells():
    with pytest.raises(ValueError):
        build_inflation(R, 1)


def test_skyscraper_step_point():
    p = Address(0, 0, QuadNumber(mpq(1, 8)))
    assert Y4.step_point(p, 1) == Address(0, 1, QuadNumber(mpq(1, 8)))
    top = Y4.step_point(p, 2)
    assert top.level == 0 and top.x == R(QuadNumber(mpq(1, 8)))
    assert Y4.step_point(top, -2) == p


@given(st.fractions(0, mpq(74, 100), max_denominator=300), st.integers(-40, 40))
def test_skyscraper_point_round_trip(x, n):
    p = Address(0, 1, QuadNumber(x))
    assert Y4.step_point(Y4.step_point(p, n), -n) == p


@given(st.integers(0, 3), st.fractions(0, 1, max_denominator=40),
       st.fractions(0, 1, max_denominator=40), st.integers(-30, 30))
def test_skyscraper_image_preserves_measure(cell, u, v, n):
    base = Y4.cells[cell].base
    lo, hi = base.parts[0]
    l, r = sorted((lo + (hi - lo) * u, lo + (hi - lo) * v))
    S = LeveledSet(Y4, {(cell, 0): IntervalSet.interval(l, r)})
    U = Y4.image(S, n)
    assert U.measure() == S.measure()
    assert Y4.image(U, -n) == S


def test_leveled_set_algebra():
    full = Y4.full_space()
    col = Y4.column_set(1)
    assert (col | ~col) == full
    assert (col & ~col).is_empty()
    assert col.measure() == 4 * mpq(3, 16) / Y4.Z
    assert col.prefix(col.measure() / 2).measure() == col.measure() / 2


def test_system_from_spec():
    assert system_from_spec("rotation:alpha=golden").alpha == golden()
    Y = system_from_spec("inflation:imax=5")
    assert Y.meta["i_max"] == 5
    for bad in ("torus:x=1", "rotation:alpha=1/2", "inflation:imax=10,foo=1", "rotation:alpha"):
        with pytest.raises(ValueError):
            system_from_spec(bad)


def test_system_json():
    d = Y4.to_dict()
    assert d["kind"] == "skyscraper" and len(d["cells"]) == 5
    assert R.to_dict()["alpha"] == str(golden())
