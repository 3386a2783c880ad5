import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from ergodic_towers.field import QuadNumber, golden
from ergodic_towers.intrinsic import (DoublyExponential, GrowthError, Squaring, StageState,
                                      check_growth, diagnostics, extract_column,
                                      limit_diagnostics, run_intrinsic, stage_refine)
from ergodic_towers.systems import build_inflation, rotation
from ergodic_towers.towers import column_check

R = rotation(golden())


def exact_sums(ks):
    """Oracle for finite schedules: the two sums, term by term."""
    first = sum(mpq(1, k) for k in ks[1:])
    rows = [sum(mpq(ks[j], k) for k in ks[j + 1:]) for j in range(len(ks))]
    return first, max(rows)


def test_growth_examples():
    assert check_growth(DoublyExponential(8))
    assert check_growth((1, 16, 256, 65536))
    assert check_growth((1, 16, 256))
    assert not check_growth((1, 2, 4))
    with pytest.raises(GrowthError):
        check_growth((1, 16, 20))
    with pytest.raises(GrowthError):
        check_growth((2, 16))


@given(st.lists(st.integers(2, 40), min_size=1, max_size=5))
def test_growth_matches_exact_sums(ratios):
    ks = [1]
    for r in ratios:
        ks.append(ks[-1] * r)
    first, worst = exact_sums(ks)
    assert check_growth(ks) == (first < mpq(1, 8) and worst < mpq(1, 8))


def test_schedule_prefixes():
    assert DoublyExponential(8).prefix(3) == (1, 8**4, 8**8)
    assert Squaring(16).prefix(4) == (1, 16, 256, 65536)


def test_limit_diagnostics():
    bound, finite = limit_diagnostics(DoublyExponential(8))
    assert finite and bound < mpq(1, 1000)
    bound, finite = limit_diagnostics(Squaring(16))
    assert finite and bound < 1
    # the certified bound dominates every finite truncation of the series
    ks = Squaring(16).prefix(5)
    assert limit_diagnostics(ks)[0] <= bound
    with pytest.raises(GrowthError):
        limit_diagnostics((1, 3, 5))


@pytest.mark.parametrize("k", [2, 3, 8, 16])
def test_extract_column(k):
    col = extract_column(R, k, mpq(1, 10))
    assert col.height == k
    assert col.base.measure() == mpq(1, k * k)
    assert col.measure() == mpq(1, k)
    assert column_check(R, col)


def test_extract_column_preconditions():
    with pytest.raises(ValueError):
        extract_column(R, 1)
    with pytest.raises(ValueError):
        extract_column(R, 2, mpq(9, 10))


def test_stage_two():
    s1 = StageState.initial(R, (1, 16, 256))
    s2 = stage_refine(s1, R)
    assert s2.X.measure() == 1 - mpq(1, 16)
    assert s2.columns[2].measure() == mpq(1, 16)
    d = diagnostics(R, s2)
    assert d["P1_partition"] and d["P2_heights"] and d["P3_columns"]
    assert d["fatness_partial"] == 1


@pytest.fixture(scope="module")
def three_stages():
    return run_intrinsic(R, (1, 16, 256), 3, mpq(1, 10))


def test_stage_three(three_stages):
    t, d = three_stages
    for key in ("P1_partition", "P2_heights", "P3_columns", "P3_first_column", "nesting",
                "removal_bounds", "fatness_ok"):
        assert d[key], key
    assert d["heights"] == [1, 16, 256]
    assert d["column_measures"][2] >= mpq(1, 16) - mpq(16, 256)
    assert d["column_measures"][3] == mpq(1, 256)
    assert d["fatness_partial"] >= mpq(7, 4)
    assert d["first_column_measure"] >= 1 - mpq(1, 16) - mpq(1, 256)
    rec = d["surgery"][-1]["columns"][2]
    assert rec["removed"] <= rec["bound"] == mpq(16, 256)
    # both entry-set readings are reported
    assert rec["entry_first_entrance"] >= 0 and rec["entry_literal_union"] >= 0


def test_tower_is_partition(three_stages):
    t, d = three_stages
    assert [c.height for c in t.columns] == [1, 16, 256]
    total = sum((c.measure() for c in t.columns), QuadNumber(0))
    assert total == 1
    for c in t.columns[1:]:
        assert column_check(R, c)


def test_one_stage():
    t, d = run_intrinsic(R, (1, 16, 256), 1)
    assert len(t.columns) == 1 and t.columns[0].base == R.full_space()
    assert d["P1_partition"] and d["fatness_partial"] == 0


def test_two_stages_fatness():
    t, d = run_intrinsic(R, (1, 16, 256), 2)
    assert d["fatness_partial"] == 1


def test_gate_rejects_slow_growth():
    with pytest.raises(GrowthError):
        run_intrinsic(R, (1, 2, 4), 2)
    with pytest.raises(ValueError):
        run_intrinsic(R, (1, 16, 256), 4)


def test_on_skyscraper():
    Y = build_inflation(R, 3)
    t, d = run_intrinsic(Y, (1, 16), 2)
    assert d["P1_partition"] and d["P3_columns"]
    assert t.columns[1].measure() == mpq(1, 16)
