import random
from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from ergodic_towers.counterexample import (ConfigError, CounterexampleConfig, StabilityEngine,
                                           build_config, chain_check, choose_N0, lower_halves,
                                           stability_partition, stability_partitions,
                                           verify_half_average)
from ergodic_towers.field import QuadNumber, golden
from ergodic_towers.sets import IntervalSet
from ergodic_towers.systems import Address, build_inflation, rotation
from ergodic_towers.towers import inflation_tower, kakutani

R = rotation(golden())


@pytest.fixture(scope="module")
def inflation():
    Y = build_inflation(R, 10)
    t = inflation_tower(Y)
    N0 = choose_N0(t)
    return Y, t, N0, build_config(t, N0)


def brute_force_N(sys, A, p, H, thr):
    """Oracle: literal definition with fraction comparisons along the orbit."""
    S, best = 0, 0
    for k in range(1, H + 1):
        S += A.contains(p)
        if Fraction(S, k) > thr:
            best = k
        p = sys.step_point(p, 1)
    return best + 1


def test_config(inflation):
    Y, t, N0, cfg = inflation
    assert N0 == 3
    assert cfg.f_integral == QuadNumber(mpq(783360, 3142657))
    assert cfg.f_integral < mpq(1, 4)
    assert cfg.threshold == 2 * cfg.f_integral


def test_choose_N0_fails_for_tiny_bound(inflation):
    with pytest.raises(ConfigError):
        choose_N0(inflation[1], mpq(1, 10**6))


def test_build_config_rejects_large_A():
    t = kakutani(R, IntervalSet.interval(0, golden()))
    with pytest.raises(ConfigError):
        build_config(t, 1)


def test_lower_halves(inflation):
    Y, t, N0, cfg = inflation
    halves = lower_halves(t, N0)
    assert sorted(halves) == list(range(3, 11))
    for i, L in halves.items():
        assert L.measure() == t.column(i).measure() / 2


def test_partition_is_exact(inflation):
    Y, t, N0, cfg = inflation
    sp = stability_partition(Y, cfg, 64)
    assert sp.total_measure() == 1
    keys = sorted(sp.cells)
    for a in keys:
        for b in keys:
            if a < b:
                assert sp.cells[a].isdisjoint(sp.cells[b])
    assert min(keys) >= 1 and max(keys) <= 65


def test_partition_matches_brute_force(inflation):
    Y, t, N0, cfg = inflation
    H = 128
    sp = stability_partition(Y, cfg, H)
    rng = random.Random(7)
    thr = Fraction(int(cfg.threshold.a.numerator), int(cfg.threshold.a.denominator))
    for _ in range(60):
        c = rng.randrange(len(Y.cells))
        cell = Y.cells[c]
        lo, hi = cell.base.parts[0]
        x = lo + (hi - lo) * mpq(rng.randrange(1, 10**6), 10**6)
        p = Address(c, rng.randrange(cell.height), x)
        assert sp.value_at(p) == brute_force_N(Y, cfg.A, p, H, thr)


def test_monotone_in_horizon(inflation):
    Y, t, N0, cfg = inflation
    parts = stability_partitions(Y, cfg, [16, 32, 64])
    rng = random.Random(3)
    for _ in range(40):
        x = QuadNumber(mpq(rng.randrange(10**6), 10**6) * mpq(3, 4))
        p = Address(0, rng.randrange(2), x)
        vals = [sp.value_at(p) for sp in parts]
        assert vals == sorted(vals)
    ints = [sp.integral() for sp in parts]
    assert ints == sorted(ints)


def test_lower_half_forces_excursion(inflation):
    Y, t, N0, cfg = inflation
    sp = stability_partition(Y, cfg, 256)
    for i in range(N0, 8):
        c = Y.cell_index(i)
        lo, hi = Y.cells[c].base.parts[0]
        p = Address(c, 0, (lo + hi) / 2)
        assert sp.value_at(p) > 2**i


def test_half_average_and_chain(inflation):
    Y, t, N0, cfg = inflation
    halves = lower_halves(t, N0)
    assert verify_half_average(Y, cfg, halves)
    sp = stability_partition(Y, cfg, 512)
    ch = chain_check(cfg, halves, sp, 8)
    assert ch.ok
    assert ch.lhs == 6 * mpq(3, 2) / Y.Z
    assert ch.lhs <= ch.middle <= ch.rhs == sp.integral()
    with pytest.raises(ValueError):
        chain_check(cfg, halves, sp, 10)  # column 10 is taller than H


def test_empty_target_gives_one():
    Y = build_inflation(R, 4)
    cfg = CounterexampleConfig.from_set(Y.empty_set())
    sp = stability_partition(Y, cfg, 32)
    assert list(sp.measures) == [1]
    assert sp.integral() == 1


def test_rotation_control_saturates():
    A = IntervalSet.interval(0, mpq(1, 4))
    cfg = CounterexampleConfig.from_set(A)
    engine = StabilityEngine(R, A, cfg.threshold)
    a, b = engine.partition(256).integral(), engine.partition(512).integral()
    assert a == b
    assert set(engine.partition(64).cells) <= {1, 2, 3, 4, 5, 6, 7, 8}


@settings(max_examples=15)
@given(st.fractions(mpq(1, 20), mpq(1, 2), max_denominator=20),
       st.fractions(0, mpq(99, 100), max_denominator=100))
def test_rotation_partition_matches_brute_force(length, u):
    A = IntervalSet.interval(0, length)
    cfg = CounterexampleConfig.from_set(A)
    sp = stability_partition(R, cfg, 40)
    x = QuadNumber(u)
    assert sp.value_at(x) == brute_force_N(R, A, x, 40, Fraction(2 * length))
    assert sp.total_measure() == 1
