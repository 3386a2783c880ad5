"""The indicator counterexample: N(x) is not integrable over a fat tower.

Given a fat tower, ``A`` is the union of all columns from index ``N0`` on,
``f = 1_A`` and the threshold is ``2 * m(A)``.  The stability time

    N(x) = min{n : A_k f(x) <= threshold for all k >= n}

cannot be computed exactly, so everything here works with the truncated
stability time ``N_H(x)`` (all k in [n, H]), which increases to N(x).  Every
reported integral is therefore an exact lower bound for the integral of N.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any

from gmpy2 import mpq

from .field import QuadNumber
from .sets import IntervalSet, normalize
from .sweep import OrbitSweep, threshold_table
from .systems import LeveledSet, SkyscraperSystem, as_leveled, flat_view
from .towers import Tower, default_piece_cap


class ConfigError(ValueError):
    pass


@dataclass
class CounterexampleConfig:
    tower: Tower | None
    N0: Any
    A: Any
    f_integral: QuadNumber
    threshold: QuadNumber

    @classmethod
    def from_set(cls, A, tower: Tower | None = None, N0=None) -> CounterexampleConfig:
        """Configuration for an arbitrary set ``A`` (no m(A) < 1/4 requirement)."""
        m = A.measure()
        return cls(tower, N0, A, m, 2 * m)


@dataclass
class StabilityPartition:
    """Exact cells ``D_N = {x : N_H(x) = N}`` for 1 <= N <= H + 1."""

    horizon: int
    cells: dict
    measures: dict
    system: Any = None
    atoms: int = 0

    def integral(self) -> QuadNumber:
        total = QuadNumber(0)
        for n in sorted(self.measures):
            total = total + n * self.measures[n]
        return total

    def value_at(self, point) -> int:
        for n, cell in self.cells.items():
            if cell.contains(point):
                return n
        raise ValueError("point not covered by the partition")

    def total_measure(self) -> QuadNumber:
        total = QuadNumber(0)
        for n in sorted(self.measures):
            total = total + self.measures[n]
        return total


@dataclass
class ChainResult:
    lhs: QuadNumber
    middle: QuadNumber
    rhs: QuadNumber
    ok: bool
    pieces: dict = field(default_factory=dict)  # (N, n) -> C_{N,n}


def _space(sys) -> SkyscraperSystem:
    return sys if isinstance(sys, SkyscraperSystem) else flat_view(sys)


def _lower(sys, S: LeveledSet):
    """Back to the caller's set type."""
    if isinstance(sys, SkyscraperSystem):
        return S
    return S.comps.get((0, 0), IntervalSet.empty())


def choose_N0(t: Tower, bound=mpq(1, 4)):
    """Smallest column index whose tail union has measure below ``bound``."""
    bound = QuadNumber(bound) if not isinstance(bound, QuadNumber) else bound
    cols = sorted(t.columns, key=lambda c: c.index)
    tail = QuadNumber(0)
    suffix = []
    for c in reversed(cols):
        tail = tail + c.measure()
        suffix.append((c.index, tail))
    best = None
    for index, m in suffix:
        if m < bound:
            best = index
        else:
            break
    if best is None:
        raise ConfigError(f"no column index has tail measure below {bound.pretty()}")
    return best


def build_config(t: Tower, N0) -> CounterexampleConfig:
    A = t.system.empty_set()
    for c in t.columns:
        if c.index >= N0:
            A = A | c.support()
    m = A.measure()
    if not m < mpq(1, 4):
        raise ConfigError(f"m(A) = {m.pretty()} is not below 1/4")
    return CounterexampleConfig(t, N0, A, m, 2 * m)


def lower_halves(t: Tower, N0) -> dict:
    """``index -> L`` where L is the union of levels n with n < height/2."""
    out = {}
    for c in t.columns:
        if c.index < N0:
            continue
        half = c.levels[0]
        for n in range(1, (c.height + 1) // 2):
            half = half | c.levels[n]
        out[c.index] = half
    return out


def _starts(space: SkyscraperSystem, region: LeveledSet):
    for (cell, level) in sorted(region.comps):
        for lo, hi in region.comps[(cell, level)].parts:
            yield cell, level, lo, hi


class StabilityEngine:
    """Reusable sweep for one (system, A); partitions at many horizons share work."""

    def __init__(self, sys, A, threshold: QuadNumber, piece_cap: int | None = None):
        self.sys = sys
        self.space = _space(sys)
        self.A = as_leveled(self.space, A)
        self.threshold = threshold
        cap = default_piece_cap() if piece_cap is None else piece_cap
        self.sweep = OrbitSweep(self.space, self.A, cap)

    def partition(self, H: int) -> StabilityPartition:
        if H < 1:
            raise ValueError("horizon must be at least 1")
        table = threshold_table(self.threshold, H)
        buckets = defaultdict(lambda: defaultdict(list))
        count = 0

        def emit(cell, level, lo, hi, S, last):
            nonlocal count
            count += 1
            buckets[last + 1][(cell, level)].append((lo, hi))

        full = self.space.full_space()
        self.sweep.run(_starts(self.space, full), H, table, emit)
        cells, measures = {}, {}
        for n in sorted(buckets):
            comps = {key: normalize(parts) for key, parts in buckets[n].items()}
            S = LeveledSet(self.space, comps)
            cells[n] = _lower(self.sys, S)
            measures[n] = S.measure()
        return StabilityPartition(H, cells, measures, self.sys, count)

    def visit_counts(self, region, N: int) -> list:
        """``(atom, count)`` pairs: visits to A in the first N steps from each atom."""
        region = as_leveled(self.space, region)
        out = []

        def emit(cell, level, lo, hi, S, last):
            out.append(((cell, level, lo, hi), S))

        self.sweep.run(_starts(self.space, region), N, None, emit)
        return out


def stability_partition(sys, cfg: CounterexampleConfig, H: int,
                        piece_cap: int | None = None) -> StabilityPartition:
    return StabilityEngine(sys, cfg.A, cfg.threshold, piece_cap).partition(H)


def stability_partitions(sys, cfg: CounterexampleConfig, horizons,
                         piece_cap: int | None = None) -> list:
    engine = StabilityEngine(sys, cfg.A, cfg.threshold, piece_cap)
    return [engine.partition(H) for H in horizons]


def integral_lower_bound(sp: StabilityPartition) -> QuadNumber:
    """Integral of N_H, a lower bound for the integral of N that grows with H."""
    return sp.integral()


def verify_half_average(sys, cfg: CounterexampleConfig, halves: dict,
                piece_cap: int | None = None) -> bool:
    """Every point of a lower half L has ergodic average >= 1/2 at its column height."""
    engine = StabilityEngine(sys, cfg.A, cfg.threshold, piece_cap)
    for index in sorted(halves):
        N = cfg.tower.column(index).height
        for _, S in engine.visit_counts(halves[index], N):
            if 2 * S < N:
                return False
    return True


def chain_check(cfg: CounterexampleConfig, halves: dict, sp: StabilityPartition,
                K) -> ChainResult:
    """Finite-horizon form of the summation argument.

    lhs = sum over N0 <= index <= K of height * mu(L), middle regroups the
    pieces C = L & D_n by n, rhs = integral of N_H.  Each L must sit inside
    {N_H > height} and the pieces must be disjoint.
    """
    cols = [c for c in cfg.tower.columns if cfg.N0 <= c.index <= K]
    if not cols:
        raise ValueError("no columns between N0 and K")
    if any(c.height > sp.horizon for c in cols):
        raise ValueError("a column up to K is taller than the partition horizon")
    lhs = QuadNumber(0)
    weight = defaultdict(lambda: QuadNumber(0))
    pieces = {}
    for c in cols:
        L = halves[c.index]
        mL = L.measure()
        lhs = lhs + c.height * mL
        covered = QuadNumber(0)
        for n in sorted(sp.cells):
            C = L & sp.cells[n]
            if C.is_empty():
                continue
            if n <= c.height:
                raise AssertionError(f"L_{c.index} meets D_{n} although N_H > {c.height} there")
            pieces[(c.index, n)] = C
            mC = C.measure()
            covered = covered + mC
            weight[n] = weight[n] + mC
        if covered != mL:
            raise AssertionError(f"pieces of L_{c.index} do not add up to its measure")
    middle = QuadNumber(0)
    for n in sorted(weight):
        if not weight[n] <= sp.measures[n]:
            raise AssertionError(f"pieces in D_{n} exceed its measure")
        middle = middle + n * weight[n]
    rhs = integral_lower_bound(sp)
    return ChainResult(lhs, middle, rhs, lhs <= middle <= rhs, pieces)
