"""Monte-Carlo estimates of the truncated stability time by orbit iteration.

Each sample is a dyadic rational u in [0, 1) (64 random bits), lifted to the
skyscraper in proportion to mu.  Its orbit is followed step by step once, up
to the largest horizon, and N_H is read off at every requested horizon, so
the estimates for different horizons share their samples.
"""

from __future__ import annotations

import math
import random
import statistics
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

from gmpy2 import mpq

from .field import QuadNumber, floor_mod1, to_decimal
from .sweep import threshold_table
from .systems import Address, LeveledSet, SkyscraperSystem, as_leveled, flat_view

SAMPLE_BITS = 64


@dataclass(frozen=True)
class EstimateRow:
    H: int
    samples: int
    mean: float
    stderr: float
    seed: int

    def csv(self) -> str:
        return f"{self.H},{self.samples},{self.mean:.12f},{self.stderr:.12f},{self.seed}"


CSV_HEADER = "H,samples,mean,stderr,seed"


def _space(sys) -> SkyscraperSystem:
    return sys if isinstance(sys, SkyscraperSystem) else flat_view(sys)


def _lift(space: SkyscraperSystem, u: mpq) -> Address:
    """Point of the skyscraper at mu-quantile ``u`` (cells in order, levels bottom up)."""
    r = u * space.Z
    for idx, cell in enumerate(space.cells):
        mb = cell.base.measure()
        block = cell.height * mb
        if r < block:
            level = math.floor(r / mb)
            r = r - level * mb
            for lo, hi in cell.base.parts:
                width = hi - lo
                if r < width:
                    return Address(idx, level, lo + r)
                r = r - width
        else:
            r = r - block
    raise ValueError("sample lies outside the space")  # unreachable for u < 1


def sample_points(sys, seed: int, count: int) -> list:
    """``count`` reproducible points; Addresses on a skyscraper, numbers on a flat system."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = random.Random(seed)
    scale = 1 << SAMPLE_BITS
    if not isinstance(sys, SkyscraperSystem):
        return [QuadNumber(mpq(rng.getrandbits(SAMPLE_BITS), scale)) for _ in range(count)]
    return [_lift(sys, mpq(rng.getrandbits(SAMPLE_BITS), scale)) for _ in range(count)]


class _Membership:
    """Fast ``p in A`` for points of a skyscraper: whole levels are looked up, not searched."""

    def __init__(self, space: SkyscraperSystem, A: LeveledSet):
        self.status = {}
        self.A = A
        for (c, l), part in A.comps.items():
            self.status[(c, l)] = 1 if part == space.cells[c].base else None

    def __call__(self, p: Address) -> int:
        st = self.status.get((p.cell, p.level), 0)
        if st is None:
            return int(self.A.comps[(p.cell, p.level)].contains(p.x))
        return st


def _orbit_times(space, member, p: Address, horizons: Sequence[int], table: list) -> list:
    """N_H for each horizon, from one exact pass over the orbit of ``p``."""
    out = []
    S = last = 0
    k = 0
    for H in horizons:
        while k < H:
            S += member(p)
            k += 1
            if S > table[k]:
                last = k
            p = space.step_point(p, 1)
        out.append(last + 1)
    return out


PREC = 192


def _fix(q) -> int:
    """floor(q * 2**PREC); the true scaled value lies in [F, F + 1)."""
    q = q if isinstance(q, QuadNumber) else QuadNumber(q)
    return floor_mod1(q * (1 << PREC))[0]


class _FixedOrbit:
    """Orbit iteration on 192-bit fixed-point coordinates with certified decisions.

    Each coordinate carries an error bound (one unit per translation step).
    A location or membership decision is taken on the fixed-point value only
    when every nearby endpoint is farther than the error bound; otherwise the
    exact coordinate is rebuilt from the starting point and the number of
    times each translation was applied, and the decision is made exactly.
    Results are therefore identical to exact iteration.
    """

    def __init__(self, space: SkyscraperSystem, A: LeveledSet):
        self.space = space
        pieces = space.base.pieces
        self.p_exact = [p[0] for p in pieces]
        self.p_fix = [_fix(x) for x in self.p_exact]
        self.shift = [p[2] for p in pieces]
        self.shift_fix = [_fix(t) for t in self.shift]
        self.c_exact = space._cell_starts
        self.c_fix = [_fix(x) for x in self.c_exact]
        self.c_idx = [row[2] for row in space._cell_table]
        self.heights = [c.height for c in space.cells]
        self.status = {}
        self.ends = {}
        for (c, l), part in A.comps.items():
            if part == space.cells[c].base:
                self.status[(c, l)] = 1
            else:
                self.status[(c, l)] = None
                flat = [e for lohi in part.parts for e in lohi]
                self.ends[(c, l)] = (flat, [_fix(e) for e in flat])

    @staticmethod
    def _where(X, err, fixed, exact, exact_x) -> int:
        i = bisect_right(fixed, X)
        m = err + 1
        if (i and X - fixed[i - 1] < m) or (i < len(fixed) and fixed[i] - X <= m):
            return bisect_right(exact, exact_x())
        return i

    def times(self, p: Address, horizons: Sequence[int], table: list) -> list:
        c, l, x0 = p
        x0 = x0 if isinstance(x0, QuadNumber) else QuadNumber(x0)
        X, err = _fix(x0), 1
        counts = [0] * len(self.shift)

        def exact_x():
            x = x0
            for n, t in zip(counts, self.shift):
                if n:
                    x = x + n * t
            return x

        status, ends, heights = self.status, self.ends, self.heights
        where = self._where
        out = []
        S = last = k = 0
        for H in horizons:
            while k < H:
                st = status.get((c, l), 0)
                if st is None:
                    flat, fixed = ends[(c, l)]
                    st = where(X, err, fixed, flat, exact_x) & 1
                S += st
                k += 1
                if S > table[k]:
                    last = k
                if l + 1 < heights[c]:
                    l += 1
                    continue
                i = where(X, err, self.p_fix, self.p_exact, exact_x) - 1
                X += self.shift_fix[i]
                err += 1
                counts[i] += 1
                c = self.c_idx[where(X, err, self.c_fix, self.c_exact, exact_x) - 1]
                l = 0
            out.append(last + 1)
        return out


def _as_address(space, x) -> Address:
    return x if isinstance(x, Address) else Address(0, 0, x)


def stability_time(sys, A, x, H: int) -> int:
    """N_H(x) = 1 + max{k <= H : S_k / k > 2 m(A)}, or 1 when there is no such k."""
    if H < 1:
        raise ValueError("horizon must be at least 1")
    space = _space(sys)
    A = as_leveled(space, A)
    table = threshold_table(2 * A.measure(), H)
    return _FixedOrbit(space, A).times(_as_address(space, x), [H], table)[0]


def stability_times(sys, A, points, horizons: Sequence[int], exact: bool = False) -> list:
    """Per point, the list of N_H over ``horizons`` (increasing).

    ``exact=True`` iterates in field arithmetic throughout (slow reference).
    """
    horizons = list(horizons)
    if any(b <= a for a, b in zip(horizons, horizons[1:])) or horizons[0] < 1:
        raise ValueError("horizons must be positive and increasing")
    space = _space(sys)
    A = as_leveled(space, A)
    table = threshold_table(2 * A.measure(), horizons[-1])
    if exact:
        member = _Membership(space, A)
        return [_orbit_times(space, member, _as_address(space, x), horizons, table)
                for x in points]
    orbit = _FixedOrbit(space, A)
    return [orbit.times(_as_address(space, x), horizons, table) for x in points]


def mean_curve(sys, A, horizons: Sequence[int], n: int, seed: int) -> list:
    points = sample_points(sys, seed, n)
    times = stability_times(sys, A, points, horizons)
    rows = []
    for j, H in enumerate(horizons):
        vals = [t[j] for t in times]
        mean = statistics.fmean(vals)
        sd = statistics.stdev(vals) if n > 1 else 0.0
        rows.append(EstimateRow(H, n, mean, sd / math.sqrt(n), seed))
    return rows


def rows_to_csv(rows: Sequence[EstimateRow]) -> str:
    return "\n".join([CSV_HEADER] + [r.csv() for r in rows]) + "\n"


def exact_reference(value: QuadNumber) -> str:
    return to_decimal(value, 12)
