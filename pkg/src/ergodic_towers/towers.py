"""Columns, towers, Kakutani return-time towers and Rokhlin towers.

Everything here is generic over the two system kinds: a flat
:class:`~ergodic_towers.systems.PiecewiseTranslation` (sets are
``IntervalSet``) and a :class:`~ergodic_towers.systems.SkyscraperSystem`
(sets are ``LeveledSet``).  Both set types share the operators ``| & - ~``,
``measure()`` and ``is_empty()``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any

from .field import QuadNumber
from .systems import LeveledSet, SkyscraperSystem

DEFAULT_PIECE_CAP = 10**6


class PieceCapExceeded(RuntimeError):
    pass


class AuditError(AssertionError):
    """An exact post-construction audit failed (an implementation bug)."""


def default_piece_cap() -> int:
    raw = os.environ.get("ERGODIC_TOWERS_PIECE_CAP")
    return int(raw) if raw else DEFAULT_PIECE_CAP


def _parts(S) -> int:
    if isinstance(S, LeveledSet):
        return sum(len(v) for v in S.comps.values())
    return len(S)


@dataclass
class Column:
    """A base set and its first ``height - 1`` forward images (the levels)."""

    base: Any
    height: int
    index: Any = None
    levels: tuple = ()

    @classmethod
    def over(cls, sys, base, height: int, index=None) -> Column:
        if height < 1:
            raise ValueError("column height must be positive")
        levels = [base]
        for _ in range(height - 1):
            levels.append(sys.image(levels[-1], 1))
        return cls(base, height, index, tuple(levels))

    def measure(self) -> QuadNumber:
        return self.height * self.base.measure()

    def support(self):
        out = self.levels[0]
        for lv in self.levels[1:]:
            out = out | lv
        return out

    def restrict(self, sys, new_base) -> Column:
        return Column.over(sys, new_base, self.height, self.index)


@dataclass
class Tower:
    system: Any
    columns: list
    kind: str = "general"  # or "return-time"
    meta: dict = field(default_factory=dict)

    def support(self):
        out = self.system.empty_set()
        for c in self.columns:
            out = out | c.support()
        return out

    def column(self, index) -> Column:
        for c in self.columns:
            if c.index == index:
                return c
        raise KeyError(index)

    def first_return_sets(self) -> dict:
        return {c.index: c.base for c in self.columns}


@dataclass
class RokhlinResult:
    column: Column
    error_set: Any
    small_base: Any = None


def kakutani(sys, B, piece_cap: int | None = None) -> Tower:
    """First-return decomposition of ``B`` and the towers over it.

    The not-yet-returned part of ``B`` is pushed forward one step at a time;
    what lands in ``B`` at step N is pulled back to give B_N.
    """
    cap = default_piece_cap() if piece_cap is None else piece_cap
    mB = B.measure()
    if not 0 < mB <= 1:
        raise ValueError("base must have positive measure")
    columns = []
    pending = B
    n = 0
    while not pending.is_empty():
        n += 1
        if n > cap or _parts(pending) > cap:
            raise PieceCapExceeded(f"return-time structure exceeds piece cap {cap}")
        moved = sys.image(pending, 1)
        back = moved & B
        if not back.is_empty():
            columns.append(Column.over(sys, sys.image(back, -n), n, index=n))
        pending = moved - B
    return Tower(sys, columns, kind="return-time")


def partition_check(t: Tower, ambient=None) -> bool:
    """Levels of all columns are disjoint and exactly cover ``ambient``."""
    ambient = t.system.full_space() if ambient is None else ambient
    total = QuadNumber(0)
    for c in t.columns:
        for lv in c.levels:
            total = total + lv.measure()
    return t.support() == ambient and total == ambient.measure()


def fatness_partial(t: Tower, upto: int | None = None) -> QuadNumber:
    """Sum of height * measure over the first ``upto`` columns.

    For return-time towers the squared-return-time form is recomputed
    and must agree exactly.
    """
    cols = t.columns if upto is None else t.columns[:upto]
    total = QuadNumber(0)
    for c in cols:
        total = total + c.height * c.measure()
    if t.kind == "return-time" and total != fatness_squared(t, upto):
        raise AuditError("sum N*m(T_N) differs from sum N^2*m(B_N)")
    return total


def fatness_squared(t: Tower, upto: int | None = None) -> QuadNumber:
    cols = t.columns if upto is None else t.columns[:upto]
    total = QuadNumber(0)
    for c in cols:
        total = total + c.height * c.height * c.base.measure()
    return total


def column_check(sys, c: Column) -> bool:
    if len(c.levels) != c.height:
        return False
    total = QuadNumber(0)
    union = sys.empty_set()
    for i, lv in enumerate(c.levels):
        if lv != sys.image(c.base, i):
            return False
        total = total + lv.measure()
        union = union | lv
    return union.measure() == total


def tower_check(sys, t: Tower) -> bool:
    if not all(column_check(sys, c) for c in t.columns):
        return False
    total = QuadNumber(0)
    for c in t.columns:
        total = total + c.measure()
    return t.support().measure() == total


def _small_base(sys, amount: QuadNumber):
    """A left-aligned set of exact measure ``amount`` in the base of the space."""
    if isinstance(sys, SkyscraperSystem):
        first = LeveledSet(sys, {(0, 0): sys.cells[0].base})
        return first.prefix(amount)
    from .sets import IntervalSet
    return IntervalSet.interval(0, amount)


def rokhlin(sys, height: int, eps, piece_cap: int | None = None) -> RokhlinResult:
    """Column of the given height whose complement has measure < eps.

    Slices the Kakutani tower over a small base into blocks of ``height``
    consecutive levels; the block bottoms form the column base and the
    leftover levels the error set.
    """
    eps = eps if isinstance(eps, QuadNumber) else QuadNumber(eps)
    if height < 1:
        raise ValueError("height must be at least 1")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    full = sys.full_space()
    if height == 1:
        return RokhlinResult(Column(full, 1, None, (full,)), sys.empty_set())
    small = _small_base(sys, eps / height)
    try:
        kak = kakutani(sys, small, piece_cap)
    except PieceCapExceeded as exc:
        raise PieceCapExceeded(f"eps too small for the piece cap: {exc}") from exc
    base = sys.empty_set()
    for col in kak.columns:
        for b in range(col.height // height):
            base = base | col.levels[b * height]
    column = Column.over(sys, base, height)
    error = full - column.support()
    if not column_check(sys, column):
        raise AuditError("Rokhlin column levels are not disjoint translates")
    if not error.measure() < eps:
        raise AuditError("Rokhlin error set is not below eps")
    if (column.support() | error) != full or column.measure() + error.measure() != 1:
        raise AuditError("Rokhlin column and error set do not partition the space")
    return RokhlinResult(column, error, small)


def inflation_tower(sys: SkyscraperSystem) -> Tower:
    """The tower of the inflation's columns C_i (the tail cell is left out)."""
    columns = []
    for idx, cell in enumerate(sys.cells):
        if cell.label == "tail":
            continue
        base = LeveledSet(sys, {(idx, 0): cell.base})
        levels = tuple(LeveledSet(sys, {(idx, l): cell.base}) for l in range(cell.height))
        columns.append(Column(base, cell.height, cell.label, levels))
    return Tower(sys, columns, kind="general", meta={"construction": "inflation"})


def tower_to_json(t: Tower) -> dict:
    return {
        "kind": t.kind,
        "columns": [
            {
                "index": c.index,
                "height": c.height,
                "base": c.base.to_json(),
                "base_measure": str(c.base.measure()),
                "column_measure": str(c.measure()),
            }
            for c in t.columns
        ],
    }
