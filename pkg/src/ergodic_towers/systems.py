"""Measure-preserving systems with exact images.

Two kinds of system are supported:

* :class:`PiecewiseTranslation` -- an invertible map of [0, 1) that
  translates each of finitely many intervals (irrational rotations are the
  two-piece case, stored pre-split at the wrap point);
* :class:`SkyscraperSystem` -- columns of prescribed heights stacked over a
  partition of the base of a piecewise translation.  Points climb their
  column one level per step; the top level is sent to where the base map
  sends the corresponding base point.

Subsets of a skyscraper are :class:`LeveledSet` values, one
:class:`~ergodic_towers.sets.IntervalSet` per (cell, level).
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from gmpy2 import mpq

from .field import QuadNumber, floor_mod1, parse_quad
from .sets import IntervalSet, normalize

DEFAULT_ORBIT_CAP = 2**20


class OrbitCapExceeded(RuntimeError):
    pass


class Address(NamedTuple):
    """A point of a skyscraper: base coordinate ``x`` at (cell, level)."""

    cell: int
    level: int
    x: QuadNumber


def _q(v) -> QuadNumber:
    return v if isinstance(v, QuadNumber) else QuadNumber(v)


def _check_cap(n: int, cap: int) -> None:
    if abs(n) > cap:
        raise OrbitCapExceeded(f"|n| = {abs(n)} exceeds the orbit cap {cap}")


def _is_partition(sets: Sequence[IntervalSet]) -> bool:
    union = IntervalSet.empty()
    total = QuadNumber(0)
    for s in sets:
        union = union | s
        total = total + s.measure()
    return union == IntervalSet.full() and total == 1


class PiecewiseTranslation:
    """x in [l, r) maps to x + shift, for each piece ``(l, r, shift)``.

    Shifts are stored so that images land inside [0, 1) without reduction;
    the constructor reduces them mod 1 and splits pieces whose image wraps.
    """

    kind = "piecewise"

    def __init__(self, pieces: Sequence[tuple], orbit_cap: int = DEFAULT_ORBIT_CAP):
        split = []
        for l, r, t in pieces:
            l, r, t = _q(l), _q(r), _q(t)
            _, s = floor_mod1(t)
            cut = 1 - s
            if l < cut < r:
                split.append((l, cut, s))
                split.append((cut, r, s - 1))
            elif l >= cut:
                split.append((l, r, s - 1))
            else:
                split.append((l, r, s))
        split.sort(key=lambda p: p[0])
        self.pieces = tuple(split)
        if not _is_partition([IntervalSet.interval(l, r) for l, r, _ in self.pieces]):
            raise ValueError("piece domains do not partition [0, 1)")
        if not _is_partition([IntervalSet.interval(l + t, r + t) for l, r, t in self.pieces]):
            raise ValueError("piece images do not partition [0, 1): map is not invertible")
        self._starts = [p[0] for p in self.pieces]
        inv = sorted(((l + t, r + t, -t) for l, r, t in self.pieces), key=lambda p: p[0])
        self._inv_pieces = tuple(inv)
        self._inv_starts = [p[0] for p in inv]
        shifts = {floor_mod1(t)[1] for _, _, t in self.pieces}
        self.uniform_shift = shifts.pop() if len(shifts) == 1 else None
        self.orbit_cap = orbit_cap

    # points
    def __call__(self, x: QuadNumber) -> QuadNumber:
        return x + self.pieces[bisect_right(self._starts, x) - 1][2]

    def inverse(self, x: QuadNumber) -> QuadNumber:
        return x + self._inv_pieces[bisect_right(self._inv_starts, x) - 1][2]

    def step_point(self, x: QuadNumber, n: int = 1) -> QuadNumber:
        _check_cap(n, self.orbit_cap)
        if self.uniform_shift is not None:
            return floor_mod1(x + n * self.uniform_shift)[1]
        f = self if n >= 0 else self.inverse
        for _ in range(abs(n)):
            x = f(x)
        return x

    # sets
    def _image1(self, S: IntervalSet, pieces) -> IntervalSet:
        out = []
        for l, r, t in pieces:
            for a, b in S.parts:
                lo = a if a > l else l
                hi = b if b < r else r
                if lo < hi:
                    out.append((lo + t, hi + t))
        return normalize(out)

    def image(self, S: IntervalSet, n: int = 1) -> IntervalSet:
        _check_cap(n, self.orbit_cap)
        if self.uniform_shift is not None:
            return S.translate_mod1(n * self.uniform_shift)
        pieces = self.pieces if n >= 0 else self._inv_pieces
        for _ in range(abs(n)):
            S = self._image1(S, pieces)
        return S

    def measure(self, S: IntervalSet) -> QuadNumber:
        return S.measure()

    def full_space(self) -> IntervalSet:
        return IntervalSet.full()

    def empty_set(self) -> IntervalSet:
        return IntervalSet.empty()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "pieces": [[str(l), str(r), str(t)] for l, r, t in self.pieces],
        }


class Rotation(PiecewiseTranslation):
    kind = "rotation"

    def __init__(self, alpha: QuadNumber, orbit_cap: int = DEFAULT_ORBIT_CAP):
        self.alpha = alpha
        super().__init__([(QuadNumber(0), QuadNumber(1), alpha)], orbit_cap=orbit_cap)

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["alpha"] = str(self.alpha)
        return d


def rotation(alpha: QuadNumber, orbit_cap: int = DEFAULT_ORBIT_CAP) -> Rotation:
    """Rotation x -> x + alpha mod 1 for irrational 0 < alpha < 1."""
    if not isinstance(alpha, QuadNumber):
        alpha = QuadNumber(alpha)
    if alpha.is_rational():
        raise ValueError("rational rotation angle gives a periodic, non-ergodic map")
    if not 0 < alpha < 1:
        raise ValueError("rotation angle must lie in (0, 1)")
    return Rotation(alpha, orbit_cap=orbit_cap)


@dataclass(frozen=True)
class Cell:
    base: IntervalSet
    height: int
    label: object


class SkyscraperSystem:
    """Columns of heights ``N_i`` over a partition ``{B_i}`` of the base.

    Cells are addressed by their position in :attr:`cells`; ``label`` keeps
    the construction's own name for a cell (``i`` or ``"tail"``).
    """

    kind = "skyscraper"

    def __init__(self, base: PiecewiseTranslation, cells: Sequence[Cell],
                 orbit_cap: int | None = None, meta: dict | None = None):
        self.base = base
        self.cells = tuple(cells)
        if not _is_partition([c.base for c in self.cells]):
            raise ValueError("cell bases do not partition [0, 1)")
        if any(c.height < 1 for c in self.cells):
            raise ValueError("heights must be positive")
        self.Z = QuadNumber(0)
        for c in self.cells:
            self.Z = self.Z + c.height * c.base.measure()
        self.orbit_cap = base.orbit_cap if orbit_cap is None else orbit_cap
        self.meta = dict(meta or {})
        table = []
        for idx, c in enumerate(self.cells):
            for l, r in c.base.parts:
                table.append((l, r, idx))
        table.sort(key=lambda p: p[0])
        self._cell_table = table
        self._cell_starts = [p[0] for p in table]

    def locate(self, x: QuadNumber) -> int:
        return self._cell_table[bisect_right(self._cell_starts, x) - 1][2]

    def split_by_cells(self, S: IntervalSet) -> dict:
        out = {}
        for idx, c in enumerate(self.cells):
            part = S & c.base
            if part:
                out[idx] = part
        return out

    def step_point(self, p: Address, n: int = 1) -> Address:
        _check_cap(n, self.orbit_cap)
        c, l, x = p
        if n >= 0:
            left = n
            while left:
                h = self.cells[c].height
                if l + left < h:
                    return Address(c, l + left, x)
                left -= h - l
                x = self.base(x)
                c, l = self.locate(x), 0
        else:
            left = -n
            while left:
                if l - left >= 0:
                    return Address(c, l - left, x)
                left -= l + 1
                x = self.base.inverse(x)
                c = self.locate(x)
                l = self.cells[c].height - 1
        return Address(c, l, x)

    def image(self, S: LeveledSet, n: int = 1) -> LeveledSet:
        _check_cap(n, self.orbit_cap)
        out: dict = {}

        def put(key, part):
            out[key] = out[key] | part if key in out else part

        work = [(c, l, part, abs(n)) for (c, l), part in S.comps.items()]
        while work:
            c, l, part, left = work.pop()
            h = self.cells[c].height
            if n >= 0:
                if l + left < h:
                    put((c, l + left), part)
                    continue
                img = self.base.image(part, 1)
                left -= h - l
                for c2, sub in self.split_by_cells(img).items():
                    work.append((c2, 0, sub, left))
            else:
                if l - left >= 0:
                    put((c, l - left), part)
                    continue
                img = self.base.image(part, -1)
                left -= l + 1
                for c2, sub in self.split_by_cells(img).items():
                    work.append((c2, self.cells[c2].height - 1, sub, left))
        return LeveledSet(self, out)

    def measure(self, S: LeveledSet) -> QuadNumber:
        return S.measure()

    def full_space(self) -> LeveledSet:
        return LeveledSet(self, {(i, l): c.base for i, c in enumerate(self.cells)
                                 for l in range(c.height)})

    def empty_set(self) -> LeveledSet:
        return LeveledSet(self, {})

    def column_set(self, idx: int, levels: range | None = None) -> LeveledSet:
        c = self.cells[idx]
        levels = range(c.height) if levels is None else levels
        return LeveledSet(self, {(idx, l): c.base for l in levels})

    def cell_index(self, label) -> int:
        for idx, c in enumerate(self.cells):
            if c.label == label:
                return idx
        raise KeyError(label)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "base": self.base.to_dict(), "Z": str(self.Z)}
        d.update(self.meta)
        d["cells"] = [{"label": c.label, "height": c.height, "base": c.base.to_json(),
                       "measure": str(c.base.measure())} for c in self.cells]
        return d


class LeveledSet:
    """Subset of a skyscraper: (cell, level) -> IntervalSet inside the cell base."""

    __slots__ = ("space", "comps")

    def __init__(self, space: SkyscraperSystem, comps: dict):
        self.space = space
        self.comps = {k: v for k, v in comps.items() if v}

    def _op(self, other: LeveledSet, fn, keep_left_only: bool, keep_right_only: bool):
        out = {}
        for k, v in self.comps.items():
            w = other.comps.get(k)
            if w is None:
                if keep_left_only:
                    out[k] = v
            else:
                out[k] = fn(v, w)
        if keep_right_only:
            for k, w in other.comps.items():
                if k not in self.comps:
                    out[k] = w
        return LeveledSet(self.space, out)

    def __or__(self, other):
        return self._op(other, lambda a, b: a | b, True, True)

    def __and__(self, other):
        return self._op(other, lambda a, b: a & b, False, False)

    def __sub__(self, other):
        return self._op(other, lambda a, b: a - b, True, False)

    def __invert__(self):
        return self.space.full_space() - self

    def __xor__(self, other):
        return (self - other) | (other - self)

    def __eq__(self, other):
        if not isinstance(other, LeveledSet):
            return NotImplemented
        return self.space is other.space and self.comps == other.comps

    def __hash__(self):
        return hash(frozenset(self.comps.items()))

    def __bool__(self):
        return bool(self.comps)

    def is_empty(self) -> bool:
        return not self.comps

    def issubset(self, other) -> bool:
        return (self - other).is_empty()

    def isdisjoint(self, other) -> bool:
        return (self & other).is_empty()

    def measure(self) -> QuadNumber:
        """Normalized skyscraper measure mu (total mass of the space is 1)."""
        return self.base_measure() / self.space.Z

    def base_measure(self) -> QuadNumber:
        total = QuadNumber(0)
        for k in sorted(self.comps):
            total = total + self.comps[k].measure()
        return total

    def contains(self, p: Address) -> bool:
        part = self.comps.get((p.cell, p.level))
        return part is not None and part.contains(p.x)

    __contains__ = contains

    def prefix(self, amount: QuadNumber) -> LeveledSet:
        """Subset of exact mu-measure ``amount``, filled in key order, left to right."""
        need = amount * self.space.Z
        out = {}
        for k in sorted(self.comps):
            if not need:
                break
            part = self.comps[k]
            m = part.measure()
            if m <= need:
                out[k] = part
                need = need - m
            else:
                out[k] = part.prefix(need)
                need = QuadNumber(0)
        if need:
            raise ValueError("requested measure exceeds the set's measure")
        return LeveledSet(self.space, out)

    def __repr__(self):
        return f"LeveledSet({len(self.comps)} components, mu={self.measure().pretty()})"

    def to_json(self) -> list:
        return [{"cell": c, "level": l, "parts": self.comps[(c, l)].to_json()}
                for c, l in sorted(self.comps)]


def build_inflation(base: PiecewiseTranslation, i_max: int) -> SkyscraperSystem:
    """Skyscraper with columns of height 2**i over base cells of measure 3/4**i.

    Cells i = 1..i_max are consecutive intervals from the left; the residual
    base mass 4**-i_max becomes a height-1 ``"tail"`` cell so the system is a
    genuine finite skyscraper.
    """
    if i_max < 2:
        raise ValueError("i_max must be at least 2")
    cells = []
    left = QuadNumber(0)
    for i in range(1, i_max + 1):
        right = QuadNumber(1 - mpq(1, 4**i))
        cells.append(Cell(IntervalSet.interval(left, right), 2**i, i))
        left = right
    cells.append(Cell(IntervalSet.interval(left, QuadNumber(1)), 1, "tail"))
    meta = {"construction": "inflation", "i_max": i_max}
    return SkyscraperSystem(base, cells, meta=meta)


def image(sys, S, n: int = 1):
    """Exact image of ``S`` under the n-th iterate (n may be negative)."""
    return sys.image(S, n)


def step_point(sys, p, n: int = 1):
    return sys.step_point(p, n)


def flat_view(sys: PiecewiseTranslation) -> SkyscraperSystem:
    """A piecewise translation as a one-cell, height-1 skyscraper."""
    return SkyscraperSystem(sys, [Cell(IntervalSet.full(), 1, 0)],
                            meta={"construction": "flat"})


def as_leveled(space: SkyscraperSystem, S) -> LeveledSet:
    if isinstance(S, LeveledSet):
        return S
    return LeveledSet(space, {(0, 0): S})


def system_from_spec(text: str, orbit_cap: int = DEFAULT_ORBIT_CAP):
    """Parse ``rotation:alpha=golden`` or ``inflation:imax=10[,alpha=...]``."""
    kind, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise ValueError(f"malformed system parameter {item!r}")
        params[key.strip()] = val.strip()
    alpha = parse_quad(params.pop("alpha", "golden"))
    if kind == "rotation":
        if params:
            raise ValueError(f"unknown rotation parameters {sorted(params)}")
        return rotation(alpha, orbit_cap=orbit_cap)
    if kind == "inflation":
        imax = int(params.pop("imax", "10"))
        if params:
            raise ValueError(f"unknown inflation parameters {sorted(params)}")
        return build_inflation(rotation(alpha, orbit_cap=orbit_cap), imax)
    raise ValueError(f"unknown system kind {kind!r}")
