"""Finite unions of half-open subintervals of [0, 1) with exact endpoints.

An :class:`IntervalSet` is kept in canonical form (sorted, disjoint, no two
parts sharing an endpoint, no empty parts), so set equality is structural
equality.  Points are null sets and are never represented.
"""

from __future__ import annotations

from bisect import bisect_right
from typing import Iterable, Sequence

from .field import QuadNumber, floor_mod1

__all__ = [
    "IntervalSet",
    "boolean",
    "measure",
    "normalize",
    "translate_mod1",
]

Interval = tuple  # (l, r), both QuadNumber


def _q(v) -> QuadNumber:
    return v if isinstance(v, QuadNumber) else QuadNumber(v)


def _merge_sorted(parts: Iterable[Interval]) -> tuple:
    out = []
    for l, r in parts:
        if out and l <= out[-1][1]:
            if r > out[-1][1]:
                out[-1] = (out[-1][0], r)
        else:
            out.append((l, r))
    return tuple(out)


class IntervalSet:
    """Canonical finite union of intervals ``[l, r)`` inside [0, 1)."""

    __slots__ = ("parts", "_starts")

    def __init__(self, parts: tuple = ()):
        # trusted constructor: callers outside this module use normalize()
        self.parts = parts
        self._starts = None

    @classmethod
    def full(cls) -> IntervalSet:
        return cls(((QuadNumber(0), QuadNumber(1)),))

    @classmethod
    def empty(cls) -> IntervalSet:
        return cls(())

    @classmethod
    def interval(cls, l, r) -> IntervalSet:
        return normalize([(l, r)])

    # basic protocol
    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def __bool__(self):
        return bool(self.parts)

    def is_empty(self) -> bool:
        return not self.parts

    def __eq__(self, other):
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self.parts == other.parts

    def __hash__(self):
        return hash(self.parts)

    def __repr__(self):
        body = ", ".join(f"[{l.pretty()}, {r.pretty()})" for l, r in self.parts)
        return f"IntervalSet({body})"

    def measure(self) -> QuadNumber:
        total = QuadNumber(0)
        for l, r in self.parts:
            total = total + (r - l)
        return total

    def contains(self, x: QuadNumber) -> bool:
        if self._starts is None:
            self._starts = [l for l, _ in self.parts]
        i = bisect_right(self._starts, x) - 1
        return i >= 0 and x < self.parts[i][1]

    __contains__ = contains

    # boolean algebra
    def __and__(self, other: IntervalSet) -> IntervalSet:
        a, b = self.parts, other.parts
        i = j = 0
        out = []
        while i < len(a) and j < len(b):
            l = a[i][0] if a[i][0] > b[j][0] else b[j][0]
            r = a[i][1] if a[i][1] < b[j][1] else b[j][1]
            if l < r:
                out.append((l, r))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        # pieces of canonical inputs cannot touch, so no merge needed
        return IntervalSet(tuple(out))

    def __or__(self, other: IntervalSet) -> IntervalSet:
        a, b = self.parts, other.parts
        merged = []
        i = j = 0
        while i < len(a) or j < len(b):
            if j >= len(b) or (i < len(a) and a[i][0] <= b[j][0]):
                merged.append(a[i])
                i += 1
            else:
                merged.append(b[j])
                j += 1
        return IntervalSet(_merge_sorted(merged))

    def __invert__(self) -> IntervalSet:
        out = []
        prev = QuadNumber(0)
        for l, r in self.parts:
            if prev < l:
                out.append((prev, l))
            prev = r
        if prev < 1:
            out.append((prev, QuadNumber(1)))
        return IntervalSet(tuple(out))

    def __sub__(self, other: IntervalSet) -> IntervalSet:
        if not other.parts or not self.parts:
            return self
        return self & ~other

    def __xor__(self, other: IntervalSet) -> IntervalSet:
        return (self - other) | (other - self)

    def union(self, other):
        return self | other

    def intersect(self, other):
        return self & other

    def difference(self, other):
        return self - other

    def complement(self):
        return ~self

    def issubset(self, other: IntervalSet) -> bool:
        return (self - other).is_empty()

    def isdisjoint(self, other: IntervalSet) -> bool:
        return (self & other).is_empty()

    def translate_mod1(self, t: QuadNumber) -> IntervalSet:
        _, s = floor_mod1(_q(t))
        if not s or not self.parts:
            return self
        head, tail = [], []
        for l, r in self.parts:
            nl, nr = l + s, r + s
            if nr <= 1:
                (head if nl < 1 else tail).append((nl, nr))
            elif nl >= 1:
                tail.append((nl - 1, nr - 1))
            else:
                head.append((nl, QuadNumber(1)))
                tail.append((QuadNumber(0), nr - 1))
        # wrapped parts all lie left of the unwrapped ones
        return IntervalSet(_merge_sorted(tail + head))

    def prefix(self, amount: QuadNumber) -> IntervalSet:
        """Leftmost subset of exact measure ``amount``."""
        amount = _q(amount)
        if amount < 0 or amount > self.measure():
            raise ValueError("requested measure exceeds the set's measure")
        out = []
        left = amount
        for l, r in self.parts:
            if not left:
                break
            length = r - l
            if length <= left:
                out.append((l, r))
                left = left - length
            else:
                out.append((l, l + left))
                left = QuadNumber(0)
        return IntervalSet(tuple(out))

    def endpoints(self) -> list:
        pts = []
        for l, r in self.parts:
            pts.append(l)
            pts.append(r)
        return pts

    def to_json(self) -> list:
        return [[str(l), str(r)] for l, r in self.parts]

    @classmethod
    def from_json(cls, data: Sequence) -> IntervalSet:
        from .field import parse_quad
        return normalize([(parse_quad(l), parse_quad(r)) for l, r in data])


def normalize(raw: Iterable[Sequence]) -> IntervalSet:
    """Canonical form of a finite union of ``[l, r)`` with 0 <= l <= r <= 1."""
    parts = []
    for l, r in raw:
        l, r = _q(l), _q(r)
        if l < 0 or r > 1 or r < l:
            raise ValueError(f"interval [{l.pretty()}, {r.pretty()}) is not inside [0, 1]")
        if l < r:
            parts.append((l, r))
    parts.sort(key=lambda p: p[0])
    return IntervalSet(_merge_sorted(parts))


def boolean(op: str, S: IntervalSet, T: IntervalSet | None = None) -> IntervalSet:
    if op == "union":
        return S | T
    if op == "intersect":
        return S & T
    if op == "difference":
        return S - T
    if op == "complement":
        return ~S
    raise ValueError(f"unknown set operation {op!r}")


def measure(S: IntervalSet) -> QuadNumber:
    return S.measure()


def translate_mod1(S: IntervalSet, t: QuadNumber) -> IntervalSet:
    return S.translate_mod1(t)
