"""Exact orbit sweeps: visit-count statistics on atoms of a skyscraper.

A sweep pushes intervals forward through the system, splitting them only
where the map is discontinuous, where a new cell begins, or where the
indicator of ``A`` changes.  Every resulting atom has a constant visit
sequence ``1_A(x), 1_A(Tx), ...``, stored run-length encoded.  Whole column
climbs are handled as single runs, and the splitting tree is memoized so it
is shared by every starting level and every horizon.

Flat piecewise translations are swept as one-cell, height-1 skyscrapers.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right

from .field import QuadNumber, floor_mod1
from .systems import LeveledSet, SkyscraperSystem


class SweepCapExceeded(RuntimeError):
    pass


def _rle(bits) -> list:
    runs = []
    for b in bits:
        if runs and runs[-1][0] == b:
            runs[-1][1] += 1
        else:
            runs.append([b, 1])
    return runs


def threshold_table(thr: QuadNumber, horizon: int) -> list:
    """``c[k] = floor(thr * k)`` for 0 <= k <= horizon.

    For an integer count S, ``S / k > thr`` iff ``S > c[k]``.
    """
    return [floor_mod1(thr * k)[0] for k in range(horizon + 1)]


class _Node:
    """Points at (cell, start level) with base interval [lo, hi).

    ``runs`` is the visit sequence from the current position until the next
    split; after it the points sit on top of ``tail_cell`` at
    ``[tail_lo, tail_hi)``, which is ``[lo, hi)`` translated by ``shift``.
    ``children`` holds ``(edge_shift, node)`` once a split has happened.
    """

    __slots__ = ("lo", "hi", "runs", "length", "tail_cell", "tail_lo", "tail_hi",
                 "shift", "children")

    def __init__(self, cell, lo, hi, runs, length):
        self.lo, self.hi = lo, hi
        self.runs = runs
        self.length = length
        self.tail_cell, self.tail_lo, self.tail_hi = cell, lo, hi
        self.shift = QuadNumber(0)
        self.children = None


class OrbitSweep:
    """Sweep engine for one system and one target set ``A``."""

    def __init__(self, space: SkyscraperSystem, A: LeveledSet, piece_cap: int = 10**6):
        self.space = space
        self.piece_cap = piece_cap
        self.heights = [c.height for c in space.cells]
        self.base_map = space.base
        self._tau = space.base.pieces
        self._tau_starts = [p[0] for p in self._tau]
        self._cell_table = space._cell_table
        self._cell_starts = space._cell_starts
        # per cell: list of per-level status (1 full, 0 empty, None partial)
        self._status = []
        self._levels = []
        self._cuts = []
        for idx, cell in enumerate(space.cells):
            status, levels, cuts = [], [], set()
            for l in range(cell.height):
                part = A.comps.get((idx, l))
                levels.append(part)
                if part is None:
                    status.append(0)
                elif part == cell.base:
                    status.append(1)
                else:
                    status.append(None)
                    cuts.update(part.endpoints())
            self._status.append(status)
            self._levels.append(levels)
            self._cuts.append(sorted(cuts))
        self._uniform = [None not in s for s in self._status]
        self._climb_cache = {}
        self._nodes = {}
        self.node_count = 0

    # geometry
    def _climb(self, cell: int, start: int, x: QuadNumber) -> list:
        """Visit bits for levels start..top of ``cell`` for points near x."""
        if self._uniform[cell]:
            key = (cell, start)
            runs = self._climb_cache.get(key)
            if runs is None:
                runs = _rle(self._status[cell][start:])
                self._climb_cache[key] = runs
            return runs
        bits = []
        for l in range(start, self.heights[cell]):
            st = self._status[cell][l]
            bits.append(st if st is not None else int(self._levels[cell][l].contains(x)))
        return _rle(bits)

    def _split_cuts(self, cell: int, lo, hi, start: int = 0) -> list:
        if self._uniform[cell]:
            return [(lo, hi)]
        if start:
            cuts = set()
            for l in range(start, self.heights[cell]):
                part = self._levels[cell][l]
                if part is not None and self._status[cell][l] is None:
                    cuts.update(part.endpoints())
            cuts = sorted(cuts)
        else:
            cuts = self._cuts[cell]
        out = []
        i = bisect_right(cuts, lo)
        while i < len(cuts) and cuts[i] < hi:
            out.append((lo, cuts[i]))
            lo = cuts[i]
            i += 1
        out.append((lo, hi))
        return out

    def _successors(self, lo, hi) -> list:
        """Pieces of tau([lo, hi)) as ``(shift, cell, lo', hi')``, at level 0."""
        out = []
        i = bisect_right(self._tau_starts, lo) - 1
        while i < len(self._tau) and self._tau[i][0] < hi:
            l, r, t = self._tau[i]
            a = lo if lo > l else l
            b = hi if hi < r else r
            if a < b:
                a, b = a + t, b + t
                j = bisect_right(self._cell_starts, a) - 1
                while j < len(self._cell_table) and self._cell_table[j][0] < b:
                    cl, cr, cell = self._cell_table[j]
                    u = a if a > cl else cl
                    v = b if b < cr else cr
                    if u < v:
                        for p, q in self._split_cuts(cell, u, v):
                            out.append((t, cell, p, q))
                    j += 1
            i += 1
        return out

    def _node(self, cell: int, start: int, lo, hi) -> _Node:
        key = (cell, start, lo, hi)
        node = self._nodes.get(key)
        if node is None:
            self.node_count += 1
            if self.node_count > self.piece_cap:
                raise SweepCapExceeded(f"atom refinement exceeds piece cap {self.piece_cap}")
            runs = self._climb(cell, start, lo) if start < self.heights[cell] else []
            node = _Node(cell, lo, hi, [list(r) for r in runs],
                         self.heights[cell] - start)
            self._nodes[key] = node
        return node

    def _extend(self, node: _Node, need: int) -> None:
        while node.children is None and node.length < need:
            succ = self._successors(node.tail_lo, node.tail_hi)
            if len(succ) == 1:
                t, cell, lo, hi = succ[0]
                for b, n in self._climb(cell, 0, lo):
                    if node.runs and node.runs[-1][0] == b:
                        node.runs[-1][1] += n
                    else:
                        node.runs.append([b, n])
                node.length += self.heights[cell]
                node.tail_cell, node.tail_lo, node.tail_hi = cell, lo, hi
                node.shift = node.shift + t
            else:
                node.children = [(node.shift + t, self._node(cell, 0, lo, hi))
                                 for t, cell, lo, hi in succ]

    # traversal
    def run(self, starts, horizon: int, table: list | None, emit) -> None:
        """Sweep each start ``(cell, level, lo, hi)`` for ``horizon`` steps.

        ``emit(cell, level, lo, hi, count, last)`` receives every atom of the
        start interval with its visit count after ``horizon`` steps and the
        largest k <= horizon with count_k > table[k] (0 if none).  With
        ``table=None`` excursions are not tracked.
        """
        track = table is not None
        for cell, level, lo, hi in starts:
            for plo, phi in self._split_cuts(cell, lo, hi, level):
                root = _Node(cell, plo, phi, self._climb(cell, level, plo),
                             self.heights[cell] - level)
                root.children = [(QuadNumber(0), self._node(cell, self.heights[cell], plo, phi))]
                stack = [(root, 0, 0, 0, QuadNumber(0))]
                while stack:
                    node, k, S, last, acc = stack.pop()
                    if node.length < horizon - k:
                        self._extend(node, horizon - k)
                    for b, n in node.runs:
                        if k >= horizon:
                            break
                        m = n if n < horizon - k else horizon - k
                        if b:
                            k += m
                            S += m
                            if track and S > table[k]:
                                last = k
                        else:
                            if track and S > table[k + 1]:
                                last = bisect_left(table, S, k + 1, k + m + 1) - 1
                            k += m
                    if k >= horizon or not node.children:
                        emit(cell, level, node.lo - acc, node.hi - acc, S, last)
                        continue
                    for edge, child in node.children:
                        stack.append((child, k, S, last, acc + edge))
