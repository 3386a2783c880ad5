"""Stage-by-stage construction of a fat tower inside an aperiodic system.

At stage n a column of height k_n and total measure 1/k_n is extracted from
the whole space; every older column gives up the full vertical grains that
meet it, and the parts of those grains lying outside the new column go back
to the first (height 1) column.  All sets stay exact, and every stage is
audited: partition, heights, measure floors, nesting and removal bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from gmpy2 import mpq

from .field import QuadNumber
from .towers import AuditError, Column, Tower, column_check, rokhlin

DEFAULT_BUDGET = mpq(1, 8)
DEFAULT_EPS = mpq(1, 10)
DEFAULT_KS = (1, 16, 256)


class GrowthError(ValueError):
    """The growth schedule cannot be certified."""


class GrowthSchedule:
    """An infinite schedule k_1 = 1 < k_2 < ... with a certified ratio floor."""

    def k(self, j: int) -> int:
        raise NotImplementedError

    def min_ratio(self) -> int:
        """A lower bound for k_{j+1}/k_j valid for every j >= 1."""
        raise NotImplementedError

    def prefix(self, n: int) -> tuple:
        return tuple(self.k(j) for j in range(1, n + 1))


class DoublyExponential(GrowthSchedule):
    """k_1 = 1 and k_j = base**(2**j) for j >= 2."""

    def __init__(self, base: int = 8):
        self.base = base

    def k(self, j: int) -> int:
        return 1 if j == 1 else self.base ** (2**j)

    def min_ratio(self) -> int:
        # k_{j+1}/k_j = k_j for j >= 2, so the first ratio is the smallest
        return self.k(2)

    def __repr__(self):
        return f"DoublyExponential(base={self.base})"


class Squaring(GrowthSchedule):
    """k_1 = 1, k_2 = start and k_{j+1} = k_j**2."""

    def __init__(self, start: int = 16):
        if start < 2:
            raise ValueError("start must be at least 2")
        self.start = start

    def k(self, j: int) -> int:
        return 1 if j == 1 else self.start ** (2 ** (j - 2))

    def min_ratio(self) -> int:
        return self.start

    def __repr__(self):
        return f"Squaring(start={self.start})"


_PREFIX = 6


def _validate(ks: Sequence[int]) -> None:
    if not ks or ks[0] != 1:
        raise GrowthError("a growth sequence starts with k_1 = 1")
    for a, b in zip(ks, ks[1:]):
        if b < 2 * a:
            raise GrowthError(f"k = {a} -> {b} grows by less than a factor 2; tail not certifiable")


def _growth_sums(ks):
    """Exact (or certified upper) values of the two growth sums.

    Returns ``(sum_j 1/k_j over j >= 2, max_j sum_t k_j/k_{j+t})``.
    """
    if isinstance(ks, GrowthSchedule):
        rho = mpq(ks.min_ratio())
        if rho < 2:
            raise GrowthError("ratio floor below 2; tail not certifiable")
        pre = ks.prefix(_PREFIX + 1)
        geo = rho / (rho - 1)
        first = sum((mpq(1, k) for k in pre[1:_PREFIX]), mpq(0)) + mpq(1, pre[_PREFIX]) * geo
        worst = mpq(0)
        for j in range(1, _PREFIX):
            row = sum((mpq(pre[j - 1], k) for k in pre[j:_PREFIX]), mpq(0))
            row += mpq(pre[j - 1], pre[_PREFIX]) * geo
            worst = max(worst, row)
        # rows beyond the prefix: sum_t k_j/k_{j+t} <= 1/(rho - 1)
        worst = max(worst, 1 / (rho - 1))
        return first, worst
    ks = tuple(int(k) for k in ks)
    _validate(ks)
    first = sum((mpq(1, k) for k in ks[1:]), mpq(0))
    worst = mpq(0)
    for j in range(len(ks)):
        row = sum((mpq(ks[j], k) for k in ks[j + 1:]), mpq(0))
        worst = max(worst, row)
    return first, worst


def check_growth(ks, budget=DEFAULT_BUDGET) -> bool:
    """Both summability conditions hold strictly below ``budget``.

    ``ks`` is either a finite sequence (the whole schedule; sums are exact)
    or a :class:`GrowthSchedule` (prefix exact, tail bounded geometrically).
    """
    first, worst = _growth_sums(ks)
    return first < budget and worst < budget


def limit_diagnostics(ks) -> tuple:
    """Certified upper bound for the displaced-measure series and its finiteness.

    Bounds sum_{n >= 2} (1/k_n) * (1 + sum_{2 <= j < n} k_j/k_n).
    """
    if isinstance(ks, GrowthSchedule):
        rho = mpq(ks.min_ratio())
        if rho < 2:
            raise GrowthError("ratio floor below 2; tail not certifiable")
        pre = ks.prefix(_PREFIX + 1)
        total = _displaced(pre[:_PREFIX])
        geo = rho / (rho - 1)
        total += mpq(1, pre[_PREFIX]) * geo * geo
        return total, True
    ks = tuple(int(k) for k in ks)
    _validate(ks)
    return _displaced(ks), True


def _displaced(ks: tuple) -> mpq:
    total = mpq(0)
    for n in range(1, len(ks)):
        back = sum((mpq(ks[j], ks[n]) for j in range(1, n)), mpq(0))
        total += mpq(1, ks[n]) * (1 + back)
    return total


def extract_column(sys, k: int, eps=DEFAULT_EPS, piece_cap: int | None = None) -> Column:
    """Height-k column of total measure exactly 1/k, cut from a Rokhlin tower.

    The Rokhlin tower has height k + 1; its base is cut left to right down to
    measure 1/k**2.
    """
    eps = mpq(eps)
    if k < 2:
        raise ValueError("k must be at least 2")
    if (1 - eps) / (k + 1) < mpq(1, k * k):
        raise ValueError(f"eps = {eps} leaves too little mass for a ({k}, 1/{k})-column")
    r = rokhlin(sys, k + 1, eps, piece_cap)
    target = QuadNumber(mpq(1, k * k))
    if r.column.base.measure() < target:
        raise AuditError("Rokhlin base is smaller than 1/k^2")
    col = Column.over(sys, r.column.base.prefix(target), k, index=k)
    if col.measure() != mpq(1, k):
        raise AuditError("extracted column does not have measure 1/k")
    return col


@dataclass
class StageState:
    stage: int
    X: object
    columns: dict  # position j -> current column T_(j, .)
    ks: tuple
    eps: mpq = DEFAULT_EPS
    budget: mpq = DEFAULT_BUDGET
    history: dict = field(default_factory=dict)  # j -> [T_(j,1), T_(j,2), ...]
    log: list = field(default_factory=list)

    @classmethod
    def initial(cls, sys, ks, eps=DEFAULT_EPS, budget=DEFAULT_BUDGET) -> StageState:
        return cls(1, sys.full_space(), {}, tuple(ks), mpq(eps), mpq(budget))


def _grains(sys, col: Column, new_support):
    """Base points of ``col`` whose grain meets ``new_support``.

    Also returns the measures of the entry sets under both readings: the
    first-entrance reading (no lower point of the grain in the new column)
    and the literal union reading (some lower point outside it).
    """
    seen = sys.empty_set()
    lower_all = None
    first_entry = QuadNumber(0)
    some_outside = QuadNumber(0)
    for i, level in enumerate(col.levels):
        hit = level & new_support
        g = sys.image(hit, -i) if not hit.is_empty() else sys.empty_set()
        first_entry = first_entry + (g - seen).measure()
        if i == 0:
            some_outside = some_outside + g.measure()
        else:
            some_outside = some_outside + (g - lower_all).measure()
        lower_all = g if lower_all is None else lower_all & g
        seen = seen | g
    return seen, first_entry, some_outside


def stage_refine(state: StageState, sys, piece_cap: int | None = None) -> StageState:
    n = state.stage + 1
    if n > len(state.ks):
        raise ValueError("growth sequence exhausted")
    kn = state.ks[n - 1]
    new = extract_column(sys, kn, state.eps, piece_cap)
    new.index = n
    new_support = new.support()
    X_tilde = state.X - new_support
    returned = sys.empty_set()
    columns, history = {}, {j: list(v) for j, v in state.history.items()}
    record = {"stage": n, "k": kn, "columns": {}}
    for j, col in sorted(state.columns.items()):
        G, first_entry, some_outside = _grains(sys, col, new_support)
        saturated = Column.over(sys, G, col.height).support() if not G.is_empty() else sys.empty_set()
        kept = Column.over(sys, col.base - G, col.height, index=j)
        removed = saturated.measure()
        bound = QuadNumber(mpq(col.height, kn))
        if removed > bound:
            raise AuditError(f"column {j} lost {removed.pretty()} > k_j/k_n")
        if removed != col.measure() - kept.measure():
            raise AuditError(f"column {j}: removed grains do not account for the lost measure")
        if not column_check(sys, kept):
            raise AuditError(f"column {j} is no longer a column after surgery")
        if not kept.support().issubset(col.support()):
            raise AuditError(f"column {j} is not nested")
        returned = returned | (saturated - new_support)
        columns[j] = kept
        history[j].append(kept)
        record["columns"][j] = {
            "removed": removed,
            "bound": bound,
            "entry_first_entrance": first_entry,
            "entry_literal_union": some_outside,
        }
    if not returned.isdisjoint(new_support):
        raise AuditError("returned leftovers meet the new column")
    columns[n] = new
    history[n] = [new]
    X_next = X_tilde | returned
    out = StageState(n, X_next, columns, state.ks, state.eps, state.budget,
                     history, state.log + [record])
    if not partition_ok(sys, out):
        raise AuditError(f"stage {n} does not partition the space")
    return out


def partition_ok(sys, state: StageState) -> bool:
    pieces = [state.X] + [c.support() for c in state.columns.values()]
    union = sys.empty_set()
    total = QuadNumber(0)
    for p in pieces:
        union = union | p
        total = total + p.measure()
    return union == sys.full_space() and total == 1


def nesting_ok(sys, state: StageState) -> bool:
    for seq in state.history.values():
        for outer, inner in zip(seq, seq[1:]):
            if not inner.support().issubset(outer.support()):
                return False
    return True


def diagnostics(sys, state: StageState) -> dict:
    n = state.stage
    ks = state.ks
    c = 1 - state.budget
    heights = [1] + [state.columns[j].height for j in sorted(state.columns)]
    col_measures = {j: state.columns[j].measure() for j in sorted(state.columns)}
    p3_columns = all(m >= c / ks[j - 1] for j, m in col_measures.items())
    x_floor = 1 - sum((mpq(1, k) for k in ks[1:n]), mpq(0))
    mX = state.X.measure()
    fat = QuadNumber(0)
    for j, m in col_measures.items():
        fat = fat + ks[j - 1] * m
    measured_c = min((ks[j - 1] * m for j, m in col_measures.items()), default=None)
    removal_ok = all(v["removed"] <= v["bound"] for rec in state.log
                     for v in rec["columns"].values())
    return {
        "stage": n,
        "P1_partition": partition_ok(sys, state),
        "P2_heights": heights == list(ks[:n]),
        "heights": heights,
        "P3_columns": p3_columns,
        "P3_first_column": mX >= x_floor,
        "c": c,
        "measured_c": measured_c,
        "first_column_measure": mX,
        "first_column_floor": QuadNumber(x_floor),
        "column_measures": col_measures,
        "nesting": nesting_ok(sys, state),
        "removal_bounds": removal_ok,
        "fatness_partial": fat,
        "fatness_floor": QuadNumber(c * (n - 1)),
        "fatness_ok": fat >= c * (n - 1),
        "surgery": state.log,
    }


def run_intrinsic(sys, ks=DEFAULT_KS, stages: int | None = None, eps=DEFAULT_EPS,
                  budget=DEFAULT_BUDGET, piece_cap: int | None = None):
    """Run the construction for ``stages`` stages; return (tower, diagnostics)."""
    ks = tuple(int(k) for k in ks)
    stages = len(ks) if stages is None else stages
    if not check_growth(ks, budget):
        raise GrowthError(f"growth sequence {ks} violates the {budget} budget")
    if not 1 <= stages <= len(ks):
        raise ValueError("stages must lie between 1 and len(ks)")
    state = StageState.initial(sys, ks, eps, budget)
    per_stage = [diagnostics(sys, state)]
    for _ in range(stages - 1):
        state = stage_refine(state, sys, piece_cap)
        per_stage.append(diagnostics(sys, state))
    first = Column(state.X, 1, 1, (state.X,))
    tower = Tower(sys, [first] + [state.columns[j] for j in sorted(state.columns)],
                  meta={"construction": "intrinsic", "ks": ks})
    bound, finite = limit_diagnostics(ks)
    diag = dict(per_stage[-1])
    diag["stages"] = per_stage
    diag["borel_cantelli_bound"] = bound
    diag["borel_cantelli_finite"] = finite
    diag["growth_ok"] = True
    return tower, diag
