import pytest
from fractions import Fraction

from hypothesis import settings, strategies as st

from ergodic_towers.field import QuadNumber, golden
from ergodic_towers.sets import normalize

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

_CRITERIA = {}


@pytest.fixture
def criterion(request):
    """Record a numbered acceptance criterion; the summary prints one line each."""

    def record(number: int, ok: bool, detail: str = "") -> bool:
        _CRITERIA[number] = (ok, detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


fractions = st.fractions(min_value=-4, max_value=4, max_denominator=40)
units = st.fractions(min_value=0, max_value=1, max_denominator=60)


@st.composite
def quads(draw, nonzero=False):
    a = draw(fractions)
    b = draw(fractions)
    x = QuadNumber(a, b)
    if nonzero and not x:
        x = QuadNumber(1)
    return x


@st.composite
def interval_sets(draw, max_parts=4):
    """Random finite unions with endpoints mixing rationals and the golden angle."""
    alpha = golden()
    pts = draw(st.lists(st.one_of(units.map(QuadNumber),
                                  st.integers(-3, 3).map(lambda k: alpha * k)),
                        min_size=0, max_size=2 * max_parts))
    inside = sorted({p - (p.__floor__()) for p in pts} | set())
    pairs = [(inside[i], inside[i + 1]) for i in range(0, len(inside) - 1, 2)]
    return normalize(pairs)


@st.composite
def unit_points(draw):
    return QuadNumber(draw(st.fractions(min_value=0, max_value=Fraction(63, 64),
                                        max_denominator=500)))
