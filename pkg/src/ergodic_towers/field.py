"""Exact arithmetic in a real quadratic field Q(sqrt(D)).

Every coordinate, interval endpoint and measure in the package is a
:class:`QuadNumber` ``a + b*sqrt(D)`` with rational ``a`` and ``b``.
Comparison is decided by sign analysis on rationals, so nothing is ever
rounded.  The field tag ``D`` is process-wide (default 5, so that the golden
rotation angle lives in the field) and mixing tags is an error.
"""

from __future__ import annotations

import enum
import re
from decimal import Decimal, localcontext
from fractions import Fraction
from numbers import Rational as _RationalABC

import gmpy2
from gmpy2 import mpq

__all__ = [
    "Cmp",
    "FieldMismatch",
    "QuadNumber",
    "arith",
    "cmp",
    "floor_mod1",
    "get_field",
    "golden",
    "parse_quad",
    "parse_rational",
    "set_field",
    "to_decimal",
]

_FIELD_D = 5
_MPQ = type(mpq(0))


class FieldMismatch(ValueError):
    """Raised when two numbers from different quadratic fields meet."""


class Cmp(enum.IntEnum):
    LT = -1
    EQ = 0
    GT = 1


def _is_squarefree(n: int) -> bool:
    if n < 2:
        return n == 1
    f = 2
    while f * f <= n:
        if n % (f * f) == 0:
            return False
        f += 1
    return True


def set_field(D: int) -> None:
    """Fix the field tag for the rest of the process (tests may switch it)."""
    global _FIELD_D
    if D < 2 or not _is_squarefree(D):
        raise ValueError(f"D must be a square-free integer >= 2, got {D}")
    _FIELD_D = int(D)


def get_field() -> int:
    return _FIELD_D


def _to_mpq(v) -> mpq:
    if isinstance(v, int):
        return mpq(v)
    if type(v) is _MPQ:
        return v
    if isinstance(v, (Fraction, _RationalABC)):
        return mpq(v.numerator, v.denominator)
    raise TypeError(f"not a rational: {v!r}")


def _sign(a: mpq, b: mpq, D: int) -> int:
    """Sign of a + b*sqrt(D)."""
    if not b:
        return (a > 0) - (a < 0)
    if not a:
        return 1 if b > 0 else -1
    if a > 0 and b > 0:
        return 1
    if a < 0 and b < 0:
        return -1
    t = a * a - b * b * D
    s = (t > 0) - (t < 0)
    return s if a > 0 else -s


class QuadNumber:
    """Immutable element ``a + b*sqrt(D)`` of Q(sqrt(D)).

    ``a`` and ``b`` are :class:`gmpy2.mpq` rationals, always in lowest terms,
    so equal values have equal representations.  Plain ints and fractions
    mix freely (they embed with ``b = 0``).
    """

    __slots__ = ("a", "b", "D")

    def __init__(self, a=0, b=0, D: int | None = None):
        self.a = _to_mpq(a)
        self.b = _to_mpq(b)
        self.D = _FIELD_D if D is None else D

    @classmethod
    def _make(cls, a, b, D):
        x = object.__new__(cls)
        x.a = a
        x.b = b
        x.D = D
        return x

    def _coerce(self, other) -> QuadNumber:
        if isinstance(other, QuadNumber):
            if other.D != self.D:
                raise FieldMismatch(f"field tags differ: sqrt({self.D}) vs sqrt({other.D})")
            return other
        try:
            return QuadNumber._make(_to_mpq(other), mpq(0), self.D)
        except TypeError:
            return NotImplemented

    # arithmetic
    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadNumber._make(self.a + o.a, self.b + o.b, self.D)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadNumber._make(self.a - o.a, self.b - o.b, self.D)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadNumber._make(o.a - self.a, o.b - self.b, self.D)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        a, b, c, d = self.a, self.b, o.a, o.b
        if not b and not d:
            return QuadNumber._make(a * c, b, self.D)
        return QuadNumber._make(a * c + b * d * self.D, a * d + b * c, self.D)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __neg__(self):
        return QuadNumber._make(-self.a, -self.b, self.D)

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def inverse(self) -> QuadNumber:
        if not self.a and not self.b:
            raise ZeroDivisionError("division by zero in Q(sqrt(D))")
        norm = self.a * self.a - self.b * self.b * self.D
        return QuadNumber._make(self.a / norm, -self.b / norm, self.D)

    def sign(self) -> int:
        return _sign(self.a, self.b, self.D)

    def is_rational(self) -> bool:
        return not self.b

    # ordering
    def _diff_sign(self, other) -> int:
        o = self._coerce(other)
        if o is NotImplemented:
            raise TypeError(f"cannot compare QuadNumber with {type(other).__name__}")
        return _sign(self.a - o.a, self.b - o.b, self.D)

    def __eq__(self, other):
        if isinstance(other, QuadNumber):
            return self.D == other.D and self.a == other.a and self.b == other.b
        try:
            return not self.b and self.a == _to_mpq(other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if not self.b:
            return hash(self.a)
        return hash((self.a, self.b, self.D))

    def __lt__(self, other):
        return self._diff_sign(other) < 0

    def __le__(self, other):
        return self._diff_sign(other) <= 0

    def __gt__(self, other):
        return self._diff_sign(other) > 0

    def __ge__(self, other):
        return self._diff_sign(other) >= 0

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __floor__(self):
        return floor_mod1(self)[0]

    def __float__(self):
        return float(to_decimal(self, 20))

    def __repr__(self):
        return f"QuadNumber({self})"

    def __str__(self):
        """Serialized form ``a_num/a_den+b_num/b_den*sqrt(D)``."""
        a, b = self.a, self.b
        return (f"{a.numerator}/{a.denominator}"
                f"+{b.numerator}/{b.denominator}*sqrt({self.D})")

    def pretty(self) -> str:
        """Short human form: ``3/4``, ``-1/2+1/2*sqrt(5)``."""
        a, b = self.a, self.b
        if not b:
            return str(Fraction(int(a.numerator), int(a.denominator)))
        head = "" if not a else str(Fraction(int(a.numerator), int(a.denominator)))
        coef = Fraction(int(b.numerator), int(b.denominator))
        sep = "-" if coef < 0 else ("+" if head else "")
        return f"{head}{sep}{abs(coef)}*sqrt({self.D})"


def arith(op: str, x: QuadNumber, y: QuadNumber | None = None) -> QuadNumber:
    """Named-operation front end: ``op`` in add, sub, mul, div, neg."""
    if op == "neg":
        return -x
    if y is None:
        raise TypeError(f"{op} needs two operands")
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "div":
        return x / y
    raise ValueError(f"unknown operation {op!r}")


def cmp(x: QuadNumber, y: QuadNumber) -> Cmp:
    if not isinstance(x, QuadNumber):
        x = QuadNumber(x, D=y.D if isinstance(y, QuadNumber) else None)
    return Cmp(x._diff_sign(y))


def floor_mod1(x: QuadNumber) -> tuple[int, QuadNumber]:
    """Return ``(floor(x), x - floor(x))`` exactly."""
    a, b, D = x.a, x.b, x.D
    if not b:
        f = int(gmpy2.f_div(a.numerator, a.denominator))
        return f, QuadNumber._make(a - f, b, D)
    # |b|*sqrt(D) = sqrt(t) lies in [s/den, (s+1)/den) with s = isqrt(num*den)
    t = b * b * D
    s = gmpy2.isqrt(t.numerator * t.denominator)
    lower = mpq(s, t.denominator) if b > 0 else -mpq(s + 1, t.denominator)
    f = int(gmpy2.f_div((a + lower).numerator, (a + lower).denominator))
    while _sign(a - f - 1, b, D) >= 0:
        f += 1
    while _sign(a - f, b, D) < 0:
        f -= 1
    return f, QuadNumber._make(a - f, b, D)


def golden() -> QuadNumber:
    """The golden rotation angle (sqrt(5) - 1)/2; requires D = 5."""
    if _FIELD_D != 5:
        raise FieldMismatch("the golden angle lives in Q(sqrt(5))")
    return QuadNumber(mpq(-1, 2), mpq(1, 2))


def to_decimal(x: QuadNumber, digits: int = 12) -> str:
    """Render ``x`` with ``digits`` places after the decimal point."""
    with localcontext() as ctx:
        ctx.prec = digits + 40
        root = Decimal(x.D).sqrt()
        val = (Decimal(int(x.a.numerator)) / Decimal(int(x.a.denominator))
               + Decimal(int(x.b.numerator)) / Decimal(int(x.b.denominator)) * root)
        out = f"{val:.{digits}f}"
    if out.startswith("-") and not val.quantize(Decimal(1).scaleb(-digits)):
        out = out[1:]
    return out


_RAT = r"-?\d+(?:/\d+)?"
_QUAD_RE = re.compile(
    rf"^\s*(?P<a>{_RAT})?\s*(?:(?P<sgn>[+-])\s*(?P<b>{_RAT})?\s*\*?\s*sqrt\((?P<D>\d+)\))?\s*$"
)


def parse_rational(text: str) -> mpq:
    """Parse ``3``, ``-1/8`` or ``0.125`` exactly; raise ValueError otherwise."""
    try:
        f = Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed rational {text!r}") from exc
    return mpq(f.numerator, f.denominator)


def parse_quad(text: str) -> QuadNumber:
    """Parse the serialized grammar plus the alias ``golden``.

    Accepted: ``golden``, ``1-golden``, plain rationals, and
    ``a_num/a_den+b_num/b_den*sqrt(D)`` (``-`` between terms also allowed).
    """
    s = text.strip().lower()
    if s == "golden":
        return golden()
    if s == "1-golden":
        return 1 - golden()
    m = _QUAD_RE.match(s)
    if not m or (m.group("a") is None and m.group("D") is None):
        try:
            return QuadNumber(parse_rational(s))
        except ValueError:
            raise ValueError(f"malformed field element {text!r}") from None
    a = parse_rational(m.group("a")) if m.group("a") is not None else mpq(0)
    if m.group("D") is None:
        return QuadNumber(a)
    D = int(m.group("D"))
    if D != _FIELD_D:
        raise FieldMismatch(f"input lives in Q(sqrt({D})) but the field is Q(sqrt({_FIELD_D}))")
    b = parse_rational(m.group("b")) if m.group("b") is not None else mpq(1)
    if m.group("sgn") == "-":
        b = -b
    return QuadNumber(a, b)
