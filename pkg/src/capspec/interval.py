"""Outward-rounded interval arithmetic on MPFR endpoints.

Every operation returns an interval that rigorously contains the exact
real result for all points of its operands.  Rounding is directed per
endpoint through explicit gmpy2 context objects, so no thread-local
rounding state is ever touched and all operations are pure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from numbers import Rational

import gmpy2
from gmpy2 import mpfr, mpq

MIN_PRECISION = 53
DEFAULT_PRECISION = 256

_DECIMAL_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class IntervalError(ValueError):
    """Violation of an interval precondition (ordering, domain, overflow)."""


@dataclass(frozen=True)
class Precision:
    """Working mantissa precision, in bits, of interval endpoints."""

    mantissa_bits: int = DEFAULT_PRECISION

    def __post_init__(self):
        if self.mantissa_bits < MIN_PRECISION:
            raise IntervalError(
                f"precision must be at least {MIN_PRECISION} bits, got {self.mantissa_bits}"
            )


class Sign(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    CONTAINS_ZERO = "contains_zero"


# Directed-rounding contexts, cached per precision.  Context objects are
# used through their method interface only; the global gmpy2 context is
# never modified.
_CTX: dict[tuple[int, str], gmpy2.context] = {}

_ROUND = {
    "d": gmpy2.RoundDown,
    "u": gmpy2.RoundUp,
    "n": gmpy2.RoundToNearest,
}


def _ctx(bits: int, mode: str) -> gmpy2.context:
    key = (bits, mode)
    ctx = _CTX.get(key)
    if ctx is None:
        ctx = gmpy2.context(precision=bits, round=_ROUND[mode])
        _CTX[key] = ctx
    return ctx


def _check_finite(x) -> None:
    if not gmpy2.is_finite(x):
        raise IntervalError("endpoint overflowed to a non-finite value")


# Bare mpfr operators (-x, abs(x), x+y, ...) round through the ambient
# thread context at its default 53-bit precision, silently truncating
# extended-precision endpoints.  Negation and absolute value are exact at
# the operand's own precision, so route them through a wide-enough context.
def _neg(x: mpfr) -> mpfr:
    return _ctx(max(x.precision, MIN_PRECISION), "n").minus(x)


def _abs(x: mpfr) -> mpfr:
    return _ctx(max(x.precision, MIN_PRECISION), "n").abs(x)


_ZERO = mpfr(0)


def _round_rational(value, bits: int, mode: str) -> mpfr:
    """Round an exact rational to an mpfr endpoint in the given direction."""
    out = _ctx(bits, mode).add(_ZERO, value)
    _check_finite(out)
    return out


class Interval:
    """A closed interval [lo, hi] with finite mpfr endpoints."""

    __slots__ = ("lo", "hi", "prec")

    def __init__(self, lo: mpfr, hi: mpfr, prec: int = DEFAULT_PRECISION):
        if gmpy2.is_nan(lo) or gmpy2.is_nan(hi):
            raise IntervalError("NaN endpoint")
        _check_finite(lo)
        _check_finite(hi)
        if lo > hi:
            raise IntervalError(f"lower endpoint {lo} exceeds upper endpoint {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "prec", prec)

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    # -- queries ---------------------------------------------------------

    def width(self) -> mpfr:
        """Upper bound on hi - lo."""
        return _ctx(self.prec, "u").sub(self.hi, self.lo)

    def midpoint(self) -> mpfr:
        mid = _ctx(self.prec, "n").add(self.lo, self.hi)
        return _ctx(self.prec, "n").div(mid, 2)

    def mag(self) -> mpfr:
        """max(|lo|, |hi|), exact."""
        return max(_abs(self.lo), _abs(self.hi))

    def is_degenerate(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        """Containment of an exact scalar (int, Fraction, mpq, mpfr)."""
        if isinstance(x, float):
            x = mpfr(x)
        if isinstance(x, (Fraction, Rational)) and not isinstance(x, int):
            x = mpq(x.numerator, x.denominator)
        return self.lo <= x <= self.hi

    def encloses(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Interval)
            and self.lo == other.lo
            and self.hi == other.hi
        )

    def __hash__(self):
        return hash((str(self.lo), str(self.hi)))

    def __repr__(self) -> str:
        return f"Interval({str(self.lo)!r}, {str(self.hi)!r}, prec={self.prec})"

    def __str__(self) -> str:
        lo, hi = self.to_decimal_pair(20)
        return f"[{lo}, {hi}]"

    # -- arithmetic (operator sugar over the kernel functions) -----------

    def _coerce(self, other) -> "Interval | None":
        if isinstance(other, Interval):
            return other
        if isinstance(other, int):
            return from_rational(other, other, self.prec)
        if isinstance(other, (Fraction, type(mpq(1)))):
            return from_rational(other, other, self.prec)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else add(self, o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else sub(self, o)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else sub(o, self)

    def __mul__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else div(self, o)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else div(o, self)

    def __neg__(self):
        return Interval(_neg(self.hi), _neg(self.lo), self.prec)

    # -- rendering --------------------------------------------------------

    def to_decimal_pair(self, sig_digits: int = 25) -> tuple[str, str]:
        """Decimal endpoint strings, rounded outward at sig_digits digits."""
        return (
            decimal_str(Fraction(mpq(self.lo)), sig_digits, "d"),
            decimal_str(Fraction(mpq(self.hi)), sig_digits, "u"),
        )

    def as_floats(self) -> tuple[float, float]:
        """Nearest-double endpoints; for display and plotting only."""
        return float(self.lo), float(self.hi)


# -- construction ---------------------------------------------------------


def from_decimal(lo_str: str, hi_str: str, prec: Precision | int = DEFAULT_PRECISION) -> Interval:
    """Interval from two decimal strings, rounded outward.

    Accepts an optional sign, digits, optional fraction and optional
    exponent.  The result contains [value(lo_str), value(hi_str)].
    """
    bits = prec.mantissa_bits if isinstance(prec, Precision) else prec
    vals = []
    for s in (lo_str, hi_str):
        s = s.strip()
        if not _DECIMAL_RE.match(s):
            raise IntervalError(f"malformed decimal string: {s!r}")
        vals.append(Fraction(s))
    if vals[0] > vals[1]:
        raise IntervalError(f"decimal bounds out of order: {lo_str} > {hi_str}")
    return from_rational(vals[0], vals[1], bits)


def from_rational(lo, hi, prec: int = DEFAULT_PRECISION) -> Interval:
    """Interval from exact rationals (int, Fraction, mpq), rounded outward."""
    lo_q = mpq(lo.numerator, lo.denominator) if isinstance(lo, Fraction) else mpq(lo)
    hi_q = mpq(hi.numerator, hi.denominator) if isinstance(hi, Fraction) else mpq(hi)
    if lo_q > hi_q:
        raise IntervalError("lower bound exceeds upper bound")
    return Interval(
        _round_rational(lo_q, prec, "d"),
        _round_rational(hi_q, prec, "u"),
        prec,
    )


def point(value, prec: int = DEFAULT_PRECISION) -> Interval:
    """Degenerate (or 1-ulp) interval around an exact value or mpfr."""
    if isinstance(value, type(mpfr(0))):
        return Interval(value, value, prec)
    if isinstance(value, str):
        return from_decimal(value, value, prec)
    return from_rational(value, value, prec)


# -- kernel operations ----------------------------------------------------


def add(x: Interval, y: Interval) -> Interval:
    p = max(x.prec, y.prec)
    lo = _ctx(p, "d").add(x.lo, y.lo)
    hi = _ctx(p, "u").add(x.hi, y.hi)
    return Interval(lo, hi, p)


def sub(x: Interval, y: Interval) -> Interval:
    p = max(x.prec, y.prec)
    lo = _ctx(p, "d").sub(x.lo, y.hi)
    hi = _ctx(p, "u").sub(x.hi, y.lo)
    return Interval(lo, hi, p)


def mul(x: Interval, y: Interval) -> Interval:
    p = max(x.prec, y.prec)
    d, u = _ctx(p, "d"), _ctx(p, "u")
    xl, xh, yl, yh = x.lo, x.hi, y.lo, y.hi
    if xl >= 0:
        if yl >= 0:
            return Interval(d.mul(xl, yl), u.mul(xh, yh), p)
        if yh <= 0:
            return Interval(d.mul(xh, yl), u.mul(xl, yh), p)
        return Interval(d.mul(xh, yl), u.mul(xh, yh), p)
    if xh <= 0:
        if yl >= 0:
            return Interval(d.mul(xl, yh), u.mul(xh, yl), p)
        if yh <= 0:
            return Interval(d.mul(xh, yh), u.mul(xl, yl), p)
        return Interval(d.mul(xl, yh), u.mul(xl, yl), p)
    if yl >= 0:
        return Interval(d.mul(xl, yh), u.mul(xh, yh), p)
    if yh <= 0:
        return Interval(d.mul(xh, yl), u.mul(xl, yl), p)
    # both straddle zero
    lo = min(d.mul(xl, yh), d.mul(xh, yl))
    hi = max(u.mul(xl, yl), u.mul(xh, yh))
    return Interval(lo, hi, p)


def div(x: Interval, y: Interval) -> Interval:
    p = max(x.prec, y.prec)
    if y.lo <= 0 <= y.hi:
        raise IntervalError("division by an interval containing zero")
    d, u = _ctx(p, "d"), _ctx(p, "u")
    quotients_d = (d.div(x.lo, y.lo), d.div(x.lo, y.hi), d.div(x.hi, y.lo), d.div(x.hi, y.hi))
    quotients_u = (u.div(x.lo, y.lo), u.div(x.lo, y.hi), u.div(x.hi, y.lo), u.div(x.hi, y.hi))
    return Interval(min(quotients_d), max(quotients_u), p)


_ARITH = {"add": add, "sub": sub, "mul": mul, "div": div}


def arith(op: str, x: Interval, y: Interval) -> Interval:
    """Dispatching entry point for the four kernel operations."""
    try:
        fn = _ARITH[op]
    except KeyError:
        raise IntervalError(f"unknown operation {op!r}") from None
    return fn(x, y)


def sqrt_iv(x: Interval) -> Interval:
    if x.lo < 0:
        raise IntervalError("sqrt of an interval with negative lower endpoint")
    p = x.prec
    return Interval(_ctx(p, "d").sqrt(x.lo), _ctx(p, "u").sqrt(x.hi), p)


def sign_of(x: Interval) -> Sign:
    if x.lo > 0:
        return Sign.POSITIVE
    if x.hi < 0:
        return Sign.NEGATIVE
    return Sign.CONTAINS_ZERO


def bisect(x: Interval) -> tuple[Interval, Interval]:
    """Split at a representable midpoint; the halves cover the input."""
    if x.lo == x.hi:
        raise IntervalError("cannot bisect a degenerate interval")
    m = x.midpoint()
    if not (x.lo < m < x.hi):
        raise IntervalError("interval too thin to bisect at this precision")
    return Interval(x.lo, m, x.prec), Interval(m, x.hi, x.prec)


# -- derived helpers ------------------------------------------------------


def mul_int(x: Interval, n: int) -> Interval:
    p = x.prec
    if n >= 0:
        return Interval(_ctx(p, "d").mul(x.lo, n), _ctx(p, "u").mul(x.hi, n), p)
    return Interval(_ctx(p, "d").mul(x.hi, n), _ctx(p, "u").mul(x.lo, n), p)


def div_int(x: Interval, n: int) -> Interval:
    if n == 0:
        raise IntervalError("division by zero")
    p = x.prec
    if n > 0:
        return Interval(_ctx(p, "d").div(x.lo, n), _ctx(p, "u").div(x.hi, n), p)
    return Interval(_ctx(p, "d").div(x.hi, n), _ctx(p, "u").div(x.lo, n), p)


def pow_int(x: Interval, n: int) -> Interval:
    """x**n for integer n >= 0."""
    if n < 0:
        raise IntervalError("negative powers are not supported")
    p = x.prec
    if n == 0:
        one = mpfr(1)
        return Interval(one, one, p)
    d, u = _ctx(p, "d"), _ctx(p, "u")

    def pw(ctx, base, k):
        acc = mpfr(1)
        b = base
        while k:
            if k & 1:
                acc = ctx.mul(acc, b)
            k >>= 1
            if k:
                b = ctx.mul(b, b)
        return acc

    if x.lo >= 0:
        return Interval(pw(d, x.lo, n), pw(u, x.hi, n), p)
    if x.hi <= 0:
        if n % 2 == 0:
            return Interval(pw(d, _abs(x.hi), n), pw(u, _abs(x.lo), n), p)
        return Interval(_neg(pw(u, _abs(x.lo), n)), _neg(pw(d, _abs(x.hi), n)), p)
    if n % 2 == 0:
        return Interval(mpfr(0), pw(u, x.mag(), n), p)
    return Interval(_neg(pw(u, _abs(x.lo), n)), pw(u, x.hi, n), p)


def hull(x: Interval, y: Interval) -> Interval:
    return Interval(min(x.lo, y.lo), max(x.hi, y.hi), max(x.prec, y.prec))


def symmetric(radius: mpfr, prec: int = DEFAULT_PRECISION) -> Interval:
    """[-radius, radius] for a nonnegative mpfr radius."""
    if radius < 0:
        raise IntervalError("negative radius")
    return Interval(_neg(radius), radius, prec)


# -- decimal rendering ----------------------------------------------------


def decimal_str(value: Fraction, sig_digits: int, direction: str) -> str:
    """Decimal string with sig_digits significant digits.

    direction 'd' rounds toward -inf, 'u' toward +inf, so rendering an
    interval's endpoints keeps containment.
    """
    if value == 0:
        return "0"
    neg = value < 0
    v = -value if neg else value
    # e such that 10^e <= v < 10^(e+1)
    num, den = v.numerator, v.denominator
    e = len(str(num)) - len(str(den))
    while 10**e > v:
        e -= 1
    while 10 ** (e + 1) <= v:
        e += 1
    scaled = v * Fraction(10) ** (sig_digits - 1 - e)
    # outward integer rounding of the scaled significand
    floor_toward_zero = scaled.numerator // scaled.denominator
    exact = floor_toward_zero * scaled.denominator == scaled.numerator
    outward_up = (direction == "u") != neg  # away from the true value on the outer side
    digits_int = floor_toward_zero if (exact or not outward_up) else floor_toward_zero + 1
    if len(str(digits_int)) > sig_digits:  # rounding overflowed, e.g. 999->1000
        digits_int //= 10
        e += 1
    ds = str(digits_int)
    point_exp = e  # value = 0.ds * 10^(e+1), i.e. d.s * 10^e
    if -4 <= point_exp <= sig_digits + 5:
        if point_exp >= 0:
            ip = ds[: point_exp + 1].ljust(point_exp + 1, "0")
            fp = ds[point_exp + 1 :].rstrip("0")
        else:
            ip = "0"
            fp = ("0" * (-point_exp - 1) + ds).rstrip("0")
        body = ip if not fp else f"{ip}.{fp}"
    else:
        mant = ds[0] if len(ds) == 1 else f"{ds[0]}.{ds[1:].rstrip('0')}".rstrip(".")
        body = f"{mant}e{point_exp:+d}"
    return f"-{body}" if neg else body


def mpfr_decimal(x: mpfr, sig_digits: int, direction: str) -> str:
    """Outward decimal rendering of a single mpfr value."""
    return decimal_str(Fraction(mpq(x)), sig_digits, direction)


def mpq_of(x: mpfr):
    """Exact rational value of an mpfr (dyadic, conversion is lossless)."""
    return mpq(x)
