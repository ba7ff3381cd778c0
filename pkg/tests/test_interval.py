import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from capspec import interval as iv
from capspec.interval import Interval, IntervalError, Precision, Sign

SQRT2_40 = Fraction("1.4142135623730950488016887242096980785697")

decimals = st.decimals(
    allow_nan=False, allow_infinity=False, min_value=-10**12, max_value=10**12, places=18
)


def interval_from(lo, hi, prec=256):
    lo, hi = sorted((Fraction(lo), Fraction(hi)))
    return iv.from_rational(lo, hi, prec)


class TestConstruction:
    def test_from_decimal_contains_both_values(self):
        x = iv.from_decimal("154.191574494505", "154.191574494520")
        assert x.contains(Fraction("154.191574494505"))
        assert x.contains(Fraction("154.191574494520"))

    def test_exact_point_is_degenerate(self):
        x = iv.from_decimal("1", "1")
        assert x.lo == x.hi == 1

    def test_inexact_decimal_rounds_outward(self):
        x = iv.from_decimal("0.1", "0.1")
        tenth = Fraction(1, 10)
        assert x.lo < tenth < x.hi
        assert x.width() <= 2 ** -250  # couple of ulps at 256 bits

    def test_order_violation_rejected(self):
        with pytest.raises(IntervalError):
            iv.from_decimal("2", "1")

    @pytest.mark.parametrize("bad", ["", "1.2.3", "abc", "1/2", "0x10", "1e", "--3"])
    def test_malformed_decimal_rejected(self, bad):
        with pytest.raises(IntervalError):
            iv.from_decimal(bad, "1")

    def test_exponent_notation_accepted(self):
        x = iv.from_decimal("-1.5e-3", "2e2")
        assert x.contains(Fraction(-3, 2000)) and x.contains(200)

    def test_precision_floor(self):
        with pytest.raises(IntervalError):
            Precision(52)
        assert Precision().mantissa_bits == 256

    def test_nan_and_misordered_endpoints_rejected(self):
        import gmpy2

        with pytest.raises(IntervalError):
            Interval(gmpy2.mpfr("nan"), gmpy2.mpfr(1))
        with pytest.raises(IntervalError):
            Interval(gmpy2.mpfr(2), gmpy2.mpfr(1))


class TestArith:
    def test_add_example(self):
        x = interval_from("0.25", "0.5")
        y = interval_from("-1", "2")
        z = iv.arith("add", x, y)
        assert z.contains(Fraction("-0.75")) and z.contains(Fraction("2.5"))

    def test_mul_endpoint_extrema(self):
        z = iv.arith("mul", interval_from(-1, 2), interval_from(3, 4))
        assert z.lo == -4 and z.hi == 8

    def test_div_exact_dyadic(self):
        z = iv.arith("div", iv.point(1), iv.point(2))
        assert z.lo == z.hi == Fraction(1, 2)

    def test_div_by_zero_interval(self):
        with pytest.raises(IntervalError):
            iv.div(iv.point(1), interval_from(-1, 1))

    def test_unknown_op(self):
        with pytest.raises(IntervalError):
            iv.arith("pow", iv.point(1), iv.point(1))

    def test_overflow_is_loud(self):
        x = iv.point(2, 53)
        with pytest.raises(IntervalError):
            for _ in range(80):  # repeated squaring escapes the exponent range
                x = iv.mul(x, x)

    def test_negation_preserves_precision(self):
        # regression: bare mpfr operators round through the 53-bit ambient
        # context; negation must stay exact at full precision
        x = iv.from_decimal("154.191574494505", "154.191574494505")
        y = -x
        assert (-y).lo == x.lo and (-y).hi == x.hi
        assert Fraction(iv.mpq_of(y.lo)) == -Fraction(iv.mpq_of(x.hi))
        assert x.mag() == x.hi

    def test_sqrt_oracle(self):
        s = iv.sqrt_iv(iv.point(2))
        # exact containment of the true sqrt(2): lo^2 <= 2 <= hi^2
        assert Fraction(iv.mpq_of(s.lo)) ** 2 <= 2 <= Fraction(iv.mpq_of(s.hi)) ** 2
        assert Fraction(iv.mpq_of(s.width())) < Fraction(1, 10**60)
        # agreement with the frozen 40-digit reference at its own accuracy
        assert abs(Fraction(iv.mpq_of(s.lo)) - SQRT2_40) < Fraction(1, 10**39)

    def test_sqrt_fixed_endpoints(self):
        s = iv.sqrt_iv(interval_from(0, 1))
        assert s.lo == 0 and s.hi == 1

    def test_sqrt_perfect_square(self):
        s = iv.sqrt_iv(iv.point(4))
        assert s.lo == s.hi == 2

    def test_sqrt_negative_rejected(self):
        with pytest.raises(IntervalError):
            iv.sqrt_iv(interval_from(-1, 1))


class TestSignBisect:
    @pytest.mark.parametrize(
        "lo,hi,expected",
        [("0.1", "3", Sign.POSITIVE), ("-2", "-1", Sign.NEGATIVE), ("-1", "1", Sign.CONTAINS_ZERO),
         ("0", "1", Sign.CONTAINS_ZERO), ("-1", "0", Sign.CONTAINS_ZERO)],
    )
    def test_sign_of(self, lo, hi, expected):
        assert iv.sign_of(iv.from_decimal(lo, hi)) is expected

    def test_bisect_halves(self):
        left, right = iv.bisect(iv.from_decimal("0", "1"))
        assert left.lo == 0 and left.hi == right.lo == Fraction(1, 2) and right.hi == 1
        left, right = iv.bisect(iv.from_decimal("2", "4"))
        assert left.hi == right.lo == 3

    def test_bisect_covers_parent(self):
        x = iv.from_decimal("154.191574494505", "154.191574494520")
        left, right = iv.bisect(x)
        assert left.lo == x.lo and right.hi == x.hi and left.hi == right.lo

    def test_bisect_degenerate_rejected(self):
        with pytest.raises(IntervalError):
            iv.bisect(iv.point(1))


class TestRendering:
    def test_outward_decimal_pair(self):
        x = iv.from_decimal("0.1", "0.1")
        lo, hi = x.to_decimal_pair(25)
        assert Fraction(lo) <= Fraction(1, 10) <= Fraction(hi)

    def test_decimal_roundtrip_containment(self):
        x = iv.from_decimal("-3.25e-7", "1.75")
        lo, hi = x.to_decimal_pair(25)
        y = iv.from_decimal(lo, hi)
        assert y.encloses(x)

    @given(st.fractions(min_value=-10**9, max_value=10**9), st.integers(3, 30))
    def test_decimal_str_direction(self, f, sig):
        lo = Fraction(iv.decimal_str(f, sig, "d"))
        hi = Fraction(iv.decimal_str(f, sig, "u"))
        assert lo <= f <= hi


# -- property tests ------------------------------------------------------


@given(
    st.sampled_from(["add", "sub", "mul", "div"]),
    st.fractions(min_value=-1000, max_value=1000),
    st.fractions(min_value=-1000, max_value=1000),
    st.fractions(min_value=-1000, max_value=1000),
    st.fractions(min_value=-1000, max_value=1000),
    st.integers(0, 10),
    st.integers(0, 10),
)
def test_containment_property(op, a, b, c, d, ta, tb):
    x = interval_from(a, b)
    y = interval_from(c, d)
    if op == "div" and y.lo <= 0 <= y.hi:
        return
    z = iv.arith(op, x, y)
    # sample points as convex combinations of the endpoints
    a, b = sorted((Fraction(a), Fraction(b)))
    c, d = sorted((Fraction(c), Fraction(d)))
    pa = a + (b - a) * Fraction(ta, 10)
    pb = c + (d - c) * Fraction(tb, 10)
    exact = {
        "add": pa + pb,
        "sub": pa - pb,
        "mul": pa * pb,
        "div": pa / pb if pb != 0 else None,
    }[op]
    if exact is None:
        return
    assert z.contains(exact)


@given(
    st.sampled_from(["add", "sub", "mul"]),
    st.fractions(min_value=-50, max_value=50),
    st.fractions(min_value=-50, max_value=50),
    st.fractions(min_value=0, max_value=5),
    st.fractions(min_value=-50, max_value=50),
    st.fractions(min_value=-50, max_value=50),
    st.fractions(min_value=0, max_value=5),
)
def test_inclusion_isotonicity(op, a, b, grow_x, c, d, grow_y):
    a, b = sorted((a, b))
    c, d = sorted((c, d))
    x = interval_from(a, b)
    xw = interval_from(a - grow_x, b + grow_x)
    y = interval_from(c, d)
    yw = interval_from(c - grow_y, d + grow_y)
    inner = iv.arith(op, x, y)
    outer = iv.arith(op, xw, yw)
    assert outer.encloses(inner)


@given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6),
       st.sampled_from(["add", "sub", "mul"]))
def test_degenerate_exactness(m, n, op):
    z = iv.arith(op, iv.point(m), iv.point(n))
    assert z.lo == z.hi
    expected = {"add": m + n, "sub": m - n, "mul": m * n}[op]
    assert z.contains(expected)


@pytest.mark.parametrize("dec", ["0.1", "3.14159", "-7.25e-3", "154.191574494505"])
def test_precision_monotonicity(dec):
    widths = [
        Fraction(iv.mpq_of(iv.from_decimal(dec, dec, bits).width()))
        for bits in (53, 128, 256, 512)
    ]
    assert all(w2 <= w1 for w1, w2 in zip(widths, widths[1:]))


def test_interval_is_immutable():
    x = iv.point(1)
    with pytest.raises(AttributeError):
        x.lo = 2


def test_hull_and_pow():
    h = iv.hull(interval_from(-1, 0), interval_from(2, 3))
    assert h.lo == -1 and h.hi == 3
    p = iv.pow_int(interval_from(-2, 3), 2)
    assert p.lo == 0 and p.hi == 9
    p = iv.pow_int(interval_from(-2, -1), 3)
    assert p.lo == -8 and p.hi == -1
