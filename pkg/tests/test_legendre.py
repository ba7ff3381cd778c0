from fractions import Fraction

import gmpy2
import pytest

from capspec import interval as iv
from capspec import legendre as lg
from capspec.interval import Sign, sign_of
from capspec.legendre import (
    CoordMapResult,
    EvaluationError,
    LegendreEval,
    LegendreQuery,
    coord_maps,
    eig_slopes,
    eval_all,
    eval_box,
    tail_bounds,
    taylor_coeffs,
)

from conftest import A_BOX, LAM_BOX, NU_BOX, RHO_BOX

NEAREST = gmpy2.context(precision=256)


def F(x) -> Fraction:
    return Fraction(iv.mpq_of(x)) if not isinstance(x, (int, Fraction)) else Fraction(x)


def point_eval(ell, lam, rho, K=100):
    return eval_box(ell, iv.from_rational(lam, lam), iv.from_rational(rho, rho), K=K)


# exact radial profiles in the series normalization, as rational functions
def oracle(nu, ell, r: Fraction) -> Fraction:
    x = (1 - r * r) / (1 + r * r)  # cos(theta)
    s = 2 * r / (1 + r * r)  # sin(theta)
    table = {
        (1, 0): x,
        (1, 1): s / 2,
        (2, 0): (3 * x * x - 1) / 2,
        (2, 1): s * x / 2,
        (2, 2): s * s / 4,
        (3, 0): (5 * x**3 - 3 * x) / 2,
        (3, 1): s * (5 * x * x - 1) / 8,
        (3, 2): s * s * x / 4,
        (3, 3): s**3 / 8,
    }
    return table[(nu, ell)]


class TestCoefficients:
    def test_initial_values(self):
        cs = taylor_coeffs(0, iv.point(2), 3)
        assert [c.k for c in cs] == [1, 2, 3, 4]
        assert F(cs[0].p.lo) == -2 and F(cs[0].p.hi) == -2
        assert F(cs[1].p.lo) == 8
        assert F(cs[0].q.lo) == -1
        assert F(cs[1].q.lo) == 6

    def test_first_recurrence_step(self):
        # hand-applied recurrence at ell=0, lambda=2; the P coefficient also
        # matches the expansion of cos(theta) = 1 - 2 rho^2 + 2 rho^4 - ...
        cs = taylor_coeffs(0, iv.point(2), 3)
        assert F(cs[2].p.lo) == -18 and F(cs[2].p.hi) == -18
        assert F(cs[2].q.lo) == -16
        assert F(cs[2].p.lo) / 9 == -2

    def test_lambda_zero_kills_p(self):
        cs = taylor_coeffs(8, iv.point(0), 10)
        assert all(F(c.p.lo) == 0 and F(c.p.hi) == 0 for c in cs)
        assert F(cs[0].q.lo) == -1

    def test_ell_shift_in_initial_values(self):
        cs = taylor_coeffs(3, iv.point(8), 2)
        assert F(cs[0].p.lo) == -8
        assert F(cs[1].p.lo) == 16 + Fraction(64, 4)
        assert F(cs[1].q.lo) == 2 + Fraction(16, 4)


class TestTailBounds:
    def test_admissibility_accepted(self):
        # 2*155/(102*110) is approximately 0.0276, below (gamma-1)^2/gamma = 1/6
        lam = iv.from_decimal("150", "155")
        cs = taylor_coeffs(8, lam, 100)
        C, radii = tail_bounds(cs, lam, iv.point(Fraction(1, 2)), Fraction(3, 2), 100, 8)
        assert all(r >= 0 for r in radii)

    def test_admissibility_rejected_small_K(self):
        # 2*155/(7*15) is approximately 2.95, far above 1/6
        lam = iv.from_decimal("155", "155")
        cs = taylor_coeffs(8, lam, 5)
        with pytest.raises(EvaluationError, match="tail growth condition"):
            tail_bounds(cs, lam, iv.point(Fraction(1, 2)), Fraction(3, 2), 5, 8)

    def test_rho_domain_rejected(self):
        lam = iv.point(2)
        cs = taylor_coeffs(0, lam, 100)
        with pytest.raises(EvaluationError, match="rho\\^2\\*gamma"):
            tail_bounds(cs, lam, iv.from_decimal("0.9", "0.9"), Fraction(3, 2), 100, 0)

    def test_lambda_zero_gives_zero_p_radii(self):
        lam = iv.point(0)
        cs = taylor_coeffs(4, lam, 50)
        C, radii = tail_bounds(cs, lam, iv.point(Fraction(1, 2)), Fraction(3, 2), 50, 4)
        assert radii[0] == 0 and radii[1] == 0  # P and dP tails vanish with p_k = 0
        assert F(C.hi) > 0  # driven by the q terms


class TestEvalAll:
    def test_closed_form_nu1_ell0(self):
        ev = point_eval(0, 2, Fraction(1, 2))
        assert ev.P.contains(Fraction(3, 5))
        assert F(ev.P.width()) < Fraction(1, 10**55)

    def test_closed_form_nu1_ell1(self):
        ev = point_eval(1, 2, Fraction(1, 2))
        assert ev.P.contains(Fraction(2, 5))

    @pytest.mark.parametrize("nu", [1, 2, 3])
    def test_closed_form_family(self, nu):
        lam = nu * (nu + 1)
        for ell in range(nu + 1):
            for r in (Fraction(1, 10), Fraction(1, 4), Fraction(2, 5)):
                ev = point_eval(ell, lam, r)
                assert ev.P.contains(oracle(nu, ell, r)), (nu, ell, r)

    def test_paper_corner_sign(self):
        ev = eval_box(8, iv.from_decimal(LAM_BOX[0], LAM_BOX[0]),
                      iv.from_decimal(RHO_BOX[1], RHO_BOX[1]))
        assert sign_of(ev.P) is Sign.POSITIVE

    def test_truncation_consistency(self):
        for ell, lam, r in ((0, 2, Fraction(1, 2)), (8, 154, Fraction(3, 5)), (3, 40, Fraction(1, 3))):
            e50 = point_eval(ell, lam, r, K=50)
            e100 = point_eval(ell, lam, r, K=100)
            for f in ("P", "dP", "Q", "dQ"):
                a, b = getattr(e50, f), getattr(e100, f)
                assert max(a.lo, b.lo) <= min(a.hi, b.hi), (ell, f)

    def test_tail_radii_match_recomputation(self):
        q = LegendreQuery(5, iv.from_decimal("20", "21"), iv.from_decimal("0.4", "0.45"))
        ev = eval_all(q)
        cs = taylor_coeffs(5, q.lam, q.K)
        C, radii = tail_bounds(cs, q.lam, q.rho, q.gamma, q.K, 5)
        assert tuple(radii) == tuple(ev.tail_radii)
        assert F(C.hi) == F(ev.tail_C.hi)

    def test_query_invariants(self):
        with pytest.raises(EvaluationError):
            LegendreQuery(-1, iv.point(2), iv.point(Fraction(1, 2)))
        with pytest.raises(EvaluationError, match="strictly positive"):
            LegendreQuery(0, iv.point(0), iv.point(Fraction(1, 2)))
        with pytest.raises(EvaluationError, match="rho\\^2\\*gamma"):
            LegendreQuery(0, iv.point(2), iv.point(Fraction(9, 10)))
        with pytest.raises(EvaluationError, match="nonnegative"):
            LegendreQuery(0, iv.point(2), iv.from_rational(-1, 0))


class TestDerivativeIdentities:
    def places(self):
        return [
            (0, Fraction(2), Fraction(1, 2)),
            (8, Fraction("154.19"), Fraction("0.59")),
            (3, Fraction(50), Fraction(2, 5)),
        ]

    def mid(self, x):
        return x.midpoint()

    def test_ode_residual(self):
        # P'' from second-order central differences of enclosure midpoints
        h = Fraction(1, 10**4)
        for ell, lam, r in self.places():
            Pm = self.mid(point_eval(ell, lam, r - h).P)
            P0e = point_eval(ell, lam, r)
            P0, dP0 = self.mid(P0e.P), self.mid(P0e.dP)
            Pp = self.mid(point_eval(ell, lam, r + h).P)
            c = NEAREST
            hm = c.div(gmpy2.mpfr(h.numerator), gmpy2.mpfr(h.denominator))
            second = c.div(c.sub(c.add(Pp, Pm), c.mul(gmpy2.mpfr(2), P0)), c.mul(hm, hm))
            rf = c.div(gmpy2.mpfr(r.numerator), gmpy2.mpfr(r.denominator))
            lamf = c.div(gmpy2.mpfr(lam.numerator), gmpy2.mpfr(lam.denominator))
            opr2 = c.add(gmpy2.mpfr(1), c.mul(rf, rf))
            resid = c.add(
                c.sub(
                    c.add(second, c.div(dP0, rf)),
                    c.div(c.mul(gmpy2.mpfr(ell * ell), P0), c.mul(rf, rf)),
                ),
                c.div(c.mul(c.mul(gmpy2.mpfr(4), lamf), P0), c.mul(opr2, opr2)),
            )
            assert abs(float(resid)) <= 1e-6 * max(1.0, abs(float(P0)))

    def test_q_is_lambda_derivative(self):
        for ell, lam, r in self.places():
            ratios = []
            errs = {}
            Q = self.mid(point_eval(ell, lam, r).Q)
            for h in (Fraction(1, 10**3), Fraction(1, 10**4)):
                Pp = self.mid(point_eval(ell, lam + h, r).P)
                Pm = self.mid(point_eval(ell, lam - h, r).P)
                c = NEAREST
                hm = c.div(gmpy2.mpfr(h.numerator), gmpy2.mpfr(h.denominator))
                cd = c.div(c.sub(Pp, Pm), c.mul(gmpy2.mpfr(2), hm))
                errs[h] = abs(float(c.sub(cd, Q)))
            ratio = errs[Fraction(1, 10**3)] / errs[Fraction(1, 10**4)]
            assert 80 <= ratio <= 120, (ell, ratio)

    def test_dp_is_rho_derivative(self):
        for ell, lam, r in self.places():
            errs = {}
            dP = self.mid(point_eval(ell, lam, r).dP)
            for h in (Fraction(1, 10**3), Fraction(1, 10**4)):
                Pp = self.mid(point_eval(ell, lam, r + h).P)
                Pm = self.mid(point_eval(ell, lam, r - h).P)
                c = NEAREST
                hm = c.div(gmpy2.mpfr(h.numerator), gmpy2.mpfr(h.denominator))
                cd = c.div(c.sub(Pp, Pm), c.mul(gmpy2.mpfr(2), hm))
                errs[h] = abs(float(c.sub(cd, dP)))
            ratio = errs[Fraction(1, 10**3)] / errs[Fraction(1, 10**4)]
            assert 80 <= ratio <= 120, (ell, ratio)


class TestCoordMaps:
    def test_halfsphere_boundary(self):
        cm = coord_maps(a=iv.point(0))
        assert cm.rho.contains(1)
        assert F(cm.rho.width()) < Fraction(1, 10**70)

    def test_paper_boxes(self):
        cm = coord_maps(rho=iv.from_decimal(*RHO_BOX), lam=iv.from_decimal(*LAM_BOX))
        assert iv.from_decimal(*A_BOX).encloses(cm.a)
        assert iv.from_decimal(*NU_BOX).encloses(cm.nu)

    def test_round_trip(self):
        a0 = Fraction("0.4774365682415")
        cm = coord_maps(a=iv.from_rational(a0, a0))
        back = coord_maps(rho=cm.rho)
        assert back.a.contains(a0)
        assert F(back.a.width()) <= F(cm.a.width() if cm.a else 0) + 4 * Fraction(2) ** -250

    def test_south_pole_rejected(self):
        with pytest.raises(EvaluationError, match="south pole"):
            coord_maps(a=iv.from_rational(-1, 0))

    def test_nu_lambda_consistency(self):
        cm = coord_maps(rho=iv.point(Fraction(1, 2)), nu=iv.point(3))
        assert cm.lam.contains(12)

    def test_requires_an_argument(self):
        with pytest.raises(EvaluationError):
            coord_maps()


class TestEigSlopes:
    def box_setup(self):
        lam = iv.from_decimal(*LAM_BOX)
        rho = iv.from_decimal(*RHO_BOX)
        ev0 = eval_box(0, lam, rho)
        ev8 = eval_box(8, lam, rho)
        return ev0, ev8, coord_maps(rho=rho, lam=lam)

    def test_paper_box_transversal(self):
        ev0, ev8, cm = self.box_setup()
        slopes = eig_slopes(ev0, ev8, cm)
        assert sign_of(slopes.transversality_expr) is not Sign.CONTAINS_ZERO
        assert slopes.mu_prime is not None and slopes.lam_prime is not None
        # the two slope enclosures are disjoint
        assert slopes.mu_prime.lo > slopes.lam_prime.hi

    def test_zero_numerator_gives_zero_slope(self):
        ev0, ev8, cm = self.box_setup()
        zero = iv.point(0)
        fake0 = LegendreEval(zero, ev0.dP, ev0.Q, ev0.dQ, ev0.tail_C, ev0.tail_radii)
        slopes = eig_slopes(fake0, ev8, cm)
        assert slopes.mu_prime.lo == 0 and slopes.mu_prime.hi == 0

    def test_straddling_denominator_is_inconclusive(self):
        ev0, ev8, cm = self.box_setup()
        wide = iv.from_rational(-1, 1)
        fake0 = LegendreEval(ev0.P, ev0.dP, ev0.Q, wide, ev0.tail_C, ev0.tail_radii)
        slopes = eig_slopes(fake0, ev8, cm)
        assert slopes.mu_prime is None
        assert slopes.lam_prime is not None

    def test_slopes_match_finite_differences(self):
        # central differences of the float-traced branches against the
        # rigorous slope enclosures, within O(h^2) slack
        from capspec import explorer as ex

        a_star = 0.4774365682415
        lam_seed = 154.1915744945
        h = 1e-5

        def branch(ell, bc, a):
            return ex._branch_near(ex.S2, ell, bc, a, lam_seed)

        mu_p = (branch(0, "neumann", a_star + h) - branch(0, "neumann", a_star - h)) / (2 * h)
        lam_p = (branch(8, "dirichlet", a_star + h) - branch(8, "dirichlet", a_star - h)) / (2 * h)
        ev0, ev8, cm = self.box_setup()
        slopes = eig_slopes(ev0, ev8, cm)
        lo, hi = slopes.mu_prime.as_floats()
        assert lo - 1e-3 <= mu_p <= hi + 1e-3
        lo, hi = slopes.lam_prime.as_floats()
        assert lo - 1e-3 <= lam_p <= hi + 1e-3
