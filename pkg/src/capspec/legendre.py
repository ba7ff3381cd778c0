"""Rigorous enclosures of cap eigenfunction profiles.

The radial profile of a Laplace-Beltrami eigenfunction on a spherical cap,
written in the stereographic coordinate rho = tan(theta/2) and normalized
to rho^ell * (1 + O(rho^2)), is evaluated through its Taylor series in
rho^2.  The coefficients follow a three-term recurrence in interval
arithmetic; the discarded tail is bounded in closed form by propagating a
geometric-growth bound on trailing coefficient pairs.  Alongside the value
P we enclose dP (the rho-derivative), Q (the derivative with respect to
the spectral parameter lambda) and dQ (its rho-derivative).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr, mpq

from .interval import (
    Interval,
    IntervalError,
    _ctx,
    add,
    div,
    div_int,
    mul,
    mul_int,
    point,
    pow_int,
    sign_of,
    sqrt_iv,
    sub,
    symmetric,
    Sign,
)

DEFAULT_TERMS = 100
DEFAULT_TAIL_RATIO = Fraction(3, 2)


class EvaluationError(ValueError):
    """A series-domain precondition failed; the message names the inequality."""


def _frac(x: mpfr) -> Fraction:
    q = mpq(x)
    return Fraction(int(q.numerator), int(q.denominator))


def check_series_domain(ell: int, lam_hi: mpfr, rho_hi: mpfr, gamma: Fraction, K: int) -> None:
    """Exact rational check of the two admissibility inequalities.

    Rejects parameter ranges where the geometric tail bound does not apply:
    (gamma-1)^2/gamma must dominate 2*lambda/((K+2)*(K+2+ell)), and
    rho^2*gamma must stay below 1.
    """
    lhs = (gamma - 1) ** 2 / gamma
    rhs = 2 * _frac(lam_hi) / ((K + 2) * (K + 2 + ell))
    if lhs < rhs:
        raise EvaluationError(
            "tail growth condition violated: (gamma-1)^2/gamma = "
            f"{float(lhs):.6g} < {float(rhs):.6g} = 2*lambda/((K+2)*(K+2+ell)) "
            f"at K={K}, ell={ell}"
        )
    rr = _frac(rho_hi) ** 2 * gamma
    if rr >= 1:
        raise EvaluationError(
            f"convergence condition violated: rho^2*gamma = {float(rr):.6g} >= 1"
        )


@dataclass(frozen=True)
class CoeffPair:
    """Series coefficient p_k and its lambda-derivative q_k."""

    k: int
    p: Interval
    q: Interval


@dataclass(frozen=True)
class LegendreQuery:
    """An (ell, lambda-box, rho-box) evaluation request."""

    ell: int
    lam: Interval
    rho: Interval
    K: int = DEFAULT_TERMS
    gamma: Fraction = DEFAULT_TAIL_RATIO

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.ell < 0:
            raise EvaluationError("ell must be a nonnegative integer")
        if self.K < 2:
            raise EvaluationError("at least two series terms are required")
        if self.gamma <= 1:
            raise EvaluationError("tail ratio gamma must exceed 1")
        if self.rho.lo < 0:
            raise EvaluationError("rho must be nonnegative")
        if self.lam.lo <= 0:
            raise EvaluationError("lambda must be strictly positive")
        check_series_domain(self.ell, self.lam.hi, self.rho.hi, self.gamma, self.K)


@dataclass(frozen=True)
class LegendreEval:
    """Enclosures of P, dP/drho, Q = dP/dlambda and dQ/drho over a query box."""

    P: Interval
    dP: Interval
    Q: Interval
    dQ: Interval
    tail_C: Interval
    tail_radii: tuple = field(repr=False)  # (P, dP, Q, dQ) remainder bounds, mpfr


def taylor_coeffs(ell: int, lam: Interval, K: int) -> list[CoeffPair]:
    """Coefficients p_k, q_k for k = 1..K+1, in interval arithmetic.

    p_1 = -lambda, p_2 = 2*lambda + lambda^2/(1+ell), and
    p_{k+1} = -(2 + lambda/(k(k+ell))) p_k - p_{k-1};
    the q_k satisfy the lambda-differentiated recurrence with q_1 = -1.
    """
    if ell < 0 or K < 2:
        raise EvaluationError("need ell >= 0 and K >= 2")
    if lam.lo < 0:
        raise EvaluationError("lambda must be nonnegative")
    prec = lam.prec
    two = point(2, prec)
    p_prev = -lam
    q_prev = point(-1, prec)
    p_cur = add(mul_int(lam, 2), div_int(mul(lam, lam), 1 + ell))
    q_cur = add(two, div_int(mul_int(lam, 2), 1 + ell))
    out = [CoeffPair(1, p_prev, q_prev), CoeffPair(2, p_cur, q_cur)]
    for k in range(2, K + 1):
        den = k * (k + ell)
        f = add(two, div_int(lam, den))
        p_next = -add(mul(f, p_cur), p_prev)
        q_next = -add(add(mul(f, q_cur), div_int(p_cur, den)), q_prev)
        out.append(CoeffPair(k + 1, p_next, q_next))
        p_prev, p_cur = p_cur, p_next
        q_prev, q_cur = q_cur, q_next
    return out


def _pow_up(ctx, base: mpfr, n: int) -> mpfr:
    acc = mpfr(1)
    b = base
    while n:
        if n & 1:
            acc = ctx.mul(acc, b)
        n >>= 1
        if n:
            b = ctx.mul(b, b)
    return acc


def tail_bounds(
    coeffs: list[CoeffPair],
    lam: Interval,
    rho: Interval,
    gamma: Fraction,
    K: int,
    ell: int,
) -> tuple[Interval, tuple]:
    """Tail constant C and the four remainder radii beyond K terms.

    C is the outward-rounded maximum of |p_{K+1}+p_K|/lambda_lo,
    |q_{K+1}+q_K|, |p_{K+1}|(gamma-1)/lambda_lo and |q_{K+1}|(gamma-1);
    the radii evaluate the closed-form geometric tail estimates at the
    worst-case endpoints of the lambda and rho boxes.
    """
    check_series_domain(ell, lam.hi, rho.hi, gamma, K)
    if len(coeffs) < K + 1:
        raise EvaluationError(f"need coefficients up to index {K + 1}")
    pK, pK1 = coeffs[K - 1], coeffs[K]
    if pK.k != K or pK1.k != K + 1:
        raise EvaluationError("coefficient sequence is mis-indexed")
    prec = lam.prec
    up, dn = _ctx(prec, "u"), _ctx(prec, "d")
    gm1 = mpq((gamma - 1).numerator, (gamma - 1).denominator)
    gq = mpq(gamma.numerator, gamma.denominator)

    m_psum = add(pK1.p, pK.p).mag()
    m_qsum = add(pK1.q, pK.q).mag()
    m_p = pK1.p.mag()
    m_q = pK1.q.mag()
    if lam.lo > 0:
        c1 = up.div(m_psum, lam.lo)
        c3 = up.div(up.mul(m_p, gm1), lam.lo)
    elif m_psum == 0 and m_p == 0:
        c1 = c3 = mpfr(0)
    else:
        raise EvaluationError(
            "tail constant undefined: lambda reaches 0 with nonvanishing p coefficients"
        )
    c2 = m_qsum
    c4 = up.mul(m_q, gm1)
    C = max(c1, c2, c3, c4)

    rho_u, lam_u = rho.hi, lam.hi
    s_up = up.mul(up.mul(rho_u, rho_u), gq)
    one_minus_s = dn.sub(mpfr(1), s_up)
    if one_minus_s <= 0:
        raise EvaluationError("convergence condition violated: rho^2*gamma >= 1")
    gm1_dn = dn.add(mpfr(0), gm1)
    den_full = dn.mul(dn.mul(mpfr(K * (K + ell)), gm1_dn), one_minus_s)
    den_konly = dn.mul(dn.mul(mpfr(K), gm1_dn), one_minus_s)
    pow_even = _pow_up(up, rho_u, ell + 2 * K)
    pow_odd = _pow_up(up, rho_u, ell + 2 * K - 1)

    r_P = up.div(up.mul(up.mul(up.mul(C, lam_u), pow_even), s_up), den_full)
    r_dP = up.div(up.mul(up.mul(up.mul(up.mul(mpfr(2), lam_u), C), pow_odd), s_up), den_konly)
    r_Q = up.div(up.mul(up.mul(C, pow_even), s_up), den_full)
    r_dQ = up.div(up.mul(up.mul(up.mul(mpfr(2), C), pow_odd), s_up), den_konly)
    return Interval(C, C, prec), (r_P, r_dP, r_Q, r_dQ)


def _horner(terms: list[Interval], z: Interval) -> Interval:
    acc = terms[-1]
    for t in reversed(terms[:-1]):
        acc = add(t, mul(z, acc))
    return acc


def eval_all(query: LegendreQuery) -> LegendreEval:
    """Enclose P, dP, Q, dQ over the query box: truncated sum plus tail."""
    query.validate()
    ell, lam, rho, K = query.ell, query.lam, query.rho, query.K
    prec = max(lam.prec, rho.prec)
    coeffs = taylor_coeffs(ell, lam, K)
    tail_C, radii = tail_bounds(coeffs, lam, rho, query.gamma, K, ell)

    z = mul(rho, rho)
    c_p = [div_int(coeffs[k - 1].p, k * (k + ell)) for k in range(1, K + 1)]
    c_q = [div_int(coeffs[k - 1].q, k * (k + ell)) for k in range(1, K + 1)]
    d_p = [mul_int(c_p[k - 1], 2 * k + ell) for k in range(1, K + 1)]
    d_q = [mul_int(c_q[k - 1], 2 * k + ell) for k in range(1, K + 1)]

    one = point(1, prec)
    rho_ell = pow_int(rho, ell)
    pbar = add(one, mul(z, _horner(c_p, z)))
    P = add(mul(rho_ell, pbar), symmetric(radii[0], prec))

    dp_series = mul(pow_int(rho, ell + 1), _horner(d_p, z))
    if ell >= 1:
        dp_lead = mul_int(pow_int(rho, ell - 1), ell)
        dp_series = add(dp_lead, dp_series)
    dP = add(dp_series, symmetric(radii[1], prec))

    Q = add(mul(rho_ell, mul(z, _horner(c_q, z))), symmetric(radii[2], prec))
    dQ = add(mul(pow_int(rho, ell + 1), _horner(d_q, z)), symmetric(radii[3], prec))
    return LegendreEval(P, dP, Q, dQ, tail_C, radii)


def eval_box(
    ell: int,
    lam: Interval,
    rho: Interval,
    K: int = DEFAULT_TERMS,
    gamma: Fraction = DEFAULT_TAIL_RATIO,
) -> LegendreEval:
    return eval_all(LegendreQuery(ell, lam, rho, K, gamma))


# -- coordinate maps -------------------------------------------------------


@dataclass(frozen=True)
class CoordMapResult:
    """Consistent enclosures of cap height a, radius rho, degree nu, and lambda."""

    a: Interval | None
    rho: Interval | None
    nu: Interval | None
    lam: Interval | None
    da_drho: Interval | None


def coord_maps(
    a: Interval | None = None,
    rho: Interval | None = None,
    nu: Interval | None = None,
    lam: Interval | None = None,
) -> CoordMapResult:
    """Close the coordinate relations a <-> rho and nu <-> lambda.

    a = (1-rho^2)/(1+rho^2), rho = sqrt((1-a)/(1+a)),
    lambda = nu(nu+1), nu = -1/2 + sqrt(1/4 + lambda);
    also returns the Jacobian factor da/drho = -4 rho/(1+rho^2)^2.
    """
    if a is None and rho is None and nu is None and lam is None:
        raise EvaluationError("at least one coordinate is required")
    if a is not None and rho is not None:
        raise EvaluationError("give either a or rho, not both")
    if nu is not None and lam is not None:
        raise EvaluationError("give either nu or lambda, not both")
    prec = max(x.prec for x in (a, rho, nu, lam) if x is not None)
    one = point(1, prec)

    if a is not None:
        if a.lo <= -1:
            raise EvaluationError("cap height a must exceed -1 (south pole excluded)")
        if a.hi > 1:
            raise EvaluationError("cap height a must not exceed 1")
        rho = sqrt_iv(div(sub(one, a), add(one, a)))
    da_drho = None
    if rho is not None:
        if rho.lo < 0:
            raise EvaluationError("rho must be nonnegative")
        r2 = mul(rho, rho)
        opr2 = add(one, r2)
        if a is None:
            a = div(sub(one, r2), opr2)
        da_drho = div(mul_int(rho, -4), pow_int(opr2, 2))

    if lam is not None:
        if lam.lo < 0:
            raise EvaluationError("lambda must be nonnegative")
        nu = add(point(Fraction(-1, 2), prec), sqrt_iv(add(point(Fraction(1, 4), prec), lam)))
    elif nu is not None:
        lam = mul(nu, add(nu, one))

    return CoordMapResult(a=a, rho=rho, nu=nu, lam=lam, da_drho=da_drho)


# -- eigenvalue branch slopes ----------------------------------------------


@dataclass(frozen=True)
class EigSlopes:
    """Slopes of the Neumann and Dirichlet branches and the crossing test value.

    mu_prime or lam_prime is None when its denominator enclosure straddles
    zero (inconclusive, never an exception).  transversality_expr is the
    polynomial combination whose nonvanishing separates the two slopes.
    """

    mu_prime: Interval | None
    lam_prime: Interval | None
    transversality_expr: Interval


def eig_slopes(eval0: LegendreEval, eval_ell: LegendreEval, coords: CoordMapResult) -> EigSlopes:
    """Branch slopes at a common (lambda, rho) box.

    eval0 is the zonal (ell = 0) evaluation whose dP-zero defines the
    Neumann branch; eval_ell the mode whose P-zero defines the Dirichlet
    branch.  Derived from the two boundary conditions:
      mu'  = (da/drho)^-1 * 4 lambda/(1+rho^2)^2 * P_0 / dQ_0,
      lam' = -(da/drho)^-1 * dP_ell / Q_ell,
    and the slopes differ whenever
      4 lambda/(1+rho^2)^2 * P_0 * Q_ell + dP_ell * dQ_0 != 0.
    """
    if coords.rho is None or coords.lam is None or coords.da_drho is None:
        raise EvaluationError("coords must carry rho, lambda and da/drho")
    rho, lam = coords.rho, coords.lam
    prec = max(rho.prec, lam.prec)
    one = point(1, prec)
    fac = div(mul_int(lam, 4), pow_int(add(one, mul(rho, rho)), 2))
    expr = add(mul(mul(fac, eval0.P), eval_ell.Q), mul(eval_ell.dP, eval0.dQ))

    mu_prime = None
    if sign_of(eval0.dQ) is not Sign.CONTAINS_ZERO and sign_of(coords.da_drho) is not Sign.CONTAINS_ZERO:
        mu_prime = div(div(mul(fac, eval0.P), eval0.dQ), coords.da_drho)
    lam_prime = None
    if sign_of(eval_ell.Q) is not Sign.CONTAINS_ZERO and sign_of(coords.da_drho) is not Sign.CONTAINS_ZERO:
        lam_prime = -div(div(eval_ell.dP, eval_ell.Q), coords.da_drho)
    return EigSlopes(mu_prime=mu_prime, lam_prime=lam_prime, transversality_expr=expr)
