"""Fast non-rigorous spectral computations for geodesic caps.

Floating-point counterparts of the rigorous evaluator: eigenvalue scans
and branch tracing over cap height, crossing detection and Newton
refinement (seeding the certifier with candidate boxes), first-order
bifurcated boundary shapes, and an ODE shooting solver for caps on
higher-dimensional spheres and on the hyperbolic plane.

Nothing here carries error bounds; the certifier re-proves whatever
matters.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.special import lpmv

log = logging.getLogger(__name__)

SERIES_RHO2_MAX = 2.0 / 3.0  # same region the rigorous gamma = 3/2 setup allows
_SERIES_BACKEND_RHO2 = 0.6   # switch to the classical evaluator before the edge


class ConvergenceError(RuntimeError):
    """The adaptive series did not converge within the term cap."""


def _warn(sink: list | None, msg: str) -> None:
    log.warning(msg)
    if sink is not None:
        sink.append(msg)


# -- geometry ---------------------------------------------------------------


@dataclass(frozen=True)
class Geometry:
    kind: str  # "sphere" | "hyperbolic"
    dim: int

    _LABELS = {"s2": ("sphere", 2), "s3": ("sphere", 3), "s4": ("sphere", 4), "h2": ("hyperbolic", 2)}

    @classmethod
    def parse(cls, label: str) -> "Geometry":
        try:
            kind, dim = cls._LABELS[label.lower()]
        except KeyError:
            raise ValueError(f"unknown geometry {label!r}; use s2, s3, s4 or h2") from None
        return cls(kind, dim)

    @property
    def label(self) -> str:
        return f"{'s' if self.kind == 'sphere' else 'h'}{self.dim}"

    @property
    def param_name(self) -> str:
        # cap height for spheres, geodesic radius for the hyperbolic plane
        return "a" if self.kind == "sphere" else "r"

    def cap_angle(self, param: float) -> float:
        if self.kind == "sphere":
            if not -1.0 < param < 1.0:
                raise ValueError("cap height must lie in (-1, 1)")
            return math.acos(param)
        if param <= 0:
            raise ValueError("hyperbolic radius must be positive")
        return param


S2 = Geometry.parse("s2")


# -- series evaluation (point arithmetic) ------------------------------------


def eval_float(ell: int, lam: float, rho: float, cap: int = 400, tol: float = 1e-16):
    """Adaptive truncated series values of (P, dP, Q, dQ) at one point.

    Terms are added until the latest one drops below tol times the running
    maximum; past rho^2 = 2/3 the truncation error is not controlled and
    the call is refused.
    """
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    r2 = rho * rho
    if r2 >= SERIES_RHO2_MAX:
        raise ValueError(f"rho^2 = {r2:.4f} is outside the series region rho^2 < 2/3")
    p_prev = None
    p_cur = -lam
    q_prev = None
    q_cur = -1.0
    SP = SQ = SdP = SdQ = 0.0
    runmax = 1.0
    pw = r2
    k = 1
    converged = False
    while k <= cap:
        den = k * (k + ell)
        tP = p_cur / den * pw
        tQ = q_cur / den * pw
        SP += tP
        SQ += tQ
        SdP += (2 * k + ell) * tP
        SdQ += (2 * k + ell) * tQ
        m = max(abs(tP), abs(tQ))
        runmax = max(runmax, m)
        if k > 5 and m < tol * runmax:
            converged = True
            break
        if k == 1:
            p_next = 2 * lam + lam * lam / (1 + ell)
            q_next = 2 + 2 * lam / (1 + ell)
        else:
            p_next = -2 * p_cur - lam / den * p_cur - p_prev
            q_next = -2 * q_cur - lam / den * q_cur - p_cur / den - q_prev
        p_prev, p_cur = p_cur, p_next
        q_prev, q_cur = q_cur, q_next
        pw *= r2
        k += 1
    if not converged:
        raise ConvergenceError(f"series did not settle within {cap} terms at rho={rho}, lambda={lam}")
    rl = rho**ell
    P = rl * (1.0 + SP)
    Q = rl * SQ
    lead = ell * rho ** (ell - 1) if ell >= 1 else 0.0
    dP = lead + (SdP / rho * rl if rho > 0 else 0.0)
    dQ = SdQ / rho * rl if rho > 0 else 0.0
    return P, dP, Q, dQ


def rho_of_height(a: float) -> float:
    return math.sqrt((1.0 - a) / (1.0 + a))


def height_of_rho(rho: float) -> float:
    return (1.0 - rho * rho) / (1.0 + rho * rho)


# -- classical evaluator for caps below the series region --------------------


def _nu_of(lam: float) -> float:
    return -0.5 + math.sqrt(0.25 + lam)


def _classical_boundary(ell: int, lam: float, a: float, bc: str) -> float:
    """P_nu^ell(a) or its a-derivative; only zeros matter (normalization-free)."""
    nu = _nu_of(lam)
    if bc == "dirichlet":
        return float(lpmv(ell, nu, a))
    num = (nu + ell) * lpmv(ell, nu - 1.0, a) - nu * a * lpmv(ell, nu, a)
    return float(num / (1.0 - a * a))


def _spurious_classical_root(lam: float, ell: int) -> bool:
    # the classical normalization vanishes identically at integer degrees
    # below the order; those lambdas are not eigenvalues
    nu = _nu_of(lam)
    n = round(nu)
    return n < ell and abs(nu - n) < 1e-6 * max(1.0, nu)


def boundary_value(a: float, ell: int, lam: float, bc: str) -> float:
    """Boundary functional whose lambda-zeros are the cap eigenvalues (S^2)."""
    r2 = (1.0 - a) / (1.0 + a)
    if r2 < _SERIES_BACKEND_RHO2:
        P, dP, _, _ = eval_float(ell, lam, math.sqrt(r2))
        return P if bc == "dirichlet" else dP
    return _classical_boundary(ell, lam, a, bc)


# -- eigenvalue scans ---------------------------------------------------------


def _bisect_root(f, lo: float, hi: float, flo: float, fhi: float, rel_tol: float = 1e-13) -> float:
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    return brentq(f, lo, hi, xtol=rel_tol * max(1.0, abs(hi)), rtol=8.9e-16, maxiter=200)


def _scan_roots(f, lam_max: float, step: float, lam_min: float = 1e-6, skip=None,
                adaptive: bool = False) -> list:
    # with adaptive=True the step follows the observed root spacing, which
    # grows roughly linearly for the radial problems scanned here
    roots = []
    lam = lam_min
    flo = f(lam)
    cur = step
    while lam < lam_max:
        nxt = min(lam + cur, lam_max)
        fn = f(nxt)
        if flo == 0.0 or flo * fn < 0 or fn == 0.0:
            r = _bisect_root(f, lam, nxt, flo, fn)
            if skip is None or not skip(r):
                roots.append(r)
            if adaptive and len(roots) >= 2:
                cur = max(step, 0.30 * (roots[-1] - roots[-2]))
        lam, flo = nxt, fn
    return roots


def _gap_suspicion(roots: list) -> int | None:
    """Index of a suspiciously large sqrt-spaced gap, if any."""
    if len(roots) < 3:
        return None
    s = [math.sqrt(max(r, 0.0)) for r in roots]
    gaps = [b - a for a, b in zip(s, s[1:])]
    med = sorted(gaps)[len(gaps) // 2]
    for i, g in enumerate(gaps):
        if g > 1.9 * med:
            return i
    return None


def scan_eigenvalues(
    a: float,
    ell: int,
    bc: str,
    lambda_max: float,
    step: float = 0.5,
    warnings_sink: list | None = None,
) -> list:
    """All cap eigenvalues of one angular mode up to lambda_max (S^2).

    Sign-change scan over lambda followed by bisection; for the zonal
    Neumann problem the constant mode contributes eigenvalue 0 up front.
    A gap-spacing heuristic triggers one finer re-scan and a warning.
    """
    bc = _norm_bc(bc)
    if not -0.999 < a < 1.0:
        raise ValueError("cap height must lie in (-0.999, 1)")
    if lambda_max > 1e4:
        raise ValueError("lambda_max above 1e4 is not supported")
    skip = (lambda r: _spurious_classical_root(r, ell)) if (1.0 - a) / (1.0 + a) >= _SERIES_BACKEND_RHO2 else None
    f = lambda lam: boundary_value(a, ell, lam, bc)
    roots = _scan_roots(f, lambda_max, step, skip=skip)
    sus = _gap_suspicion(roots)
    if sus is not None:
        _warn(warnings_sink, f"possible missed root near lambda={roots[sus]:.3f}; re-scanning finer")
        roots = _scan_roots(f, lambda_max, step / 4.0, skip=skip)
    if bc == "neumann" and ell == 0:
        roots = [0.0] + roots
    return roots


def _norm_bc(bc: str) -> str:
    b = bc.lower()
    if b in ("dir", "dirichlet", "d"):
        return "dirichlet"
    if b in ("neu", "neumann", "n"):
        return "neumann"
    raise ValueError(f"unknown boundary condition {bc!r}")


# -- radial shooting on S^n and H^2 ------------------------------------------


def _series_start(geometry: Geometry, ell: int, lam: float, t0: float):
    n = geometry.dim
    if geometry.kind == "sphere":
        L = ell * (ell + n - 2)
        c1 = ((n - 1) * ell / 3.0 + L / 3.0 - lam) / (4 * ell + 2 * n)
    else:
        c1 = -(lam + ell / 3.0 + ell * ell / 3.0) / (4 * ell + 2 * n)
    u0 = 1.0 + c1 * t0 * t0
    v0 = (ell * u0 + 2 * c1 * t0 * t0) / t0
    return u0, v0


def _radial_rhs(geometry: Geometry, ell: int):
    n = geometry.dim
    if geometry.kind == "sphere":
        L = ell * (ell + n - 2)

        def rhs(t, y, lam):
            u, v = y
            ct = math.cos(t) / math.sin(t)
            return (v, -(n - 1) * ct * v - (lam - L / math.sin(t) ** 2) * u)

    else:
        L = ell * ell

        def rhs(t, y, lam):
            u, v = y
            ct = math.cosh(t) / math.sinh(t)
            return (v, -ct * v - (lam - L / math.sinh(t) ** 2) * u)

    return rhs


def shoot_boundary(geometry: Geometry, ell: int, lam: float, t_end: float, fast: bool = False):
    """(u, u') at the cap boundary from a regularized start near the pole.

    fast mode relaxes the integrator tolerances for bracketing work;
    final values and residuals always use the tight setting.
    """
    rhs = _radial_rhs(geometry, ell)
    rtol, atol = (1e-9, 1e-11) if fast else (1e-11, 1e-12)
    t0 = min(1e-4, 1e-3 * t_end)
    for _ in range(3):
        y0 = _series_start(geometry, ell, lam, t0)
        sol = solve_ivp(
            rhs, (t0, t_end), y0, args=(lam,), method="DOP853", rtol=rtol, atol=atol
        )
        if sol.success:
            return sol.y[0, -1], sol.y[1, -1]
        t0 /= 10.0
    raise ConvergenceError(f"radial integration failed near the pole at lambda={lam}")


def _shoot_residuals(geometry: Geometry, ell: int, lam: float, t_end: float):
    """Scale-free boundary residuals (neumann, dirichlet) of one mode."""
    u, v = shoot_boundary(geometry, ell, lam, t_end)
    scale = abs(u) + abs(v) * t_end
    return abs(v) * t_end / scale, abs(u) / scale


def ode_spectrum(
    geometry: Geometry,
    ell: int,
    bc: str,
    param: float,
    lambda_max: float,
    step: float = 2.0,
    warnings_sink: list | None = None,
) -> list:
    """Radial cap eigenvalues by shooting and bisection in lambda."""
    bc = _norm_bc(bc)
    if geometry.kind == "sphere" and geometry.dim not in (2, 3, 4):
        raise ValueError("sphere shooting supports dimensions 2, 3 and 4")
    t_end = geometry.cap_angle(param)
    if geometry.kind == "sphere" and t_end >= math.pi:
        raise ValueError("cap must stay strictly inside the sphere")
    idx = 0 if bc == "dirichlet" else 1

    def f(lam):
        return shoot_boundary(geometry, ell, lam, t_end)[idx]

    roots = _scan_roots(f, lambda_max, step, lam_min=min(0.25, step / 4), adaptive=True)
    sus = _gap_suspicion(roots)
    if sus is not None:
        _warn(warnings_sink, f"possible missed shooting root near lambda={roots[sus]:.3f}; re-scanning finer")
        roots = _scan_roots(f, lambda_max, step / 4.0, lam_min=min(0.25, step / 16))
    if bc == "neumann" and ell == 0:
        roots = [0.0] + roots
    return roots


# -- branch tracing -----------------------------------------------------------


@dataclass
class SpectrumCurve:
    """One eigenvalue branch sampled over the domain parameter grid."""

    geometry: Geometry
    ell: int
    bc: str
    branch: int
    samples: list = field(default_factory=list)  # (param, lambda), param ascending


def _eigator(geometry: Geometry, ell: int, bc: str):
    """Point solver param -> sorted eigenvalues below lambda_max."""
    if geometry.label == "s2":
        return lambda param, lam_max, step=0.5: scan_eigenvalues(param, ell, bc, lam_max, step)
    return lambda param, lam_max, step=2.0: ode_spectrum(geometry, ell, bc, param, lam_max, step)


def _local_root(geometry: Geometry, ell: int, bc: str, param: float, seed: float, halfwidth: float,
                fast: bool = True):
    """Nearest eigenvalue to seed at the given parameter, or None."""
    bc = _norm_bc(bc)
    if geometry.label == "s2":
        f = lambda lam: boundary_value(param, ell, lam, bc)
    else:
        t_end = geometry.cap_angle(param)
        idx = 0 if bc == "dirichlet" else 1
        f = lambda lam: shoot_boundary(geometry, ell, lam, t_end, fast=fast)[idx]
    # comb expanding windows around the seed; several roots can sit inside
    # one window near a branch crossing, so always take the nearest hit
    w = halfwidth
    for _ in range(7):
        lo, hi = max(seed - w, 1e-6), seed + w
        grid = np.linspace(lo, hi, 11)
        vals = [f(x) for x in grid]
        hits = []
        for i in range(len(grid) - 1):
            if vals[i] == 0.0 or vals[i] * vals[i + 1] < 0:
                hits.append(_bisect_root(f, grid[i], grid[i + 1], vals[i], vals[i + 1]))
        if hits:
            return min(hits, key=lambda r: abs(r - seed))
        w *= 2.0
    return None


def trace_curve(
    geometry: Geometry,
    ell: int,
    bc: str,
    branch: int,
    grid,
    warnings_sink: list | None = None,
) -> SpectrumCurve:
    """Continue one eigenvalue branch across a parameter grid.

    The branch index counts the sorted eigenvalues at the first grid
    point (for the zonal Neumann problem index 0 is the constant mode).
    Continuation predicts each next sample by secant extrapolation and
    re-bisects locally; an implausible jump splits the curve with a
    warning.
    """
    bc = _norm_bc(bc)
    grid = sorted(float(g) for g in grid)
    solver = _eigator(geometry, ell, bc)
    curve = SpectrumCurve(geometry, ell, bc, branch, [])

    lam_max = 60.0
    first = None
    while lam_max <= 1.6e3:
        roots = solver(grid[0], lam_max)
        if len(roots) > branch:
            first = roots[branch]
            spacing = roots[branch] - roots[branch - 1] if branch >= 1 else max(first, 1.0)
            break
        lam_max *= 2
    if first is None:
        raise ValueError(f"branch {branch} not found below lambda = {lam_max / 2}")
    curve.samples.append((grid[0], first))

    halfwidth = max(0.06 * spacing, 0.5)
    for i, p in enumerate(grid[1:], start=1):
        if len(curve.samples) >= 2:
            (p1, l1), (p2, l2) = curve.samples[-2], curve.samples[-1]
            pred = l2 + (l2 - l1) * (p - p2) / (p2 - p1) if p2 != p1 else l2
            jump_scale = max(3.0 * abs(l2 - l1), 0.3 * spacing, 1.0)
        else:
            pred = curve.samples[-1][1]
            jump_scale = max(0.5 * spacing, 2.0)
        lam = _local_root(geometry, ell, bc, p, pred, halfwidth)
        if lam is None or abs(lam - pred) > 5.0 * jump_scale:
            _warn(
                warnings_sink,
                f"branch continuity lost at {geometry.param_name}={p:.5f} "
                f"(mode {ell}, {bc}, branch {branch}); curve truncated",
            )
            break
        curve.samples.append((p, lam))
    return curve


# -- crossing search ----------------------------------------------------------


@dataclass
class Crossing:
    """A simultaneous zonal-Neumann / mode-ell-Dirichlet eigenvalue."""

    geometry: Geometry
    a_star: float
    lambda_star: float
    ell: int
    neumann_branch: int
    dirichlet_branch: int
    slope_gap: float
    slope_gap_error: float
    slope_gap_significant: bool
    residuals: tuple
    rho_star: float | None = None
    suggested_box: dict | None = None


def _newton_s2(ell: int, rho: float, lam: float, tol: float = 1e-10):
    """Polish (rho, lambda) so that dP_0 = 0 = P_ell; None on divergence."""
    for _ in range(100):
        P0, dP0, Q0, dQ0 = eval_float(0, lam, rho)
        P8, dP8, Q8, dQ8 = eval_float(ell, lam, rho)
        F1, F2 = dP0, P8
        if abs(F1) < tol and abs(F2) < tol:
            return rho, lam, (abs(F1), abs(F2))
        J11 = -dP0 / rho - 4 * lam / (1 + rho * rho) ** 2 * P0
        J12, J21, J22 = dQ0, dP8, Q8
        det = J11 * J22 - J12 * J21
        if det == 0 or not math.isfinite(det):
            return None
        drho = (F1 * J22 - F2 * J12) / det
        dlam = (J11 * F2 - J21 * F1) / det
        rho, lam = rho - drho, lam - dlam
        if not (0 < rho * rho < SERIES_RHO2_MAX and lam > 0):
            return None
    return None


def _branch_near(geometry: Geometry, ell: int, bc: str, param: float, seed: float,
                 fast: bool = True) -> float:
    lam = _local_root(geometry, ell, bc, param, seed, halfwidth=max(0.5, 1e-4 * seed), fast=fast)
    if lam is None:
        raise ConvergenceError(f"lost the branch near {geometry.param_name}={param}")
    return lam


def _slope_gap(geometry: Geometry, crossing_param, lam_star, ell, bc_pair, h):
    """Central-difference slope difference mu' - lambda' with an error estimate."""

    def gap_at(hh):
        vals = {}
        for tag, (l, bc) in bc_pair.items():
            up = _branch_near(geometry, l, bc, crossing_param + hh, lam_star)
            dn = _branch_near(geometry, l, bc, crossing_param - hh, lam_star)
            vals[tag] = (up - dn) / (2 * hh)
        return vals["neumann"] - vals["dirichlet"]

    g1 = gap_at(h)
    g3 = gap_at(3 * h)
    err = abs(g1 - g3) / 3.0
    return g1, err


def find_crossing(
    curve_neumann: SpectrumCurve,
    curve_dirichlet: SpectrumCurve,
    warnings_sink: list | None = None,
) -> list:
    """Locate intersections of a zonal Neumann branch with a Dirichlet branch.

    Sign changes of the sampled difference are refined (two-variable
    Newton on the series for S^2, bisection on the difference for the
    shooting geometries); each crossing carries residuals, a slope-gap
    estimate and, on S^2, a candidate box for the certifier.
    """
    if curve_neumann.geometry != curve_dirichlet.geometry:
        raise ValueError("curves live on different geometries")
    geometry = curve_neumann.geometry
    gn = dict(curve_neumann.samples)
    gd = dict(curve_dirichlet.samples)
    common = sorted(set(gn) & set(gd))
    if len(common) < 2:
        raise ValueError("curves do not share a sampling grid")
    ell = curve_dirichlet.ell
    out = []
    for p1, p2 in zip(common, common[1:]):
        d1 = gn[p1] - gd[p1]
        d2 = gn[p2] - gd[p2]
        if d1 == 0.0:
            d1 = 1e-300 if d2 > 0 else -1e-300
        if d1 * d2 > 0:
            continue
        # linear interpolation seed
        w = d1 / (d1 - d2)
        p_seed = p1 + w * (p2 - p1)
        lam_seed = gn[p1] + w * (gn[p2] - gn[p1])
        crossing = _refine_crossing(geometry, ell, p_seed, lam_seed, curve_neumann.branch,
                                    curve_dirichlet.branch, warnings_sink)
        if crossing is None:
            continue
        if max(crossing.residuals) > 1e-10:
            _warn(warnings_sink,
                  f"discarding crossing candidate near {geometry.param_name}={crossing.a_star:.5f}: "
                  f"residuals {crossing.residuals} exceed 1e-10")
            continue
        out.append(crossing)
    return out


def _refine_crossing(geometry, ell, p_seed, lam_seed, m_branch, n_branch, sink):
    if geometry.label == "s2":
        polished = _newton_s2(ell, rho_of_height(p_seed), lam_seed)
        if polished is None:
            _warn(sink, "Newton refinement diverged; falling back to difference bisection")
            p_star, lam_star, res = _bisect_crossing(geometry, ell, p_seed, lam_seed, m_branch)
            rho_star = rho_of_height(p_star)
        else:
            rho_star, lam_star, res = polished
            p_star = height_of_rho(rho_star)
        h = 1e-5
    else:
        p_star, lam_star, res = _bisect_crossing(geometry, ell, p_seed, lam_seed, m_branch)
        rho_star = None
        h = 1e-3
    bc_pair = {"neumann": (0, "neumann"), "dirichlet": (ell, "dirichlet")}
    gap, gap_err = _slope_gap(geometry, p_star, lam_star, ell, bc_pair, h)
    p_star, lam_star = float(p_star), float(lam_star)
    rho_star = float(rho_star) if rho_star is not None else None
    res = tuple(float(r) for r in res)
    crossing = Crossing(
        geometry=geometry,
        a_star=p_star,
        lambda_star=lam_star,
        ell=ell,
        neumann_branch=m_branch,
        dirichlet_branch=n_branch,
        slope_gap=gap,
        slope_gap_error=gap_err,
        slope_gap_significant=abs(gap) > 10.0 * max(gap_err, 1e-12),
        residuals=res,
        rho_star=rho_star,
    )
    if geometry.label == "s2" and rho_star is not None:
        crossing.suggested_box = _suggest_box(ell, rho_star, lam_star)
    return crossing


def _suggest_box(ell: int, rho_star: float, lam_star: float) -> dict | None:
    """Candidate certification box around a refined crossing.

    The two eigenvalue curves through the crossing have rho-slopes
    m_N = 4 lambda/(1+rho^2)^2 * P_0/dQ_0 and m_D = -dP_ell/Q_ell; an
    alternating-edge-signs box needs its lambda/rho aspect ratio strictly
    between |m_D| and |m_N|, so the geometric mean is used.  Pads keep a
    wide margin over double-precision refinement error.
    """
    P0, dP0, Q0, dQ0 = eval_float(0, lam_star, rho_star)
    Pl, dPl, Ql, dQl = eval_float(ell, lam_star, rho_star)
    if dQ0 == 0 or Ql == 0:
        return None
    m_n = 4 * lam_star / (1 + rho_star**2) ** 2 * P0 / dQ0
    m_d = -dPl / Ql
    if not (math.isfinite(m_n) and math.isfinite(m_d)) or m_n * m_d <= 0:
        return None
    # the certifier anchors the Dirichlet alternation on the lambda edges
    # and the Neumann alternation on the rho edges, which requires the
    # Neumann curve to be the steeper one in rho
    if abs(m_n) <= abs(m_d):
        return None
    aspect = math.sqrt(abs(m_n) * abs(m_d))
    pad_rho = max(1e-8, 1.2e-6 / aspect)
    pad_lam = aspect * pad_rho
    return {
        "rho": (f"{rho_star - pad_rho:.17f}", f"{rho_star + pad_rho:.17f}"),
        "lambda": (f"{lam_star - pad_lam:.12f}", f"{lam_star + pad_lam:.12f}"),
    }


def _bisect_crossing(geometry, ell, p_seed, lam_seed, m_branch):
    """Bisection on the branch difference in the domain parameter."""

    def diff(p):
        ln = _branch_near(geometry, 0, "neumann", p, lam_seed)
        ld = _branch_near(geometry, ell, "dirichlet", p, lam_seed)
        return ln - ld, ln, ld

    w = max(5e-3, 1e-3 * abs(p_seed))
    lo, hi = p_seed - w, p_seed + w
    dlo = diff(lo)[0]
    dhi = diff(hi)[0]
    tries = 0
    while dlo * dhi > 0 and tries < 6:
        w *= 2
        lo, hi = p_seed - w, p_seed + w
        dlo = diff(lo)[0]
        dhi = diff(hi)[0]
        tries += 1
    if dlo * dhi > 0:
        raise ConvergenceError("could not bracket the branch crossing")
    mid = brentq(lambda p: diff(p)[0], lo, hi, xtol=1e-12 * max(1.0, abs(hi)), rtol=8.9e-16)

    # the fast integrator shifts each branch by ~rtol; polish the parameter
    # with tight-mode secant steps before reading off the eigenvalue
    def fine_diff(p):
        ln = _branch_near(geometry, 0, "neumann", p, lam_seed, fast=False)
        ld = _branch_near(geometry, ell, "dirichlet", p, lam_seed, fast=False)
        return ln - ld, ln, ld

    delta = 1e-7 * max(1.0, abs(mid))
    d0, ln, ld = fine_diff(mid)
    for _ in range(3):
        d1, _, _ = fine_diff(mid + delta)
        slope = (d1 - d0) / delta
        if slope == 0.0 or not math.isfinite(slope):
            break
        mid = mid - d0 / slope
        d0, ln, ld = fine_diff(mid)
        if abs(d0) < 1e-11 * max(1.0, abs(ln)):
            break
    lam_star = 0.5 * (ln + ld)
    if geometry.label == "s2":
        res = (abs(boundary_value(mid, 0, lam_star, "neumann")),
               abs(boundary_value(mid, ell, lam_star, "dirichlet")))
    else:
        t_end = geometry.cap_angle(mid)
        res = (_shoot_residuals(geometry, 0, lam_star, t_end)[0],
               _shoot_residuals(geometry, ell, lam_star, t_end)[1])
    return mid, lam_star, res


# -- first-order bifurcated boundary shape ------------------------------------


@dataclass
class BoundaryShape:
    """theta(phi) = arccos(a) + s * amplitude * cos(ell * phi), sampled."""

    a_star: float
    ell: int
    amplitude: float
    s: float
    samples: list  # (phi, theta)


def boundary_shape(crossing: Crossing, s: float, samples: int = 256) -> BoundaryShape:
    """First-order deformed cap boundary at a certified crossing.

    The deformation amplitude is the ratio of the Dirichlet profile's
    angular derivative to the second angular derivative of the Neumann
    profile at the boundary; with the Neumann condition in force the
    radial equation collapses the latter to -lambda * P_0, giving
        amplitude = dP_ell * (1 + rho^2) / (2 lambda P_0).
    The overall scale inherits the series normalization of both profiles.
    """
    if crossing.geometry.label != "s2" or crossing.rho_star is None:
        raise ValueError("boundary shapes are defined for refined crossings on s2")
    if max(crossing.residuals) > 1e-8:
        raise ValueError("crossing residuals too large to expand around")
    rho, lam = crossing.rho_star, crossing.lambda_star
    P0 = eval_float(0, lam, rho)[0]
    dPl = eval_float(crossing.ell, lam, rho)[1]
    psi_dd = -lam * P0  # second angular derivative of the Neumann profile
    if abs(psi_dd) < 1e-8:
        raise ValueError("degenerate Neumann profile: second derivative below 1e-8")
    amplitude = dPl * (1 + rho * rho) / (2 * lam * P0)
    tilde_a = math.acos(crossing.a_star)
    if abs(s * amplitude) >= tilde_a / 10.0:
        raise ValueError("perturbation too large: |s * amplitude| must stay below arccos(a)/10")
    pts = []
    for i in range(samples):
        phi = 2 * math.pi * i / samples
        pts.append((phi, tilde_a + s * amplitude * math.cos(crossing.ell * phi)))
    return BoundaryShape(crossing.a_star, crossing.ell, amplitude, s, pts)


# -- default grids and certifier seeding --------------------------------------


def figure_grid(geometry: Geometry, points: int = 400):
    """Sampling grid used for figure reproduction; refined toward a = 1."""
    if geometry.kind == "sphere":
        base = np.linspace(-0.95, 0.9, points - points // 4)
        tail = 0.98 - 0.08 * np.geomspace(1.0, 0.01, points // 4)
        return np.concatenate([base, tail])
    return np.linspace(0.6, 2.5, points)


def crossing_search_grid(geometry: Geometry, ell: int):
    if geometry.label == "s2":
        if ell >= 8:
            return np.linspace(0.40, 0.55, 16)
        return np.linspace(0.75, 0.87, 16)
    if geometry.label == "h2":
        return np.linspace(0.9, 1.9, 11)
    return np.linspace(-0.31, 0.29, 13)


def default_neumann_branch(geometry: Geometry, ell: int) -> int | None:
    # observed branches crossing the first Dirichlet branch of the given mode
    return {("s2", 8): 4, ("s2", 6): 3, ("s3", 7): 4, ("s4", 9): 5, ("h2", 4): 2}.get(
        (geometry.label, ell)
    )


def search_crossings(
    geometry: Geometry,
    ell: int,
    grid=None,
    neumann_branches=None,
    lambda_cap: float = 600.0,
    warnings_sink: list | None = None,
) -> list:
    """Trace the first Dirichlet branch against zonal Neumann branches and
    collect every transversal intersection found on the grid."""
    grid = crossing_search_grid(geometry, ell) if grid is None else grid
    dcurve = trace_curve(geometry, ell, "dirichlet", 0, grid, warnings_sink)
    if neumann_branches is None:
        hinted = default_neumann_branch(geometry, ell)
        lam_hi = max(l for _, l in dcurve.samples)
        counts = _eigator(geometry, 0, "neumann")(grid[0], min(lam_hi + 30.0, lambda_cap))
        neumann_branches = range(1, len(counts)) if hinted is None else [hinted]
    out = []
    for m in neumann_branches:
        try:
            ncurve = trace_curve(geometry, 0, "neumann", m, grid, warnings_sink)
        except ValueError:
            continue
        out.extend(find_crossing(ncurve, dcurve, warnings_sink))
    return out


def derive_ell6_profile(config) -> "Profile":
    """Locate the mode-6 crossing and wrap it as a certifiable profile.

    The box is the explorer's suggested enclosure around the refined
    crossing; expected corner signs are read off the float evaluations and
    must alternate, otherwise certification fails loudly downstream.
    Only the existence and slope conditions are certified on this profile.
    """
    from .certify import GateError, Profile

    crossings = search_crossings(S2, 6)
    if not crossings:
        raise GateError("no mode-6 crossing found on the search grid")
    cr = max(crossings, key=lambda c: c.slope_gap_significant)
    box = cr.suggested_box
    rho_lo, rho_hi = box["rho"]
    lam_lo, lam_hi = box["lambda"]

    def fsign(lam_str, rho_str, ell, which):
        vals = eval_float(ell, float(lam_str), float(rho_str))
        v = vals[0] if which == "P" else vals[1]
        return "+" if v > 0 else "-"

    pm_signs = (
        (fsign(lam_lo, rho_hi, 6, "P"), fsign(lam_hi, rho_lo, 6, "P")),
        (fsign(lam_lo, rho_hi, 0, "dP"), fsign(lam_hi, rho_lo, 0, "dP")),
    )
    if pm_signs[0][0] == pm_signs[0][1] or pm_signs[1][0] == pm_signs[1][1]:
        raise GateError("corner signs at the derived mode-6 box do not alternate")
    mid_lam = 0.5 * (float(lam_lo) + float(lam_hi))
    mid_rho = 0.5 * (float(rho_lo) + float(rho_hi))
    deriv_signs = (
        "+" if eval_float(6, mid_lam, mid_rho)[1] > 0 else "-",
        "+" if eval_float(0, mid_lam, mid_rho)[3] > 0 else "-",
    )
    return Profile(
        ell=6,
        rho_box=(rho_lo, rho_hi),
        lambda_box=(lam_lo, lam_hi),
        full=False,
        pm_signs=pm_signs,
        deriv_signs=deriv_signs,
    )


# -- serialization -------------------------------------------------------------


def curve_to_csv(curve: SpectrumCurve) -> str:
    lines = [
        f"# {curve.geometry.label},{curve.ell},{curve.bc},{curve.branch}",
        f"{curve.geometry.param_name},lambda",
    ]
    for p, lam in curve.samples:
        lines.append(f"{p:.17g},{lam:.17g}")
    return "\n".join(lines) + "\n"


def crossing_to_dict(cr: Crossing) -> dict:
    return {
        "geometry": cr.geometry.label,
        "a_star": cr.a_star,
        "lambda_star": cr.lambda_star,
        "ell": cr.ell,
        "neumann_branch": cr.neumann_branch,
        "dirichlet_branch": cr.dirichlet_branch,
        "slope_gap": cr.slope_gap,
        "slope_gap_error": cr.slope_gap_error,
        "slope_gap_significant": cr.slope_gap_significant,
        "residuals": list(cr.residuals),
        "rho_star": cr.rho_star,
        "suggested_box": cr.suggested_box,
    }


def shape_to_csv(shape: BoundaryShape) -> str:
    lines = [
        f"# a_star={shape.a_star:.17g},ell={shape.ell},amplitude={shape.amplitude:.17g},s={shape.s:.17g}",
        "phi,theta",
    ]
    for phi, theta in shape.samples:
        lines.append(f"{phi:.17g},{theta:.17g}")
    return "\n".join(lines) + "\n"
