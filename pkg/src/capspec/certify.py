"""Machine-checked certificates for eigenvalue-branch crossings.

Every claim is reduced to strict signs of rigorous enclosures over boxes
in the (rho, lambda) plane:

  * corner + monotonicity sign checks propagate to uniform edge signs;
  * alternating edge signs of the two boundary functionals force a
    common zero inside the box (two-dimensional intermediate value
    theorem), i.e. a simultaneous Neumann/Dirichlet eigenvalue;
  * a mean-value branch-and-bound sweep excludes lower Dirichlet
    eigenvalues, pinning the crossing to the first branch;
  * bracketed sign flips count the zonal Neumann eigenvalues below the
    crossing;
  * a polynomial combination of the four enclosures separates the two
    branch slopes (transversality), and nonvanishing of the zonal
    profile rules out resonances.

Checks are assembled into a replayable JSON certificate (schema
"cert-v1").  Verified status always rests on a strict inequality of an
outward-rounded enclosure; precision exhaustion surfaces as Inconclusive,
never as a silent pass.
"""

from __future__ import annotations

import json
import platform
import sys
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction

import gmpy2

from . import __version__
from .interval import (
    Interval,
    Sign,
    add,
    from_decimal,
    hull,
    mul,
    sign_of,
    symmetric,
    _ctx,
)
from .legendre import (
    EigSlopes,
    LegendreQuery,
    coord_maps,
    eig_slopes,
    eval_all,
)

SCHEMA_VERSION = "cert-v1"

SIGN_CHAR = {Sign.POSITIVE: "+", Sign.NEGATIVE: "-", Sign.CONTAINS_ZERO: "0"}
CHAR_SIGN = {"+": Sign.POSITIVE, "-": Sign.NEGATIVE}

# which enclosure field is the derivative of which, per coordinate
_DERIV_OF = {
    ("P", "rho"): "dP",
    ("P", "lam"): "Q",
    ("dP", "lam"): "dQ",
    ("Q", "rho"): "dQ",
}


class Status(str, Enum):
    VERIFIED = "verified"
    FAILED = "failed"
    INCONCLUSIVE = "inconclusive"


class GateError(ValueError):
    """A deduction was attempted from records that do not support it."""


@dataclass(frozen=True)
class Box:
    """A rectangle in the (rho, lambda) parameter plane."""

    rho: Interval
    lam: Interval


@dataclass
class CheckRecord:
    id: str
    claim: str
    status: Status
    enclosure: Interval | None = None
    subdivisions: int = 0
    wall_time_ms: int = 0
    meta: dict = field(default_factory=dict)

    def verified(self) -> bool:
        return self.status is Status.VERIFIED


@dataclass(frozen=True)
class CertifyConfig:
    precision_bits: int = 256
    K: int = 100
    gamma: Fraction = Fraction(3, 2)
    tolerance: float = 1e-6
    max_depth: int = 40
    workers: int = 1
    profile: str = "ell8"
    rho_box: tuple[str, str] | None = None
    lambda_box: tuple[str, str] | None = None


@dataclass(frozen=True)
class Profile:
    """Certified scenario: mode, boxes, exclusion range, bracket list."""

    ell: int
    rho_box: tuple[str, str]
    lambda_box: tuple[str, str]
    lambda_floor: str = "2"
    lambda_aux: str | None = None
    neumann_brackets: tuple = ()
    full: bool = True  # run exclusion/brackets/nonresonance, not just existence+slope
    # corner signs: ((P at lam-lo corner, P at lam-hi corner), (dP at lam-lo, dP at lam-hi))
    pm_signs: tuple = (("+", "-"), ("-", "+"))
    # uniform signs of dP/drho (crossing mode) and of d(dP)/dlam (mode 0) on the box
    deriv_signs: tuple = ("-", "-")


PROFILE_ELL8 = Profile(
    ell=8,
    rho_box=("0.594723480694931", "0.594723480694970"),
    lambda_box=("154.191574494505", "154.191574494520"),
    lambda_aux="154.1914",
    neumann_brackets=((12, 13), (42, 43), (89, 90)),
)


@dataclass
class Conclusion:
    exists_crossing: bool = False
    rho_star: Interval | None = None
    a_star: Interval | None = None
    nu_star: Interval | None = None
    lambda_star: Interval | None = None
    n_star_is_zero: bool | None = None
    m_star_lower_bound: int | None = None
    transversal: bool | None = None
    nonresonant: bool | None = None
    # exact decimal enclosure of the crossing: the edge signs are certified
    # at the decimal coordinates themselves, so the decimals need no
    # outward re-rendering slack
    rho_star_decimal: tuple[str, str] | None = None
    lambda_star_decimal: tuple[str, str] | None = None


@dataclass
class Certificate:
    schema: str
    config: CertifyConfig
    checks: list
    conclusion: Conclusion
    fingerprint: dict

    def worst_status(self) -> Status:
        if any(c.status is Status.FAILED for c in self.checks):
            return Status.FAILED
        if any(c.status is Status.INCONCLUSIVE for c in self.checks):
            return Status.INCONCLUSIVE
        return Status.VERIFIED


def _now_ms() -> int:
    return time.perf_counter_ns() // 1_000_000


def _split_box(box: Box) -> tuple[Box, Box] | None:
    """Bisect the coordinate with larger relative width; None if too thin."""

    def relwidth(iv: Interval) -> float:
        w = float(iv.width())
        return w / max(1.0, abs(float(iv.midpoint())))

    order = ["rho", "lam"] if relwidth(box.rho) >= relwidth(box.lam) else ["lam", "rho"]
    from .interval import bisect, IntervalError

    for coord in order:
        iv = getattr(box, coord)
        if iv.is_degenerate():
            continue
        try:
            left, right = bisect(iv)
        except IntervalError:
            continue
        if coord == "rho":
            return Box(left, box.lam), Box(right, box.lam)
        return Box(box.rho, left), Box(box.rho, right)
    return None


def _adaptive_sign(f, box: Box, expected: Sign | None, max_depth: int):
    """Drive f over an adaptively bisected box until its sign is settled.

    expected None means "any strict sign on every leaf".  Returns
    (status, representative enclosure, subdivisions).
    """
    stack = [(box, 0)]
    seen: Interval | None = None
    subdivisions = 0
    while stack:
        b, depth = stack.pop()
        enc = f(b)
        seen = enc if seen is None else hull(seen, enc)
        s = sign_of(enc)
        if expected is None:
            if s is not Sign.CONTAINS_ZERO:
                continue
        else:
            if s is expected:
                continue
            if s is not Sign.CONTAINS_ZERO:
                return Status.FAILED, enc, subdivisions
        if depth >= max_depth:
            return Status.INCONCLUSIVE, enc, subdivisions
        halves = _split_box(b)
        if halves is None:
            return Status.INCONCLUSIVE, enc, subdivisions
        subdivisions += 1
        stack.append((halves[1], depth + 1))
        stack.append((halves[0], depth + 1))
    return Status.VERIFIED, seen, subdivisions


def verify_sign_on_box(
    ell: int,
    box: Box,
    target: str,
    expected: Sign | None,
    config: CertifyConfig,
    check_id: str,
    claim: str,
    corner: dict | None = None,
    max_depth: int | None = None,
) -> CheckRecord:
    """Certify a strict sign of P/dP/Q/dQ over a whole box.

    Verified only when every leaf sub-box has the expected strict sign;
    a strictly opposite leaf reports Failed, exhaustion Inconclusive.
    """
    if target not in ("P", "dP", "Q", "dQ"):
        raise GateError(f"unknown target {target!r}")
    t0 = _now_ms()

    def f(b: Box) -> Interval:
        ev = eval_all(LegendreQuery(ell, b.lam, b.rho, config.K, config.gamma))
        return getattr(ev, target)

    status, enc, subs = _adaptive_sign(f, box, expected, max_depth or config.max_depth)
    meta = {
        "kind": "sign",
        "ell": ell,
        "target": target,
        "expected": SIGN_CHAR[expected] if expected is not None else "nonzero",
        "box": box,
    }
    if corner:
        meta["corner"] = corner
    return CheckRecord(
        id=check_id,
        claim=claim,
        status=status,
        enclosure=enc,
        subdivisions=subs,
        wall_time_ms=_now_ms() - t0,
        meta=meta,
    )


def _require_verified(*records: CheckRecord) -> None:
    for r in records:
        if not r.verified():
            raise GateError(f"prerequisite check {r.id!r} has status {r.status.value}")


def _anchored_end(corner_iv: Interval, box_iv: Interval) -> str | None:
    if corner_iv.lo == box_iv.lo and corner_iv.hi <= box_iv.hi:
        return "lo"
    if corner_iv.hi == box_iv.hi and corner_iv.lo >= box_iv.lo:
        return "hi"
    return None


def edge_signs_from_corners(
    corner_checks: tuple[CheckRecord, CheckRecord],
    monotonicity_check: CheckRecord,
    check_id: str,
) -> CheckRecord:
    """Propagate two corner signs across opposite edges of a box.

    A strict corner sign plus a uniform strict sign of the derivative
    along the propagation coordinate extends the corner's sign over the
    entire edge through monotonicity.  The corner must sit at the end of
    the edge from which the function moves away from zero; anything else
    is a contradiction and is rejected.
    """
    _require_verified(*corner_checks, monotonicity_check)
    mono = monotonicity_check.meta
    box: Box = mono["box"]
    target = corner_checks[0].meta["target"]
    if corner_checks[1].meta["target"] != target:
        raise GateError("corner checks disagree on the target function")
    wrt = None
    for coord in ("rho", "lam"):
        if _DERIV_OF.get((target, coord)) == mono["target"]:
            wrt = coord
    if wrt is None:
        raise GateError(
            f"{mono['target']} is not the derivative of {target} in either coordinate"
        )
    if mono["expected"] not in CHAR_SIGN:
        raise GateError("monotonicity check must certify a strict sign")
    deriv_sign = mono["expected"]
    fix = "lam" if wrt == "rho" else "rho"

    edges = []
    for rec in corner_checks:
        cb: Box = rec.meta["box"]
        corner_sign = rec.meta["expected"]
        if corner_sign not in CHAR_SIGN:
            raise GateError("corner checks must certify strict signs")
        if rec.meta["ell"] != mono["ell"]:
            raise GateError("corner and monotonicity checks use different modes")
        wrt_end = _anchored_end(getattr(cb, wrt), getattr(box, wrt))
        fix_end = _anchored_end(getattr(cb, fix), getattr(box, fix))
        if wrt_end is None or fix_end is None:
            raise GateError(f"corner {rec.id!r} is not anchored at a box corner")
        # moving away from the corner the function must move away from zero
        if (wrt_end == "hi") != (deriv_sign != corner_sign):
            raise GateError(
                f"corner {rec.id!r}: sign {corner_sign} at {wrt}={wrt_end} cannot "
                f"propagate against derivative sign {deriv_sign}"
            )
        edges.append({"end": fix_end, "sign": corner_sign})

    if edges[0]["end"] == edges[1]["end"]:
        raise GateError("the two corners anchor the same edge")
    claim = (
        f"{target} (mode {mono['ell']}) keeps sign {edges[0]['sign']} on the "
        f"{fix}={edges[0]['end']} edge and {edges[1]['sign']} on the "
        f"{fix}={edges[1]['end']} edge"
    )
    return CheckRecord(
        id=check_id,
        claim=claim,
        status=Status.VERIFIED,
        meta={
            "kind": "edges",
            "ell": mono["ell"],
            "target": target,
            "fix": fix,
            "edges": edges,
            "box": box,
        },
    )


def verify_poincare_miranda(
    edge_records: list[CheckRecord], check_id: str
) -> tuple[CheckRecord, Interval, Interval]:
    """Conclude a common zero of two functionals from alternating edge signs.

    Needs one functional with opposite strict signs on the two lambda
    edges and another with opposite strict signs on the two rho edges of
    the same box; continuity then forces a simultaneous zero inside.
    Returns the concluding record plus the box sides as the enclosure of
    the zero.
    """
    _require_verified(*edge_records)
    by_fix: dict[str, dict] = {}
    boxes = []
    for rec in edge_records:
        m = rec.meta
        if m.get("kind") != "edges":
            raise GateError(f"record {rec.id!r} does not carry edge signs")
        entry = by_fix.setdefault(m["fix"], {"target": m["target"], "signs": {}})
        if entry["target"] != m["target"]:
            raise GateError(f"conflicting targets on the {m['fix']} edges")
        for e in m["edges"]:
            entry["signs"][e["end"]] = e["sign"]
        boxes.append(m["box"])
    if set(by_fix) != {"lam", "rho"}:
        raise GateError("need edge signs along both coordinates")
    if any(b.rho != boxes[0].rho or b.lam != boxes[0].lam for b in boxes):
        raise GateError("edge records refer to different boxes")
    for fix, entry in by_fix.items():
        signs = entry["signs"]
        if set(signs) != {"lo", "hi"}:
            raise GateError(f"missing an edge sign along {fix}")
        if signs["lo"] == signs["hi"]:
            raise GateError(f"signs do not alternate across the {fix} edges")
    if by_fix["lam"]["target"] == by_fix["rho"]["target"]:
        raise GateError("both alternations come from the same functional")
    box = boxes[0]
    claim = (
        f"{by_fix['lam']['target']} and {by_fix['rho']['target']} vanish "
        "simultaneously at some interior point of the box"
    )
    rec = CheckRecord(
        id=check_id,
        claim=claim,
        status=Status.VERIFIED,
        meta={
            "kind": "crossing",
            "box": box,
            "targets": {fix: entry["target"] for fix, entry in by_fix.items()},
        },
    )
    return rec, box.rho, box.lam


def exclude_zeros_branch_bound(
    ell: int,
    lambda_range: Interval,
    rho_box: Interval,
    tolerance: float,
    config: CertifyConfig,
    check_id: str,
) -> CheckRecord:
    """Certify a uniform strict sign of P over a wide lambda range.

    Each lambda sub-interval V is tested through the mean-value form
    P(V) in P(mid) + (V - mid) * Q(V); if the resulting interval excludes
    zero the sub-interval is done, otherwise it is split.  Sub-intervals
    reaching the width tolerance leave the check Inconclusive.  One
    strict point sign then fixes the sign over the whole range.
    """
    t0 = _now_ms()
    prec = max(lambda_range.prec, rho_box.prec)
    up = _ctx(prec, "u")
    subboxes: list[Interval] = []
    subdivisions = 0
    status = Status.VERIFIED
    witness: Interval | None = None

    stack = [lambda_range]
    while stack:
        lam_sub = stack.pop()
        mid = lam_sub.midpoint()
        lam_mid = Interval(mid, mid, prec)
        radius = gmpy2.next_above(max(up.sub(lam_sub.hi, mid), up.sub(mid, lam_sub.lo)))
        alpha = eval_all(LegendreQuery(ell, lam_mid, rho_box, config.K, config.gamma)).P
        beta = eval_all(LegendreQuery(ell, lam_sub, rho_box, config.K, config.gamma)).Q
        enc = add(alpha, mul(symmetric(radius, prec), beta))
        if sign_of(enc) is not Sign.CONTAINS_ZERO:
            subboxes.append(lam_sub)
            continue
        if float(lam_sub.width()) <= tolerance:
            status = Status.INCONCLUSIVE
            witness = enc
            subboxes.append(lam_sub)
            break
        from .interval import bisect

        left, right = bisect(lam_sub)
        subdivisions += 1
        stack.append(right)
        stack.append(left)

    point_sign = None
    if status is Status.VERIFIED:
        lam_pt = Interval(lambda_range.lo, lambda_range.lo, prec)
        pt = eval_all(LegendreQuery(ell, lam_pt, rho_box, config.K, config.gamma)).P
        s = sign_of(pt)
        if s is Sign.CONTAINS_ZERO:
            status = Status.INCONCLUSIVE
            witness = pt
        else:
            point_sign = SIGN_CHAR[s]
            witness = pt
    sign_txt = {"+": "positive", "-": "negative", None: "of one strict sign"}[point_sign]
    claim = (
        f"P (mode {ell}) is {sign_txt} for every lambda in "
        f"[{lambda_range.to_decimal_pair(17)[0]}, {lambda_range.to_decimal_pair(17)[1]}] "
        "over the rho box"
    )
    return CheckRecord(
        id=check_id,
        claim=claim,
        status=status,
        enclosure=witness,
        subdivisions=subdivisions,
        wall_time_ms=_now_ms() - t0,
        meta={
            "kind": "exclusion",
            "ell": ell,
            "lambda_range": lambda_range,
            "rho": rho_box,
            "sign": point_sign,
            "partition": [iv.to_decimal_pair(25) for iv in subboxes],
            "subbox_count": len(subboxes),
        },
    )


def certify_n_star_zero(
    exclusion: CheckRecord,
    q_negative: CheckRecord,
    crossing: CheckRecord,
    check_id: str,
) -> CheckRecord:
    """Conclude that the crossing sits on the first Dirichlet branch.

    Chain: the first cap Dirichlet eigenvalue exceeds the half-sphere
    value 2 (cited, by domain monotonicity); the exclusion sweep leaves
    no eigenvalue in [2, lambda_aux]; strict monotonicity of P in lambda
    (Q < 0 above lambda_aux) allows at most one zero there, and the
    crossing provides it.
    """
    _require_verified(exclusion, q_negative, crossing)
    if exclusion.meta.get("kind") != "exclusion":
        raise GateError("first record must be an exclusion sweep")
    if q_negative.meta.get("target") != "Q" or q_negative.meta.get("expected") != "-":
        raise GateError("second record must certify Q < 0")
    if crossing.meta.get("kind") != "crossing":
        raise GateError("third record must be a crossing conclusion")
    box: Box = crossing.meta["box"]
    qbox: Box = q_negative.meta["box"]
    if exclusion.meta["ell"] != q_negative.meta["ell"]:
        raise GateError("exclusion and monotonicity use different modes")
    if not exclusion.meta["rho"].encloses(box.rho) or not qbox.rho.encloses(box.rho):
        raise GateError("rho ranges do not cover the crossing box")
    if not (qbox.lam.lo <= exclusion.meta["lambda_range"].hi):
        raise GateError("gap between the exclusion range and the monotonicity range")
    if not (qbox.lam.lo <= box.lam.lo and box.lam.hi <= qbox.lam.hi):
        raise GateError("crossing box is not inside the monotonicity range")
    return CheckRecord(
        id=check_id,
        claim="the crossing eigenvalue is the first Dirichlet eigenvalue of its mode",
        status=Status.VERIFIED,
        meta={
            "kind": "first-branch",
            "axioms": [
                "first Dirichlet eigenvalue of the half-sphere equals 2 (classical)",
                "Dirichlet eigenvalues decrease under domain inclusion (variational principle)",
            ],
            "inputs": [exclusion.id, q_negative.id, crossing.id],
        },
    )


def certify_m_star_bound(
    bracket_checks: list[CheckRecord],
    crossing_lambda: Interval,
    check_id: str,
) -> CheckRecord:
    """Lower-bound the Neumann index of the crossing eigenvalue.

    Consecutive pairs of bracket_checks certify signs of dP (mode 0) at
    two point lambdas over a common rho interval.  Each pair with
    opposite strict signs traps a zonal Neumann eigenvalue below the
    crossing; together with the constant mode at 0 this bounds the
    crossing's index from below.  Pairs without a sign flip contribute
    nothing (the bound just weakens).
    """
    _require_verified(*bracket_checks)
    if len(bracket_checks) % 2 != 0:
        raise GateError("bracket checks must come in pairs")
    contributing = []
    prev_hi = None
    for lo_rec, hi_rec in zip(bracket_checks[::2], bracket_checks[1::2]):
        for rec in (lo_rec, hi_rec):
            if rec.meta.get("target") != "dP" or rec.meta.get("ell") != 0:
                raise GateError(f"{rec.id!r} is not a zonal Neumann bracket check")
        lo_lam: Interval = lo_rec.meta["box"].lam
        hi_lam: Interval = hi_rec.meta["box"].lam
        if lo_rec.meta["box"].rho != hi_rec.meta["box"].rho:
            raise GateError("bracket endpoints use different rho ranges")
        if not (lo_lam.hi < hi_lam.lo):
            raise GateError("bracket endpoints out of order")
        if prev_hi is not None and not (prev_hi < lo_lam.lo):
            raise GateError("brackets overlap")
        prev_hi = hi_lam.hi
        if hi_lam.hi >= crossing_lambda.lo:
            raise GateError("bracket is not below the crossing")
        if lo_rec.meta["expected"] != hi_rec.meta["expected"]:
            contributing.append((lo_lam.to_decimal_pair(10)[0], hi_lam.to_decimal_pair(10)[1]))
    bound = len(contributing) + 1  # the constant mode contributes eigenvalue 0
    return CheckRecord(
        id=check_id,
        claim=f"the crossing is at least the zonal Neumann eigenvalue of index {bound}",
        status=Status.VERIFIED,
        meta={
            "kind": "neumann-count",
            "m_star_lower_bound": bound,
            "brackets": contributing,
            "axioms": ["the constant eigenfunction gives the zonal Neumann eigenvalue 0"],
        },
    )


def certify_transversality(
    slopes: EigSlopes,
    q_ell: Interval,
    dq_zero: Interval,
    box: Box,
    ell: int,
    check_id: str,
) -> CheckRecord:
    """The two branch slopes differ iff the slope-separating expression,
    and both slope denominators, exclude zero over the whole box."""
    signs = {
        "expr": sign_of(slopes.transversality_expr),
        "Q_ell": sign_of(q_ell),
        "dQ_0": sign_of(dq_zero),
    }
    ok = all(s is not Sign.CONTAINS_ZERO for s in signs.values())
    meta = {
        "kind": "transversality",
        "ell": ell,
        "box": box,
        "signs": {k: SIGN_CHAR[v] for k, v in signs.items()},
    }
    if slopes.mu_prime is not None:
        meta["neumann_slope"] = slopes.mu_prime
    if slopes.lam_prime is not None:
        meta["dirichlet_slope"] = slopes.lam_prime
    return CheckRecord(
        id=check_id,
        claim="the Neumann and Dirichlet branch slopes differ at the crossing",
        status=Status.VERIFIED if ok else Status.FAILED,
        enclosure=slopes.transversality_expr,
        meta=meta,
    )


def certify_nonresonance(nr_check: CheckRecord, check_id: str) -> CheckRecord:
    """Rule out every other Dirichlet eigenvalue of compatible symmetry.

    Multiples of the crossing mode are separated by strict eigenvalue
    monotonicity in the radial index and in the angular mode (cited
    variational facts); the remaining zonal case is excluded by the
    certified nonvanishing of the zonal profile over the box.
    """
    _require_verified(nr_check)
    if nr_check.meta.get("target") != "P" or nr_check.meta.get("ell") != 0:
        raise GateError("nonresonance needs a nonvanishing check of the zonal profile")
    if nr_check.meta.get("expected") not in ("nonzero", "+", "-"):
        raise GateError("nonresonance check must exclude zero")
    return CheckRecord(
        id=check_id,
        claim="no other Dirichlet eigenvalue of compatible symmetry meets the crossing",
        status=Status.VERIFIED,
        meta={
            "kind": "nonresonance",
            "axioms": [
                "Dirichlet eigenvalues increase strictly with the radial index (variational)",
                "Dirichlet eigenvalues increase strictly with the angular mode (variational)",
            ],
            "inputs": [nr_check.id],
        },
    )


# -- orchestration ----------------------------------------------------------


def _fingerprint() -> dict:
    return {
        "package": f"capspec {__version__}",
        "python": sys.version.split()[0],
        "gmpy2": gmpy2.version(),
        "mpfr": gmpy2.mpfr_version(),
        "platform": platform.platform(),
    }


def resolve_profile(config: CertifyConfig) -> Profile:
    if config.profile == "ell8":
        prof = PROFILE_ELL8
    elif config.profile == "ell6":
        from .explorer import derive_ell6_profile

        prof = derive_ell6_profile(config)
    else:
        raise GateError(f"unknown profile {config.profile!r}")
    if config.rho_box is not None:
        prof = replace(prof, rho_box=config.rho_box)
    if config.lambda_box is not None:
        prof = replace(prof, lambda_box=config.lambda_box)
    return prof


def run_certificate(config: CertifyConfig) -> Certificate:
    """Execute all checks of the configured profile in dependency order."""
    prof = resolve_profile(config)
    prec = config.precision_bits
    ell = prof.ell
    rho_box = from_decimal(*prof.rho_box, prec)
    lam_box = from_decimal(*prof.lambda_box, prec)
    box = Box(rho_box, lam_box)
    corner_ll = Box(
        from_decimal(prof.rho_box[1], prof.rho_box[1], prec),
        from_decimal(prof.lambda_box[0], prof.lambda_box[0], prec),
    )
    corner_uu = Box(
        from_decimal(prof.rho_box[0], prof.rho_box[0], prec),
        from_decimal(prof.lambda_box[1], prof.lambda_box[1], prec),
    )
    checks: list[CheckRecord] = []
    conclusion = Conclusion()

    (sig_d_lo, sig_d_hi), (sig_n_lo, sig_n_hi) = prof.pm_signs
    deriv_d, deriv_n = prof.deriv_signs

    # existence: corner and monotonicity checks, edges, crossing
    c1 = verify_sign_on_box(
        ell, corner_ll, "P", CHAR_SIGN[sig_d_lo], config,
        "bifurcation.pm.dirichlet.corner-lo",
        f"P (mode {ell}) at the (lambda-lo, rho-hi) corner is {sig_d_lo}",
        corner={"lam": "lo", "rho": "hi"},
    )
    c2 = verify_sign_on_box(
        ell, corner_uu, "P", CHAR_SIGN[sig_d_hi], config,
        "bifurcation.pm.dirichlet.corner-hi",
        f"P (mode {ell}) at the (lambda-hi, rho-lo) corner is {sig_d_hi}",
        corner={"lam": "hi", "rho": "lo"},
    )
    c3 = verify_sign_on_box(
        ell, box, "dP", CHAR_SIGN[deriv_d], config,
        "bifurcation.pm.dirichlet.drho",
        f"dP/drho (mode {ell}) has uniform sign {deriv_d} on the whole box",
    )
    c4 = verify_sign_on_box(
        0, corner_ll, "dP", CHAR_SIGN[sig_n_lo], config,
        "bifurcation.pm.neumann.corner-lo",
        f"dP/drho (mode 0) at the (lambda-lo, rho-hi) corner is {sig_n_lo}",
        corner={"lam": "lo", "rho": "hi"},
    )
    c5 = verify_sign_on_box(
        0, corner_uu, "dP", CHAR_SIGN[sig_n_hi], config,
        "bifurcation.pm.neumann.corner-hi",
        f"dP/drho (mode 0) at the (lambda-hi, rho-lo) corner is {sig_n_hi}",
        corner={"lam": "hi", "rho": "lo"},
    )
    c6 = verify_sign_on_box(
        0, box, "dQ", CHAR_SIGN[deriv_n], config,
        "bifurcation.pm.neumann.dlam",
        f"d(dP/drho)/dlambda (mode 0) has uniform sign {deriv_n} on the whole box",
    )
    checks += [c1, c2, c3, c4, c5, c6]

    pm_ok = all(c.verified() for c in (c1, c2, c3, c4, c5, c6))
    crossing_rec = None
    if pm_ok:
        try:
            edges_d = edge_signs_from_corners((c1, c2), c3, "bifurcation.edges.dirichlet")
            edges_n = edge_signs_from_corners((c4, c5), c6, "bifurcation.edges.neumann")
            crossing_rec, rho_star, lam_star = verify_poincare_miranda(
                [edges_d, edges_n], "bifurcation.crossing"
            )
            checks += [edges_d, edges_n, crossing_rec]
        except GateError as exc:
            checks.append(
                CheckRecord(
                    id="bifurcation.crossing",
                    claim="edge-sign propagation or alternation broke down",
                    status=Status.FAILED,
                    meta={"kind": "crossing", "error": str(exc)},
                )
            )
            crossing_rec = None
    if crossing_rec is not None:
        coords = coord_maps(rho=rho_star, lam=lam_star)
        conclusion.exists_crossing = True
        conclusion.rho_star = rho_star
        conclusion.lambda_star = lam_star
        conclusion.a_star = coords.a
        conclusion.nu_star = coords.nu
        conclusion.rho_star_decimal = tuple(prof.rho_box)
        conclusion.lambda_star_decimal = tuple(prof.lambda_box)

    if prof.full and crossing_rec is not None:
        # first-branch deduction: exclusion sweep plus lambda-monotonicity
        lam_low = from_decimal(prof.lambda_floor, prof.lambda_aux, prec)
        excl = exclude_zeros_branch_bound(
            ell, lam_low, rho_box, config.tolerance, config, "first-branch.exclusion"
        )
        checks.append(excl)
        qneg_box = Box(rho_box, from_decimal(prof.lambda_aux, prof.lambda_box[1], prec))
        qneg = verify_sign_on_box(
            ell, qneg_box, "Q", Sign.NEGATIVE, config,
            "first-branch.lambda-monotonicity",
            f"Q (mode {ell}) is negative between lambda-aux and the box top",
        )
        checks.append(qneg)
        if excl.verified() and qneg.verified():
            nrec = certify_n_star_zero(excl, qneg, crossing_rec, "first-branch.conclusion")
            checks.append(nrec)
            conclusion.n_star_is_zero = True
        else:
            conclusion.n_star_is_zero = False

        # spectral position of the Neumann branch
        bracket_recs = []
        all_ok = True
        for lo, hi in prof.neumann_brackets:
            for lam_val, side in ((lo, "lo"), (hi, "hi")):
                b = Box(rho_box, from_decimal(str(lam_val), str(lam_val), prec))
                rec = verify_sign_on_box(
                    0, b, "dP", None, config,
                    f"neumann-brackets.{lo}-{hi}.{side}",
                    f"dP/drho (mode 0) has a strict sign at lambda = {lam_val}",
                )
                # tighten: record the realized sign for the pairing gate
                if rec.verified():
                    rec.meta["expected"] = SIGN_CHAR[sign_of(rec.enclosure)]
                bracket_recs.append(rec)
                all_ok = all_ok and rec.verified()
        checks += bracket_recs
        if all_ok:
            mrec = certify_m_star_bound(bracket_recs, lam_box, "neumann-count")
            checks.append(mrec)
            conclusion.m_star_lower_bound = mrec.meta["m_star_lower_bound"]
        else:
            conclusion.m_star_lower_bound = 0

    # transversality on the full box
    if crossing_rec is not None:
        t0 = _now_ms()
        ev0 = eval_all(LegendreQuery(0, lam_box, rho_box, config.K, config.gamma))
        evl = eval_all(LegendreQuery(ell, lam_box, rho_box, config.K, config.gamma))
        slopes = eig_slopes(ev0, evl, coord_maps(rho=rho_box, lam=lam_box))
        trec = certify_transversality(
            slopes, evl.Q, ev0.dQ, box, ell, "transversality.slopes"
        )
        trec.wall_time_ms = _now_ms() - t0
        checks.append(trec)
        conclusion.transversal = trec.verified()

    if prof.full and crossing_rec is not None:
        nr_sign = verify_sign_on_box(
            0, box, "P", None, config,
            "nonresonance.zonal-profile",
            "P (mode 0) excludes zero on the whole box",
        )
        checks.append(nr_sign)
        if nr_sign.verified():
            nr = certify_nonresonance(nr_sign, "nonresonance.conclusion")
            checks.append(nr)
            conclusion.nonresonant = True
        else:
            conclusion.nonresonant = False

    return Certificate(
        schema=SCHEMA_VERSION,
        config=config,
        checks=checks,
        conclusion=conclusion,
        fingerprint=_fingerprint(),
    )


# -- serialization ----------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, Interval):
        lo, hi = obj.to_decimal_pair(25)
        return {"lo": lo, "hi": hi}
    if isinstance(obj, Box):
        return {"rho": _jsonable(obj.rho), "lambda": _jsonable(obj.lam)}
    if isinstance(obj, (Status, Sign)):
        return obj.value
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def check_to_dict(rec: CheckRecord) -> dict:
    return {
        "id": rec.id,
        "claim": rec.claim,
        "status": rec.status.value,
        "enclosure": _jsonable(rec.enclosure) if rec.enclosure is not None else None,
        "subdivisions": rec.subdivisions,
        "wall_time_ms": rec.wall_time_ms,
        "meta": _jsonable(rec.meta),
    }


def certificate_to_dict(cert: Certificate) -> dict:
    cfg = cert.config
    return {
        "schema": cert.schema,
        "config": {
            "precision_bits": cfg.precision_bits,
            "K": cfg.K,
            "gamma": _jsonable(cfg.gamma),
            "tolerance": cfg.tolerance,
            "max_depth": cfg.max_depth,
            "workers": cfg.workers,
            "profile": cfg.profile,
            "rho_box": list(cfg.rho_box) if cfg.rho_box else None,
            "lambda_box": list(cfg.lambda_box) if cfg.lambda_box else None,
        },
        "checks": [check_to_dict(c) for c in cert.checks],
        "conclusion": {
            "exists_crossing": cert.conclusion.exists_crossing,
            "rho_star": _jsonable(cert.conclusion.rho_star),
            "a_star": _jsonable(cert.conclusion.a_star),
            "nu_star": _jsonable(cert.conclusion.nu_star),
            "lambda_star": _jsonable(cert.conclusion.lambda_star),
            "rho_star_decimal": list(cert.conclusion.rho_star_decimal)
            if cert.conclusion.rho_star_decimal
            else None,
            "lambda_star_decimal": list(cert.conclusion.lambda_star_decimal)
            if cert.conclusion.lambda_star_decimal
            else None,
            "n_star_is_zero": cert.conclusion.n_star_is_zero,
            "m_star_lower_bound": cert.conclusion.m_star_lower_bound,
            "transversal": cert.conclusion.transversal,
            "nonresonant": cert.conclusion.nonresonant,
        },
        "fingerprint": cert.fingerprint,
    }


def certificate_to_json(cert: Certificate) -> str:
    return json.dumps(certificate_to_dict(cert), indent=2, sort_keys=True)
