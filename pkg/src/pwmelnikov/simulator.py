"""Event-driven simulation of the perturbed piecewise system.

This module is the ground-truth oracle for the analytic path: it
integrates the true perturbed flow in original coordinates, detects
switching-curve crossings with the solver's event machinery, classifies
boundary points by the Filippov sign test, builds the energy difference
map over one full return, extracts finite-epsilon Melnikov estimates by
convergence-ladder fits, and verifies predicted limit cycles as fixed
points of the return map.

Boundary-perturbed systems (switching curve y = eps*f(x)) are simulated
with the unperturbed Hamiltonian fields on each side of the curved
boundary, so this path shares no code with the coordinate transform used
by the analytic route.  Systems with interior zone perturbations keep the
straight boundary y = 0 and integrate the perturbed fields.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dfield
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .config import DEFAULT, Tolerances
from .errors import (DegenerateEvent, FitIllConditioned, NoFixedPoint,
                     NoReturn, OrderExceeded, SlidingReached)
from .field import ScalarField, parse
from .melnikov import PiecewiseSystem


@dataclass(frozen=True)
class SwitchingPoint:
    """Point on the switching curve with its Filippov classification."""
    x: float
    y: float
    classification: str            # Crossing | Sliding | Escaping | Degenerate
    s_plus: float
    s_minus: float
    contact_orders: Optional[tuple] = None


@dataclass
class Segment:
    """One smooth piece of a trajectory inside a single zone."""
    zone: str                      # "upper" | "lower"
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    energy_drift: float


@dataclass
class Trajectory:
    segments: list
    events: list                   # dicts {t, x, y, kind, classification}
    start: tuple
    end: tuple

    def write_csv(self, fh):
        fh.write("t,x,y,zone\n")
        for seg in self.segments:
            for ti, xi, yi in zip(seg.t, seg.x, seg.y):
                fh.write(f"{ti!r},{xi!r},{yi!r},{seg.zone}\n")

    def write_events_json(self, fh):
        json.dump(self.events, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class DifferenceRecord:
    """Energy change over one full return, with the four-part split."""
    r: float
    epsilon: float
    value: float
    l_parts: tuple
    q: float


def _boundary_fn(system, epsilon):
    """(f, f') of the switching curve y = eps*f(x); zero pair if straight."""
    if system.boundary is not None:
        f = system.boundary.f
        return f, f.d("x")
    zero = ScalarField("0", ("x",))
    return zero, zero


def classify_boundary_point(system: PiecewiseSystem, x, epsilon,
                            tol: Tolerances = DEFAULT) -> SwitchingPoint:
    """Filippov sign test at the switching-curve point (x, eps*f(x)).

    s_pm = H_x_pm + eps * H_y_pm * f'(x) evaluated at the point; crossing
    iff s+ s- > 0, sliding iff s+ < 0 < s-, escaping iff s- < 0 < s+.
    When either sign is within 1e-10 of zero the point is degenerate and
    the contact orders of both zone fields are attached.
    """
    f, fp = _boundary_fn(system, epsilon)
    y = epsilon * f(x)
    fpx = fp(x)

    def s(h):
        return h.d("x")(x, y) + epsilon * h.d("y")(x, y) * fpx

    s_plus = s(system.h_plus)
    s_minus = s(system.h_minus)
    if abs(s_plus) <= 1e-10 or abs(s_minus) <= 1e-10:
        orders = []
        for h in (system.h_plus, system.h_minus):
            try:
                orders.append(contact_order(h, x, epsilon,
                                            f=system.boundary.f
                                            if system.boundary else None,
                                            tol=tol))
            except OrderExceeded:
                orders.append(None)
        return SwitchingPoint(float(x), float(y), "Degenerate",
                              float(s_plus), float(s_minus), tuple(orders))
    if s_plus * s_minus > 0:
        kind = "Crossing"
    elif s_plus < 0 < s_minus:
        kind = "Sliding"
    else:
        kind = "Escaping"
    return SwitchingPoint(float(x), float(y), kind,
                          float(s_plus), float(s_minus))


def contact_order(h: ScalarField, x, epsilon=0.0, f=None, max_k=4,
                  tol: Tolerances = DEFAULT) -> int:
    """Contact order of the zone field with the switching curve at x.

    With phi = y - eps*f(x) and X the Hamiltonian field of h, returns the
    smallest k <= max_k with |X^k phi| > 1e-10 at (x, eps*f(x)), the
    iterated Lie derivatives built symbolically.  Raises OrderExceeded
    when all k <= max_k vanish.
    """
    if max_k > 4:
        raise ValueError("max_k is capped at 4")
    phi = parse("y", ("x", "y"))
    if f is not None and epsilon != 0.0:
        phi = phi - float(epsilon) * f.expr
        y0 = epsilon * f(x)
    else:
        y0 = 0.0
    xdot = h.expr.diff("y")
    ydot = -h.expr.diff("x")
    lie = phi
    for k in range(1, max_k + 1):
        lie = xdot * lie.diff("x") + ydot * lie.diff("y")
        val = ScalarField(lie, ("x", "y"))(x, y0)
        if abs(val) > 1e-10:
            return k
    raise OrderExceeded(f"all Lie derivatives up to order {max_k} vanish")


def _zone_field(system, zone, epsilon, backward=False):
    """Callable (x, y) -> (xdot, ydot) of the active zone."""
    h = system.h_plus if zone == "upper" else system.h_minus
    hy = h.d("y")
    hx = h.d("x")
    sign = -1.0 if backward else 1.0
    if system.boundary is not None:
        return lambda x, y: (sign * hy(x, y), -sign * hx(x, y))
    pert = system.upper if zone == "upper" else system.lower
    e1, e2 = epsilon, epsilon * epsilon

    def field(x, y):
        return (sign * (hy(x, y) + e1 * pert.f1(x, y) + e2 * pert.f2(x, y)),
                sign * (-hx(x, y) + e1 * pert.g1(x, y) + e2 * pert.g2(x, y)))
    return field


def _entry_zone(system, x, epsilon, backward, tol):
    """Zone the trajectory enters from a boundary point, or SlidingReached."""
    f, fp = _boundary_fn(system, epsilon)
    y = epsilon * f(x)
    fpx = fp(x)
    candidates = []
    for zone, want in (("upper", 1.0), ("lower", -1.0)):
        fx, fy = _zone_field(system, zone, epsilon, backward)(x, y)
        phidot = fy - epsilon * fpx * fx
        if phidot * want > tol.transversality:
            candidates.append(zone)
    if len(candidates) != 1:
        raise SlidingReached(
            f"boundary point x={x} admits {len(candidates)} entry zones; "
            "crossing semantics undefined")
    return candidates[0]


def _integrate_segment(system, zone, x0, y0, epsilon, backward, tol):
    """Flow one zone until the next switching-curve hit."""
    f, _ = _boundary_fn(system, epsilon)
    field = _zone_field(system, zone, epsilon, backward)
    want = 1.0 if zone == "upper" else -1.0

    def rhs(t, s):
        return field(s[0], s[1])

    def boundary(t, s):
        return s[1] - epsilon * f(s[0])
    boundary.terminal = True
    boundary.direction = -want

    box = tol.box

    def out_of_box(t, s):
        return box * box - max(s[0] * s[0], s[1] * s[1])
    out_of_box.terminal = True

    sol = solve_ivp(rhs, (0.0, tol.max_time), (float(x0), float(y0)),
                    method="RK45", rtol=tol.rk_rtol, atol=tol.rk_atol,
                    dense_output=True, events=(boundary, out_of_box))
    if sol.t_events[1].size:
        raise NoReturn("trajectory left the bounding box")
    if not sol.t_events[0].size:
        raise NoReturn("trajectory did not return to the switching curve")
    t_end = float(sol.t_events[0][0])
    if t_end <= tol.event_separation:
        raise DegenerateEvent(f"boundary event at t = {t_end:.3g}")
    x_end = float(sol.y_events[0][0][0])
    y_end = epsilon * f(x_end)   # project exactly onto the curve
    if abs(float(sol.y_events[0][0][1]) - y_end) > tol.event_tol:
        raise NoReturn("event localization missed the switching curve")

    ts = sol.t[sol.t < t_end]
    xs = sol.y[0][: ts.size]
    ys = sol.y[1][: ts.size]
    ts = np.append(ts, t_end)
    xs = np.append(xs, x_end)
    ys = np.append(ys, y_end)

    h = system.h_plus if zone == "upper" else system.h_minus
    if system.boundary is not None:
        h0 = h(float(x0), float(y0))
        drift = max(abs(h(xi, yi) - h0) for xi, yi in zip(xs, ys))
    else:
        drift = 0.0   # perturbed fields are not Hamiltonian; nothing to check
    return Segment(zone, ts, xs, ys, drift), (x_end, y_end)


def flow_to_section(system: PiecewiseSystem, start, epsilon,
                    target="return", backward=False,
                    tol: Tolerances = DEFAULT) -> Trajectory:
    """Flow the perturbed system from a switching-curve point.

    target "switch" stops at the first switching-curve hit; "return"
    completes the full return (two crossings).  Zone handoff happens at
    Crossing points only; hitting a Sliding or Escaping point raises
    SlidingReached, a Degenerate landing raises DegenerateEvent.
    """
    if target not in ("switch", "return"):
        raise ValueError(f"target must be 'switch' or 'return', got {target!r}")
    x0, y0 = float(start[0]), float(start[1])
    sp = classify_boundary_point(system, x0, epsilon, tol)
    events = [{"t": 0.0, "x": sp.x, "y": sp.y, "kind": "start",
               "classification": sp.classification}]
    if sp.classification in ("Sliding", "Escaping"):
        raise SlidingReached(f"start point is {sp.classification}")
    if sp.classification == "Degenerate":
        raise DegenerateEvent("start point is a degenerate boundary point")

    hops = 1 if target == "switch" else 2
    segments = []
    x, y = sp.x, sp.y
    t_offset = 0.0
    for _ in range(hops):
        zone = _entry_zone(system, x, epsilon, backward, tol)
        seg, (x, y) = _integrate_segment(system, zone, x, y, epsilon,
                                         backward, tol)
        seg.t = seg.t + t_offset
        t_offset = float(seg.t[-1])
        segments.append(seg)
        landing = classify_boundary_point(system, x, epsilon, tol)
        events.append({"t": t_offset, "x": landing.x, "y": landing.y,
                       "kind": "switch",
                       "classification": landing.classification})
        if landing.classification in ("Sliding", "Escaping"):
            raise SlidingReached(
                f"trajectory landed on a {landing.classification} point "
                f"at x = {landing.x}")
        if landing.classification == "Degenerate":
            raise DegenerateEvent(
                f"trajectory landed on a degenerate point at x = {landing.x}")
    return Trajectory(segments, events, (x0, y0), (x, y))


def difference_map(system: PiecewiseSystem, r, epsilon,
                   tol: Tolerances = DEFAULT) -> DifferenceRecord:
    """Energy change H+(Q) - H+(P) over one full return from P(r).

    P is the section point lifted onto the switching curve; the return
    crosses the curve at P2 on the far side and lands at Q.  The value is
    split into the telescoping parts
      L1 = H+(Q) - H-(Q),    L2 = H-(Q) - H-(P2),
      L3 = H-(P2) - H+(P2),  L4 = H+(P2) - H+(P),
    which sum to the value exactly.
    """
    f, _ = _boundary_fn(system, epsilon)
    p = system.section_point(r, tol).x
    yp = epsilon * f(p)
    traj = flow_to_section(system, (p, yp), epsilon, target="return", tol=tol)
    (x2, y2) = (traj.events[1]["x"], traj.events[1]["y"])
    (xq, yq) = traj.end
    hp, hm = system.h_plus, system.h_minus
    l1 = hp(xq, yq) - hm(xq, yq)
    l2 = hm(xq, yq) - hm(x2, y2)
    l3 = hm(x2, y2) - hp(x2, y2)
    l4 = hp(x2, y2) - hp(p, yp)
    value = hp(xq, yq) - hp(p, yp)
    return DifferenceRecord(float(r), float(epsilon), float(value),
                            (float(l1), float(l2), float(l3), float(l4)),
                            float(xq))


DEFAULT_LADDER = (1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4)


@dataclass(frozen=True)
class NumericMelnikov:
    """Finite-epsilon Melnikov estimates from a convergence ladder."""
    m1_hat: float
    m2_hat: Optional[float]
    slopes: dict                   # observed convergence orders
    records: tuple                 # the DifferenceRecords used
    excluded: tuple = ()           # epsilons dropped as degenerate


def _loglog_slope(eps, vals, noise_floor):
    pts = [(e, abs(v)) for e, v in zip(eps, vals) if abs(v) > noise_floor]
    if len(pts) < 2:
        return math.inf            # everything at the noise floor
    le = np.log([p[0] for p in pts])
    lv = np.log([p[1] for p in pts])
    slope, _ = np.polyfit(le, lv, 1)
    return float(slope)


def numeric_melnikov(system: PiecewiseSystem, r, ladder=None,
                     analytic_m1=None,
                     tol: Tolerances = DEFAULT) -> NumericMelnikov:
    """Estimate M1 (and M2) from the difference map on an epsilon ladder.

    The ladder must be a descending positive sequence with at least four
    usable rungs.  M1_hat comes from the least-squares fit of
    value = M1*eps + M2*eps^2; when an analytic M1 is supplied, M2_hat is
    the intercept of the fit (value - eps*M1)/eps^2 = M2 + c*eps,
    otherwise the quadratic coefficient of the first fit.  Slopes report
    the observed convergence orders of the value and of the first-order
    residual; rungs whose events are degenerate are excluded.
    """
    if ladder is None:
        ladder = DEFAULT_LADDER
    ladder = tuple(float(e) for e in ladder)
    if any(e <= 0 for e in ladder) or list(ladder) != sorted(ladder,
                                                             reverse=True):
        raise ValueError("ladder must be a descending positive sequence")
    records = []
    excluded = []
    for e in ladder:
        try:
            records.append(difference_map(system, r, e, tol))
        except DegenerateEvent:
            excluded.append(e)
    if len(records) < 4:
        raise FitIllConditioned(
            f"only {len(records)} usable rungs; at least 4 required")
    eps = np.array([rec.epsilon for rec in records])
    vals = np.array([rec.value for rec in records])

    design = np.column_stack([eps, eps ** 2])
    coef, _, rank, _ = np.linalg.lstsq(design, vals, rcond=None)
    if rank < 2:
        raise FitIllConditioned("epsilon design matrix is rank deficient")
    m1_hat = float(coef[0])

    if analytic_m1 is not None:
        resid = vals - eps * float(analytic_m1)
        # residuals at the noise floor are zero: dividing them by eps^2
        # would only amplify roundoff
        clamped = np.where(np.abs(resid) <= tol.noise_floor, 0.0, resid)
        w = clamped / eps ** 2
        fit = np.polyfit(eps, w, 1)
        m2_hat = float(fit[1])
    else:
        m2_hat = float(coef[1])
        resid = vals - eps * m1_hat

    nf = tol.noise_floor
    slopes = {
        "value": _loglog_slope(eps, vals, nf),
        "first_order_residual": _loglog_slope(
            eps, np.abs(vals / eps - (float(analytic_m1)
                                      if analytic_m1 is not None
                                      else m1_hat)), nf),
        "residual_after_m1": _loglog_slope(eps, resid, nf),
    }
    return NumericMelnikov(m1_hat, m2_hat, slopes, tuple(records),
                           tuple(excluded))


@dataclass(frozen=True)
class CycleVerification:
    """Return-map fixed-point check of a predicted limit cycle."""
    converged: bool
    p_hat: Optional[float]
    derivative: Optional[float]
    stable: Optional[bool]
    epsilon: float
    degenerate: bool = False       # eps = 0: every orbit is closed


def _return_x(system, p, epsilon, tol):
    f, _ = _boundary_fn(system, epsilon)
    traj = flow_to_section(system, (p, epsilon * f(p)), epsilon,
                           target="return", tol=tol)
    return traj.end[0]


def verify_limit_cycle(system: PiecewiseSystem, r_star, epsilon,
                       tol: Tolerances = DEFAULT) -> CycleVerification:
    """Locate a fixed point of the full return map near the predicted cycle.

    Searches expanding brackets around p(r_star) for a sign change of the
    displacement q(p) - p, refines it with Brent's method, and estimates
    the return-map derivative by central difference; the cycle is stable
    iff |derivative| < 1.  Raises NoFixedPoint when no sign change exists;
    eps = 0 is reported as the degenerate identity-map case.
    """
    p_star = system.section_point(r_star, tol).x

    def displacement(p):
        return _return_x(system, p, epsilon, tol) - p

    if epsilon == 0.0:
        return CycleVerification(False, None, None, None, 0.0,
                                 degenerate=True)

    scale = 1.0 + abs(p_star)
    bracket = None
    for width in (1e-3, 3e-3, 1e-2, 3e-2, 1e-1):
        lo, hi = p_star - width * scale, p_star + width * scale
        try:
            dlo, dhi = displacement(lo), displacement(hi)
        except (SlidingReached, NoReturn, DegenerateEvent):
            break
        if dlo * dhi < 0:
            bracket = (lo, hi, dlo, dhi)
            break
    if bracket is None:
        raise NoFixedPoint(
            f"no sign change of the displacement near p = {p_star}")
    p_hat = float(brentq(displacement, bracket[0], bracket[1],
                         xtol=1e-13, rtol=8.9e-16))
    step = 1e-5 * scale
    deriv = (_return_x(system, p_hat + step, epsilon, tol)
             - _return_x(system, p_hat - step, epsilon, tol)) / (2.0 * step)
    return CycleVerification(True, p_hat, float(deriv),
                             bool(abs(deriv) < 1.0), float(epsilon))


def cycle_verifier(system, r_star, epsilon, tol: Tolerances = DEFAULT):
    """Adapter matching the verifier signature expected by count_cycles."""
    try:
        return verify_limit_cycle(system, r_star, epsilon, tol)
    except NoFixedPoint:
        return CycleVerification(False, None, None, None, float(epsilon))
