"""Half-orbit tracing of the unperturbed piecewise Hamiltonian flow and
line integrals of one-forms along the traced orbits.

Orbits are integrated in the time parameterization (xdot = H_y,
ydot = -H_x) with an adaptive RK 5(4) pair and dense output; the return
to the x-axis is localized by the solver's event machinery.  All one-form
integrals are evaluated as adaptive quadrature against the dense output,
never in the x- or y-chart, which keeps forms like omega/H_y finite away
from section endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .config import DEFAULT, Tolerances
from .errors import (DivisorVanishes, MultipleRoots, NoBracket, NoReturn,
                     TangentialReturn)
from .field import ScalarField


@dataclass(frozen=True)
class SectionPoint:
    """Point (x, 0) on the section ray, at a given level of the zone Hamiltonian."""
    x: float
    level_value: float

    @property
    def point(self):
        return (self.x, 0.0)


@dataclass(frozen=True)
class AnnulusWindow:
    """Level-parameter window [r_min, r_max] over the positive section ray."""
    r_min: float
    r_max: float
    section_bracket: tuple = (1e-3, 10.0)


@dataclass
class OrbitTrace:
    """Sampled half-orbit with dense output for quadrature.

    Samples run from the start section point to the return point; interior
    samples lie strictly inside the zone and H is conserved along them.
    """
    zone: str                      # "upper" | "lower"
    level_value: float
    hamiltonian: ScalarField
    start: SectionPoint
    end: SectionPoint
    time_of_flight: float
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    _sol: object = dfield(repr=False, default=None)
    direction: int = 1             # -1 for a reversed view

    def state(self, t):
        """Dense-output state (x, y) at time t."""
        if self.direction == 1:
            return self._sol(t)
        return self._sol(self.time_of_flight - t)

    def velocity(self, x, y):
        """(xdot, ydot) of the traced flow at a point, honoring reversal."""
        h = self.hamiltonian
        return (self.direction * h.d("y")(x, y), -self.direction * h.d("x")(x, y))

    def reversed(self):
        rev = OrbitTrace(
            zone=self.zone,
            level_value=self.level_value,
            hamiltonian=self.hamiltonian,
            start=self.end,
            end=self.start,
            time_of_flight=self.time_of_flight,
            t=self.time_of_flight - self.t[::-1],
            x=self.x[::-1].copy(),
            y=self.y[::-1].copy(),
            _sol=self._sol,
            direction=-self.direction,
        )
        return rev

    def write_csv(self, fh):
        fh.write("t,x,y\n")
        for ti, xi, yi in zip(self.t, self.x, self.y):
            fh.write(f"{ti!r},{xi!r},{yi!r}\n")


@dataclass(frozen=True)
class OneForm:
    """The one-form g dx - f dy."""
    g: ScalarField
    f: ScalarField


def find_section_point(h, level_value, bracket, tol: Tolerances = DEFAULT,
                       grid=64):
    """Locate p with H(p, 0) = level_value on the given x-axis bracket.

    The bracket is sampled on a grid first: no sign change raises NoBracket,
    more than one raises MultipleRoots (both signal an invalid annulus window).
    """
    a, b = bracket
    g = lambda x: h(x, 0.0) - level_value
    xs = np.linspace(a, b, grid)
    vals = np.array([g(x) for x in xs])
    # treat exact zeros on the grid as roots
    signs = np.sign(vals)
    changes = [i for i in range(grid - 1)
               if signs[i] != signs[i + 1] and signs[i] != 0]
    if not changes:
        if np.any(signs == 0):
            idx = int(np.argmin(np.abs(vals)))
            return SectionPoint(float(xs[idx]), float(level_value))
        raise NoBracket(f"no sign change of H(x,0)-level on [{a}, {b}]")
    if len(changes) > 1:
        raise MultipleRoots(f"{len(changes)} sign changes on [{a}, {b}]")
    i = changes[0]
    p = brentq(g, xs[i], xs[i + 1], xtol=1e-15, rtol=8.9e-16)
    if abs(g(p)) > tol.section_tol * (1.0 + abs(level_value)):
        raise NoBracket("root refinement failed the section tolerance")
    return SectionPoint(float(p), float(level_value))


def trace_half_orbit(h, start, zone, tol: Tolerances = DEFAULT):
    """Integrate the half-orbit of xdot = H_y, ydot = -H_x from a section point.

    Stops at the first transversal re-crossing of y = 0; raises NoReturn if
    the orbit leaves the bounding box or exceeds max time, TangentialReturn
    if |H_x| at the landing point is below the transversality threshold.
    """
    if zone not in ("upper", "lower"):
        raise ValueError(f"zone must be 'upper' or 'lower', got {zone!r}")
    hx = h.d("x")
    hy = h.d("y")
    ydot0 = -hx(start.x, 0.0)
    want = 1.0 if zone == "upper" else -1.0
    if ydot0 * want <= 0:
        raise ValueError(f"field does not point into the {zone} zone at x={start.x}")

    def rhs(t, s):
        return (hy(s[0], s[1]), -hx(s[0], s[1]))

    def section(t, s):
        return s[1]
    section.terminal = True
    section.direction = -want      # upper: catch + -> -, lower: - -> +

    box = tol.box

    def out_of_box(t, s):
        return box * box - max(s[0] * s[0], s[1] * s[1])
    out_of_box.terminal = True

    sol = solve_ivp(rhs, (0.0, tol.max_time), (start.x, 0.0),
                    method="RK45", rtol=tol.rk_rtol, atol=tol.rk_atol,
                    dense_output=True, events=(section, out_of_box))
    if sol.t_events[1].size:
        raise NoReturn("orbit left the bounding box; not a periodic-annulus orbit")
    if not sol.t_events[0].size:
        raise NoReturn("orbit did not return to the x-axis within max time")
    t_end = float(sol.t_events[0][0])
    x_end, y_end = (float(v) for v in sol.y_events[0][0])
    if abs(y_end) > tol.event_tol:
        raise NoReturn(f"event localization left |y| = {abs(y_end):.3g}")
    if abs(hx(x_end, 0.0)) < tol.transversality:
        raise TangentialReturn(f"|H_x| = {abs(hx(x_end, 0.0)):.3g} at return point")

    ts = sol.t[sol.t < t_end]
    xs = sol.y[0][: ts.size]
    ys = sol.y[1][: ts.size]
    ts = np.append(ts, t_end)
    xs = np.append(xs, x_end)
    ys = np.append(ys, 0.0)

    h0 = h(start.x, 0.0)
    drift = max(abs(h(xi, yi) - h0) for xi, yi in zip(xs, ys))
    if drift > tol.conservation_tol * (1.0 + abs(h0)):
        raise NoReturn(f"energy drift {drift:.3g} exceeds the conservation tolerance")

    end = SectionPoint(x_end, start.level_value)
    return OrbitTrace(zone=zone, level_value=start.level_value, hamiltonian=h,
                      start=start, end=end, time_of_flight=t_end,
                      t=ts, x=xs, y=ys, _sol=sol.sol)


def _check_interior_divisor(trace, divisor, tol):
    vals = [divisor(xi, yi) for xi, yi in zip(trace.x[1:-1], trace.y[1:-1])]
    if vals and min(abs(v) for v in vals) < tol.divisor_tol:
        raise DivisorVanishes("divisor below threshold at an interior sample")


def line_integral(trace, form, divisor=None, tol: Tolerances = DEFAULT):
    """Integrate the one-form g dx - f dy (optionally divided by a scalar
    field) along the trace, in the time parameterization."""
    if divisor is not None:
        _check_interior_divisor(trace, divisor, tol)
    g, f = form.g, form.f

    def integrand(t):
        x, y = trace.state(t)
        xd, yd = trace.velocity(x, y)
        val = g(x, y) * xd - f(x, y) * yd
        if divisor is not None:
            val /= divisor(x, y)
        return val

    val, _ = quad(integrand, 0.0, trace.time_of_flight,
                  epsabs=tol.quad_epsabs, epsrel=tol.quad_epsrel,
                  limit=tol.quad_limit)
    return val


def differential_integral(trace, f, tol: Tolerances = DEFAULT):
    """Integrate the exact differential dF along the trace.

    Equals F(end) - F(start) by the fundamental theorem; kept as a
    quadrature so it can serve as a consistency check on the trace.
    """
    fx = f.d("x")
    fy = f.d("y")

    def integrand(t):
        x, y = trace.state(t)
        xd, yd = trace.velocity(x, y)
        return fx(x, y) * xd + fy(x, y) * yd

    val, _ = quad(integrand, 0.0, trace.time_of_flight,
                  epsabs=tol.quad_epsabs, epsrel=tol.quad_epsrel,
                  limit=tol.quad_limit)
    return val


@dataclass(frozen=True)
class RegularizedIntegral:
    """Value of a log-divergent integral split into a finite part and the
    coefficient of the universal divergence log(delta) under a common
    time cutoff delta -> 0 at the section endpoints."""
    finite: float
    log_coefficient: float


def dlog_integral(trace, w, tol: Tolerances = DEFAULT):
    """Integrate w dlog|H_y| along the trace, regularizing endpoints where
    H_y vanishes.

    Near a vanishing endpoint H_y ~ a (t - t_end) with a = -H_yy H_x != 0,
    so w dlog|H_y| diverges like w(end) dt/(t - t_end).  The anchored
    subtraction w(end)*dlog|H_y| + (w - w(end))*dlog|H_y| isolates the
    divergence into w(end)*log(delta); the finite remainder (including the
    log of the linear rate a) is returned together with the log(delta)
    coefficient, which the caller must cancel against other terms.
    """
    h = trace.hamiltonian
    hy = h.d("y")
    hxy = h.partial("xy")
    hyy = h.partial("yy")

    def hy_rate(x, y):
        # d(H_y)/dt along the traced flow
        xd, yd = trace.velocity(x, y)
        return hxy(x, y) * xd + hyy(x, y) * yd

    # H_y must keep one sign strictly inside the trace
    interior = [hy(xi, yi) for xi, yi in zip(trace.x[1:-1], trace.y[1:-1])]
    if interior and (min(interior) < 0 < max(interior)):
        raise DivisorVanishes("H_y changes sign inside the trace")

    T = trace.time_of_flight
    tm = 0.5 * T
    xm, ym = trace.state(tm)
    hym = hy(xm, ym)
    if abs(hym) < tol.divisor_tol:
        raise DivisorVanishes("H_y vanishes at the trace midpoint")

    def raw_integrand(t):
        x, y = trace.state(t)
        return w(x, y) * hy_rate(x, y) / hy(x, y)

    finite = 0.0
    log_coef = 0.0

    for (ta, tb, endpoint_first) in ((0.0, tm, True), (tm, T, False)):
        t_end = ta if endpoint_first else tb
        xe, ye = trace.state(t_end)
        hy_end = hy(xe, ye)
        if abs(hy_end) > tol.endpoint_divisor_tol:
            val, _ = quad(raw_integrand, ta, tb, epsabs=tol.quad_epsabs,
                          epsrel=tol.quad_epsrel, limit=tol.quad_limit)
            finite += val
            continue
        rate = abs(hy_rate(xe, ye))
        if rate < tol.divisor_tol:
            raise DivisorVanishes("H_y vanishes to higher order at an endpoint")
        w_end = w(xe, ye)

        def anchored(t, w_end=w_end):
            x, y = trace.state(t)
            return (w(x, y) - w_end) * hy_rate(x, y) / hy(x, y)

        rem, _ = quad(anchored, ta, tb, epsabs=tol.quad_epsabs,
                      epsrel=tol.quad_epsrel, limit=tol.quad_limit)
        # int dlog|H_y| from the cutoff to the midpoint, oriented with time
        sign = 1.0 if endpoint_first else -1.0
        finite += rem + sign * w_end * (math.log(abs(hym)) - math.log(rate))
        log_coef += -sign * w_end

    return RegularizedIntegral(finite, log_coef)
