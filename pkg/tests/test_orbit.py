"""Half-orbit tracing and one-form integration."""

import math

import pytest

from pwmelnikov.errors import NoBracket
from pwmelnikov.field import ScalarField
from pwmelnikov.orbit import (OneForm, differential_integral, dlog_integral,
                              find_section_point, line_integral,
                              trace_half_orbit)


H_CIRCLE = ScalarField("0 - (x^2 + y^2)/2")
H_UPPER_PARABOLA = ScalarField("0 - y - x^2")


def test_find_section_point():
    p = find_section_point(H_CIRCLE, -0.5, (1e-3, 3.0))
    assert p.x == pytest.approx(1.0, abs=1e-12)


def test_find_section_point_no_bracket():
    with pytest.raises(NoBracket):
        find_section_point(H_CIRCLE, -100.0, (1e-3, 3.0))


def test_half_orbit_lands_opposite():
    p = find_section_point(H_UPPER_PARABOLA, -0.25, (1e-3, 3.0))
    tr = trace_half_orbit(H_UPPER_PARABOLA, p, "upper")
    assert tr.end.x == pytest.approx(-0.5, abs=1e-9)
    assert tr.y[-1] == 0.0


def test_half_orbit_energy_conserved():
    p = find_section_point(H_CIRCLE, -0.5, (1e-3, 3.0))
    tr = trace_half_orbit(H_CIRCLE, p, "upper")
    h0 = H_CIRCLE(p.x, 0.0)
    drift = max(abs(H_CIRCLE(x, y) - h0) for x, y in zip(tr.x, tr.y))
    assert drift <= 1e-10


def test_circle_time_of_flight():
    # half period of the unit circle under this Hamiltonian is pi
    p = find_section_point(H_CIRCLE, -0.5, (1e-3, 3.0))
    tr = trace_half_orbit(H_CIRCLE, p, "upper")
    assert tr.time_of_flight == pytest.approx(math.pi, abs=1e-9)


def test_line_integral_area_form():
    # int(-y dx) over the upper unit semicircle equals its area pi/2
    p = find_section_point(H_CIRCLE, -0.5, (1e-3, 3.0))
    tr = trace_half_orbit(H_CIRCLE, p, "upper")
    form = OneForm(g=ScalarField("0 - y"), f=ScalarField("0"))
    # the trace runs right to left, opposite to the positive x direction
    val = line_integral(tr, form)
    assert val == pytest.approx(math.pi / 2, abs=1e-9)


def test_differential_integral_is_endpoint_difference():
    p = find_section_point(H_UPPER_PARABOLA, -0.25, (1e-3, 3.0))
    tr = trace_half_orbit(H_UPPER_PARABOLA, p, "upper")
    F = ScalarField("x^3 + x*y")
    val = differential_integral(tr, F)
    exact = F(tr.end.x, 0.0) - F(tr.start.x, 0.0)
    assert val == pytest.approx(exact, abs=1e-9)


def test_reversed_trace_flips_line_integral():
    p = find_section_point(H_CIRCLE, -0.5, (1e-3, 3.0))
    tr = trace_half_orbit(H_CIRCLE, p, "upper")
    form = OneForm(g=ScalarField("x^2"), f=ScalarField("y"))
    assert line_integral(tr.reversed(), form) == pytest.approx(
        -line_integral(tr, form), abs=1e-9)


def test_divided_integral_constant_divisor():
    # dividing by a constant field is an exact rescaling
    p = find_section_point(H_UPPER_PARABOLA, -0.25, (1e-3, 3.0))
    tr = trace_half_orbit(H_UPPER_PARABOLA, p, "upper")
    form = OneForm(g=ScalarField("x^2"), f=ScalarField("y"))
    plain = line_integral(tr, form)
    halved = line_integral(tr, form, divisor=ScalarField("2"))
    assert halved == pytest.approx(plain / 2.0, abs=1e-10)


def test_dlog_integral_log_coefficient():
    # With w = 1 the regularized integral of dlog|H_y| carries one unit of
    # log-divergence from each endpoint where H_y vanishes.
    p = find_section_point(H_CIRCLE, -0.5, (1e-3, 3.0))
    tr = trace_half_orbit(H_CIRCLE, p, "upper")
    w = ScalarField("1")
    reg = dlog_integral(tr, w)
    # both section endpoints have H_y = -y = 0; coefficients cancel in
    # pairs with opposite orientation
    assert reg.log_coefficient == pytest.approx(0.0, abs=1e-12)
    assert math.isfinite(reg.finite)


def test_dlog_integral_antisymmetric_weight():
    # w odd in x integrates to a finite value with cancelling divergences
    p = find_section_point(H_CIRCLE, -0.5, (1e-3, 3.0))
    tr = trace_half_orbit(H_CIRCLE, p, "upper")
    w = ScalarField("x")
    reg = dlog_integral(tr, w)
    assert abs(reg.log_coefficient) == pytest.approx(2.0, abs=1e-9)


def test_trace_csv_header(tmp_path):
    p = find_section_point(H_CIRCLE, -0.5, (1e-3, 3.0))
    tr = trace_half_orbit(H_CIRCLE, p, "upper")
    path = tmp_path / "trace.csv"
    with open(path, "w") as fh:
        tr.write_csv(fh)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x,y"
    assert len(lines) == tr.t.size + 1
