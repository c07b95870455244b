"""First- and second-order Melnikov computation: quadrature vs the exact
generator, boundary-perturbation routes, and their cross-checks."""

import math

import pytest

from pwmelnikov import presets
from pwmelnikov.bifurcation import odd_even_parts
from pwmelnikov.errors import DivisorVanishes
from pwmelnikov.exactpoly import (QuadraticCoefficients, center_center_m1,
                                  center_center_m2)
from pwmelnikov.field import ScalarField
from pwmelnikov.melnikov import (boundary_expansion, boundary_m1, boundary_m2,
                                 m1, m2, sweep, transform_boundary_system,
                                 write_sweep_csv)

QUAD = QuadraticCoefficients(a=0.3, b=-1.2, c=0.7, d=0.5, e=2.0, f=-0.4,
                             p=-0.8, q=1.1, s=0.2, l=1.4, m=-0.6, n=0.9,
                             A=0.25, B=-0.5, C=1.5, D=0.75, E=-1.0, F=0.1,
                             P=0.6, Q=-0.9, S=1.3, L=-0.2, M=0.8, N=-1.1)


def _system_from(co):
    return presets.center_center(
        upper=presets.quadratic_zone(c_f1=(co.a, co.b, co.c),
                                     c_g1=(co.d, co.e, co.f),
                                     c_f2=(co.A, co.B, co.C),
                                     c_g2=(co.D, co.E, co.F)),
        lower=presets.quadratic_zone(c_f1=(co.p, co.q, co.s),
                                     c_g1=(co.l, co.m, co.n),
                                     c_f2=(co.P, co.Q, co.S),
                                     c_g2=(co.L, co.M, co.N)),
        r_min=0.1, r_max=1.2)


def test_first_order_quadrature_matches_generator():
    sys_ = _system_from(QUAD)
    oracle = center_center_m1(QUAD)
    for r in (0.25, 0.6, 1.0):
        assert m1(sys_, r).m1 == pytest.approx(oracle(r), abs=1e-9)


def test_first_order_cubic_term_only():
    co = QuadraticCoefficients(d=0.5, l=1.4)
    sys_ = _system_from(co)
    for r in (0.25, 0.5, 1.0):
        assert m1(sys_, r).m1 == pytest.approx(
            (2.0 / 3.0) * (1.4 - 0.5) * r ** 3, abs=1e-9)


def test_second_order_quadrature_matches_generator():
    sys_ = _system_from(QUAD)
    oracle = center_center_m2(QUAD)
    for r in (0.3, 0.8):
        sample = m2(sys_, r)
        assert sample.m2 == pytest.approx(oracle(r), abs=1e-8)


def test_first_order_scaling_linearity():
    co = QuadraticCoefficients(a=0.3, b=-1.2, c=0.7, d=0.5, e=2.0, f=-0.4,
                               p=-0.8, q=1.1, s=0.2, l=1.4, m=-0.6, n=0.9)
    base = _system_from(co)
    doubled = presets.center_center(
        upper=base.upper.scaled_first_order(2.0),
        lower=base.lower.scaled_first_order(2.0),
        r_min=0.1, r_max=1.2)
    for r in (0.4, 0.9):
        assert m1(doubled, r).m1 == pytest.approx(2.0 * m1(base, r).m1,
                                                  rel=1e-13)


def test_sweep_csv_format(tmp_path):
    sys_ = _system_from(QuadraticCoefficients(d=1.0, l=1.0, D=2.0))
    samples = sweep(sys_, grid=[0.3, 0.6], order=2)
    path = tmp_path / "sweep.csv"
    with open(path, "w") as fh:
        write_sweep_csv(samples, fh)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("r,M1,M2,sigma,lambda,valid_m2")
    assert len(lines) == 3
    # d = l makes the first order vanish identically -> second order valid
    assert samples[0].valid_m2 is True


def test_sweep_flags_invalid_second_order():
    sys_ = _system_from(QuadraticCoefficients(d=1.0, l=3.0))
    samples = sweep(sys_, grid=[0.3, 0.6], order=2)
    assert all(s.valid_m2 is False for s in samples)


# -- boundary perturbations ------------------------------------------------

def test_boundary_first_order_routes_agree_center_center():
    sys_ = presets.center_center(boundary_f="x^3 - x")
    f = sys_.boundary.f
    for r in (0.3, 0.6, 0.9):
        closed = boundary_m1(sys_, r)
        assert closed.used_closed_form
        expect = 2.0 * (f(-r) - f(r))
        assert closed.value == pytest.approx(expect, abs=1e-10)
        transformed = m1(transform_boundary_system(sys_, 1), r).m1
        assert transformed == pytest.approx(expect, abs=1e-8)
        expansion = boundary_expansion(sys_, r)
        assert expansion.m1 == pytest.approx(expect, abs=1e-9)


def test_boundary_first_order_saddle_center():
    a = 7.0
    sys_ = presets.saddle_center(a_param=a, boundary_f="sin(x)")
    f_o, _ = odd_even_parts(sys_.boundary.f)
    for r in (0.3, 0.7):
        p = math.sqrt(1.0 - r)
        expect = -2.0 * f_o(p)         # f already contains the a-stretch
        assert boundary_m1(sys_, r).value == pytest.approx(expect, abs=1e-9)
        assert boundary_expansion(sys_, r).m1 == pytest.approx(expect,
                                                               abs=1e-9)


def test_boundary_second_order_endpoint_expansion_center_center():
    sys_ = presets.center_center(boundary_f="x^3 - x")
    fld = sys_.boundary.f
    fp = fld.d("x")
    for r in (0.4, 0.8):
        exp = boundary_expansion(sys_, r)
        d1 = fld(-r) - fld(r)
        expect_m2 = d1 * (fp(-r) + 2.0 * fp(r)) / r
        assert exp.m2 == pytest.approx(expect_m2, abs=1e-8)


def test_boundary_second_order_vanishes_for_even_f():
    sys_ = presets.center_center(boundary_f="x^2")
    for r in (0.4, 0.8):
        exp = boundary_expansion(sys_, r)
        assert exp.m1 == pytest.approx(0.0, abs=1e-10)
        assert exp.m2 == pytest.approx(0.0, abs=1e-10)
        reg = boundary_m2(sys_, r)
        assert reg.value == pytest.approx(0.0, abs=1e-8)


def test_boundary_routes_vanish_on_smooth_system():
    sys_ = presets.smooth_circle(boundary_f="sin(x)")
    for r in (0.5, 1.0, 1.5):
        assert abs(boundary_m1(sys_, r).value) <= 1e-10
        assert abs(boundary_m2(sys_, r).value) <= 1e-9
        exp = boundary_expansion(sys_, r)
        assert abs(exp.m1) <= 1e-10 and abs(exp.m2) <= 1e-9


def test_boundary_second_order_log_divergence_detected():
    # odd boundary function on the saddle-center annulus: the assembled
    # log-divergence coefficient does not cancel, so no finite value exists
    sys_ = presets.saddle_center(a_param=1.0, boundary_f="sin(x)")
    with pytest.raises(DivisorVanishes):
        boundary_m2(sys_, 0.5)


def test_boundary_second_order_log_cancels_for_even_f():
    sys_ = presets.saddle_center(a_param=1.0, boundary_f="cos(x)")
    reg = boundary_m2(sys_, 0.5)
    assert reg.value == pytest.approx(0.0, abs=1e-8)
    assert abs(reg.log_residual) <= 1e-8


def test_saddle_center_second_order_proportional_to_first():
    # the exact endpoint expansion gives M2 = M1 * (2 a f_o'(a p)/p - 2
    # f_e(a p)) with p = sqrt(1 - r); checked against a mixed-parity f
    a = 1.3
    sys_ = presets.saddle_center(a_param=a, boundary_f="sin(x) + x^2/5")
    f_o, f_e = odd_even_parts(sys_.boundary.f)
    fo_p = f_o.d("x")
    for r in (0.3, 0.6):
        p = math.sqrt(1.0 - r)
        m1v = -2.0 * f_o(p)
        factor = 2.0 * fo_p(p) / p - 2.0 * f_e(p)
        exp = boundary_expansion(sys_, r)
        assert exp.m1 == pytest.approx(m1v, abs=1e-9)
        assert exp.m2 == pytest.approx(m1v * factor, abs=1e-8)
