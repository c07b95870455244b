"""Root isolation, stability classification, cycle counting, and the
closed-form generators."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from pwmelnikov import presets
from pwmelnikov.bifurcation import (center_center_closed_form, count_cycles,
                                    isolate_roots, odd_even_parts,
                                    report_record, stability,
                                    write_reports_json)
from pwmelnikov.exactpoly import QuadraticCoefficients
from pwmelnikov.field import ScalarField
from pwmelnikov.melnikov import boundary_m1


def test_isolate_roots_cubic():
    fn = lambda h: -(640.0 / 63.0) * (h ** 3 - 6.000000005 * h ** 2
                                      + 11.0 * h - 6.0)
    recs = isolate_roots(fn, (0.0, 5.0), 4096)
    assert [r.multiplicity_estimate for r in recs] == [1, 1, 1]
    for rec, expect in zip(recs, (1.000000003, 1.999999980, 3.000000022)):
        assert rec.r_star == pytest.approx(expect, abs=1e-6)
        assert rec.bracket[1] - rec.bracket[0] <= 1e-10


def test_isolate_roots_constant_is_empty():
    assert isolate_roots(lambda x: 1.0, (0.0, 5.0), 64) == []


def test_isolate_roots_small_root_fine_grid():
    fn = lambda h: (256.0 / 21.0) * h ** 3 - (3680.0 / 21.0) * h ** 2 \
        + (4.0 / 75.0) * h
    recs = isolate_roots(fn, (1e-9, 20.0), 2 ** 18)
    assert len(recs) == 2
    lo = 115.0 / 16.0 - (3.0 / 80.0) * math.sqrt(36733.0)
    hi = 115.0 / 16.0 + (3.0 / 80.0) * math.sqrt(36733.0)
    assert recs[0].r_star == pytest.approx(lo, rel=1e-10)
    assert recs[1].r_star == pytest.approx(hi, rel=1e-10)


def test_isolate_roots_double_root():
    recs = isolate_roots(lambda x: (x - 1.0) ** 2, (0.0, 2.0), 256)
    assert len(recs) == 1
    assert recs[0].multiplicity_estimate == 2
    assert recs[0].r_star == pytest.approx(1.0, abs=1e-8)


def test_isolate_roots_ignores_noise():
    # a function that is zero up to float noise yields no roots
    fn = lambda x: (x + 1.0) - 1.0 - x
    assert isolate_roots(fn, (0.1, 2.0), 512) == []


def test_isolate_roots_grid_too_small():
    with pytest.raises(ValueError):
        isolate_roots(lambda x: x, (0.0, 1.0), 4)


def test_stability_simple_root():
    sys_ = presets.saddle_center(a_param=7.0, boundary_f="sin(x)")
    m1_fn = lambda r: boundary_m1(sys_, r).value
    r1 = 1.0 - (math.pi / 7.0) ** 2          # stable cycle
    r2 = 1.0 - (2.0 * math.pi / 7.0) ** 2    # unstable cycle
    v1 = stability(sys_, r1, m1_fn)
    v2 = stability(sys_, r2, m1_fn)
    assert v1.stable and v1.criterion_value < 0
    assert not v2.stable and v2.criterion_value > 0


def test_stability_orientation_of_level_parameterization():
    # the two-center preset has level = -r^2 decreasing in r, so the raw
    # slope sign is reversed; the verdict matches simulated return-map
    # iteration (see the simulator cross-check test)
    sys_ = presets.center_center(boundary_f="x^3 - x", r_min=0.2, r_max=1.4)
    m1_fn = lambda r: boundary_m1(sys_, r).value
    v = stability(sys_, 1.0, m1_fn)
    assert not v.stable
    assert v.criterion_value == pytest.approx(8.0, abs=1e-3)


def test_count_cycles_center_center():
    sys_ = presets.center_center(boundary_f="x^3 - x", r_min=0.2, r_max=1.4)
    reports = count_cycles(sys_)
    assert len(reports) == 1
    assert reports[0].root.r_star == pytest.approx(1.0, abs=1e-10)


def test_count_cycles_saddle_center_two_roots():
    sys_ = presets.saddle_center(a_param=7.0, boundary_f="sin(x)")
    reports = count_cycles(sys_)
    expected = sorted(1.0 - (k * math.pi / 7.0) ** 2 for k in (1, 2))
    assert len(reports) == 2
    for rep, exp in zip(reports, expected):
        assert rep.root.r_star == pytest.approx(exp, abs=1e-8)


def test_count_cycles_even_boundary_function_none():
    sys_ = presets.saddle_center(a_param=7.0, boundary_f="cos(x)")
    assert count_cycles(sys_) == []


def test_count_cycles_requires_boundary():
    sys_ = presets.center_center()
    with pytest.raises(ValueError):
        count_cycles(sys_)


def test_report_json_round_trip(tmp_path):
    import json
    sys_ = presets.center_center(boundary_f="x^3 - x", r_min=0.2, r_max=1.4)
    reports = count_cycles(sys_)
    path = tmp_path / "reports.json"
    with open(path, "w") as fh:
        write_reports_json(reports, fh)
    data = json.loads(path.read_text())
    assert set(data[0]) == {"r_star", "multiplicity", "stable",
                            "criterion_value", "verified", "epsilon_used"}
    assert data[0]["verified"] is None


def test_closed_form_report_fields():
    co = QuadraticCoefficients(d=1.0, l=1.0, D=2.0, L=5.0)
    rep = center_center_closed_form(co)
    assert rep.m1.is_zero
    assert rep.m2(0.5) == pytest.approx(2.0 * (5.0 - 2.0) / 3.0 * 0.125)
    assert rep.m2_prime is not None
    assert rep.residuals == (0.0, 0.0)
    assert rep.printed_m2_prime.coeffs[0] == rep.m2_prime.coeffs[0]


def test_closed_form_all_zero():
    rep = center_center_closed_form(QuadraticCoefficients())
    assert rep.m1.is_zero and rep.m2.is_zero
    assert rep.m2_prime is not None and rep.m2_prime.is_zero


def test_odd_even_parts_examples():
    f = ScalarField("x^2 + x", ("x",))
    f_o, f_e = odd_even_parts(f)
    for x in (-1.5, 0.2, 2.0):
        assert f_o(x) == pytest.approx(x)
        assert f_e(x) == pytest.approx(x * x)
    s_o, s_e = odd_even_parts(ScalarField("sin(x)", ("x",)))
    assert s_o(1.0) == pytest.approx(math.sin(1.0))
    assert s_e(1.0) == pytest.approx(0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=5))
def test_odd_even_parts_reconstruct(coeffs):
    text = " + ".join(f"({c})*x^{k}" for k, c in enumerate(coeffs))
    f = ScalarField(text, ("x",))
    f_o, f_e = odd_even_parts(f)
    for x in (-1.2, 0.4, 0.9):
        assert f_o(x) + f_e(x) == pytest.approx(f(x), abs=1e-9)
        assert f_o(-x) == pytest.approx(-f_o(x), abs=1e-9)
        assert f_e(-x) == pytest.approx(f_e(x), abs=1e-9)


def test_cycle_count_matches_positive_odd_zeros():
    # boundary function with odd part x(x^2 - 0.25)(x^2 - 1): positive
    # zeros at 0.5 and 1.0 inside the section image -> two cycles
    sys_ = presets.center_center(
        boundary_f="x*(x^2 - 1/4)*(x^2 - 1) + x^2",
        r_min=0.2, r_max=1.3)
    reports = count_cycles(sys_)
    assert [round(rep.root.r_star, 6) for rep in reports] == [0.5, 1.0]
