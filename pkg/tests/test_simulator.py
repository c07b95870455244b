"""Event-driven simulation: Filippov classification, contact orders,
trajectories, the difference map, ladder fits, and cycle verification."""

import json
import math

import pytest

from pwmelnikov import presets
from pwmelnikov.bifurcation import count_cycles, stability
from pwmelnikov.errors import (NoFixedPoint, OrderExceeded, SlidingReached)
from pwmelnikov.field import ScalarField
from pwmelnikov.melnikov import (LevelMap, PiecewiseSystem, ZonePerturbation,
                                 boundary_m1)
from pwmelnikov.orbit import AnnulusWindow
from pwmelnikov.simulator import (classify_boundary_point, contact_order,
                                  cycle_verifier, difference_map,
                                  flow_to_section, numeric_melnikov,
                                  verify_limit_cycle)


def _paper_sign_saddle_center():
    """Saddle over center with the lower Hamiltonian written +(x^2+y^2)/2.

    With this sign the lower field rotates against the upper one, so the
    x-axis between the zones is a sliding segment; used to exercise the
    sliding branch of the classifier.
    """
    return PiecewiseSystem(
        h_plus=ScalarField("(y - 1)^2/2 - x^2/2"),
        h_minus=ScalarField("(x^2 + y^2)/2"),
        upper=ZonePerturbation.zero(),
        lower=ZonePerturbation.zero(),
        annulus=AnnulusWindow(0.05, 0.95, (1e-3, 1.0)),
        level_map=LevelMap(ScalarField("r/2", ("r",)),
                           ScalarField("(1 - r)/2", ("r",))),
        boundary=None,
        name="sliding-example")


def test_classify_crossing():
    sys_ = presets.center_center(boundary_f="x^3 - x")
    sp = classify_boundary_point(sys_, 0.7, 0.0)
    assert sp.classification == "Crossing"
    assert sp.s_plus == pytest.approx(-1.4)
    assert sp.s_minus == pytest.approx(-1.4)


def test_classify_degenerate_origin_with_contact_orders():
    sys_ = presets.center_center()
    sp = classify_boundary_point(sys_, 0.0, 0.0)
    assert sp.classification == "Degenerate"
    assert sp.contact_orders == (2, 2)


def test_classify_sliding():
    sp = classify_boundary_point(_paper_sign_saddle_center(), 0.5, 0.0)
    assert sp.classification == "Sliding"
    assert sp.s_plus < 0 < sp.s_minus


def test_classify_escaping():
    sp = classify_boundary_point(_paper_sign_saddle_center(), -0.5, 0.0)
    assert sp.classification == "Escaping"


def test_contact_order_tangency():
    sys_ = presets.center_center()
    assert contact_order(sys_.h_plus, 0.0) == 2
    assert contact_order(ScalarField("(y - 1)^2/2 - x^2/2"), 0.0) == 2


def test_contact_order_transversal():
    sys_ = presets.center_center()
    assert contact_order(sys_.h_plus, 0.7) == 1


def test_contact_order_exceeded():
    # the zero Hamiltonian never moves off the manifold
    with pytest.raises(OrderExceeded):
        contact_order(ScalarField("0"), 0.3)


def test_flow_unperturbed_reduces_to_half_orbit():
    sys_ = presets.center_center(boundary_f="x^3 - x")
    traj = flow_to_section(sys_, (0.5, 0.0), 0.0, target="switch")
    assert traj.end[0] == pytest.approx(-0.5, abs=1e-9)
    assert traj.end[1] == pytest.approx(0.0, abs=1e-12)
    assert [seg.zone for seg in traj.segments] == ["upper"]


def test_flow_full_return_small_deviation():
    eps = 0.01
    sys_ = presets.center_center(boundary_f="x^3 - x", epsilon=eps)
    f = sys_.boundary.f
    traj = flow_to_section(sys_, (0.8, eps * f(0.8)), eps, target="return")
    assert [seg.zone for seg in traj.segments] == ["upper", "lower"]
    assert traj.end[0] == pytest.approx(0.8, abs=10 * eps)
    assert traj.end[1] == pytest.approx(eps * f(traj.end[0]), abs=1e-12)


def test_flow_from_sliding_point_raises():
    with pytest.raises(SlidingReached):
        flow_to_section(_paper_sign_saddle_center(), (0.5, 0.0), 0.0)


def test_per_zone_energy_conservation():
    eps = 0.01
    sys_ = presets.saddle_center(a_param=7.0, boundary_f="sin(x)",
                                 epsilon=eps)
    f = sys_.boundary.f
    p = sys_.section_point(0.5).x
    traj = flow_to_section(sys_, (p, eps * f(p)), eps, target="return")
    for seg in traj.segments:
        assert seg.energy_drift <= 1e-9


def test_reversibility_unperturbed():
    sys_ = presets.center_center(boundary_f="x^3 - x")
    traj = flow_to_section(sys_, (0.8, 0.0), 0.0, target="return")
    back = flow_to_section(sys_, traj.end, 0.0, target="return",
                           backward=True)
    assert back.end[0] == pytest.approx(0.8, abs=1e-8)


def test_trajectory_csv_and_event_log(tmp_path):
    eps = 0.01
    sys_ = presets.center_center(boundary_f="x^3 - x", epsilon=eps)
    f = sys_.boundary.f
    traj = flow_to_section(sys_, (0.5, eps * f(0.5)), eps, target="return")
    csv_path = tmp_path / "traj.csv"
    with open(csv_path, "w") as fh:
        traj.write_csv(fh)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "t,x,y,zone"
    assert lines[1].endswith(",upper") and lines[-1].endswith(",lower")
    ev_path = tmp_path / "events.json"
    with open(ev_path, "w") as fh:
        traj.write_events_json(fh)
    events = json.loads(ev_path.read_text())
    assert [e["kind"] for e in events] == ["start", "switch", "switch"]
    assert all(e["classification"] == "Crossing" for e in events)


def test_difference_map_zero_at_zero_epsilon():
    sys_ = presets.center_center(boundary_f="x^3 - x")
    rec = difference_map(sys_, 0.5, 0.0)
    assert rec.value == pytest.approx(0.0, abs=1e-12)
    assert rec.q == pytest.approx(0.5, abs=1e-10)


def test_difference_map_telescoping_identity():
    for sys_, rs in (
        (presets.center_center(boundary_f="x^3 - x"), (0.4, 0.8, 1.1)),
        (presets.saddle_center(a_param=7.0, boundary_f="sin(x)"), (0.3, 0.7)),
        (presets.smooth_circle(boundary_f="sin(x)"), (0.6, 1.2)),
    ):
        for r in rs:
            for eps in (1e-2, 2.5e-3, 6.25e-4):
                rec = difference_map(sys_, r, eps)
                gap = abs(sum(rec.l_parts) - rec.value)
                assert gap <= 1e-12 * (1.0 + abs(rec.value))


def test_difference_map_even_f_second_order_small():
    sys_ = presets.center_center(boundary_f="x^2")
    rec = difference_map(sys_, 0.6, 1e-2)
    assert abs(rec.value) <= 1e-4 * 1e-2   # first order vanishes


def test_numeric_melnikov_first_order():
    sys_ = presets.center_center(boundary_f="x^3 - x")
    nm = numeric_melnikov(sys_, 0.5, analytic_m1=1.5)
    assert nm.m1_hat == pytest.approx(1.5, abs=0.03)
    assert 0.8 <= nm.slopes["first_order_residual"] <= 1.2


def test_numeric_melnikov_zero_perturbation():
    sys_ = presets.center_center(boundary_f="0")
    nm = numeric_melnikov(sys_, 0.5, analytic_m1=0.0)
    assert abs(nm.m1_hat) <= 1e-10
    assert abs(nm.m2_hat) <= 1e-10


def test_numeric_melnikov_second_order_agreement_when_first_vanishes():
    # even boundary function: the analytic first and second orders vanish
    # identically, and the simulated residual at second order is at the
    # noise floor on every rung
    sys_ = presets.center_center(boundary_f="x^2")
    nm = numeric_melnikov(sys_, 0.6, analytic_m1=0.0)
    for rec in nm.records:
        assert abs(rec.value / rec.epsilon ** 2 - 0.0) <= 1e-9


def test_numeric_melnikov_sign_change_across_root():
    a = 7.0
    sys_ = presets.saddle_center(a_param=a, boundary_f="sin(x)")
    r_star = 1.0 - (math.pi / a) ** 2
    lo = numeric_melnikov(sys_, r_star - 0.05).m1_hat
    hi = numeric_melnikov(sys_, r_star + 0.05).m1_hat
    assert lo * hi < 0


def test_verify_limit_cycle_center_center():
    sys_ = presets.center_center(boundary_f="x^3 - x", r_min=0.2, r_max=1.4)
    v = verify_limit_cycle(sys_, 1.0, 0.01)
    assert v.converged
    assert v.p_hat == pytest.approx(1.0, abs=1e-2)
    assert v.stable is False                 # derivative above 1


def test_verify_limit_cycle_even_f_no_fixed_point():
    sys_ = presets.center_center(boundary_f="x^2")
    with pytest.raises(NoFixedPoint):
        verify_limit_cycle(sys_, 0.6, 0.01)


def test_verify_limit_cycle_zero_epsilon_degenerate():
    sys_ = presets.center_center(boundary_f="x^3 - x")
    v = verify_limit_cycle(sys_, 0.8, 0.0)
    assert v.degenerate and not v.converged


def test_stability_matches_simulated_derivative():
    # analytic criterion sign vs simulated return-map derivative vs 1
    cases = [
        (presets.center_center(boundary_f="x^3 - x", r_min=0.2, r_max=1.4),
         [1.0]),
        (presets.saddle_center(a_param=7.0, boundary_f="sin(x)"),
         [1.0 - (math.pi / 7.0) ** 2, 1.0 - (2.0 * math.pi / 7.0) ** 2]),
    ]
    for sys_, roots in cases:
        m1_fn = lambda r: boundary_m1(sys_, r).value
        for r_star in roots:
            verdict = stability(sys_, r_star, m1_fn)
            sim = verify_limit_cycle(sys_, r_star, 0.01)
            assert sim.converged
            assert verdict.stable == sim.stable


def test_cycle_verifier_integrates_with_reports():
    sys_ = presets.saddle_center(a_param=7.0, boundary_f="sin(x)")
    reports = count_cycles(sys_, verifier=cycle_verifier)
    assert len(reports) == 2
    for rep in reports:
        assert rep.verification.converged
        assert rep.verification.stable == rep.stability.stable
