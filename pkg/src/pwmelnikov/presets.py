"""Built-in example systems.

Three families cover the behaviors the test suite exercises:

* center-center: two parabolic-center zones glued along the x-axis, with
  either an interior quadratic perturbation or a boundary perturbation;
* saddle-center: a hyperbolic upper zone over a circular lower zone,
  boundary perturbation f(a*x);
* smooth-circle: one global Hamiltonian written as a piecewise system,
  used for persistence and collapse checks.

Sign conventions are pinned by the flow direction: the upper zone's field
must point up (ydot = -H_x > 0) on the positive section ray and the lower
zone's field down. That forces H- = -(x^2+y^2)/2 for the circular zones;
the level maps below are consistent with that choice.
"""

from __future__ import annotations

from .field import ScalarField
from .melnikov import (BoundaryPerturbation, LevelMap, PiecewiseSystem,
                       ZonePerturbation)
from .orbit import AnnulusWindow


def _field(text):
    return ScalarField(text)


def _boundary(f_text, epsilon):
    return BoundaryPerturbation(ScalarField(f_text, varnames=("x",)), epsilon)


def quadratic_zone(c_f2=(0, 0, 0), c_g2=(0, 0, 0), *,
                   c_f1=(0, 0, 0), c_g1=(0, 0, 0)):
    """Zone perturbation with quadratic components: each triple is the
    coefficients of (x^2, x*y, y^2)."""
    def q(c):
        a, b, cc = c
        return ScalarField(f"({a})*x^2 + ({b})*x*y + ({cc})*y^2")
    return ZonePerturbation(q(c_f1), q(c_g1), q(c_f2), q(c_g2))


def center_center(*, upper=None, lower=None, boundary_f=None, epsilon=0.01,
                  r_min=0.05, r_max=1.5, a_param=None):
    """Parabolic two-center system: H+ = -y - x^2, H- = y - x^2.

    Orbits at level parameter r run through (r, 0) and (-r, 0); the upper
    arc is y = r^2 - x^2 and the lower arc y = x^2 - r^2. Pass zone
    perturbations for the interior family or boundary_f for the
    switching-curve family.
    """
    return PiecewiseSystem(
        h_plus=_field("0 - y - x^2"),
        h_minus=_field("y - x^2"),
        upper=upper or ZonePerturbation.zero(),
        lower=lower or ZonePerturbation.zero(),
        annulus=AnnulusWindow(r_min, r_max, (1e-3, max(2.0, r_max + 0.5))),
        level_map=LevelMap(ScalarField("0 - r^2", ("r",)),
                           ScalarField("0 - r^2", ("r",))),
        boundary=None if boundary_f is None else _boundary(boundary_f, epsilon),
        name="center-center",
    )


def saddle_center(*, a_param=1.0, boundary_f="x", epsilon=0.01,
                  r_min=0.05, r_max=0.95):
    """Saddle over center: H+ = (y-1)^2/2 - x^2/2, H- = -(x^2+y^2)/2.

    The annulus is parameterized by r in (0, 1); the orbit through
    (sqrt(1-r), 0) has H+ level r/2 and H- level (r-1)/2. The boundary
    function is composed with the stretch a*x.
    """
    f_scaled = boundary_f.replace("x", f"(({a_param})*x)")
    return PiecewiseSystem(
        h_plus=_field("(y - 1)^2/2 - x^2/2"),
        h_minus=_field("0 - (x^2 + y^2)/2"),
        upper=ZonePerturbation.zero(),
        lower=ZonePerturbation.zero(),
        annulus=AnnulusWindow(r_min, r_max, (1e-3, 1.0 - 1e-9)),
        level_map=LevelMap(ScalarField("r/2", ("r",)),
                           ScalarField("(r - 1)/2", ("r",))),
        boundary=_boundary(f_scaled, epsilon),
        name="saddle-center",
    )


def smooth_circle(*, boundary_f="sin(x)", epsilon=0.01,
                  upper=None, lower=None, r_min=0.2, r_max=2.0):
    """One smooth Hamiltonian H = -(x^2+y^2)/2 written as a piecewise
    system; the period annulus is the family of circles through (r, 0)."""
    h = "0 - (x^2 + y^2)/2"
    return PiecewiseSystem(
        h_plus=_field(h),
        h_minus=_field(h),
        upper=upper or ZonePerturbation.zero(),
        lower=lower or ZonePerturbation.zero(),
        annulus=AnnulusWindow(r_min, r_max, (1e-3, max(3.0, r_max + 0.5))),
        level_map=LevelMap(ScalarField("0 - r^2/2", ("r",)),
                           ScalarField("0 - r^2/2", ("r",))),
        boundary=None if boundary_f is None else _boundary(boundary_f, epsilon),
        name="smooth-circle",
    )


PRESETS = {
    "center-center": center_center,
    "saddle-center": saddle_center,
    "smooth-circle": smooth_circle,
}


def make(name, **kwargs):
    try:
        factory = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return factory(**kwargs)
