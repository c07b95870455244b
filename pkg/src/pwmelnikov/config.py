"""Numerical tolerances and limits, surfaced in one place.

Every threshold used anywhere in the analysis lives here so scenario files
can override them; there are no hidden magic numbers in the modules.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # section / event localization
    section_tol: float = 1e-12          # |H(p,0) - level| <= section_tol*(1+|level|)
    event_tol: float = 1e-12            # |y| (or |phi|) at localized events
    transversality: float = 1e-8        # minimum |H_x| at section points
    conservation_tol: float = 1e-10     # relative energy drift along a trace

    # integrator
    rk_rtol: float = 1e-12
    rk_atol: float = 1e-14
    max_time: float = 1e3
    box: float = 1e2                    # bounding box half-width

    # quadrature
    quad_epsabs: float = 1e-12
    quad_epsrel: float = 1e-12
    quad_limit: int = 200

    # divided one-forms
    divisor_tol: float = 1e-9           # minimum |divisor| at interior samples
    endpoint_divisor_tol: float = 1e-7  # below this the endpoint counts as vanishing
    log_cancel_tol: float = 1e-8        # residual log-divergence coefficient allowed

    # melnikov / bifurcation
    m1_zero_tol: float = 1e-9           # sweep-level M1 == 0 check for the M2 flag
    hypothesis_tol: float = 1e-9        # H_y(P) == H_y(P1) check for the closed form
    root_bracket_tol: float = 1e-10
    tangency_residual_factor: float = 1e-9  # times (1 + max|fn|) on the grid
    grid_default: int = 256

    # simulator
    event_separation: float = 1e-12     # events closer than this flag Degenerate
    noise_floor: float = 1e-10          # |difference map| below this: slopes unreliable
    nudge_time: float = 1e-6            # eventless initial step off the section

    def with_overrides(self, **kw):
        return replace(self, **kw)


DEFAULT = Tolerances()
