"""Melnikov-function prediction and simulator verification of limit
cycles bifurcating from period annuli of planar piecewise-smooth
Hamiltonian systems."""

from .config import DEFAULT, Tolerances
from .errors import (AnalysisError, DegenerateEvent, DivisorVanishes,
                     FitIllConditioned, MultipleRoots, NoBracket,
                     NoFixedPoint, NoReturn, OrderExceeded, ParseError,
                     ScenarioError, SlidingReached, TangencyAtSection,
                     TangentialReturn)
from .field import ScalarField, parse
from .melnikov import (BoundaryPerturbation, LevelMap, PiecewiseSystem,
                       ZonePerturbation, boundary_expansion, boundary_m1,
                       boundary_m2, m1, m2, sweep,
                       transform_boundary_system)
from .orbit import AnnulusWindow, OneForm, SectionPoint
from .bifurcation import (LimitCycleReport, RootRecord, StabilityVerdict,
                          center_center_closed_form, count_cycles,
                          isolate_roots, odd_even_parts, stability)
from .simulator import (CycleVerification, DifferenceRecord, SwitchingPoint,
                        Trajectory, classify_boundary_point, contact_order,
                        difference_map, flow_to_section, numeric_melnikov,
                        verify_limit_cycle)
from .presets import PRESETS, make

__version__ = "0.1.0"
