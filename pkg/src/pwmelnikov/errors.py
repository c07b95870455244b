"""Exception hierarchy shared across the analysis modules."""


class AnalysisError(Exception):
    """Base class for everything that can go wrong during an analysis run."""


class ParseError(AnalysisError):
    """Raised by the expression parser; carries position and offending token."""

    def __init__(self, message, position, token):
        super().__init__(f"{message} at position {position} (token {token!r})")
        self.position = position
        self.token = token


class ScenarioError(AnalysisError):
    """Scenario file failed validation before any analysis ran."""


class NoBracket(AnalysisError):
    """No sign change of H(x,0) - level on the supplied bracket."""


class MultipleRoots(AnalysisError):
    """More than one sign change on the bracket sampling grid."""


class NoReturn(AnalysisError):
    """Orbit left the bounding box or exceeded max time without returning."""


class TangentialReturn(AnalysisError):
    """|H_x| below the transversality threshold at the return point."""


class TangencyAtSection(AnalysisError):
    """A ratio denominator (H_x at P or P1) is below the transversality threshold."""


class DivisorVanishes(AnalysisError):
    """Divisor field too small at an interior sample of a divided one-form."""


class SlidingReached(AnalysisError):
    """Trajectory hit a sliding/escaping segment; crossing return map undefined."""


class NoFixedPoint(AnalysisError):
    """No sign change of the return-map displacement in the search bracket."""


class OrderExceeded(AnalysisError):
    """All Lie derivatives of the manifold function vanish up to max_k."""


class FitIllConditioned(AnalysisError):
    """Epsilon ladder too short or too noisy for a meaningful fit."""


class DegenerateEvent(AnalysisError):
    """Two candidate events within the time-resolution threshold."""
