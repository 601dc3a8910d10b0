"""Exception types shared across the toolkit."""


class FanetError(Exception):
    """Base class for all toolkit errors."""


class ParseError(FanetError):
    """Scenario file could not be parsed."""


class ValidationError(FanetError):
    """A scenario invariant is violated; `field` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DegenerateTerrain(FanetError):
    """Terrain grid has an undefined surface normal (zero-area cell)."""


class ZeroDistance(FanetError):
    """Co-located transceivers: path loss is undefined at d <= 0."""


class TimeBudgetExceeded(FanetError):
    """Route duration exceeds the UAV's maximum flight time."""

    def __init__(self, uav: int, duration: float, t_max: float):
        self.uav = uav
        self.duration = duration
        self.t_max = t_max
        super().__init__(
            f"uav {uav}: route takes {duration:.3f} s > t_max {t_max:.3f} s"
        )


class InfeasibleTopology(FanetError):
    """A required link needs more transmit power than the UAV allows."""

    def __init__(self, uav: int, slot: int, message: str = ""):
        self.uav = uav
        self.slot = slot
        detail = f" ({message})" if message else ""
        super().__init__(f"uav {uav}, slot {slot}: topology infeasible{detail}")


class InfeasibleBudget(FanetError):
    """Minimum powers alone already exceed the UAV's energy budget."""

    def __init__(self, uav: int, required: float, e_max: float):
        self.uav = uav
        self.required = required
        self.e_max = e_max
        super().__init__(
            f"uav {uav}: minimum powers need {required:.6g} J > e_max {e_max:.6g} J"
        )


class InstanceTooLarge(FanetError):
    """Instance exceeds the cost guard of an exhaustive oracle."""


class DeadEnd(FanetError):
    """All nodes are masked while waypoints remain unassigned."""

    def __init__(self, message: str = "no feasible node remains", partial=None):
        self.partial = partial
        super().__init__(message)


class ShapeMismatch(FanetError):
    """Model parameter dimensions are mutually inconsistent."""


class NonFiniteGradient(FanetError):
    """Training produced a NaN/Inf gradient; aborted with diagnostics."""
