"""Exception types shared across the simulator and control stack."""


class SwarmliftError(Exception):
    """Base class for all swarmlift errors."""


class GimbalDomainError(SwarmliftError):
    """Euler attitude left the domain where the rate transform is invertible."""


class DegenerateCableError(SwarmliftError):
    """Quadrotor coincides with its cable attachment point."""


class NonFiniteStateError(SwarmliftError):
    """Integration produced NaN or infinity."""


class EmptyGridError(SwarmliftError):
    """Occupancy grid has a zero-sized dimension."""


class NoPathError(SwarmliftError):
    """Goal is unreachable on the current cost grid."""


class InvalidEndpointError(SwarmliftError):
    """Search start or goal lies in an infinite-cost cell or out of bounds."""


class DegenerateKnotsError(SwarmliftError):
    """Spline knot times are not strictly increasing."""


class SingularInnovationError(SwarmliftError):
    """Kalman innovation covariance is numerically singular."""


class RankDeficientError(SwarmliftError):
    """Cable attachment geometry cannot span a full 6-DoF wrench."""


class SolverDivergedError(SwarmliftError):
    """Optimizer produced a non-finite cost; caller should fall back."""


class SchemaError(SwarmliftError):
    """Scenario file failed validation.

    ``field`` carries the dotted path of the offending entry.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class InfeasibleError(SwarmliftError):
    """Scenario start or goal is inside an inflated obstacle."""
