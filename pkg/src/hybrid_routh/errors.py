"""Exception types raised by the simulation layers."""


class DimensionError(ValueError):
    """State or covector length does not match the system dimension."""


class RegularityError(ArithmeticError):
    """The mass matrix is singular (or numerically so) at the queried state."""


class HyperregularityError(ArithmeticError):
    """Newton iteration for the inverse Legendre transform did not converge."""


class GRegularityError(ArithmeticError):
    """The momentum relation could not be inverted for the cyclic velocity."""


class ImpactError(ArithmeticError):
    """The Newtonian impact is undefined (degenerate guard normal)."""


class IntegrationError(ArithmeticError):
    """Non-finite values appeared during time stepping."""


class EventLocalizationError(RuntimeError):
    """Bisection failed to bracket a guard crossing to the requested tolerance."""


class ChartError(ValueError):
    """A state left the valid region of the coordinate chart."""


class SymmetryError(ValueError):
    """A function expected to be invariant under the cyclic shift is not."""


class ScenarioError(ValueError):
    """A scenario file failed to parse or validate."""
