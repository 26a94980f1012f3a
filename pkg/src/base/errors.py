"""Exception hierarchy shared by the numerical modules and the CLI."""


class CocycleError(Exception):
    """Root of every error raised by this package."""


class DomainError(CocycleError, ValueError):
    """Argument outside the domain where an operation is defined."""


class InfeasibleRadiusError(CocycleError):
    """No annulus parameter R makes the family contract the disc of radius R."""


class ConvergenceError(CocycleError, RuntimeError):
    """Backward iteration for a random fixed point did not reach tolerance."""


class AssemblyError(CocycleError, RuntimeError):
    """Map is not expanding at the requested R; contours cannot be deformed."""


class AccuracyError(CocycleError, RuntimeError):
    """Quadrature refinement exhausted before probe entries stabilized."""


class TransversalityError(CocycleError, ArithmeticError):
    """Subspaces nearly intersect; the oblique projection is ill-posed."""


class ConfigError(CocycleError, ValueError):
    """Experiment configuration rejected."""


#: errors the CLI reports as numerical infeasibility (exit code 3)
NUMERICAL_ERRORS = (InfeasibleRadiusError, ConvergenceError, AssemblyError, AccuracyError)
