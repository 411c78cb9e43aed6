class NonPositivePhiError(ValueError):
    pass


class SingularModelError(ValueError):
    pass


class ActiveSetCyclingError(ArithmeticError):
    pass


# Value function representation
class EmptyRangeError(ValueError):
    pass


class OutOfDomainError(ValueError):
    pass


class OutOfRangeError(ValueError):
    pass


class InvalidParamsError(ValueError):
    pass


# PDE solver
class InvalidProblemError(ValueError):
    pass


class InvalidBoundaryConditionError(ValueError):
    pass


class ZeroPivotError(ArithmeticError):
    pass


class NoConvergenceError(ArithmeticError):
    pass


class ComparisonBoundError(ArithmeticError):
    pass


# Traveling wave
class InvalidLimitsError(ValueError):
    pass


class StiffnessFailureError(ArithmeticError):
    pass


# Verification
class ShapeMismatchError(ValueError):
    pass


# Portfolio pipeline
class InsufficientDataError(ValueError):
    pass


class NonPositivePriceError(ValueError):
    pass


class InvalidRiskAversionError(ValueError):
    pass


class PipelineStageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage={stage}: {message}")
        self.stage = stage


NUMERICAL_FAILURES: tuple[type[Exception], ...] = (
    NonPositivePhiError,
    NoConvergenceError,
    ZeroPivotError,
    ComparisonBoundError,
    StiffnessFailureError,
    ActiveSetCyclingError,
)
