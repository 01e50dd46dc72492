"""Exception hierarchy.

Configuration problems derive from :class:`ConfigError`, numerical failures
from :class:`NumericalError`; the CLI maps these to exit codes 1 and 2.
"""


class EmgramError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EmgramError, ValueError):
    """Invalid arguments, flags or dimensions."""


class DimensionError(ConfigError):
    pass


class GridError(ConfigError):
    pass


class SignalRangeError(ConfigError):
    pass


class AugmentationError(ConfigError):
    pass


class NonSquareError(ConfigError):
    pass


class UnsupportedSystemError(ConfigError):
    pass


class PartitionError(ConfigError):
    pass


class NumericalError(EmgramError, ArithmeticError):
    """A computation produced an unusable numerical result."""


class SolverDivergenceError(NumericalError):
    """Non-finite state encountered during time integration.

    Attributes
    ----------
    step : int
        Index of the time step that produced the non-finite state.
    perturbation : object
        Description of the perturbation run that failed, when known.
    """

    def __init__(self, step, perturbation=None, column=None):
        self.step = step
        self.perturbation = perturbation
        self.column = column
        msg = f"non-finite state at time step {step}"
        if perturbation is not None:
            msg += f" (perturbation {perturbation})"
        super().__init__(msg)

    def with_perturbation(self, perturbation):
        return SolverDivergenceError(self.step, perturbation, self.column)


class SingularDiagonalError(NumericalError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"zero diagonal entry at index {index}")


class NormalizationError(NumericalError):
    def __init__(self, index, what="divisor"):
        self.index = index
        super().__init__(f"zero normalization {what} at index {index}")


class RankDeficiencyError(NumericalError):
    pass


class NotSymmetricError(NumericalError):
    pass


class IndefiniteError(NumericalError):
    pass
