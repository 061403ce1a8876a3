"""Exception hierarchy.

Input-validation errors derive from ``ValueError``; numerical failures
derive from ``ArithmeticError`` so the CLI can map them to exit code 2.
"""


class MCCMError(Exception):
    """Base class for all package errors."""


class ModelError(MCCMError, ValueError):
    """Invalid weight model."""


class MeanNotOne(ModelError):
    pass


class ConstantWeight(ModelError):
    pass


class NegativeAtom(ModelError):
    pass


class DegenerateModel(MCCMError, ValueError):
    """E[W log W] >= log b: the limit measure vanishes almost surely."""


class AssumptionViolated(MCCMError, ValueError):
    pass


class BadInterval(MCCMError, ValueError):
    pass


class BadExponents(MCCMError, ValueError):
    pass


class RegimeMismatch(MCCMError, ValueError):
    pass


class DepthTooLarge(MCCMError, ValueError):
    pass


class NotBoundary(MCCMError, ValueError):
    """The weight admits no Biggins-Kyprianou transform."""


class ConfigError(MCCMError, ValueError):
    """Bad command-line or config-file input."""


class NumericalError(MCCMError, ArithmeticError):
    pass


class ZeroMoment(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class SeriesDiverges(NumericalError):
    pass


class TooFewBlocks(NumericalError):
    pass


class ZeroField(NumericalError):
    pass
