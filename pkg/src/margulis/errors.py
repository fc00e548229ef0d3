"""Exception hierarchy shared by every module."""


class MargulisError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateBoundaryPair(MargulisError):
    pass


class NotInLieAlgebra(MargulisError):
    pass


class NotLorentz(MargulisError):
    pass


class NotHyperbolic(MargulisError):
    def __init__(self, message, word=None):
        super().__init__(message)
        self.word = word


class SingularSystem(MargulisError):
    pass


class InvalidAxis(MargulisError):
    pass


class LeftHyperbolicRegime(MargulisError):
    pass


class EmptyWord(MargulisError):
    pass


class NotCoprime(MargulisError):
    pass


class InsufficientData(MargulisError):
    pass


class SignMismatch(MargulisError):
    pass


class StepTooSmall(MargulisError):
    pass


class ConfigError(MargulisError):
    pass
