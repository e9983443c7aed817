"""Exception hierarchy. CLI exit codes key off the base classes."""


class EcisError(Exception):
    pass


class InvalidInputError(EcisError, ValueError):
    pass


class InvalidDimensionsError(InvalidInputError):
    pass


class CorruptGridError(InvalidInputError):
    pass


class InvalidKeyError(InvalidInputError):
    pass


class NoDerangementError(InvalidKeyError):
    """k = 1: a single selected index cannot be moved."""


class CorruptKeyError(InvalidKeyError):
    pass


class FormatError(EcisError):
    pass


class BadMagicError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class TruncatedError(FormatError):
    pass


class CrcMismatchError(FormatError):
    pass


class UnsupportedFormatError(FormatError):
    pass


class NumericFailure(EcisError):
    pass
