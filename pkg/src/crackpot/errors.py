class CrackpotError(Exception):
    """Base class for library errors."""


class InvalidParameterError(CrackpotError, ValueError):
    pass


class FormatError(CrackpotError, ValueError):
    """Malformed image, weight or dataset file."""


class NotFoundError(CrackpotError, FileNotFoundError):
    pass
