"""Exception types raised by doob_pathwise."""


class DoobPathwiseError(ValueError):
    """Base class for all input/precondition errors in this package."""


class EmptyPath(DoobPathwiseError):
    pass


class NonFiniteEntry(DoobPathwiseError):
    pass


class ExponentOutOfRange(DoobPathwiseError):
    pass


class DomainError(DoobPathwiseError):
    pass


class ClassificationError(DoobPathwiseError):
    """The process class of a tree does not meet an inequality's hypothesis."""


class ClassMismatch(DoobPathwiseError):
    """A generator spec does not meet an inequality's hypothesis."""


class TreeFormatError(DoobPathwiseError):
    """Malformed tree document; the message names the offending JSON path."""
