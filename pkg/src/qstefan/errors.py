"""Exception hierarchy shared by every qstefan module."""


class QStefanError(Exception):
    """Base class; the CLI maps any subclass to exit code 1."""

    module = "qstefan"


class SpecialFunctionError(QStefanError, ValueError):
    module = "specfun"


class PoleError(SpecialFunctionError):
    """Argument or parameter sits on a pole of Gamma or of a Kummer series."""


class NonConvergenceError(SpecialFunctionError, ArithmeticError):
    """Series did not meet its tolerance within the iteration cap."""


class SingularityError(SpecialFunctionError):
    """A basis function (or its derivative) is unbounded at the requested point."""


class AssemblyError(QStefanError, ValueError):
    module = "problems"


class DimensionMismatchError(AssemblyError):
    pass


class LinearSystemError(QStefanError, ValueError):
    module = "linsys"


class SingularMatrixError(LinearSystemError):
    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class HHLError(QStefanError, ValueError):
    module = "hhl"


class ProblemFileError(QStefanError, ValueError):
    """Parse or validation failure in a problem file, with a source location."""

    module = "cli"

    def __init__(self, message, path=None, line=None, column=None):
        loc = ""
        if path is not None:
            loc = str(path)
        if line is not None:
            loc += f":{line}"
            if column is not None:
                loc += f":{column}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line
        self.column = column
